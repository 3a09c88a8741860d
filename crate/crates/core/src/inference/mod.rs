//! Hypothesis tests built on the scan statistic.
//!
//! * [`permutation_test`]: permutation p-value of `max S(t)`.
//! * [`fast_test`]: Bonferroni combination of six analytic tail approximations.
//! * [`fixed_split_test`]: permutation p-value of `S(tau)` at a known cut.
//! * [`single_kernel_test`]: the one-kernel `Z_W^2 + Z_D^2` baseline.

mod fast;
mod permutation;
mod tail;

pub use fast::{fast_test, FastConfig, FastPlan, FAST_COMPONENTS};
pub use permutation::{
    fixed_split_test, permutation_test, permutation_test_strict, single_kernel_test, PermConfig, MAX_DEGENERATE_FRACTION,
};
pub use tail::{
    nu_approx, tail_probability_d, tail_probability_w, ProcessTail, BRACKET_HIGH, BRACKET_LOW, P_VALUE_FLOOR,
};

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Method {
    KapPerm,
    KapfAnalytic,
    FixedSplit,
    /// Single-kernel permutation baseline.
    GkcpPerm,
}

/// One of the six fast-test components.
#[derive(Clone, Debug, Serialize)]
pub struct ComponentResult {
    pub name: String,
    /// Observed scan maximum (`max |Z|` for `D`, `max Z` for `W_r`).
    pub max: f64,
    /// Cut attaining the maximum.
    pub t: usize,
    pub p_value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TestOutcome {
    pub method: Method,
    pub p_value: f64,
    pub tau_hat: Option<usize>,
    pub s_star: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub components: Option<Vec<ComponentResult>>,
    pub elapsed_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub permutations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degenerate_replicas: Option<usize>,
}

impl TestOutcome {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("outcome serializes")
    }

    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_value <= alpha
    }
}
