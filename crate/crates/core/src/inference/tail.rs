//! Analytic tail approximations for maxima of the standardized processes.

use crate::error::{Error, Result};
use crate::moments::{finite_sample_slope, MomentCache, Process};
use crate::numeric::{normal_cdf, normal_cdf_minus_half, normal_pdf};
use crate::scan::ScanConfig;

/// Bisection bracket for critical values and p-value inversion.
pub const BRACKET_LOW: f64 = 0.5;
pub const BRACKET_HIGH: f64 = 12.0;
/// Smallest reported analytic p-value.
pub const P_VALUE_FLOOR: f64 = 1e-300;

/// `nu(s) ~ (2/s) (Phi(s/2) - 1/2) / ((s/2) Phi(s/2) + phi(s/2))`, with `nu(0) = 1`.
pub fn nu_approx(s: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::param(format!("nu(s) needs s >= 0, got {s}")));
    }
    if s < 1e-8 {
        return Ok(1.0);
    }
    let h = 0.5 * s;
    Ok((2.0 / s) * normal_cdf_minus_half(h) / (h * normal_cdf(h) + normal_pdf(h)))
}

/// Tail approximation for one process over a cut window, with the
/// correlation slopes `C(t)` precomputed.
#[derive(Clone, Debug)]
pub struct ProcessTail {
    pub process: Process,
    sides: f64,
    slopes: Vec<f64>,
}

impl ProcessTail {
    /// `D` uses the two-sided factor `2 b phi(b)` (its maximum is of `|Z|`),
    /// `W_r` the one-sided `b phi(b)`.
    pub fn new(cache: &MomentCache, process: Process, cfg: ScanConfig) -> Result<Self> {
        let sides = match process {
            Process::D { .. } => 2.0,
            Process::W { .. } => 1.0,
        };
        Self::with_sides(cache, process, cfg, sides)
    }

    /// Same with an explicit leading factor `sides * b phi(b)` (1 or 2).
    pub fn with_sides(cache: &MomentCache, process: Process, cfg: ScanConfig, sides: f64) -> Result<Self> {
        if let Process::W { r, .. } = process {
            if r == 1.0 || !r.is_finite() || r <= 0.0 {
                return Err(Error::param(format!("W_r tail needs a positive r != 1, got {r}")));
            }
        }
        ScanConfig::new(cache.n(), cfg.n0, cfg.n1)?;
        let slopes = cfg
            .cuts()
            .map(|t| {
                let c = finite_sample_slope(cache, process, t);
                if c.is_nan() {
                    Err(Error::Degenerate {
                        t,
                        component: process_name(process),
                        kind: crate::DegeneracyKind::ZeroVariance,
                    })
                } else {
                    Ok(c.max(0.0))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { process, sides, slopes })
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    /// `sides * b phi(b) sum_t C(t) nu(b sqrt(2 C(t)))`, clamped to `[0, 1]`.
    pub fn tail(&self, b: f64) -> f64 {
        let sum: f64 = self
            .slopes
            .iter()
            .map(|&c| c * nu_approx(b * (2.0 * c).sqrt()).unwrap_or(0.0))
            .sum();
        (self.sides * b * normal_pdf(b) * sum).clamp(0.0, 1.0)
    }

    /// p-value of an observed maximum. Below the bracket the p-value is 1;
    /// inside, the tail is evaluated at `max(b, 1)` (where `b phi(b)` is
    /// decreasing) so the p-value is monotone in `b`.
    pub fn p_value(&self, b: f64) -> f64 {
        if b.is_nan() || b < BRACKET_LOW {
            return 1.0;
        }
        self.tail(b.clamp(1.0, BRACKET_HIGH)).max(P_VALUE_FLOOR)
    }

    /// Critical value `b` with `tail(b) = alpha`, by bisection on the bracket to 1e-6.
    pub fn critical_value(&self, alpha: f64) -> f64 {
        let (mut lo, mut hi) = (BRACKET_LOW.max(1.0), BRACKET_HIGH);
        if self.tail(lo) <= alpha {
            return lo;
        }
        while hi - lo > 1e-6 {
            let mid = 0.5 * (lo + hi);
            if self.tail(mid) > alpha {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

pub(crate) fn process_name(p: Process) -> &'static str {
    match p {
        Process::D { kernel: 0 } => "D1",
        Process::D { .. } => "D2",
        Process::W { kernel: 0, .. } => "W1",
        Process::W { .. } => "W2",
    }
}

/// `P(max |Z_{D_x}(t)| > b)` for kernel `x` (0 or 1).
pub fn tail_probability_d(cache: &MomentCache, x: usize, b: f64, cfg: ScanConfig) -> Result<f64> {
    if !(b > 0.0) {
        return Err(Error::param(format!("threshold b must be positive, got {b}")));
    }
    Ok(ProcessTail::new(cache, Process::D { kernel: x }, cfg)?.tail(b))
}

/// `P(max Z_{W_{x,r}}(t) > b)` for kernel `x` (0 or 1), `r != 1`.
pub fn tail_probability_w(cache: &MomentCache, x: usize, r: f64, b: f64, cfg: ScanConfig) -> Result<f64> {
    if !(b > 0.0) {
        return Err(Error::param(format!("threshold b must be positive, got {b}")));
    }
    Ok(ProcessTail::new(cache, Process::W { kernel: x, r }, cfg)?.tail(b))
}
