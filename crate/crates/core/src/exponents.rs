//! Closed-form dimension exponents and the sumset recursion.
//!
//! These are the predicted growth rates that every experiment pipeline
//! compares its fitted slopes against. All formulas validate their
//! argument ranges and reject NaN.

use crate::error::{Error, Result};

/// Slack parameters attached to an (s, t) exponent pair.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ExponentParams {
    /// Frostman exponent of the parabola measure, in [0, 1].
    pub s: f64,
    /// Energy/Frostman exponent of the ambient measure, in [0, 2].
    pub t: f64,
    pub kappa: Option<f64>,
    pub epsilon: Option<f64>,
}

impl ExponentParams {
    pub fn new(s: f64, t: f64) -> Result<Self> {
        let p = ExponentParams { s, t, kappa: None, epsilon: None };
        p.validate()?;
        Ok(p)
    }

    pub fn with_kappa(mut self, kappa: f64) -> Result<Self> {
        if !(kappa > 0.0) {
            return Err(Error::ParamOutOfRange(format!("kappa must be > 0, got {kappa}")));
        }
        self.kappa = Some(kappa);
        Ok(self)
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::ParamOutOfRange(format!("epsilon must be > 0, got {epsilon}")));
        }
        self.epsilon = Some(epsilon);
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.s) || self.s.is_nan() {
            return Err(Error::ParamOutOfRange(format!("s must lie in [0,1], got {}", self.s)));
        }
        if !(0.0..=2.0).contains(&self.t) || self.t.is_nan() {
            return Err(Error::ParamOutOfRange(format!("t must lie in [0,2], got {}", self.t)));
        }
        Ok(())
    }
}

fn check(name: &str, v: f64, lo: f64, hi: f64, lo_open: bool, hi_open: bool) -> Result<()> {
    let ok = !v.is_nan()
        && (if lo_open { v > lo } else { v >= lo })
        && (if hi_open { v < hi } else { v <= hi });
    if ok {
        Ok(())
    } else {
        Err(Error::ParamOutOfRange(format!("{name}={v} outside its admissible range")))
    }
}

/// Furstenberg exponent `gamma(s,t) = min{s+t, (3s+t)/2, s+1}`.
///
/// Valid for `s` in (0,1] and `t` in `[0,2]`.
pub fn gamma_exponent(s: f64, t: f64) -> Result<f64> {
    check("s", s, 0.0, 1.0, true, false)?;
    check("t", t, 0.0, 2.0, false, false)?;
    Ok((s + t).min((3.0 * s + t) / 2.0).min(s + 1.0))
}

/// Smoothing exponent `zeta(s,t) = min{t + (2s-1), s+1}`.
///
/// Valid for `s` in (1/2,1] and `t` in (0,2).
pub fn zeta_exponent(s: f64, t: f64) -> Result<f64> {
    check("s", s, 0.5, 1.0, true, false)?;
    check("t", t, 0.0, 2.0, true, true)?;
    Ok((t + (2.0 * s - 1.0)).min(s + 1.0))
}

/// Sumset growth exponent `min{3s - s 2^{-(n-2)}, s+1}` for the n-fold sumset.
pub fn sumset_exponent(s: f64, n: u32) -> Result<f64> {
    check("s", s, 0.0, 1.0, false, false)?;
    if n < 1 {
        return Err(Error::ParamOutOfRange("n must be >= 1".into()));
    }
    let pow = (-(n as i32 - 2) as f64).exp2();
    Ok((3.0 * s - s * pow).min(s + 1.0))
}

/// The largest admissible energy exponent for measures on the parabola with
/// Frostman exponent `s`: `min{3s, s+1}`. Decay and counting experiments
/// compare against exponents strictly below this threshold.
pub fn max_energy_exponent(s: f64) -> Result<f64> {
    check("s", s, 0.0, 1.0, false, false)?;
    Ok((3.0 * s).min(s + 1.0))
}

/// Iterate `t_1 = s`, `t_{j+1} = min{(3s + t_j)/2, s + 1}` up to `t_n`.
///
/// Agrees with [`sumset_exponent`] exactly; the two routes are kept
/// separate so the agreement is a checkable property, not a tautology.
pub fn iterate_gamma(s: f64, n: u32) -> Result<f64> {
    check("s", s, 0.0, 1.0, true, false)?;
    if n < 1 {
        return Err(Error::ParamOutOfRange("n must be >= 1".into()));
    }
    let mut t = s;
    for _ in 1..n {
        t = ((3.0 * s + t) / 2.0).min(s + 1.0);
    }
    Ok(t)
}
