//! Scaling of `||sigma^n_delta||_2^2` for the arithmetic-progression measure:
//! the convolution powers stay trapped near a progression of dimension
//! min{3s, s+1}, so the norm must scale like delta^{min{3s,s+1} - 2}.

use anyhow::{anyhow, Result};

use paralab_core::arith::fit_exponent;
use paralab_core::exponents::max_energy_exponent;
use paralab_core::lattice::LatticeMeasure;
use paralab_core::parabola::lattice_parabola_measure;

use crate::record::{ExperimentRecord, ExperimentSpec, Verdict};

pub fn run(spec: &ExperimentSpec) -> Result<ExperimentRecord> {
    let s = spec.f64("s", 0.5)?;
    let n = spec.u64("n", 3)? as u32;
    let kmin = spec.u64("delta_log2_min", 6)? as i32;
    let kmax = spec.u64("delta_log2_max", 11)? as i32;
    let tol = spec.f64("tolerance", 0.15)?;

    let mut record = ExperimentRecord::new(
        spec.clone(),
        &["delta", "norm_sq", "log2_inv_delta", "log2_norm_sq"],
    );
    let mut rows = Vec::new();
    for k in kmin..=kmax {
        let delta = (-k as f64).exp2();
        let sigma = lattice_parabola_measure(delta, s)?;
        let lat = LatticeMeasure::from_atomic(&sigma)
            .ok_or_else(|| anyhow!("progression measure is not lattice-supported"))?;
        let norm_sq = lat.conv_power_mollified_l2_sq(n, delta)?;
        record.push_row(vec![delta, norm_sq, k as f64, norm_sq.log2()]);
        record.plot.push((k as f64, norm_sq.log2()));
        rows.push((delta, norm_sq));
    }
    let (slope, residual) = fit_exponent(rows)?;
    let predicted = 2.0 - max_energy_exponent(s)?;
    record.fitted.insert("slope".into(), slope);
    record.fitted.insert("residual".into(), residual);
    record.predicted.insert("slope".into(), predicted);
    record.verdicts.push(Verdict::within("norm_scaling_slope", predicted, slope, tol));
    Ok(record)
}
