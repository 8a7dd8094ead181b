//! Growth of the transform's L^p norm over disks B(R): for a measure of
//! energy dimension t the norm should stay below C R^{(2-t)/p}.

use anyhow::Result;

use paralab_core::arith::fit_exponent;
use paralab_core::parabola::arc_measure;
use paralab_core::spectrum::fourier_lp_norms_nested;

use crate::record::{ExperimentRecord, ExperimentSpec, Verdict};

pub fn run(spec: &ExperimentSpec) -> Result<ExperimentRecord> {
    let p = spec.f64("p", 6.0)?;
    let t = spec.f64("t", 1.8)?;
    let rmin = spec.u64("r_log2_min", 4)? as i32;
    let rmax = spec.u64("r_log2_max", 9)? as i32;
    let arc_log2 = spec.u64("arc_log2", rmax as u64)? as i32;
    let tol = spec.f64("tolerance", 0.1)?;

    let m = arc_measure((-arc_log2 as f64).exp2())?;
    // spacing commensurate with the atom lattice so the row-DFT engine kicks
    // in, below the support-diameter bound
    let base = m.separation();
    let needed = 4.0 * (m.diameter() + 1.0);
    let len = ((needed / base).ceil() as usize).next_power_of_two() * 2;
    let spacing = 1.0 / (base * len as f64);

    let radii: Vec<f64> = (rmin..=rmax).map(|k| (k as f64).exp2()).collect();
    let norms = fourier_lp_norms_nested(&m, p, &radii, spacing)?;

    let mut record = ExperimentRecord::new(
        spec.clone(),
        &["radius", "lp_norm", "log2_radius", "log2_norm"],
    );
    let mut rows = Vec::new();
    for (&r, &v) in radii.iter().zip(&norms) {
        record.push_row(vec![r, v, r.log2(), v.log2()]);
        record.plot.push((r.log2(), v.log2()));
        // reuse the series fit by feeding "delta" = 1/R
        rows.push((1.0 / r, v));
    }
    let (slope, residual) = fit_exponent(rows)?;
    let predicted = (2.0 - t) / p;
    record.fitted.insert("slope".into(), slope);
    record.fitted.insert("residual".into(), residual);
    record.predicted.insert("slope_upper_bound".into(), predicted);
    record.verdicts.push(Verdict::at_most("lp_growth_slope", predicted, slope, tol));
    Ok(record)
}
