//! Flattening of self-convolutions: the sequence J_r(k) = ||Pi^{2^k}_r||_2
//! is non-increasing in k, and the r-scale level-set decomposition of Pi_r
//! is sandwiched between Pi_r and 64 Pi_{8r}.

use anyhow::{anyhow, Result};

use paralab_core::lattice::LatticeMeasure;
use paralab_core::parabola::arc_measure;

use crate::record::{ExperimentRecord, ExperimentSpec, Verdict};

pub fn run(spec: &ExperimentSpec, out_dir: &std::path::Path) -> Result<ExperimentRecord> {
    let arc_log2 = spec.u64("arc_log2", 4)? as i32;
    let r_list = spec.u64_list("r_log2_list", &[4, 6])?;
    let k_max = spec.u64("k_max", 3)? as u32;
    let cache = crate::cache::cache_dir(out_dir);

    let arc = arc_measure((-arc_log2 as f64).exp2())?;
    let lat = LatticeMeasure::from_atomic(&arc)
        .ok_or_else(|| anyhow!("arc net is not lattice-supported"))?;

    let mut record = ExperimentRecord::new(
        spec.clone(),
        &["r", "k", "j_r_k", "pair_count"],
    );
    let mut all_monotone = true;
    let mut worst_increase: f64 = 0.0;
    for &rk in &r_list {
        let r = (-(rk as f64)).exp2();
        let mut prev = f64::INFINITY;
        for k in 0..=k_max {
            // Pi = arc * arc, so Pi^{2^k} is the 2^{k+1}-fold power of the arc
            let n = 2u32 << k;
            let j = lat.conv_power_mollified_l2_sq(n, r)?.sqrt();
            record.push_row(vec![r, k as f64, j, n as f64]);
            record.plot.push((k as f64, j.log2()));
            if k > 0 {
                let increase = j / prev - 1.0;
                worst_increase = worst_increase.max(increase);
                // negated form rejects NaN as a failure too
                #[allow(clippy::neg_cmp_op_on_partial_ord)]
                if !(j <= prev * (1.0 + 1e-6)) {
                    all_monotone = false;
                }
            }
            prev = j;
        }
    }
    record.fitted.insert("worst_relative_increase".into(), worst_increase);
    record.verdicts.push(Verdict::at_most(
        "j_sequence_monotone",
        0.0,
        if all_monotone { 0.0 } else { 1.0 },
        0.0,
    ));

    // sandwich: Pi_r <= sum 2^j 1_{A_j} <= 64 Pi_{8r}, both fields on one grid
    for &rk in &r_list {
        let r = (-(rk as f64)).exp2();
        let h = r / 4.0;
        let pi_r = crate::cache::cached_convolve_power_on_plan(&cache, &arc, 2, r, 8.0 * r, h)?;
        let pi_8r =
            crate::cache::cached_convolve_power_on_plan(&cache, &arc, 2, 8.0 * r, 8.0 * r, h)?;
        let (lower_ok, upper_ok, worst) =
            paralab_core::convolution::level_set_sandwich_check(&pi_r, &pi_8r, 4);
        record.fitted.insert(format!("sandwich_excess_r2^-{rk}"), worst);
        record.verdicts.push(Verdict::at_most(
            &format!("sandwich_r2^-{rk}"),
            0.0,
            if lower_ok && upper_ok { 0.0 } else { 1.0 },
            0.0,
        ));
    }
    Ok(record)
}
