//! Near-solution counts of the quadratic system on s-dimensional subsets of
//! the parabola: oracle equality on small random instances, and the
//! count <= delta^t |P|^{2n} bound for t below min{3s, s+1}.

use anyhow::{ensure, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use paralab_core::arith::{vinogradov_brute_force, vinogradov_count};
use paralab_core::dyadic::check_separation;
use paralab_core::exponents::max_energy_exponent;
use paralab_core::parabola::lattice_parabola_measure;

use crate::record::{ExperimentRecord, ExperimentSpec, Verdict};

pub fn run(spec: &ExperimentSpec) -> Result<ExperimentRecord> {
    let s = spec.f64("s", 0.5)?;
    let n = spec.u64("n", 3)? as u32;
    let k = spec.u64("delta_log2", 8)? as i32;
    let t = spec.f64("t", 1.3)?;
    let ratio_bound = spec.f64("ratio_bound", 10.0)?;
    let trials = spec.u64("oracle_trials", 20)?;

    ensure!(
        t < max_energy_exponent(s)?,
        "t = {t} must sit below the admissible threshold {}",
        max_energy_exponent(s)?
    );

    let mut record = ExperimentRecord::new(
        spec.clone(),
        &["delta", "points", "count", "normalized_ratio"],
    );

    // oracle equality on randomized small instances
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed().wrapping_add(17));
    let mut mismatches = 0u64;
    let mut done = 0u64;
    while done < trials {
        let nn = if done.is_multiple_of(2) { 2 } else { 3 };
        let count = if nn == 2 { 7 } else { 4 }; // |P|^{2n} <= 7^4, 4^6 <= 1e7
        let pts: Vec<[f64; 2]> = (0..count)
            .map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
            .collect();
        let delta = 0.05;
        if check_separation(&pts, delta).is_err() {
            continue;
        }
        let fast = vinogradov_count(&pts, nn, delta)?;
        let slow = vinogradov_brute_force(&pts, nn, delta);
        if fast != slow {
            mismatches += 1;
        }
        done += 1;
    }
    record.fitted.insert("oracle_mismatches".into(), mismatches as f64);
    record.verdicts.push(Verdict::at_most("oracle_equality", 0.0, mismatches as f64, 0.0));

    // normalized count across scales (the bound is asymptotic; the ratio is
    // reported at every scale and gated at the requested one)
    let mut gated_ratio = f64::NAN;
    for kk in (k - 2)..=k {
        let delta = (-kk as f64).exp2();
        let m = lattice_parabola_measure(delta, s)?;
        let count = vinogradov_count(&m.points(), n, delta)?;
        let ratio =
            count as f64 / (delta.powf(t) * (m.len() as f64).powi(2 * n as i32));
        record.push_row(vec![delta, m.len() as f64, count as f64, ratio]);
        record.plot.push((kk as f64, (count as f64).log2()));
        if kk == k {
            gated_ratio = ratio;
        }
    }
    record.predicted.insert("threshold_exponent".into(), max_energy_exponent(s)?);
    record.fitted.insert("normalized_ratio".into(), gated_ratio);
    record
        .verdicts
        .push(Verdict::at_most("count_ratio_bound", ratio_bound, gated_ratio, 0.0));
    Ok(record)
}
