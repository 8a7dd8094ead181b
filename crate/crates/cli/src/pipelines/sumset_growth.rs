//! Box-dimension growth of n-fold sumsets of Cantor sets on the parabola,
//! against the closed-form exponent min{3s - s 2^{-(n-2)}, s+1}.

use anyhow::Result;

use paralab_core::arith::{fit_exponent, sumset_cover};
use paralab_core::exponents::sumset_exponent;
use paralab_core::parabola::{cantor_dimension, cantor_parabola_measure};

use crate::record::{ExperimentRecord, ExperimentSpec, Verdict};

pub fn run(spec: &ExperimentSpec) -> Result<ExperimentRecord> {
    let base = spec.u64("base", 4)? as u8;
    let digits: Vec<u8> = spec
        .u64_list("digits", &[0, 3])?
        .into_iter()
        .map(|d| d as u8)
        .collect();
    let n_list = spec.u64_list("n_list", &[2, 3])?;
    let m_min = spec.u64("m_min", 2)? as i32;
    let m_max = spec.u64("m_max", 5)? as i32;
    let tol = spec.f64("tolerance", 0.15)?;

    let s = cantor_dimension(&digits, base);
    let mut record = ExperimentRecord::new(
        spec.clone(),
        &["n", "delta", "cover_count", "log2_inv_delta", "log2_count"],
    );
    record.predicted.insert("dimension_s".into(), s);
    for &n in &n_list {
        let mut rows = Vec::new();
        for m in m_min..=m_max {
            let delta = (base as f64).powi(-m);
            let cantor = cantor_parabola_measure(delta, &digits, base)?;
            let cover = sumset_cover(&cantor.points(), n as u32, delta)?;
            let count = cover.len() as f64;
            record.push_row(vec![
                n as f64,
                delta,
                count,
                -delta.log2(),
                count.log2(),
            ]);
            if n == *n_list.last().unwrap() {
                record.plot.push((-delta.log2(), count.log2()));
            }
            rows.push((delta, count));
        }
        let (slope, _) = fit_exponent(rows)?;
        let predicted = sumset_exponent(s, n as u32)?;
        record.fitted.insert(format!("slope_n{n}"), slope);
        record.predicted.insert(format!("exponent_n{n}"), predicted);
        record
            .verdicts
            .push(Verdict::at_least(&format!("sumset_growth_n{n}"), predicted, slope, tol));
    }
    Ok(record)
}
