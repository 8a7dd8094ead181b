//! L^2-smoothing of a plane measure by convolution with a parabola measure:
//! `||(mu * sigma)_delta||_2^2` should scale no worse than
//! `delta^{zeta(s,t) - 2}` with `zeta = min{t + 2s - 1, s + 1}`.

use anyhow::Result;

use paralab_core::arith::fit_exponent;
use paralab_core::convolution::mollified_l2_norm_sq;
use paralab_core::exponents::zeta_exponent;
use paralab_core::parabola::lattice_parabola_measure;

use crate::record::{ExperimentRecord, ExperimentSpec, Verdict};

/// Product Cantor measure on the unit square: base-4 digits {0,3} on each
/// axis gives a 1-dimensional self-similar set at scale 4^-m.
fn product_cantor(m: u32) -> Vec<([f64; 2], f64)> {
    let mut xs = vec![0.0f64];
    let mut place = 0.25;
    for _ in 0..m {
        let mut next = Vec::with_capacity(xs.len() * 2);
        for &x in &xs {
            next.push(x);
            next.push(x + 3.0 * place);
        }
        xs = next;
        place /= 4.0;
    }
    let w = 1.0 / (xs.len() * xs.len()) as f64;
    let mut atoms = Vec::with_capacity(xs.len() * xs.len());
    for &x in &xs {
        for &y in &xs {
            atoms.push(([x, y], w));
        }
    }
    atoms
}

pub fn run(spec: &ExperimentSpec) -> Result<ExperimentRecord> {
    let s = spec.f64("s", 0.75)?;
    let t = spec.f64("t", 1.0)?;
    let m_min = spec.u64("m_min", 2)? as u32;
    let m_max = spec.u64("m_max", 5)? as u32;
    let tol = spec.f64("tolerance", 0.2)?;

    let mut record = ExperimentRecord::new(
        spec.clone(),
        &["delta", "norm_sq", "log2_inv_delta", "log2_norm_sq"],
    );
    let mut rows = Vec::new();
    for m in m_min..=m_max {
        let delta = (4.0f64).powi(-(m as i32));
        let mu = product_cantor(m);
        let sigma = lattice_parabola_measure(delta, s)?;
        // mu * sigma as an atom list: all pairwise sums with product masses
        let mut atoms = Vec::with_capacity(mu.len() * sigma.len());
        for &(p, wp) in &mu {
            for &(q, wq) in sigma.atoms() {
                atoms.push(([p[0] + q[0], p[1] + q[1]], wp * wq));
            }
        }
        let norm_sq = mollified_l2_norm_sq(&atoms, delta);
        record.push_row(vec![delta, norm_sq, -delta.log2(), norm_sq.log2()]);
        record.plot.push((-delta.log2(), norm_sq.log2()));
        rows.push((delta, norm_sq));
    }
    let (slope, residual) = fit_exponent(rows)?;
    let predicted = 2.0 - zeta_exponent(s, t)?;
    record.fitted.insert("slope".into(), slope);
    record.fitted.insert("residual".into(), residual);
    record.predicted.insert("slope_upper_bound".into(), predicted);
    record.verdicts.push(Verdict::at_most("smoothing_slope", predicted, slope, tol));
    Ok(record)
}
