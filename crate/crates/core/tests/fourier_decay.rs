//! L^p growth of the arc measure's transform over nested disks: the fitted
//! log-log slope stays below (2 - t)/p + 0.1 for t = 1.8 at p = 6.

use paralab_core::arith::fit_exponent;
use paralab_core::parabola::arc_measure;
use paralab_core::spectrum::fourier_lp_norms_nested;

#[test]
fn arc_l6_growth_slope() {
    let p = 6.0;
    let t = 1.8;
    let arc = arc_measure((2.0f64).powi(-9)).unwrap();
    // spacing snapped to the atom lattice so rows run through the DFT engine
    let base = arc.separation();
    let needed = 4.0 * (arc.diameter() + 1.0);
    let len = ((needed / base).ceil() as usize).next_power_of_two() * 2;
    let spacing = 1.0 / (base * len as f64);

    let radii: Vec<f64> = (4..=9).map(|k| (k as f64).exp2()).collect();
    let norms = fourier_lp_norms_nested(&arc, p, &radii, spacing).unwrap();
    let rows: Vec<(f64, f64)> = radii.iter().zip(&norms).map(|(&r, &v)| (1.0 / r, v)).collect();
    let (slope, _) = fit_exponent(rows).unwrap();
    let bound = (2.0 - t) / p + 0.1;
    assert!(slope <= bound, "slope {slope} exceeds {bound}");
    // and the norms do grow: the slope is positive
    assert!(slope > 0.0, "slope {slope}");
}
