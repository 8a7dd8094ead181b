//! The involution `(x, y) -> (x, x^2 - y)` exchanging translated parabolas
//! and lines, the induced tube transfer, and parabolic rescaling.

use crate::error::{Error, Result};
use crate::lines::{GrassmannLine, Tube};
use crate::parabola::AtomicMeasure;

/// `Psi(x, y) = (x, x^2 - y)`.
pub fn psi(p: [f64; 2]) -> [f64; 2] {
    [p[0], p[0] * p[0] - p[1]]
}

/// The image line `Psi(z + P-bar)` for a translate of the full parabola:
/// `ell(2 x0, -x0^2 - y0)` for `z = (x0, y0)`.
pub fn line_of_translated_parabola(z: [f64; 2]) -> GrassmannLine {
    GrassmannLine::new(2.0 * z[0], -z[0] * z[0] - z[1])
}

/// Tangent-slope line through `z`: `y = y0 + 2 x0 (x - x0)`; its Psi-image is
/// the translated parabola `Psi(z) + P-bar`.
pub fn tangent_line(z: [f64; 2]) -> GrassmannLine {
    GrassmannLine::new(2.0 * z[0], z[1] - 2.0 * z[0] * z[0])
}

/// Axis-aligned box `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy)]
pub struct BoundingBox {
    pub x: [f64; 2],
    pub y: [f64; 2],
}

impl BoundingBox {
    pub fn square(half_width: f64) -> Self {
        BoundingBox { x: [-half_width, half_width], y: [-half_width, half_width] }
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.x[0] && p[0] <= self.x[1] && p[1] >= self.y[0] && p[1] <= self.y[1]
    }

    pub fn max_abs_x(&self) -> f64 {
        self.x[0].abs().max(self.x[1].abs())
    }

    pub fn is_bounded(&self) -> bool {
        self.x.iter().chain(self.y.iter()).all(|v| v.is_finite())
    }
}

/// Result of transferring a parabola neighbourhood through Psi.
#[derive(Debug, Clone)]
pub struct TransferResult {
    pub tube: Tube,
    /// The distortion constant C used for the tube radius C delta.
    pub constant: f64,
    /// Sampled sup of dist(Psi(w), core line)/delta over the neighbourhood.
    pub audited_distortion: f64,
    /// Number of samples that fell outside the box (reported, not silent).
    pub samples_outside_box: usize,
}

/// Tube `[ell_z]_{C delta}` containing `Psi^-1([Psi(z) + P-bar]_{2 delta} n B)`.
///
/// The distortion constant is computed from the box - on all of the plane no
/// constant exists because the parabola's slope is unbounded - as
/// `C = 2 (1 + 2 max|x|) + 1`, and audited on a deterministic sample grid.
pub fn transfer_neighbourhood(z: [f64; 2], delta: f64, b: BoundingBox) -> Result<TransferResult> {
    if !b.is_bounded() {
        return Err(Error::ParamOutOfRange("transfer box must be bounded".into()));
    }
    let c = 2.0 * (1.0 + 2.0 * b.max_abs_x()) + 1.0;
    let core = tangent_line(z);
    let tube = Tube::new(core, 2.0 * c * delta);

    // sample [Psi(z) + P-bar]_{2 delta} n B: points (x, psi(z).y + (x - psi(z).x)^2 + e)
    let w = psi(z);
    let n_along = 100usize;
    let n_across = 100usize;
    let mut audited: f64 = 0.0;
    let mut outside = 0usize;
    for i in 0..n_along {
        let x = b.x[0] + (b.x[1] - b.x[0]) * (i as f64 + 0.5) / n_along as f64;
        let base = w[1] + (x - w[0]) * (x - w[0]);
        for j in 0..n_across {
            let e = -2.0 * delta + 4.0 * delta * (j as f64 + 0.5) / n_across as f64;
            let q = [x, base + e];
            if !b.contains(q) {
                outside += 1;
                continue;
            }
            let img = psi(q);
            audited = audited.max(core.distance_to(img) / delta);
        }
    }
    if audited > c {
        return Err(Error::ParamOutOfRange(format!(
            "audited distortion {audited} exceeds computed constant {c}"
        )));
    }
    Ok(TransferResult { tube, constant: c, audited_distortion: audited, samples_outside_box: outside })
}

/// Parabolic rescaling `F(x) = (x1 / R, x2 / R^2)`; masses unchanged.
pub fn parabolic_rescale(m: &AtomicMeasure, r: f64) -> Result<AtomicMeasure> {
    if !(r >= 1.0) {
        return Err(Error::ParamOutOfRange(format!("R must be >= 1, got {r}")));
    }
    let atoms = m
        .atoms()
        .iter()
        .map(|&(p, w)| ([p[0] / r, p[1] / (r * r)], w))
        .collect();
    AtomicMeasure::new(atoms, m.separation() / (r * r), m.tag())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::{frostman_constant, scale_to_level, DyadicMeasure};
    use crate::lines::line_metric;
    use crate::parabola::arc_measure;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn psi_pointwise_examples() {
        assert_eq!(psi([0.0, 0.0]), [0.0, 0.0]);
        assert_eq!(psi([1.0, 1.0]), [1.0, 0.0]);
        assert_eq!(psi([1.0, 0.0]), [1.0, 1.0]);
        for x in [-1.0, 0.3, 1.0] {
            let img = psi([x, x * x]);
            assert_eq!(img, [x, 0.0]);
        }
    }

    #[test]
    fn involution_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        // On [-2,2]^2 the recovered y differs from y by at most the rounding
        // of x^2 - y, i.e. a few ulps at magnitude <= 4.
        for _ in 0..10000 {
            let p = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let q = psi(psi(p));
            assert_eq!(q[0], p[0]);
            assert!((q[1] - p[1]).abs() <= 1e-12);
        }
        // At |coords| <= 2^20 the bound is one ulp of x^2 <= 2^40, i.e. 2^-12
        for _ in 0..10000 {
            let p = [
                rng.gen_range(-1048576.0..1048576.0f64),
                rng.gen_range(-1048576.0..1048576.0f64),
            ];
            let q = psi(psi(p));
            assert_eq!(q[0], p[0]);
            assert!((q[1] - p[1]).abs() <= (2.0f64).powi(-12));
        }
    }

    #[test]
    fn translated_parabola_line_examples() {
        let l = line_of_translated_parabola([0.0, 0.0]);
        assert_eq!(l.slope().unwrap(), 0.0);
        assert_eq!(l.intercept().unwrap(), 0.0);

        let l = line_of_translated_parabola([1.0, 0.0]);
        assert!((l.slope().unwrap() - 2.0).abs() < 1e-12);
        assert!((l.intercept().unwrap() + 1.0).abs() < 1e-9);

        // psi of points on z + P-bar lands on the returned line
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let z = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let l = line_of_translated_parabola(z);
            let t = rng.gen_range(-2.0..2.0);
            let w = [z[0] + t, z[1] + t * t];
            assert!(l.distance_to(psi(w)) < 1e-12);
        }
    }

    #[test]
    fn tangent_line_examples() {
        let l = tangent_line([0.0, 0.0]);
        assert_eq!(l.slope().unwrap(), 0.0);

        let l = tangent_line([1.0, 1.0]);
        assert!((l.slope().unwrap() - 2.0).abs() < 1e-12);
        assert!((l.intercept().unwrap() + 1.0).abs() < 1e-9);

        // psi of samples of ell_z lies on psi(z) + P-bar
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let z = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let l = tangent_line(z);
            let a = l.slope().unwrap();
            let b = l.intercept().unwrap();
            let x = rng.gen_range(-2.0..2.0);
            let on_line = [x, a * x + b];
            let img = psi(on_line);
            let w = psi(z);
            // img should equal w + (x - z0, (x - z0)^2)
            let dx = x - z[0];
            assert!((img[0] - (w[0] + dx)).abs() < 1e-12);
            assert!((img[1] - (w[1] + dx * dx)).abs() < 1e-10);
        }
    }

    #[test]
    fn bilipschitz_on_boxes() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let k = 2.0;
        let lip = 1.0 + 2.0 * k;
        for _ in 0..5000 {
            let p: [f64; 2] = [rng.gen_range(-k..k), rng.gen_range(-k..k)];
            let q: [f64; 2] = [rng.gen_range(-k..k), rng.gen_range(-k..k)];
            let d = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
            let (ip, iq) = (psi(p), psi(q));
            let di = ((ip[0] - iq[0]).powi(2) + (ip[1] - iq[1]).powi(2)).sqrt();
            assert!(di <= lip * d + 1e-12, "upper bound fails");
            assert!(di >= d / lip - 1e-12, "lower bound fails");
        }
    }

    #[test]
    fn line_map_metric_comparable() {
        // d(images of z1, z2) within a factor 10 of |z1 - z2| on [-1,1]^2
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..2000 {
            let z1: [f64; 2] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let z2: [f64; 2] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let d = ((z1[0] - z2[0]).powi(2) + (z1[1] - z2[1]).powi(2)).sqrt();
            if d < 1e-9 {
                continue;
            }
            let dl = line_metric(
                &line_of_translated_parabola(z1),
                &line_of_translated_parabola(z2),
            );
            assert!(dl <= 10.0 * d + 1e-12, "ratio {}", dl / d);
            assert!(dl >= d / 10.0 - 1e-12, "ratio {}", dl / d);
        }
    }

    #[test]
    fn transfer_constant_and_containment() {
        let delta = (2.0f64).powi(-8);
        let r = transfer_neighbourhood([0.0, 0.0], delta, BoundingBox::square(2.0)).unwrap();
        assert!(r.constant <= 12.0, "C = {}", r.constant);
        assert!(r.audited_distortion <= r.constant);
        // the delta -> 0 core agrees with the translated-parabola image:
        // for z = Psi(w), tangent_line(z) = line_of_translated_parabola(psi(z))
        let w = [0.7, -0.3];
        let z = psi(w);
        let a = tangent_line(z);
        let b = line_of_translated_parabola(psi(z));
        assert!(line_metric(&a, &b) < 1e-12);
        // samples outside the box are reported
        let r2 =
            transfer_neighbourhood([1.5, 0.0], delta, BoundingBox { x: [-2.0, 2.0], y: [-0.5, 0.5] })
                .unwrap();
        assert!(r2.samples_outside_box > 0);
    }

    #[test]
    fn rescale_examples() {
        let m = arc_measure(0.25).unwrap();
        let id = parabolic_rescale(&m, 1.0).unwrap();
        assert_eq!(m.atoms(), id.atoms());

        let two = crate::parabola::AtomicMeasure::new(
            vec![([2.0, 4.0], 1.0)],
            1.0,
            crate::parabola::MeasureTag::Custom,
        )
        .unwrap();
        let scaled = parabolic_rescale(&two, 2.0).unwrap();
        assert_eq!(scaled.atoms()[0].0, [1.0, 1.0]);
        // parabola maps into parabola
        for &(p, _) in scaled.atoms() {
            assert!((p[1] - p[0] * p[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn rescale_frostman_drift_is_polynomial_in_r() {
        // the t-energy Frostman constant changes by at most R^{2t + O(1)}
        let delta = (2.0f64).powi(-6);
        let m = arc_measure(delta).unwrap();
        let r = 2.0;
        let scaled = parabolic_rescale(&m, r).unwrap();
        let t = 1.0;
        let level = scale_to_level(delta).unwrap();
        let to_dyadic = |m: &crate::parabola::AtomicMeasure, level: u32| {
            let mut d = DyadicMeasure::new(level);
            let inv = (level as f64).exp2();
            for &(p, w) in m.atoms() {
                d.add((p[0] * inv).floor() as i64, (p[1] * inv).floor() as i64, w);
            }
            d
        };
        let c0 = frostman_constant(&to_dyadic(&m, level), t, delta).unwrap();
        let c1 = frostman_constant(&to_dyadic(&scaled, level + 2), t, delta / 4.0).unwrap();
        let bound = r.powf(2.0 * t + 2.0);
        assert!(c1 <= bound * c0 && c0 <= bound * c1, "c0 {c0}, c1 {c1}, bound {bound}");
    }
}
