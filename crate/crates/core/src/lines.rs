//! Lines in the plane, the affine-Grassmannian metric, and tubes.

use serde::{Deserialize, Serialize};

/// A line in the plane.
///
/// Carries both the slope-intercept data `y = ax + b` (the parametrization
/// used everywhere downstream; vertical lines are supported only for metric
/// computations) and the derived direction/offset decomposition
/// `ell = offset + span(dir)` with `offset` in the orthogonal complement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrassmannLine {
    /// Unit direction, canonicalized so that (dir.y > 0) or (dir.y == 0 && dir.x > 0).
    dir: [f64; 2],
    /// The point of the line lying in the orthogonal complement of `dir`.
    offset: [f64; 2],
}

impl GrassmannLine {
    /// The line `y = ax + b`.
    pub fn new(slope: f64, intercept: f64) -> Self {
        let norm = (1.0 + slope * slope).sqrt();
        let mut dir = [1.0 / norm, slope / norm];
        if dir[1] < 0.0 || (dir[1] == 0.0 && dir[0] < 0.0) {
            dir = [-dir[0], -dir[1]];
        }
        // project (0, b) onto dir^perp
        let perp = [-dir[1], dir[0]];
        let c = intercept * perp[1];
        GrassmannLine { dir, offset: [c * perp[0], c * perp[1]] }
    }

    /// The vertical line `x = x0` (no slope-intercept form).
    pub fn vertical(x0: f64) -> Self {
        GrassmannLine { dir: [0.0, 1.0], offset: [x0, 0.0] }
    }

    pub fn direction(&self) -> [f64; 2] {
        self.dir
    }

    pub fn offset_point(&self) -> [f64; 2] {
        self.offset
    }

    /// Slope of the line; `None` when vertical.
    pub fn slope(&self) -> Option<f64> {
        if self.dir[0] == 0.0 {
            None
        } else {
            Some(self.dir[1] / self.dir[0])
        }
    }

    /// Intercept with the y-axis; `None` when vertical.
    pub fn intercept(&self) -> Option<f64> {
        let a = self.slope()?;
        Some(self.offset[1] - a * self.offset[0])
    }

    /// 2x2 orthogonal projection matrix onto the direction subspace.
    pub fn projection_matrix(&self) -> [[f64; 2]; 2] {
        let [dx, dy] = self.dir;
        [[dx * dx, dx * dy], [dx * dy, dy * dy]]
    }

    /// Euclidean distance from a point to the line.
    pub fn distance_to(&self, p: [f64; 2]) -> f64 {
        let v = [p[0] - self.offset[0], p[1] - self.offset[1]];
        (v[0] * self.dir[1] - v[1] * self.dir[0]).abs()
    }

    /// Whether `p` lies on the line within `tol`.
    pub fn contains(&self, p: [f64; 2], tol: f64) -> bool {
        self.distance_to(p) <= tol
    }
}

/// Operator norm of a symmetric 2x2 matrix.
fn sym_op_norm(m: [[f64; 2]; 2]) -> f64 {
    let mean = (m[0][0] + m[1][1]) / 2.0;
    let r = (((m[0][0] - m[1][1]) / 2.0).powi(2) + m[0][1] * m[1][0]).max(0.0).sqrt();
    (mean + r).abs().max((mean - r).abs())
}

/// Metric on the affine Grassmannian:
/// operator-norm distance of the direction projections plus the Euclidean
/// distance of the offset points.
pub fn line_metric(l1: &GrassmannLine, l2: &GrassmannLine) -> f64 {
    let p1 = l1.projection_matrix();
    let p2 = l2.projection_matrix();
    let diff = [
        [p1[0][0] - p2[0][0], p1[0][1] - p2[0][1]],
        [p1[1][0] - p2[1][0], p1[1][1] - p2[1][1]],
    ];
    let a1 = l1.offset_point();
    let a2 = l2.offset_point();
    sym_op_norm(diff) + ((a1[0] - a2[0]).powi(2) + (a1[1] - a2[1]).powi(2)).sqrt()
}

/// A tube: the w/2-neighbourhood of its core line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tube {
    pub core: GrassmannLine,
    pub width: f64,
}

impl Tube {
    pub fn new(core: GrassmannLine, width: f64) -> Self {
        assert!(width > 0.0, "tube width must be positive");
        Tube { core, width }
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        self.core.distance_to(p) <= self.width / 2.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn representations_agree() {
        for (a, b) in [(0.0, 0.0), (2.0, -1.0), (-0.5, 3.0), (10.0, 0.25)] {
            let l = GrassmannLine::new(a, b);
            assert!(l.contains([0.0, b], 1e-12));
            assert!((l.slope().unwrap() - a).abs() < 1e-12);
            assert!((l.intercept().unwrap() - b).abs() < 1e-9);
            // the offset point is on the line and orthogonal to dir
            let o = l.offset_point();
            assert!(l.contains(o, 1e-12));
            let d = l.direction();
            assert!((o[0] * d[0] + o[1] * d[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn metric_examples() {
        let l = GrassmannLine::new(0.7, -0.3);
        assert_eq!(line_metric(&l, &l), 0.0);

        // parallel horizontals y=0 vs y=1: projections equal, offsets 1 apart
        let h0 = GrassmannLine::new(0.0, 0.0);
        let h1 = GrassmannLine::new(0.0, 1.0);
        assert!((line_metric(&h0, &h1) - 1.0).abs() < 1e-15);

        // x-axis vs y-axis: offsets both zero, ||diag(1,0) - diag(0,1)|| = 1
        let x_axis = GrassmannLine::new(0.0, 0.0);
        let y_axis = GrassmannLine::vertical(0.0);
        assert!((line_metric(&x_axis, &y_axis) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn metric_axioms_on_random_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..2000 {
            let mk = |rng: &mut ChaCha8Rng| {
                GrassmannLine::new(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0))
            };
            let (a, b, c) = (mk(&mut rng), mk(&mut rng), mk(&mut rng));
            let dab = line_metric(&a, &b);
            let dba = line_metric(&b, &a);
            assert!((dab - dba).abs() <= 1e-12);
            let dac = line_metric(&a, &c);
            let dcb = line_metric(&c, &b);
            assert!(dab <= dac + dcb + 1e-12);
        }
    }

    #[test]
    fn zero_iff_same_line() {
        let a = GrassmannLine::new(1.0, 2.0);
        let b = GrassmannLine::new(1.0, 2.0 + 1e-9);
        assert!(line_metric(&a, &b) > 0.0);
    }
}
