//! The radial trapezoid approximate identity.
//!
//! The profile equals 1 on B(1/2), falls linearly to 0 at the outer radius,
//! and the outer radius is solved so the integral is exactly 1. That pins the
//! sandwich `1_{B(1/2)} <= psi <= 1_{B(1)}` and radial monotonicity, which the
//! discretization estimates downstream depend on (the factor 64 in the
//! level-set sandwich needs the plateau).
//!
//! Everything here is scale-free: `psi_delta(x) = delta^-2 psi(x/delta)`.

use std::sync::OnceLock;

/// Radial trapezoid bump profile.
#[derive(Debug, Clone, Copy)]
pub struct MollifierSpec {
    pub inner_radius: f64,
    pub outer_radius: f64,
    pub plateau_height: f64,
}

/// Mass of the trapezoid profile with outer radius `rho` (closed form).
fn trapezoid_mass(rho: f64) -> f64 {
    // pi (1/2)^2 + 2 pi / (rho - 1/2) * (rho^3/6 - rho/8 + 1/24)
    let ring = rho * rho * rho / 6.0 - rho / 8.0 + 1.0 / 24.0;
    std::f64::consts::PI / 4.0 + 2.0 * std::f64::consts::PI * ring / (rho - 0.5)
}

fn solve_outer_radius() -> f64 {
    let (mut lo, mut hi) = (0.5 + 1e-12, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if trapezoid_mass(mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

impl MollifierSpec {
    /// The laboratory-wide profile (outer radius solved once).
    pub fn standard() -> &'static MollifierSpec {
        static SPEC: OnceLock<MollifierSpec> = OnceLock::new();
        SPEC.get_or_init(|| MollifierSpec {
            inner_radius: 0.5,
            outer_radius: solve_outer_radius(),
            plateau_height: 1.0,
        })
    }

    /// Profile value at radius `r` (unit scale).
    pub fn profile(&self, r: f64) -> f64 {
        if r <= self.inner_radius {
            self.plateau_height
        } else if r >= self.outer_radius {
            0.0
        } else {
            self.plateau_height * (self.outer_radius - r)
                / (self.outer_radius - self.inner_radius)
        }
    }

    /// `psi_delta(x) = delta^-2 psi(x / delta)` at distance `r` from the atom.
    pub fn value_scaled(&self, r: f64, delta: f64) -> f64 {
        self.profile(r / delta) / (delta * delta)
    }

    /// `int psi` by closed form (should be 1 up to the root solve).
    pub fn mass(&self) -> f64 {
        trapezoid_mass(self.outer_radius)
    }

    /// `||psi||_2^2` by closed form.
    pub fn l2_norm_sq(&self) -> f64 {
        // plateau: pi/4; ring: 2 pi int_{1/2}^{rho} ((rho - t)/(rho - 1/2))^2 t dt
        let rho = self.outer_radius;
        let a = rho - 0.5;
        // int (rho - t)^2 t dt over [1/2, rho] with u = rho - t:
        // int_0^a u^2 (rho - u) du = rho a^3/3 - a^4/4
        let ring = rho * a.powi(3) / 3.0 - a.powi(4) / 4.0;
        std::f64::consts::PI / 4.0 + 2.0 * std::f64::consts::PI * ring / (a * a)
    }

    /// Radial Fourier transform `psi_hat(|xi|)` (kernel e^{-2 pi i x.xi}).
    ///
    /// Direct quadrature: 2 pi int prof(t) J0(2 pi zeta t) t dt, with J0 by a
    /// midpoint rule that is spectrally accurate in this argument range.
    pub fn fourier_radial(&self, zeta: f64) -> f64 {
        let z = zeta.abs();
        let f = |t: f64| self.profile(t) * bessel_j0(2.0 * std::f64::consts::PI * z * t) * t;
        let inner = adaptive_simpson(&f, 0.0, self.inner_radius, 1e-13);
        let ring = adaptive_simpson(&f, self.inner_radius, self.outer_radius, 1e-13);
        2.0 * std::f64::consts::PI * (inner + ring)
    }

    /// Tabulated `psi_hat` with cubic interpolation; valid for |zeta| <= 8.
    pub fn fourier_radial_fast(&self, zeta: f64) -> f64 {
        static TABLE: OnceLock<RadialTable> = OnceLock::new();
        let table = TABLE.get_or_init(|| {
            RadialTable::build(8.0, 4097, |z| MollifierSpec::standard().fourier_radial(z))
        });
        let z = zeta.abs();
        if z >= table.max {
            // tail beyond the table: fall back to direct quadrature
            return self.fourier_radial(z);
        }
        table.eval(z)
    }

    /// Radial autocorrelation `Phi(w) = int psi(x) psi(x - w e1) dx`.
    ///
    /// Support is `[0, 2 rho]`. The scaled version is
    /// `int psi_delta(x) psi_delta(x - v) dx = delta^-2 Phi(|v| / delta)`.
    pub fn autocorrelation_radial(&self, w: f64) -> f64 {
        let w = w.abs();
        if w >= 2.0 * self.outer_radius {
            return 0.0;
        }
        let ntheta = 256usize;
        let dtheta = std::f64::consts::PI / ntheta as f64;
        let mut total = 0.0;
        for k in 0..ntheta {
            let theta = (k as f64 + 0.5) * dtheta;
            let c = theta.cos();
            let f = |t: f64| {
                let d2 = t * t - 2.0 * w * t * c + w * w;
                self.profile(t) * self.profile(d2.max(0.0).sqrt()) * t
            };
            // split at the radii where either profile factor kinks
            let mut cuts = vec![0.0, self.inner_radius, self.outer_radius];
            for kink in [self.inner_radius, self.outer_radius] {
                // |t e_theta - w e1| = kink  <=>  t^2 - 2 w c t + w^2 - kink^2 = 0
                let disc = w * w * c * c - w * w + kink * kink;
                if disc >= 0.0 {
                    let r = disc.sqrt();
                    for root in [w * c - r, w * c + r] {
                        if root > 0.0 && root < self.outer_radius {
                            cuts.push(root);
                        }
                    }
                }
            }
            cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
            cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
            let mut acc = 0.0;
            for pair in cuts.windows(2) {
                if pair[1] > pair[0] {
                    acc += adaptive_simpson(&f, pair[0], pair[1], 1e-12);
                }
            }
            total += acc;
        }
        // theta in [0, pi] doubled by symmetry
        2.0 * total * dtheta
    }

    /// Tabulated autocorrelation with cubic interpolation.
    pub fn autocorrelation_fast(&self, w: f64) -> f64 {
        static TABLE: OnceLock<RadialTable> = OnceLock::new();
        let table = TABLE.get_or_init(|| {
            let rho = MollifierSpec::standard().outer_radius;
            RadialTable::build(2.0 * rho, 2049, |w| {
                MollifierSpec::standard().autocorrelation_radial(w)
            })
        });
        let w = w.abs();
        if w >= table.max {
            return 0.0;
        }
        table.eval(w)
    }
}

/// Equidistant radial table with Catmull-Rom interpolation.
struct RadialTable {
    max: f64,
    step: f64,
    values: Vec<f64>,
}

impl RadialTable {
    fn build(max: f64, n: usize, f: impl Fn(f64) -> f64) -> Self {
        let step = max / (n - 1) as f64;
        let values = (0..n).map(|i| f(i as f64 * step)).collect();
        RadialTable { max, step, values }
    }

    fn eval(&self, x: f64) -> f64 {
        let pos = x / self.step;
        let i = (pos.floor() as usize).min(self.values.len() - 2);
        let t = pos - i as f64;
        let n = self.values.len();
        let vm = self.values[i.saturating_sub(1)];
        let v0 = self.values[i];
        let v1 = self.values[i + 1];
        let v2 = self.values[(i + 2).min(n - 1)];
        // Catmull-Rom
        let a = 2.0 * v0;
        let b = v1 - vm;
        let c = 2.0 * vm - 5.0 * v0 + 4.0 * v1 - v2;
        let d = -vm + 3.0 * v0 - 3.0 * v1 + v2;
        0.5 * (a + b * t + c * t * t + d * t * t * t)
    }
}

/// J0 by the midpoint rule on its integral representation; spectrally
/// accurate for the moderate arguments used here (|z| <~ 40).
pub fn bessel_j0(z: f64) -> f64 {
    const N: usize = 64;
    let mut acc = 0.0;
    for k in 0..N {
        let theta = (k as f64 + 0.5) * std::f64::consts::PI / N as f64;
        acc += (z * theta.sin()).cos();
    }
    acc / N as f64
}

/// Standard adaptive Simpson on [a, b].
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &impl Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &impl Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        if depth > 40 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            rec(f, a, fa, m, fm, left, lm, flm, tol / 2.0, depth + 1)
                + rec(f, m, fm, b, fb, right, rm, frm, tol / 2.0, depth + 1)
        }
    }
    if a == b {
        return 0.0;
    }
    let (fa, fb) = (f(a), f(b));
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    rec(f, a, fa, b, fb, whole, m, fm, tol, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_sandwich_and_mass() {
        let spec = MollifierSpec::standard();
        assert!(spec.outer_radius > 0.5 && spec.outer_radius < 1.0);
        assert!((spec.mass() - 1.0).abs() < 1e-10, "mass {}", spec.mass());
        let mut prev = f64::INFINITY;
        for i in 0..=1000 {
            let r = i as f64 * 1.2e-3;
            let v = spec.profile(r);
            // 1_{B(1/2)} <= psi <= 1_{B(1)}
            assert!(v <= 1.0 + 1e-15);
            if r <= 0.5 {
                assert_eq!(v, 1.0);
            }
            if r >= 1.0 {
                assert_eq!(v, 0.0);
            }
            assert!(v <= prev + 1e-15, "not radially non-increasing at {r}");
            prev = v;
        }
    }

    #[test]
    fn fourier_at_zero_is_mass() {
        let spec = MollifierSpec::standard();
        assert!((spec.fourier_radial(0.0) - 1.0).abs() < 1e-9);
        assert!((spec.fourier_radial_fast(0.0) - 1.0).abs() < 1e-8);
        // decay: |psi_hat| well below 1 at zeta = 2
        assert!(spec.fourier_radial(2.0).abs() < 0.2);
        // table matches direct quadrature
        for &z in &[0.13, 0.77, 1.9, 3.4] {
            let a = spec.fourier_radial(z);
            let b = spec.fourier_radial_fast(z);
            assert!((a - b).abs() < 1e-7, "zeta {z}: {a} vs {b}");
        }
    }

    #[test]
    fn autocorrelation_consistency() {
        let spec = MollifierSpec::standard();
        // Phi(0) = ||psi||_2^2 (closed form)
        let direct = spec.autocorrelation_radial(0.0);
        assert!((direct - spec.l2_norm_sq()).abs() < 1e-8, "{direct} vs {}", spec.l2_norm_sq());
        // support
        assert_eq!(spec.autocorrelation_radial(2.0 * spec.outer_radius + 1e-9), 0.0);
        // table agrees with direct values
        for &w in &[0.01, 0.3, 0.8, 1.1] {
            let a = spec.autocorrelation_radial(w);
            let b = spec.autocorrelation_fast(w);
            assert!((a - b).abs() < 1e-7, "w {w}: {a} vs {b}");
        }
        // ||psi||_2^2 is inside the sandwich-forced bracket [1/pi, 4/pi]
        let n2 = spec.l2_norm_sq();
        assert!(n2 >= 1.0 / std::f64::consts::PI && n2 <= 4.0 / std::f64::consts::PI);
    }

    #[test]
    fn j0_sanity() {
        assert!((bessel_j0(0.0) - 1.0).abs() < 1e-14);
        // J0(2.404825557695773) ~ 0 (first zero)
        assert!(bessel_j0(2.404825557695773).abs() < 1e-10);
    }
}
