//! Sampled densities on uniform grids: mollification of atomic measures,
//! grid L^2 norms, spatial Riesz energies, and binary field dumps.

use std::collections::HashMap;
use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use num_complex::Complex64;
use rustfft::FftDirection;

use crate::error::{Error, Result};
use crate::fft::{fft2, next_fft_size};
use crate::mollifier::{adaptive_simpson, MollifierSpec};
use crate::parabola::AtomicMeasure;

/// A non-negative density sampled on a uniform grid.
///
/// Sample `(ix, iy)` sits at `origin + (ix h, iy h)` and represents the cell
/// of side `h` centred there. Row-major layout, `values[iy * nx + ix]`.
/// `half_width` records the requested square domain half-width S; fields
/// produced by [`mollify`] satisfy `nx = ny = 2S/h` exactly, internal
/// convolution grids may be rectangular.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub origin: [f64; 2],
    pub h: f64,
    pub half_width: f64,
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn zeros(origin: [f64; 2], h: f64, half_width: f64, nx: usize, ny: usize) -> Self {
        GridField { origin, h, half_width, nx, ny, values: vec![0.0; nx * ny] }
    }

    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.nx + ix]
    }

    pub fn position(&self, ix: usize, iy: usize) -> [f64; 2] {
        [self.origin[0] + ix as f64 * self.h, self.origin[1] + iy as f64 * self.h]
    }

    /// Total mass `h^2 sum(values)`.
    pub fn mass(&self) -> f64 {
        self.h * self.h * self.values.iter().sum::<f64>()
    }

    /// Binary dump: origin, h, S, dims as little-endian, then row-major f64s.
    pub fn write_binary(&self, w: &mut impl Write) -> Result<()> {
        w.write_f64::<LittleEndian>(self.origin[0])?;
        w.write_f64::<LittleEndian>(self.origin[1])?;
        w.write_f64::<LittleEndian>(self.h)?;
        w.write_f64::<LittleEndian>(self.half_width)?;
        w.write_u64::<LittleEndian>(self.nx as u64)?;
        w.write_u64::<LittleEndian>(self.ny as u64)?;
        for &v in &self.values {
            w.write_f64::<LittleEndian>(v)?;
        }
        Ok(())
    }

    pub fn read_binary(r: &mut impl Read) -> Result<Self> {
        let origin = [r.read_f64::<LittleEndian>()?, r.read_f64::<LittleEndian>()?];
        let h = r.read_f64::<LittleEndian>()?;
        let half_width = r.read_f64::<LittleEndian>()?;
        let nx = r.read_u64::<LittleEndian>()? as usize;
        let ny = r.read_u64::<LittleEndian>()? as usize;
        let mut values = vec![0.0; nx * ny];
        for v in &mut values {
            *v = r.read_f64::<LittleEndian>()?;
        }
        Ok(GridField { origin, h, half_width, nx, ny, values })
    }
}

/// `h^2 sum values^2` - the Riemann-sum squared L^2 norm.
pub fn l2_norm_sq(f: &GridField) -> f64 {
    f.h * f.h * f.values.iter().map(|v| v * v).sum::<f64>()
}

/// Exact integral of `psi_delta(x - centre)` over the square cell of side `h`
/// centred at `cell_centre`, divided by the cell area.
///
/// The radial integrand is reduced to signed polar sectors over the cell
/// edges; the inner radial integral has a closed form for the trapezoid
/// profile, the outer angular integral is done adaptively. Summing these
/// averages over a stencil therefore reproduces `int psi = 1` to quadrature
/// accuracy (~1e-12), which is what makes mollification conserve mass.
pub fn cell_average_psi(spec: &MollifierSpec, cell_centre: [f64; 2], h: f64, delta: f64) -> f64 {
    let rho = spec.outer_radius;
    // quick reject: farthest cell corner inside the support?
    let cx = cell_centre[0].abs() + h / 2.0;
    let cy = cell_centre[1].abs() + h / 2.0;
    let reach = rho * delta;
    if (cell_centre[0].abs() - h / 2.0).max(0.0).powi(2)
        + (cell_centre[1].abs() - h / 2.0).max(0.0).powi(2)
        > reach * reach
    {
        return 0.0;
    }
    // fully in the plateau?
    if cx * cx + cy * cy <= (spec.inner_radius * delta).powi(2) {
        return 1.0 / (delta * delta);
    }

    // F(R) = int_0^R psi_delta(r) r dr, in closed form
    let inner = spec.inner_radius;
    let f_cap = {
        let r = rho;
        inner * inner / 2.0
            + (r * (r * r - inner * inner) / 2.0 - (r * r * r - inner.powi(3)) / 3.0)
                / (rho - inner)
    };
    let f_radial = |dist: f64| -> f64 {
        let r = dist / delta;
        if r <= inner {
            r * r / 2.0
        } else if r >= rho {
            f_cap
        } else {
            inner * inner / 2.0
                + (rho * (r * r - inner * inner) / 2.0 - (r * r * r - inner.powi(3)) / 3.0)
                    / (rho - inner)
        }
    };

    // signed sector decomposition over the four edges
    let xs = [cell_centre[0] - h / 2.0, cell_centre[0] + h / 2.0];
    let ys = [cell_centre[1] - h / 2.0, cell_centre[1] + h / 2.0];
    let corners = [[xs[0], ys[0]], [xs[1], ys[0]], [xs[1], ys[1]], [xs[0], ys[1]]];
    let mut total = 0.0;
    for e in 0..4 {
        let u = corners[e];
        let v = corners[(e + 1) % 4];
        // distance from origin to the edge line, and angle span
        let edge = [v[0] - u[0], v[1] - u[1]];
        let len = (edge[0] * edge[0] + edge[1] * edge[1]).sqrt();
        let n = [edge[1] / len, -edge[0] / len];
        let d = n[0] * u[0] + n[1] * u[1];
        let theta_u = u[1].atan2(u[0]);
        let theta_v = v[1].atan2(v[0]);
        let mut span = theta_v - theta_u;
        while span > std::f64::consts::PI {
            span -= 2.0 * std::f64::consts::PI;
        }
        while span < -std::f64::consts::PI {
            span += 2.0 * std::f64::consts::PI;
        }
        if d.abs() < 1e-300 || span == 0.0 {
            continue;
        }
        let g = |t: f64| {
            let theta = theta_u + t * span;
            let ray = d / (n[0] * theta.cos() + n[1] * theta.sin());
            f_radial(ray.abs())
        };
        total += span * adaptive_simpson(&g, 0.0, 1.0, 1e-13);
    }
    total.max(0.0) / (h * h)
}

/// Stencil of cell averages of `psi_delta` around an atom.
#[derive(Debug, Clone)]
pub struct Stencil {
    pub half: i64,
    pub width: usize,
    pub values: Vec<f64>,
}

/// Cell-averaged raster of `psi_delta(x - (base + offset))` where `offset` is
/// the atom's position relative to its nearest grid sample.
pub fn build_stencil(delta: f64, h: f64, offset: [f64; 2]) -> Stencil {
    let spec = MollifierSpec::standard();
    let reach = spec.outer_radius * delta;
    let half = (reach / h).ceil() as i64 + 1;
    let width = (2 * half + 1) as usize;
    let mut values = vec![0.0; width * width];
    for dy in -half..=half {
        for dx in -half..=half {
            let centre = [dx as f64 * h - offset[0], dy as f64 * h - offset[1]];
            let v = cell_average_psi(spec, centre, h, delta);
            values[((dy + half) as usize) * width + (dx + half) as usize] = v;
        }
    }
    Stencil { half, width, values }
}

/// Mollify an atomic measure at scale `delta` on the square `[-S, S]^2`.
///
/// Grid spacing is `delta / 4`; every atom must sit in `[-S+delta, S-delta]^2`.
pub fn mollify(m: &AtomicMeasure, delta: f64, half_width: f64) -> Result<GridField> {
    let h = delta / 4.0;
    let n = (2.0 * half_width / h).round() as usize;
    if ((n as f64) * h - 2.0 * half_width).abs() > 1e-9 * h {
        return Err(Error::BadScale(format!(
            "domain half-width {half_width} is not a multiple of h = {h}"
        )));
    }
    let mut field = GridField::zeros([-half_width, -half_width], h, half_width, n, n);
    let mut stencils: HashMap<(i64, i64), Stencil> = HashMap::new();
    for &(p, mass) in m.atoms() {
        if p[0] < -half_width + delta
            || p[0] > half_width - delta
            || p[1] < -half_width + delta
            || p[1] > half_width - delta
        {
            return Err(Error::SupportEscapesDomain(p));
        }
        let bx = ((p[0] - field.origin[0]) / h).round() as i64;
        let by = ((p[1] - field.origin[1]) / h).round() as i64;
        let offset = [
            p[0] - (field.origin[0] + bx as f64 * h),
            p[1] - (field.origin[1] + by as f64 * h),
        ];
        // quantized offset key: atoms sharing a sub-cell position share stencils
        let key = ((offset[0] / h * 1e12).round() as i64, (offset[1] / h * 1e12).round() as i64);
        let stencil =
            stencils.entry(key).or_insert_with(|| build_stencil(delta, h, offset));
        for dy in -stencil.half..=stencil.half {
            let iy = by + dy;
            if iy < 0 || iy >= n as i64 {
                continue;
            }
            for dx in -stencil.half..=stencil.half {
                let ix = bx + dx;
                if ix < 0 || ix >= n as i64 {
                    continue;
                }
                let v = stencil.values
                    [((dy + stencil.half) as usize) * stencil.width + (dx + stencil.half) as usize];
                field.values[iy as usize * n + ix as usize] += mass * v;
            }
        }
    }
    Ok(field)
}

/// Exact self-interaction constant of the unit cell:
/// `c(u) = int_{C x C} |z - w|^-u dz dw` for the unit square C.
///
/// Reduced to a 1D angular integral with closed-form radial part.
pub fn unit_cell_self_energy(u: f64) -> f64 {
    assert!(u > 0.0 && u < 2.0);
    // c(u) = int_{[-1,1]^2} (1-|v1|)(1-|v2|) |v|^-u dv = 4 int_{[0,1]^2} ...
    // polar over the unit square with Rmax(theta) = min(1/cos, 1/sin):
    // inner integral of r^{1-u} (1 - r(c+s) + r^2 cs) dr is closed form.
    let f = |theta: f64| {
        let c = theta.cos();
        let s = theta.sin();
        let rmax = (1.0 / c).min(1.0 / s);
        let t1 = rmax.powf(2.0 - u) / (2.0 - u);
        let t2 = (c + s) * rmax.powf(3.0 - u) / (3.0 - u);
        let t3 = c * s * rmax.powf(4.0 - u) / (4.0 - u);
        t1 - t2 + t3
    };
    // symmetric about pi/4
    let quarter = adaptive_simpson(&f, 1e-12, std::f64::consts::FRAC_PI_4, 1e-12)
        + adaptive_simpson(&f, std::f64::consts::FRAC_PI_4, std::f64::consts::FRAC_PI_2 - 1e-12, 1e-12);
    4.0 * quarter
}

/// Route selection for [`spatial_energy_grid_with_route`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyRoute {
    /// O(N^4) double loop; only for grids up to 256 x 256.
    Direct,
    /// Cyclic FFT convolution with the |x|^-u kernel raster (same sums).
    Fft,
    /// Direct when small enough, FFT otherwise.
    Auto,
}

/// Double Riemann sum `sum f(x) f(y) |x-y|^-u h^4` with the diagonal cell
/// replaced by the exact closed-form cell self-energy.
pub fn spatial_energy_grid(f: &GridField, u: f64) -> Result<f64> {
    spatial_energy_grid_with_route(f, u, EnergyRoute::Auto)
}

pub fn spatial_energy_grid_with_route(f: &GridField, u: f64, route: EnergyRoute) -> Result<f64> {
    if !(u > 0.0 && u < 2.0) {
        return Err(Error::ParamOutOfRange(format!("energy exponent u = {u} not in (0,2)")));
    }
    let big = f.nx > 256 || f.ny > 256;
    match route {
        EnergyRoute::Direct if big => Err(Error::GridTooLarge { n: f.nx.max(f.ny) }),
        EnergyRoute::Direct => Ok(energy_direct(f, u)),
        EnergyRoute::Fft => energy_fft(f, u),
        EnergyRoute::Auto => {
            if big {
                energy_fft(f, u)
            } else {
                Ok(energy_direct(f, u))
            }
        }
    }
}

fn diagonal_constant(u: f64) -> f64 {
    // memoized per exponent
    use std::sync::{Mutex, OnceLock};
    static CACHE: OnceLock<Mutex<HashMap<u64, f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    *guard.entry(u.to_bits()).or_insert_with(|| unit_cell_self_energy(u))
}

fn energy_direct(f: &GridField, u: f64) -> f64 {
    let h = f.h;
    let cu = diagonal_constant(u);
    let mut acc = 0.0;
    for iy in 0..f.ny {
        for ix in 0..f.nx {
            let a = f.at(ix, iy);
            if a == 0.0 {
                continue;
            }
            for jy in 0..f.ny {
                for jx in 0..f.nx {
                    let b = f.at(jx, jy);
                    if b == 0.0 {
                        continue;
                    }
                    if ix == jx && iy == jy {
                        // mass^2 c(u) h^-u with mass = a h^2
                        acc += a * b * cu * h.powf(-u) * h.powi(4);
                    } else {
                        let dx = (ix as f64 - jx as f64) * h;
                        let dy = (iy as f64 - jy as f64) * h;
                        let d = (dx * dx + dy * dy).sqrt();
                        acc += a * b * d.powf(-u) * h.powi(4);
                    }
                }
            }
        }
    }
    acc
}

fn energy_fft(f: &GridField, u: f64) -> Result<f64> {
    // kernel k(v) = |v|^-u at cell offsets, diagonal cell = c(u) h^-u;
    // cyclic convolution with zero padding reproduces the direct sums exactly.
    let nx = next_fft_size(2 * f.nx);
    let ny = next_fft_size(2 * f.ny);
    let cells = nx.checked_mul(ny).ok_or(Error::WraparoundRisk { needed: usize::MAX, budget: 1 << 27 })?;
    if cells > 1 << 27 {
        return Err(Error::WraparoundRisk { needed: cells, budget: 1 << 27 });
    }
    let h = f.h;
    let cu = diagonal_constant(u);
    let mut field = vec![Complex64::default(); cells];
    for iy in 0..f.ny {
        for ix in 0..f.nx {
            field[iy * nx + ix] = Complex64::new(f.at(ix, iy), 0.0);
        }
    }
    let mut kernel = vec![Complex64::default(); cells];
    for dy in -(f.ny as i64 - 1)..=(f.ny as i64 - 1) {
        for dx in -(f.nx as i64 - 1)..=(f.nx as i64 - 1) {
            let v = if dx == 0 && dy == 0 {
                cu * h.powf(-u)
            } else {
                let d = ((dx * dx + dy * dy) as f64).sqrt() * h;
                d.powf(-u)
            };
            let ix = dx.rem_euclid(nx as i64) as usize;
            let iy = dy.rem_euclid(ny as i64) as usize;
            kernel[iy * nx + ix] = Complex64::new(v, 0.0);
        }
    }
    fft2(&mut field, nx, ny, FftDirection::Forward);
    fft2(&mut kernel, nx, ny, FftDirection::Forward);
    for (a, b) in field.iter_mut().zip(&kernel) {
        *a *= b;
    }
    fft2(&mut field, nx, ny, FftDirection::Inverse);
    let scale = 1.0 / (nx * ny) as f64;
    let mut acc = 0.0;
    for iy in 0..f.ny {
        for ix in 0..f.nx {
            acc += f.at(ix, iy) * field[iy * nx + ix].re * scale;
        }
    }
    Ok(acc * h.powi(4))
}
