//! Atomic measures on the parabola: the arithmetic-progression sharpness
//! example, Cantor lifts, and the uniform arc net.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureTag {
    Lattice,
    Cantor,
    Arc,
    Custom,
}

/// A weighted, separated atomic measure in the plane.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicMeasure {
    atoms: Vec<([f64; 2], f64)>,
    separation: f64,
    tag: MeasureTag,
}

impl AtomicMeasure {
    /// Build from raw atoms. `separation` is the guaranteed pairwise gap.
    pub fn new(atoms: Vec<([f64; 2], f64)>, separation: f64, tag: MeasureTag) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        for &(p, w) in &atoms {
            if !(w.is_finite() && w >= 0.0) || !p[0].is_finite() || !p[1].is_finite() {
                return Err(Error::ParamOutOfRange("atom masses must be finite and >= 0".into()));
            }
        }
        Ok(AtomicMeasure { atoms, separation, tag })
    }

    pub fn uniform(points: &[[f64; 2]], separation: f64, tag: MeasureTag) -> Result<Self> {
        let w = 1.0 / points.len() as f64;
        AtomicMeasure::new(points.iter().map(|&p| (p, w)).collect(), separation, tag)
    }

    pub fn atoms(&self) -> &[([f64; 2], f64)] {
        &self.atoms
    }

    pub fn points(&self) -> Vec<[f64; 2]> {
        self.atoms.iter().map(|&(p, _)| p).collect()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn separation(&self) -> f64 {
        self.separation
    }

    pub fn tag(&self) -> MeasureTag {
        self.tag
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|&(_, w)| w).sum()
    }

    pub fn translate(&self, v: [f64; 2]) -> Self {
        AtomicMeasure {
            atoms: self.atoms.iter().map(|&(p, w)| ([p[0] + v[0], p[1] + v[1]], w)).collect(),
            separation: self.separation,
            tag: self.tag,
        }
    }

    /// Axis-aligned bounding box [xmin, xmax, ymin, ymax].
    pub fn bounding_box(&self) -> [f64; 4] {
        let mut bb = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
        for &(p, _) in &self.atoms {
            bb[0] = bb[0].min(p[0]);
            bb[1] = bb[1].max(p[0]);
            bb[2] = bb[2].min(p[1]);
            bb[3] = bb[3].max(p[1]);
        }
        bb
    }

    pub fn diameter(&self) -> f64 {
        let bb = self.bounding_box();
        ((bb[1] - bb[0]).powi(2) + (bb[3] - bb[2]).powi(2)).sqrt()
    }
}

// JSON schema: {"tag": ..., "separation": ..., "atoms": [[x, y, mass], ...]}
impl Serialize for AtomicMeasure {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            tag: MeasureTag,
            separation: f64,
            atoms: Vec<(f64, f64, f64)>,
        }
        let atoms = self.atoms.iter().map(|&([x, y], w)| (x, y, w)).collect();
        Repr { tag: self.tag, separation: self.separation, atoms }.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for AtomicMeasure {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            tag: MeasureTag,
            separation: f64,
            atoms: Vec<(f64, f64, f64)>,
        }
        let r = Repr::deserialize(de)?;
        AtomicMeasure::new(
            r.atoms.into_iter().map(|(x, y, w)| ([x, y], w)).collect(),
            r.separation,
            r.tag,
        )
        .map_err(|e| D::Error::custom(e.to_string()))
    }
}

/// Equal masses on `{(x, x^2) : x in delta^s Z n [-1,1]}` - the measure whose
/// convolution powers stay trapped near an arithmetic progression.
///
/// Endpoints at +-1 are kept. Lattice spacing `delta^s` is also the recorded
/// separation (horizontal gaps dominate the planar distance from below only
/// up to the parabola's slope, so the true separation is at least spacing).
pub fn lattice_parabola_measure(delta: f64, s: f64) -> Result<AtomicMeasure> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::ParamOutOfRange(format!("delta must be in (0,1), got {delta}")));
    }
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::ParamOutOfRange(format!("s must be in (0,1], got {s}")));
    }
    let spacing = delta.powf(s);
    if spacing > 2.0 {
        return Err(Error::ParamOutOfRange(format!(
            "delta^s = {spacing} exceeds the domain width: no atoms"
        )));
    }
    let kmax = (1.0 / spacing + 1e-9).floor() as i64;
    let points: Vec<[f64; 2]> = (-kmax..=kmax)
        .map(|k| {
            let x = k as f64 * spacing;
            [x, x * x]
        })
        .collect();
    AtomicMeasure::uniform(&points, spacing, MeasureTag::Lattice)
}

/// Equal masses on the level-m Cantor set of base `b` with the given digit
/// set, lifted to the parabola. Scale `delta` must equal `b^-m`.
///
/// The reported dimension of the construction is `log |digits| / log b`.
pub fn cantor_parabola_measure(delta: f64, kept_digits: &[u8], base: u8) -> Result<AtomicMeasure> {
    if base < 2 {
        return Err(Error::ParamOutOfRange("base must be >= 2".into()));
    }
    let mut digits: Vec<u8> = kept_digits.to_vec();
    digits.sort_unstable();
    digits.dedup();
    if digits.is_empty() || digits.iter().any(|&d| d >= base) {
        return Err(Error::ParamOutOfRange("kept_digits must be a nonempty subset of 0..base".into()));
    }
    let m = -(delta.ln()) / (base as f64).ln();
    let m_round = m.round();
    if !(m_round >= 1.0) || (m - m_round).abs() > 1e-9 {
        return Err(Error::BadScale(format!("delta = {delta} is not a power of 1/{base}")));
    }
    let m = m_round as u32;
    let count = (digits.len() as u64).checked_pow(m).ok_or_else(|| {
        Error::BudgetExceeded(format!("b^-m too small: {} atoms", (digits.len() as f64).powi(m as i32)))
    })?;
    if count > 1 << 22 {
        return Err(Error::BudgetExceeded(format!("{count} Cantor atoms exceed the budget")));
    }
    // enumerate digit strings most-significant first
    let mut xs = vec![0.0f64];
    let mut place = 1.0 / base as f64;
    for _ in 0..m {
        let mut next = Vec::with_capacity(xs.len() * digits.len());
        for &x in &xs {
            for &d in &digits {
                next.push(x + d as f64 * place);
            }
        }
        xs = next;
        place /= base as f64;
    }
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let points: Vec<[f64; 2]> = xs.iter().map(|&x| [x, x * x]).collect();
    // minimal gap of the level-m set: one delta-step when adjacent digits differ by 1,
    // in general at least delta
    AtomicMeasure::uniform(&points, delta, MeasureTag::Cantor)
}

/// Cantor dimension `log |digits| / log b` for the same digit data.
pub fn cantor_dimension(kept_digits: &[u8], base: u8) -> f64 {
    let mut digits: Vec<u8> = kept_digits.to_vec();
    digits.sort_unstable();
    digits.dedup();
    (digits.len() as f64).ln() / (base as f64).ln()
}

/// The uniform delta-net of the arc: atoms `(k delta, (k delta)^2)` for
/// `|k delta| <= 1`, equal masses. The arclength-like (s = 1) test measure.
pub fn arc_measure(delta: f64) -> Result<AtomicMeasure> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::ParamOutOfRange(format!("delta must be in (0,1), got {delta}")));
    }
    let kmax = (1.0 / delta + 1e-9).floor() as i64;
    let points: Vec<[f64; 2]> = (-kmax..=kmax)
        .map(|k| {
            let x = k as f64 * delta;
            [x, x * x]
        })
        .collect();
    AtomicMeasure::uniform(&points, delta, MeasureTag::Arc)
}
