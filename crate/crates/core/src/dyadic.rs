//! Dyadic grid combinatorics, delta-measures, non-concentration constants,
//! discrete Riesz energy, and the pigeonhole extraction of regular subsets.

use std::collections::BTreeMap;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A dyadic square `[ix 2^-level, (ix+1) 2^-level) x [iy 2^-level, (iy+1) 2^-level)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicSquare {
    pub level: u32,
    pub ix: i64,
    pub iy: i64,
}

impl DyadicSquare {
    pub fn new(level: u32, ix: i64, iy: i64) -> Self {
        DyadicSquare { level, ix, iy }
    }

    /// Side length `2^-level` (exact).
    pub fn side(&self) -> f64 {
        (-(self.level as i32) as f64).exp2()
    }

    pub fn midpoint(&self) -> [f64; 2] {
        let s = self.side();
        [(self.ix as f64 + 0.5) * s, (self.iy as f64 + 0.5) * s]
    }

    pub fn min_corner(&self) -> [f64; 2] {
        let s = self.side();
        [self.ix as f64 * s, self.iy as f64 * s]
    }

    /// The dyadic square of the given level containing a point.
    pub fn containing(p: [f64; 2], level: u32) -> Self {
        let inv = (level as f64).exp2();
        DyadicSquare { level, ix: (p[0] * inv).floor() as i64, iy: (p[1] * inv).floor() as i64 }
    }

    /// Parent square one level coarser. Arithmetic shift floors negatives correctly.
    pub fn parent(&self) -> Option<Self> {
        if self.level == 0 {
            None
        } else {
            Some(DyadicSquare { level: self.level - 1, ix: self.ix >> 1, iy: self.iy >> 1 })
        }
    }

    /// Ancestor at the given coarser level.
    pub fn ancestor(&self, level: u32) -> Self {
        assert!(level <= self.level);
        let shift = self.level - level;
        DyadicSquare { level, ix: self.ix >> shift, iy: self.iy >> shift }
    }
}

/// Non-negative weights on dyadic squares of a single level.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadicMeasure {
    level: u32,
    weights: BTreeMap<(i64, i64), f64>,
}

impl DyadicMeasure {
    pub fn new(level: u32) -> Self {
        DyadicMeasure { level, weights: BTreeMap::new() }
    }

    pub fn from_weights(level: u32, entries: impl IntoIterator<Item = ((i64, i64), f64)>) -> Self {
        let mut m = DyadicMeasure::new(level);
        for ((ix, iy), w) in entries {
            m.add(ix, iy, w);
        }
        m
    }

    /// Uniform probability measure on the given squares of one level.
    pub fn uniform_on(level: u32, squares: &[DyadicSquare]) -> Self {
        assert!(squares.iter().all(|q| q.level == level));
        let w = 1.0 / squares.len() as f64;
        DyadicMeasure::from_weights(level, squares.iter().map(|q| ((q.ix, q.iy), w)))
    }

    pub fn add(&mut self, ix: i64, iy: i64, w: f64) {
        assert!(w.is_finite() && w >= 0.0, "weights must be finite and >= 0");
        if w > 0.0 {
            *self.weights.entry((ix, iy)).or_insert(0.0) += w;
        }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn side(&self) -> f64 {
        (-(self.level as i32) as f64).exp2()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (DyadicSquare, f64)> + '_ {
        let level = self.level;
        self.weights.iter().map(move |(&(ix, iy), &w)| (DyadicSquare::new(level, ix, iy), w))
    }

    pub fn squares(&self) -> Vec<DyadicSquare> {
        self.iter().map(|(q, _)| q).collect()
    }

    /// Restriction to the squares satisfying `keep`.
    pub fn restrict(&self, keep: impl Fn(DyadicSquare) -> bool) -> Self {
        DyadicMeasure {
            level: self.level,
            weights: self
                .weights
                .iter()
                .filter(|(&(ix, iy), _)| keep(DyadicSquare::new(self.level, ix, iy)))
                .map(|(&k, &w)| (k, w))
                .collect(),
        }
    }

    /// Mass coarsened to the given level (<= self.level).
    pub fn coarsen(&self, level: u32) -> DyadicMeasure {
        assert!(level <= self.level);
        let shift = self.level - level;
        let mut weights = BTreeMap::new();
        for (&(ix, iy), &w) in &self.weights {
            *weights.entry((ix >> shift, iy >> shift)).or_insert(0.0) += w;
        }
        DyadicMeasure { level, weights }
    }
}

// JSON schema: {"level": L, "entries": [[ix, iy, weight], ...]}
impl Serialize for DyadicMeasure {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            level: u32,
            entries: Vec<(i64, i64, f64)>,
            #[serde(skip)]
            _p: &'a (),
        }
        let entries = self.weights.iter().map(|(&(ix, iy), &w)| (ix, iy, w)).collect();
        Repr { level: self.level, entries, _p: &() }.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for DyadicMeasure {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            level: u32,
            entries: Vec<(i64, i64, f64)>,
        }
        let r = Repr::deserialize(de)?;
        for &(_, _, w) in &r.entries {
            if !(w.is_finite() && w >= 0.0) {
                return Err(D::Error::custom("weights must be finite and >= 0"));
            }
        }
        Ok(DyadicMeasure::from_weights(r.level, r.entries.into_iter().map(|(x, y, w)| ((x, y), w))))
    }
}

/// Frostman quotient `sup_Q mass(Q) / side(Q)^s` over all dyadic squares with
/// side between `min_scale` and 1.
pub fn frostman_constant(m: &DyadicMeasure, s: f64, min_scale: f64) -> Result<f64> {
    if m.is_empty() {
        return Err(Error::EmptyMeasure);
    }
    if s.is_nan() {
        return Err(Error::ParamOutOfRange("s is NaN".into()));
    }
    let min_level = scale_to_level(min_scale)?;
    if min_level > m.level() {
        return Err(Error::BadScale(format!(
            "min_scale {min_scale} is finer than the measure's level {}",
            m.level()
        )));
    }
    let mut sup: f64 = 0.0;
    let mut current = m.coarsen(min_level);
    loop {
        let side = current.side();
        let denom = side.powf(s);
        for (_, w) in current.iter() {
            sup = sup.max(w / denom);
        }
        if current.level() == 0 {
            break;
        }
        let next = current.level() - 1;
        current = current.coarsen(next);
    }
    Ok(sup)
}

/// Parse a power-of-two scale `2^-k` into its level `k`.
pub fn scale_to_level(scale: f64) -> Result<u32> {
    if !(scale > 0.0 && scale <= 1.0) {
        return Err(Error::BadScale(format!("{scale} is not in (0,1]")));
    }
    let level = -scale.log2();
    let rounded = level.round();
    if (level - rounded).abs() > 1e-9 {
        return Err(Error::BadScale(format!("{scale} is not a power of two")));
    }
    Ok(rounded as u32)
}

/// Katz-Tao non-concentration constant of a delta-separated point set:
/// `sup |P n B(x,r)| (delta/r)^s` over centers `x` in `P` and dyadic `r >= delta`.
pub fn katz_tao_constant(points: &[[f64; 2]], s: f64, delta: f64) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::EmptyMeasure);
    }
    check_separation(points, delta)?;
    let diam = diameter(points);
    let mut sup: f64 = 0.0;
    let mut r = delta;
    loop {
        let ratio = (delta / r).powf(s);
        let r2 = r * r;
        for (i, p) in points.iter().enumerate() {
            let mut count = 0usize;
            for q in points {
                let d2 = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
                if d2 <= r2 {
                    count += 1;
                }
            }
            let _ = i;
            sup = sup.max(count as f64 * ratio);
        }
        if r >= diam.max(delta) {
            break;
        }
        r *= 2.0;
    }
    Ok(sup)
}

/// Verify pairwise separation strictly greater than `delta`.
pub fn check_separation(points: &[[f64; 2]], delta: f64) -> Result<()> {
    // bucket at cell size delta; only neighbouring cells can violate
    use std::collections::HashMap;
    let mut cells: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, p) in points.iter().enumerate() {
        let key = ((p[0] / delta).floor() as i64, (p[1] / delta).floor() as i64);
        cells.entry(key).or_default().push(i);
    }
    let d2 = delta * delta;
    for (&(cx, cy), members) in &cells {
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(other) = cells.get(&(cx + dx, cy + dy)) {
                    for &i in members {
                        for &j in other {
                            if i < j {
                                let (p, q) = (points[i], points[j]);
                                let dist2 = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
                                if dist2 <= d2 {
                                    return Err(Error::SeparationViolated(p, q));
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

fn diameter(points: &[[f64; 2]]) -> f64 {
    let (mut xmin, mut xmax) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        xmin = xmin.min(p[0]);
        xmax = xmax.max(p[0]);
        ymin = ymin.min(p[1]);
        ymax = ymax.max(p[1]);
    }
    ((xmax - xmin).powi(2) + (ymax - ymin).powi(2)).sqrt()
}

/// Relative non-concentration constant of a family of same-level squares:
/// `sup_Q |P n Q| / (side(Q)^s |P|)` over dyadic squares Q at scales in
/// `[delta, 1]`. This is the covering-number flavour of the set condition,
/// restricted to the dyadic grid.
pub fn delta_set_constant(squares: &[DyadicSquare], s: f64) -> Result<f64> {
    if squares.is_empty() {
        return Err(Error::EmptyMeasure);
    }
    let level = squares[0].level;
    assert!(squares.iter().all(|q| q.level == level));
    let total = squares.len() as f64;
    let mut counts: BTreeMap<(i64, i64), usize> = BTreeMap::new();
    for q in squares {
        *counts.entry((q.ix, q.iy)).or_insert(0) += 1;
    }
    let mut sup: f64 = 0.0;
    for lev in (0..=level).rev() {
        let side = (-(lev as i32) as f64).exp2();
        let denom = side.powf(s) * total;
        for &c in counts.values() {
            sup = sup.max(c as f64 / denom);
        }
        if lev > 0 {
            let mut coarser: BTreeMap<(i64, i64), usize> = BTreeMap::new();
            for (&(ix, iy), &c) in &counts {
                *coarser.entry((ix >> 1, iy >> 1)).or_insert(0) += c;
            }
            counts = coarser;
        }
    }
    Ok(sup)
}

/// Discrete s-energy `1 + sum_{p != q} mu(p) mu(q) / dist(p,q)^s`
/// with distances between square midpoints.
pub fn riesz_energy_discrete(m: &DyadicMeasure, s: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::ParamOutOfRange(format!("energy exponent must be > 0, got {s}")));
    }
    let items: Vec<([f64; 2], f64)> = m.iter().map(|(q, w)| (q.midpoint(), w)).collect();
    let mut sum = 0.0;
    for i in 0..items.len() {
        for j in 0..items.len() {
            if i == j {
                continue;
            }
            let (p, wp) = items[i];
            let (q, wq) = items[j];
            let d = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
            sum += wp * wq / d.powf(s);
        }
    }
    Ok(1.0 + sum)
}

/// Chebyshev constant in the extraction pipeline ("sufficiently large
/// absolute constant" in the source estimate; fixed here).
pub const EXTRACTION_CHEBYSHEV_A: f64 = 4.0;

/// Pigeonhole extraction of a non-concentrated subfamily.
///
/// (i) remove squares whose s-potential exceeds `A * C * delta^-eps` where
/// `C` is the measure's discrete s-energy, (ii) bucket survivors into dyadic
/// mass levels `2^-j` (discarding the negligible tail `2^j >= delta^-3`),
/// (iii) return the bucket carrying the most mass.
pub fn level_set_extract(
    m: &DyadicMeasure,
    s: f64,
    delta: f64,
    eps: f64,
) -> Result<Vec<DyadicSquare>> {
    let level = scale_to_level(delta)?;
    if level != m.level() {
        return Err(Error::BadScale(format!(
            "measure level {} does not match delta {delta}",
            m.level()
        )));
    }
    if m.is_empty() {
        return Err(Error::EmptyMeasure);
    }
    let energy = riesz_energy_discrete(m, s)?;
    if !energy.is_finite() {
        return Err(Error::ParamOutOfRange("measure has infinite discrete energy".into()));
    }
    let threshold = EXTRACTION_CHEBYSHEV_A * energy * delta.powf(-eps);

    let items: Vec<(DyadicSquare, [f64; 2], f64)> =
        m.iter().map(|(q, w)| (q, q.midpoint(), w)).collect();
    let mut survivors: Vec<(DyadicSquare, f64)> = Vec::new();
    for (i, &(q, p, w)) in items.iter().enumerate() {
        let mut potential = 0.0;
        for (j, &(_, pj, wj)) in items.iter().enumerate() {
            if i == j {
                continue;
            }
            let d = ((p[0] - pj[0]).powi(2) + (p[1] - pj[1]).powi(2)).sqrt();
            potential += wj / d.powf(s);
        }
        if potential < threshold {
            survivors.push((q, w));
        }
    }
    if survivors.is_empty() {
        return Err(Error::EnergyTooConcentrated);
    }

    // bucket by dyadic mass level: 2^{-j-1} < w <= 2^{-j}
    let cutoff = delta.powi(-3);
    let mut buckets: BTreeMap<i32, (f64, Vec<DyadicSquare>)> = BTreeMap::new();
    for (q, w) in survivors {
        let j = (-w.log2()).ceil().max(0.0) as i32;
        if (j as f64).exp2() >= cutoff {
            continue;
        }
        let e = buckets.entry(j).or_insert((0.0, Vec::new()));
        e.0 += w;
        e.1.push(q);
    }
    buckets
        .into_values()
        .max_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
        .map(|(_, squares)| squares)
        .ok_or(Error::EnergyTooConcentrated)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn horizontal_line_measure(level: u32) -> DyadicMeasure {
        // uniform weights on all squares {(i, 0)} crossing [0,1) x {0}
        let n = 1u64 << level;
        let w = (-(level as f64)).exp2();
        DyadicMeasure::from_weights(level, (0..n as i64).map(|i| ((i, 0), w)))
    }

    #[test]
    fn frostman_single_square() {
        let m = DyadicMeasure::from_weights(3, [((1, 2), 1.0)]);
        // sup attained at the finest level: 1 / (2^-3)^1 = 8
        let c = frostman_constant(&m, 1.0, 0.125).unwrap();
        assert!((c - 8.0).abs() < 1e-12);
    }

    #[test]
    fn frostman_uniform_line() {
        let m = horizontal_line_measure(4);
        let c = frostman_constant(&m, 1.0, m.side()).unwrap();
        assert!((c - 1.0).abs() < 1e-12, "c = {c}");
    }

    #[test]
    fn frostman_restriction_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = horizontal_line_measure(5);
        let c_full = frostman_constant(&m, 0.7, m.side()).unwrap();
        for _ in 0..20 {
            let keep: Vec<bool> = (0..m.len()).map(|_| rng.gen_bool(0.6)).collect();
            let squares = m.squares();
            let kept: std::collections::BTreeSet<_> =
                squares.iter().zip(&keep).filter(|(_, &k)| k).map(|(q, _)| (q.ix, q.iy)).collect();
            let sub = m.restrict(|q| kept.contains(&(q.ix, q.iy)));
            if sub.is_empty() {
                continue;
            }
            let c_sub = frostman_constant(&sub, 0.7, m.side()).unwrap();
            assert!(c_sub <= c_full + 1e-12);
        }
    }

    #[test]
    fn frostman_rejects_empty() {
        let m = DyadicMeasure::new(3);
        assert!(matches!(frostman_constant(&m, 1.0, 0.125), Err(Error::EmptyMeasure)));
    }

    #[test]
    fn riesz_examples() {
        let single = DyadicMeasure::from_weights(2, [((0, 0), 1.0)]);
        assert_eq!(riesz_energy_discrete(&single, 0.5).unwrap(), 1.0);

        let pair = DyadicMeasure::from_weights(3, [((0, 0), 0.5), ((4, 0), 0.5)]);
        let d: f64 = 4.0 * 0.125; // midpoint distance
        let s = 0.75;
        let expect = 1.0 + 2.0 * 0.25 / d.powf(s);
        assert!((riesz_energy_discrete(&pair, s).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn riesz_uniform_line_bounded_in_delta() {
        // s = 1/2 energy of the uniform line measure stays bounded as delta shrinks
        let mut values = Vec::new();
        for level in [4u32, 6, 8] {
            let m = horizontal_line_measure(level);
            values.push(riesz_energy_discrete(&m, 0.5).unwrap());
        }
        for v in &values {
            assert!(*v >= 1.0);
            assert!(*v < 6.0, "energy unexpectedly large: {v}");
        }
        // and energy == 1 iff at most one square carries mass
        let single = DyadicMeasure::from_weights(4, [((3, 3), 0.7)]);
        assert_eq!(riesz_energy_discrete(&single, 0.5).unwrap(), 1.0);
    }

    #[test]
    fn katz_tao_examples() {
        assert_eq!(katz_tao_constant(&[[0.3, 0.4]], 1.0, 0.01).unwrap(), 1.0);

        // delta-net of a unit segment
        let delta = (2.0f64).powi(-10);
        let n = (1.0 / delta) as i64;
        let pts: Vec<[f64; 2]> = (0..=n).map(|i| [i as f64 * delta * 1.0001, 0.0]).collect();
        let c1 = katz_tao_constant(&pts, 1.0, delta).unwrap();
        assert!((1.0..=3.0).contains(&c1), "c1 = {c1}");

        let c_half = katz_tao_constant(&pts, 0.5, delta).unwrap();
        // at r = 1 the count is ~ 1/delta and the weight (delta/r)^1/2 = 32^-1... -> ~ 32
        assert!(c_half >= 25.0 && c_half <= 50.0, "c = {c_half}");
    }

    #[test]
    fn katz_tao_rejects_crowding() {
        let pts = [[0.0, 0.0], [0.4, 0.0]];
        assert!(matches!(
            katz_tao_constant(&pts, 1.0, 0.5),
            Err(Error::SeparationViolated(_, _))
        ));
    }

    #[test]
    fn extract_single_square() {
        let m = DyadicMeasure::from_weights(4, [((2, 5), 1.0)]);
        let out = level_set_extract(&m, 1.0, m.side(), 0.1).unwrap();
        assert_eq!(out, vec![DyadicSquare::new(4, 2, 5)]);
    }

    #[test]
    fn extract_uniform_keeps_most_mass() {
        let m = horizontal_line_measure(6);
        let out = level_set_extract(&m, 1.0, m.side(), 0.1).unwrap();
        let kept_mass = out.len() as f64 * m.side();
        assert!(kept_mass >= 0.5 * m.total_mass(), "kept {kept_mass}");
        // the output is regular: dyadic-count audit against the stated constant
        let audit = delta_set_constant(&out, 1.0).unwrap();
        let bound = 64.0 * riesz_energy_discrete(&m, 1.0).unwrap() * m.side().powf(-0.3);
        assert!(audit <= bound, "audit {audit} vs bound {bound}");
    }

    #[test]
    fn extract_prefers_heavier_bucket() {
        // half the mass uniform on a line of 2^5 squares, half on one far square:
        // the single square holds mass 1/2 in one bucket; the line bucket holds
        // 1/2 spread over 32 squares. Bucket masses tie at 1/2 except the
        // Chebyshev cut removes nothing; the line bucket wins on >= comparison
        // only via max_by order, so make the line strictly heavier.
        let level = 5u32;
        let n = 1i64 << level;
        let mut m = DyadicMeasure::new(level);
        for i in 0..n {
            m.add(i, 0, 0.6 / n as f64);
        }
        m.add(0, n / 2, 0.4);
        let out = level_set_extract(&m, 1.0, m.side(), 0.1).unwrap();
        assert_eq!(out.len(), n as usize, "expected the line bucket");
    }

    #[test]
    fn measure_json_roundtrip() {
        let m = DyadicMeasure::from_weights(3, [((1, 2), 0.25), ((-4, 0), 0.75)]);
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("\"level\":3"));
        assert!(s.contains("\"entries\""));
        let back: DyadicMeasure = serde_json::from_str(&s).unwrap();
        assert_eq!(m, back);
    }
}
