//! Katz-Tao set generation, square-vs-tube and square-vs-parabola incidence
//! counting, rich-square histograms, and the empirical incidence bounds.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dyadic::{delta_set_constant, katz_tao_constant, scale_to_level, DyadicSquare};
use crate::error::{Error, Result};
use crate::exponents::gamma_exponent;
use crate::lines::{line_metric, GrassmannLine, Tube};

/// An incidence anchor: a tube, or a parabola translate centred at a point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Anchor {
    Tube(Tube),
    ParabolaTranslate([f64; 2]),
}

impl Anchor {
    /// Outer-approximation intersection test against a square, consistent
    /// between instance generation and counting: centre distance against
    /// neighbourhood radius plus the square's circumradius.
    pub fn meets(&self, q: &DyadicSquare, delta: f64) -> bool {
        let c = q.midpoint();
        let radius = q.side() * std::f64::consts::SQRT_2 / 2.0;
        match self {
            Anchor::Tube(t) => t.core.distance_to(c) <= t.width / 2.0 + radius,
            Anchor::ParabolaTranslate(p) => {
                // min over the square's x-range of |y_c - ((x - p_x)^2 + p_y)|
                let g = |x: f64| c[1] - ((x - p[0]) * (x - p[0]) + p[1]);
                let (a, b) = (c[0] - q.side() / 2.0, c[0] + q.side() / 2.0);
                let mut vals = vec![g(a), g(b)];
                if p[0] > a && p[0] < b {
                    vals.push(g(p[0]));
                }
                let mut min_abs = vals.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
                // sign change means the curve crosses the centre height
                if vals.iter().any(|v| *v <= 0.0) && vals.iter().any(|v| *v >= 0.0) {
                    min_abs = 0.0;
                }
                min_abs <= delta + radius
            }
        }
    }
}

/// A verified family of (anchor, incident squares) pairs at one scale.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IncidenceInstance {
    pub delta: f64,
    pub anchors: Vec<Anchor>,
    pub families: Vec<Vec<DyadicSquare>>,
    /// Audited Katz-Tao constant of the anchor family.
    pub c1: f64,
    /// Audited (max over anchors) Katz-Tao constant of the square families.
    pub c2: f64,
}

impl IncidenceInstance {
    /// Build and verify: every family square must meet its anchor's
    /// delta-neighbourhood.
    pub fn new(
        delta: f64,
        anchors: Vec<Anchor>,
        families: Vec<Vec<DyadicSquare>>,
        c1: f64,
        c2: f64,
    ) -> Result<Self> {
        if anchors.len() != families.len() {
            return Err(Error::ParamOutOfRange("one family per anchor required".into()));
        }
        let inst = IncidenceInstance { delta, anchors, families, c1, c2 };
        inst.verify()?;
        Ok(inst)
    }

    pub fn verify(&self) -> Result<()> {
        for (ai, (anchor, family)) in self.anchors.iter().zip(&self.families).enumerate() {
            for q in family {
                if !anchor.meets(q, self.delta) {
                    return Err(Error::IncidenceInvariant { anchor: ai, ix: q.ix, iy: q.iy });
                }
            }
        }
        Ok(())
    }

    /// Union of all families (deduplicated).
    pub fn family_union(&self) -> Vec<DyadicSquare> {
        let mut set: std::collections::BTreeSet<DyadicSquare> = Default::default();
        for f in &self.families {
            set.extend(f.iter().copied());
        }
        set.into_iter().collect()
    }
}

/// Total incidences and per-anchor counts, re-verifying each membership
/// geometrically.
pub fn count_incidences(inst: &IncidenceInstance) -> Result<(u64, Vec<u64>)> {
    inst.verify()?;
    let per: Vec<u64> = inst.families.iter().map(|f| f.len() as u64).collect();
    Ok((per.iter().sum(), per))
}

/// The square-root incidence bound evaluated with audited constants:
/// `delta^-eps sqrt(delta^-1 C1 C2 |F| |P|)`.
pub fn fu_ren_rhs(
    c1: f64,
    c2: f64,
    family_count: f64,
    anchor_count: f64,
    delta: f64,
    eps: f64,
) -> f64 {
    assert!(c1 > 0.0 && c2 > 0.0 && family_count > 0.0 && anchor_count > 0.0 && delta > 0.0);
    delta.powf(-eps) * (c1 * c2 * family_count * anchor_count / delta).sqrt()
}

/// Dyadic richness histogram: level r holds the squares incident to between
/// r and 2r anchors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RichnessHistogram {
    pub delta: f64,
    /// (r, squares at that level) with r running over powers of two.
    pub levels: BTreeMap<u64, Vec<DyadicSquare>>,
    /// sum over levels of r^2 delta^2 |F_r| - the L^2 proxy.
    pub l2_proxy: f64,
    pub total_incidences: u64,
}

impl RichnessHistogram {
    /// CSV rows `r,count,lebesgue_proxy` per dyadic richness level.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,count,lebesgue_proxy\n");
        for (r, qs) in &self.levels {
            let proxy = (*r as f64) * (*r as f64) * self.delta * self.delta * qs.len() as f64;
            out.push_str(&format!("{r},{},{proxy}\n", qs.len()));
        }
        out
    }
}

pub fn richness_histogram(inst: &IncidenceInstance) -> RichnessHistogram {
    let mut richness: BTreeMap<DyadicSquare, u64> = BTreeMap::new();
    for family in &inst.families {
        for q in family {
            *richness.entry(*q).or_insert(0) += 1;
        }
    }
    let mut levels: BTreeMap<u64, Vec<DyadicSquare>> = BTreeMap::new();
    let mut total = 0u64;
    for (q, r) in &richness {
        total += r;
        let level = (63 - r.leading_zeros()) as u64; // floor log2
        levels.entry(1u64 << level).or_default().push(*q);
    }
    let l2_proxy = levels
        .iter()
        .map(|(r, qs)| (*r as f64) * (*r as f64) * inst.delta * inst.delta * qs.len() as f64)
        .sum();
    RichnessHistogram { delta: inst.delta, levels, l2_proxy, total_incidences: total }
}

/// Random Katz-Tao square family by dyadic branching: each level keeps about
/// 2^s children per surviving square, with floor/ceil quotas alternated to
/// hit the target count. Deterministic for a fixed seed.
pub fn random_katz_tao_squares(
    s: f64,
    delta: f64,
    c_target: f64,
    seed: u64,
) -> Result<Vec<DyadicSquare>> {
    if !(0.0..=2.0).contains(&s) || s.is_nan() {
        return Err(Error::InfeasibleGenerator { s, c: c_target });
    }
    if c_target < 1.0 {
        return Err(Error::InfeasibleGenerator { s, c: c_target });
    }
    let levels = scale_to_level(delta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut current = vec![DyadicSquare::new(0, 0, 0)];
    for lev in 0..levels {
        // cardinality target from the ideal count 2^{s(lev+1)}, not from the
        // current count: per-level rounding otherwise pins small families at
        // their floor (2^s rounds to 1 forever for s < 0.58)
        let target = ((s * (lev + 1) as f64).exp2().round() as usize)
            .clamp(current.len(), current.len() * 4);
        let mut next = Vec::with_capacity(target + 4);
        let mut assigned = 0usize;
        let n = current.len();
        for (i, sq) in current.iter().enumerate() {
            let remaining_parents = n - i;
            let remaining_quota = target - assigned;
            // greedy ceil quota: every parent keeps at least one child and
            // the level lands exactly on the target
            let take = remaining_quota.div_ceil(remaining_parents).clamp(1, 4);
            let mut children = [
                DyadicSquare::new(lev + 1, 2 * sq.ix, 2 * sq.iy),
                DyadicSquare::new(lev + 1, 2 * sq.ix + 1, 2 * sq.iy),
                DyadicSquare::new(lev + 1, 2 * sq.ix, 2 * sq.iy + 1),
                DyadicSquare::new(lev + 1, 2 * sq.ix + 1, 2 * sq.iy + 1),
            ];
            children.shuffle(&mut rng);
            next.extend_from_slice(&children[..take]);
            assigned += take;
        }
        current = next;
    }
    current.sort_unstable();
    Ok(current)
}

/// Report of the discretized Furstenberg lower-bound check.
#[derive(Debug, Clone, Serialize)]
pub struct FurstenbergReport {
    pub union_count: usize,
    pub threshold: f64,
    pub gamma: f64,
    pub passes: bool,
    pub anchor_set_constant: f64,
    pub family_set_constant_max: f64,
}

/// Check `|union F| >= delta^{-gamma(s,t) + kappa}` with audited relative
/// non-concentration constants for the anchors (as squares) and families.
pub fn furstenberg_check(
    inst: &IncidenceInstance,
    s: f64,
    t: f64,
    kappa: f64,
) -> Result<FurstenbergReport> {
    let gamma = gamma_exponent(s, if t == 0.0 { 0.0 } else { t })?;
    let level = scale_to_level(inst.delta)?;
    // audit anchors: parabola translates are centres of delta squares
    let anchor_squares: Vec<DyadicSquare> = inst
        .anchors
        .iter()
        .map(|a| match a {
            Anchor::ParabolaTranslate(p) => DyadicSquare::containing(*p, level),
            Anchor::Tube(t) => {
                let o = t.core.offset_point();
                DyadicSquare::containing(o, level)
            }
        })
        .collect();
    let c_anchor = if t > 0.0 { delta_set_constant(&anchor_squares, t)? } else { 0.0 };
    let mut c_family: f64 = 0.0;
    for f in &inst.families {
        c_family = c_family.max(delta_set_constant(f, s)?);
    }
    let union = inst.family_union();
    let threshold = inst.delta.powf(-gamma + kappa);
    Ok(FurstenbergReport {
        union_count: union.len(),
        threshold,
        gamma,
        passes: union.len() as f64 >= threshold,
        anchor_set_constant: c_anchor,
        family_set_constant_max: c_family,
    })
}

/// All squares of the given level meeting the anchor's delta-neighbourhood,
/// scanning a bounding strip. `x_window` restricts the x-range.
pub fn squares_meeting_anchor(
    anchor: &Anchor,
    delta: f64,
    level: u32,
    x_window: [f64; 2],
) -> Vec<DyadicSquare> {
    let side = (-(level as i32) as f64).exp2();
    let ix0 = (x_window[0] / side).floor() as i64;
    let ix1 = (x_window[1] / side).ceil() as i64;
    let mut out = Vec::new();
    for ix in ix0..=ix1 {
        let xc = (ix as f64 + 0.5) * side;
        // candidate y range at this column
        let (ylo, yhi) = match anchor {
            Anchor::Tube(t) => {
                let a = t.core.slope().unwrap_or(0.0);
                let b = t.core.intercept().unwrap_or(0.0);
                let y = a * xc + b;
                let pad = t.width / 2.0 + side * (1.0 + a.abs());
                (y - pad, y + pad)
            }
            Anchor::ParabolaTranslate(p) => {
                let y = (xc - p[0]) * (xc - p[0]) + p[1];
                let slope = 2.0 * (xc - p[0]).abs() + side;
                let pad = delta + side * (1.0 + slope);
                (y - pad, y + pad)
            }
        };
        let iy0 = (ylo / side).floor() as i64;
        let iy1 = (yhi / side).ceil() as i64;
        for iy in iy0..=iy1 {
            let q = DyadicSquare::new(level, ix, iy);
            if anchor.meets(&q, delta) {
                out.push(q);
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Thin a curve family to an s-dimensional subfamily by 1D dyadic branching
/// on the x-index, keeping ~2^s children per dyadic x-interval per level.
pub fn thin_family_to_dimension(
    family: &[DyadicSquare],
    s: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<DyadicSquare> {
    if family.is_empty() {
        return Vec::new();
    }
    // group by x-index, one representative per column (curve families have
    // O(1) squares per column)
    let mut columns: BTreeMap<i64, Vec<DyadicSquare>> = BTreeMap::new();
    for q in family {
        columns.entry(q.ix).or_default().push(*q);
    }
    let keys: Vec<i64> = columns.keys().copied().collect();
    let n = keys.len();
    let depth = (n as f64).log2().floor() as u32;
    let per = (2.0f64).powf(s);
    // branch on index ranges of the key list
    let mut ranges = vec![(0usize, n)];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(ranges.len() * 2);
        let target = per;
        for (lo, hi) in ranges {
            if hi - lo <= 1 {
                next.push((lo, hi));
                continue;
            }
            let mid = (lo + hi) / 2;
            let both = rng.gen_bool((target - 1.0).clamp(0.0, 1.0));
            if both {
                next.push((lo, mid));
                next.push((mid, hi));
            } else if rng.gen_bool(0.5) {
                next.push((lo, mid));
            } else {
                next.push((mid, hi));
            }
        }
        ranges = next;
    }
    let mut out = Vec::new();
    for (lo, hi) in ranges {
        if lo < hi {
            let key = keys[(lo + hi) / 2];
            let col = &columns[&key];
            out.push(col[col.len() / 2]);
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Anchor flavour for generated instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnchorKind {
    Tubes,
    Parabolas,
}

/// Build an audited random instance: anchors from the dyadic branching
/// generator at exponent `t`, one thinned s-dimensional family per anchor,
/// constants measured rather than assumed.
pub fn build_random_instance(
    kind: AnchorKind,
    s: f64,
    t: f64,
    delta: f64,
    seed: u64,
    rng: &mut ChaCha8Rng,
) -> Result<IncidenceInstance> {
    let level = scale_to_level(delta)?;
    let anchor_squares = random_katz_tao_squares(t, delta, 4.0, seed)?;
    let mut anchors = Vec::with_capacity(anchor_squares.len());
    let mut families = Vec::with_capacity(anchor_squares.len());
    for sq in &anchor_squares {
        let c = sq.midpoint();
        let anchor = match kind {
            // tube through the square's centre (a,b) as the line y = a x + b
            AnchorKind::Tubes => Anchor::Tube(Tube::new(GrassmannLine::new(c[0], c[1]), delta)),
            AnchorKind::Parabolas => Anchor::ParabolaTranslate(c),
        };
        let window = match kind {
            AnchorKind::Tubes => [0.0, 1.0],
            AnchorKind::Parabolas => [c[0] - 1.0, c[0] + 1.0],
        };
        let full = squares_meeting_anchor(&anchor, delta, level, window);
        let family = thin_family_to_dimension(&full, s, rng);
        anchors.push(anchor);
        families.push(family);
    }

    let c1 = match kind {
        AnchorKind::Parabolas => katz_tao_constant_squares(&anchor_squares, t)?,
        AnchorKind::Tubes => {
            let lines: Vec<GrassmannLine> = anchor_squares
                .iter()
                .map(|sq| {
                    let c = sq.midpoint();
                    GrassmannLine::new(c[0], c[1])
                })
                .collect();
            katz_tao_constant_lines(&lines, t, delta)
        }
    };
    // The family audit is quadratic in family size. Families are exchangeable
    // (one thinning recipe for every anchor), so large instances audit a
    // deterministic subsample; understating C2 only tightens the bound used
    // downstream.
    let max_len = families.iter().map(|f| f.len()).max().unwrap_or(0);
    let sample = if max_len > 512 { 8 } else { 32 };
    let stride = (families.len() / sample).max(1);
    let mut c2: f64 = 1.0;
    for f in families.iter().step_by(stride) {
        if f.len() > 1 {
            c2 = c2.max(katz_tao_constant_squares(f, s)?);
        }
    }
    IncidenceInstance::new(delta, anchors, families, c1, c2)
}

/// Katz-Tao constant of a tube family in the line metric (sup over centres
/// and dyadic radii of count times `(delta/r)^t`).
pub fn katz_tao_constant_lines(lines: &[GrassmannLine], t: f64, delta: f64) -> f64 {
    let n = lines.len();
    let mut dists = vec![0.0f64; n * n];
    let mut diam: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = line_metric(&lines[i], &lines[j]);
            dists[i * n + j] = d;
            dists[j * n + i] = d;
            diam = diam.max(d);
        }
    }
    let mut sup: f64 = 0.0;
    let mut r = delta;
    loop {
        let ratio = (delta / r).powf(t);
        for i in 0..n {
            let count = (0..n).filter(|&j| dists[i * n + j] <= r).count();
            sup = sup.max(count as f64 * ratio);
        }
        if r >= diam.max(delta) {
            break;
        }
        r *= 2.0;
    }
    sup
}

/// Audited Katz-Tao constant of a square family via midpoints.
pub fn katz_tao_constant_squares(squares: &[DyadicSquare], s: f64) -> Result<f64> {
    let pts: Vec<[f64; 2]> = squares.iter().map(|q| q.midpoint()).collect();
    let delta = squares.first().map(|q| q.side()).unwrap_or(1.0);
    // midpoints of distinct same-level squares are separated by >= side > side/2
    katz_tao_constant(&pts, s, delta / 2.0)
}
