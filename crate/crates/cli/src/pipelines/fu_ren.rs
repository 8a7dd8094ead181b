//! Empirical square-root incidence bound: on audited Katz-Tao instances with
//! s + t <= 2, total incidences never exceed
//! `factor * delta^-eps sqrt(delta^-1 C1 C2 |F| |P|)`.

use anyhow::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use paralab_core::incidence::{count_incidences, fu_ren_rhs};

use crate::record::{ExperimentRecord, ExperimentSpec, Verdict};

use super::instances::{build_instance, AnchorKind};

/// (s, t) exponent pairs with s + t <= 2, sized so anchor counts stay tame.
const PAIRS: [(f64, f64); 5] = [(0.4, 0.8), (0.5, 1.0), (0.6, 0.9), (0.8, 0.7), (1.0, 1.0)];

pub fn run(spec: &ExperimentSpec) -> Result<ExperimentRecord> {
    let eps = spec.f64("eps", 0.1)?;
    let factor = spec.f64("factor", 10.0)?;
    let kmin = spec.u64("delta_log2_min", 6)? as i32;
    let kmax = spec.u64("delta_log2_max", 10)? as i32;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed());

    let mut record = ExperimentRecord::new(
        spec.clone(),
        &[
            "delta",
            "kind",
            "s",
            "t",
            "anchors",
            "family_union",
            "incidences",
            "c1",
            "c2",
            "rhs",
            "ratio",
        ],
    );
    let mut violations = 0u64;
    let mut instances = 0u64;
    let mut worst_ratio: f64 = 0.0;
    for k in kmin..=kmax {
        let delta = (-k as f64).exp2();
            for (pi, &(s, t)) in PAIRS.iter().enumerate() {
            for kind in [AnchorKind::Tubes, AnchorKind::Parabolas] {
                // anchor counts ~ 2^{t k}: keep them under ~2^11
                if t * k as f64 > 11.0 {
                    continue;
                }
                let seed = spec
                    .seed()
                    .wrapping_add((k as u64) << 32)
                    .wrapping_add((pi as u64) << 8)
                    .wrapping_add(kind as u64);
                let inst = build_instance(kind, s, t, delta, seed, &mut rng)?;
                let (total, _) = count_incidences(&inst)?;
                let union = inst.family_union().len();
                if union == 0 || inst.anchors.is_empty() {
                    continue;
                }
                let rhs = fu_ren_rhs(
                    inst.c1,
                    inst.c2,
                    union as f64,
                    inst.anchors.len() as f64,
                    delta,
                    eps,
                );
                let bound = factor * rhs;
                let ratio = total as f64 / bound;
                worst_ratio = worst_ratio.max(ratio);
                if total as f64 > bound {
                    violations += 1;
                }
                instances += 1;
                record.push_row(vec![
                    delta,
                    match kind {
                        AnchorKind::Tubes => 0.0,
                        AnchorKind::Parabolas => 1.0,
                    },
                    s,
                    t,
                    inst.anchors.len() as f64,
                    union as f64,
                    total as f64,
                    inst.c1,
                    inst.c2,
                    rhs,
                    ratio,
                ]);
                record.plot.push((k as f64, (total as f64).log2()));
            }
        }
    }
    record.fitted.insert("instances".into(), instances as f64);
    record.fitted.insert("violations".into(), violations as f64);
    record.fitted.insert("worst_ratio".into(), worst_ratio);
    record.predicted.insert("violations".into(), 0.0);
    record.verdicts.push(Verdict::at_most("zero_violations", 0.0, violations as f64, 0.0));
    record.verdicts.push(Verdict::at_least(
        "instance_count",
        spec.f64("min_instances", 50.0)?,
        instances as f64,
        0.0,
    ));
    Ok(record)
}
