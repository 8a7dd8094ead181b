//! Discretized Furstenberg lower bound: families along translated parabolas
//! over a t-dimensional anchor set must cover delta^{-gamma(s,t)+kappa}
//! squares.

use anyhow::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use paralab_core::incidence::furstenberg_check;

use crate::record::{ExperimentRecord, ExperimentSpec, Verdict};

use super::instances::{build_instance, AnchorKind};

pub fn run(spec: &ExperimentSpec) -> Result<ExperimentRecord> {
    let s = spec.f64("s", 0.5)?;
    let t = spec.f64("t", 0.5)?;
    let kappa = spec.f64("kappa", 0.15)?;
    let k = spec.u64("delta_log2", 8)? as i32;
    let delta = (-k as f64).exp2();

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed());
    let inst = build_instance(AnchorKind::Parabolas, s, t, delta, spec.seed(), &mut rng)?;
    let report = furstenberg_check(&inst, s, t, kappa)?;

    let mut record = ExperimentRecord::new(
        spec.clone(),
        &["delta", "anchors", "union_count", "threshold", "gamma"],
    );
    record.push_row(vec![
        delta,
        inst.anchors.len() as f64,
        report.union_count as f64,
        report.threshold,
        report.gamma,
    ]);
    record.plot.push((k as f64, (report.union_count as f64).log2()));
    record.fitted.insert("union_count".into(), report.union_count as f64);
    record.fitted.insert("anchor_set_constant".into(), report.anchor_set_constant);
    record
        .fitted
        .insert("family_set_constant_max".into(), report.family_set_constant_max);
    record.predicted.insert("gamma".into(), report.gamma);
    record.predicted.insert("threshold".into(), report.threshold);
    record.verdicts.push(Verdict::at_least(
        "union_covers_threshold",
        report.threshold,
        report.union_count as f64,
        0.0,
    ));
    Ok(record)
}
