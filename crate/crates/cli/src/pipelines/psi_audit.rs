//! Identity and bi-Lipschitz audits of the parabola-line involution.

use anyhow::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use paralab_core::lines::line_metric;
use paralab_core::psi::{line_of_translated_parabola, psi, tangent_line};

use crate::record::{ExperimentRecord, ExperimentSpec, Verdict};

pub fn run(spec: &ExperimentSpec) -> Result<ExperimentRecord> {
    let samples = spec.u64("samples", 100_000)? as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed());
    let mut record = ExperimentRecord::new(spec.clone(), &["check", "max_error", "bound"]);

    let mut involution: f64 = 0.0;
    let mut tangent_image: f64 = 0.0;
    let mut translate_line: f64 = 0.0;
    let mut bilip_excess: f64 = 0.0;
    let mut metric_ratio_max: f64 = 0.0;

    for _ in 0..samples {
        let p = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        let q = psi(psi(p));
        involution = involution.max((q[0] - p[0]).abs().max((q[1] - p[1]).abs()));

        // tangent line at z maps onto psi(z) + parabola
        let z = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        let l = tangent_line(z);
        let x = rng.gen_range(-2.0..2.0);
        let a = l.slope().unwrap();
        let b = l.intercept().unwrap();
        let img = psi([x, a * x + b]);
        let w = psi(z);
        let dx = x - z[0];
        tangent_image = tangent_image
            .max((img[0] - (w[0] + dx)).abs().max((img[1] - (w[1] + dx * dx)).abs()));

        // points of z + parabola map onto the slope-intercept image line
        let t = rng.gen_range(-2.0..2.0);
        let on_translate = [z[0] + t, z[1] + t * t];
        translate_line =
            translate_line.max(line_of_translated_parabola(z).distance_to(psi(on_translate)));

        // bi-Lipschitz on B(2): |Psi p - Psi q| within factor 1 + 2k of |p - q|
        let p2 = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        let d = ((p[0] - p2[0]).powi(2) + (p[1] - p2[1]).powi(2)).sqrt();
        if d > 1e-9 {
            let (ip, iq) = (psi(p), psi(p2));
            let di = ((ip[0] - iq[0]).powi(2) + (ip[1] - iq[1]).powi(2)).sqrt();
            let lip = 1.0 + 2.0 * 2.0;
            bilip_excess = bilip_excess.max(di / d / lip).max(d / di / lip);
        }

        // line-map metric comparability on [-1,1]^2
        let z1: [f64; 2] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let z2: [f64; 2] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let dz = ((z1[0] - z2[0]).powi(2) + (z1[1] - z2[1]).powi(2)).sqrt();
        if dz > 1e-9 {
            let dl = line_metric(
                &line_of_translated_parabola(z1),
                &line_of_translated_parabola(z2),
            );
            metric_ratio_max = metric_ratio_max.max(dl / dz).max(dz / dl);
        }
    }

    record.push_row(vec![0.0, involution, 1e-12]);
    record.push_row(vec![1.0, tangent_image, 1e-12]);
    record.push_row(vec![2.0, translate_line, 1e-12]);
    record.push_row(vec![3.0, bilip_excess, 1.0]);
    record.push_row(vec![4.0, metric_ratio_max, 10.0]);

    record.verdicts.push(Verdict::at_most("involution_error", 0.0, involution, 1e-12));
    record.verdicts.push(Verdict::at_most("tangent_image_error", 0.0, tangent_image, 1e-12));
    record.verdicts.push(Verdict::at_most("translate_line_error", 0.0, translate_line, 1e-12));
    record.verdicts.push(Verdict::at_most("bilipschitz_excess", 1.0, bilip_excess, 0.0));
    record.verdicts.push(Verdict::at_most("line_metric_comparability", 10.0, metric_ratio_max, 0.0));
    Ok(record)
}
