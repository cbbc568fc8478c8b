use std::io::Write;
use std::path::Path;

use algebroid_core::algebroid::{AffineSpacetime, ConstantSection, FiberValue, PolynomialSection, SectionField};
use algebroid_core::Point;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use toml::{Table, Value};

use super::Status;
use crate::error::CliResult;
use crate::report::{vector, Report};
use crate::scenario::Scenario;

/// Identity name, tolerance key.
const IDENTITIES: [(&str, &str); 4] = [
    ("koszul", "koszul"),
    ("curvature", "curvature"),
    ("ricci_trace", "ricci"),
    ("scalar_identity", "scalar_identity"),
];

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// Worst violation of each identity at one point.
fn check_point(st: &AffineSpacetime, p: &Point, triples: usize, seed: u64) -> CliResult<[f64; 4]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = st.metric_at(p)?;
    let c = st.curvature(p)?;
    let hat = c.hat();

    let mut koszul = 0.0f64;
    let mut curvature = 0.0f64;
    let mut curv = |u: &dyn SectionField, v: &dyn SectionField, w: &dyn SectionField| -> CliResult<()> {
        let brute = st.curvature_oracle(u, v, w, p)?;
        let closed = hat.apply(&u.value(p)?, &v.value(p)?, &w.value(p)?);
        curvature = curvature.max((brute - closed).max_abs() / closed.max_abs().max(1.0));
        Ok(())
    };
    let bar = |k: usize| ConstantSection(FiberValue::basis(k));
    let xi = ConstantSection(FiberValue::xi());
    curv(&bar(1), &xi, &xi)?;
    curv(&bar(2), &xi, &bar(3))?;
    curv(&bar(1), &bar(0), &xi)?;
    curv(&bar(3), &bar(1), &bar(2))?;
    for _ in 0..triples {
        let s: Vec<PolynomialSection> = (0..3).map(|_| PolynomialSection::random(&mut rng, *p, 1.0)).collect();
        let k = st.koszul_connection(&s[0], &s[1], &s[2], p)?;
        let closed = st.connection(&s[0], &s[1], p)?.inner(&s[2].value(p)?, &g);
        koszul = koszul.max(rel(closed, k));
        curv(&s[0], &s[1], &s[2])?;
    }

    let closed = c.ricci_hat();
    let traced = c.ricci_hat_frame_trace();
    let ricci = (traced.0 - closed.0).abs().max() / closed.0.abs().max().max(1.0);
    let scalar = rel(c.scalar_hat_frame_trace(&traced), c.base.scalar + c.trace_ff);
    Ok([koszul, curvature, ricci, scalar])
}

pub fn run(s: &Scenario, out: Option<&Path>, stdout: &mut dyn Write) -> CliResult<Status> {
    let points = s.grid_points()?;
    let (st, scale) = s.spacetime(&points)?;
    let results: Vec<[f64; 4]> = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| check_point(&st, p, s.triples, s.seed.wrapping_mul(0x100_0000_01b3).wrapping_add(i as u64)))
        .collect::<CliResult<_>>()?;

    let mut report = Report::new("verify");
    report
        .set("scenario", s.label.as_str())
        .set("metric", st.metric().name())
        .set("potential", st.potential().name())
        .set("seed", s.seed as i64)
        .set("points", points.len() as i64)
        .set("triples_per_point", s.triples as i64);
    if let Some(k) = scale {
        report.set("potential_scale", k);
    }
    let mut all = true;
    let mut identities = Table::new();
    for (idx, (name, tol_key)) in IDENTITIES.iter().enumerate() {
        let (worst_i, worst) = results
            .iter()
            .enumerate()
            .map(|(i, r)| (i, if r[idx].is_nan() { f64::INFINITY } else { r[idx] }))
            .fold((0, 0.0f64), |acc, x| if x.1 > acc.1 { x } else { acc });
        let tol = s.tolerance(tol_key);
        let pass = worst < tol;
        all &= pass;
        let mut t = Table::new();
        t.insert("pass".into(), Value::Boolean(pass));
        t.insert("worst".into(), Value::Float(worst));
        t.insert("tolerance".into(), Value::Float(tol));
        t.insert("worst_point".into(), vector(&points[worst_i]));
        identities.insert(name.to_string(), Value::Table(t));
    }
    report.set("all_pass", all).set("identities", identities);
    report.emit(out, stdout)?;
    Ok(Status::from_pass(all))
}
