use std::io::Write;
use std::path::Path;

use algebroid_core::algebroid::residuals;
use rayon::prelude::*;
use toml::{Table, Value};

use super::Status;
use crate::error::CliResult;
use crate::report::{vector, Report};
use crate::scenario::Scenario;

struct Row {
    einstein: (f64, f64),
    maxwell: (f64, f64),
    scalar: f64,
    r: f64,
    trff: f64,
    h: f64,
}

fn nan_as_inf(x: f64) -> f64 {
    if x.is_nan() {
        f64::INFINITY
    } else {
        x
    }
}

pub fn run(s: &Scenario, out: Option<&Path>, stdout: &mut dyn Write) -> CliResult<Status> {
    let points = s.grid_points()?;
    let (st, scale) = s.spacetime(&points)?;
    let rows: Vec<Row> = points
        .par_iter()
        .map(|p| -> CliResult<Row> {
            let c = st.curvature(p)?;
            let src = s.sources.at(p)?;
            let r = residuals(&c.einstein_blocks(), &src);
            Ok(Row {
                einstein: (r.einstein.max_abs, r.einstein.frobenius),
                maxwell: (r.maxwell.max_abs, r.maxwell.frobenius),
                scalar: r.scalar_value,
                r: c.base.scalar,
                trff: c.trace_ff,
                h: src.h,
            })
        })
        .collect::<CliResult<_>>()?;

    let worst = |f: &dyn Fn(&Row) -> f64| rows.iter().map(|r| nan_as_inf(f(r))).fold(0.0f64, f64::max);
    let einstein = worst(&|r| r.einstein.0);
    let maxwell = worst(&|r| r.maxwell.0);
    let scalar = worst(&|r| r.scalar.abs());
    let checks = [
        ("einstein", einstein, s.tolerance("einstein")),
        ("maxwell", maxwell, s.tolerance("maxwell")),
        ("scalar", scalar, s.tolerance("scalar_residual")),
    ];
    let all = checks.iter().all(|(_, w, t)| w < t);

    let mut report = Report::new("residuals");
    report
        .set("scenario", s.label.as_str())
        .set("metric", st.metric().name())
        .set("potential", st.potential().name())
        .set("points", points.len() as i64);
    if let Some(k) = scale {
        report.set("potential_scale", k);
    }
    report.set("all_pass", all);
    let summary = report.table("summary");
    for (name, w, tol) in checks {
        let mut t = Table::new();
        t.insert("max_abs".into(), Value::Float(w));
        t.insert("tolerance".into(), Value::Float(tol));
        t.insert("pass".into(), Value::Boolean(w < tol));
        summary.insert(name.into(), Value::Table(t));
    }
    for (p, r) in points.iter().zip(&rows) {
        let mut t = Table::new();
        t.insert("point".into(), vector(p));
        t.insert("einstein_max".into(), Value::Float(r.einstein.0));
        t.insert("einstein_frobenius".into(), Value::Float(r.einstein.1));
        t.insert("maxwell_max".into(), Value::Float(r.maxwell.0));
        t.insert("maxwell_frobenius".into(), Value::Float(r.maxwell.1));
        t.insert("scalar_value".into(), Value::Float(r.scalar));
        t.insert("R".into(), Value::Float(r.r));
        t.insert("trFF".into(), Value::Float(r.trff));
        t.insert("H".into(), Value::Float(r.h));
        report.push("point", t);
    }
    report.emit(out, stdout)?;
    Ok(Status::from_pass(all))
}
