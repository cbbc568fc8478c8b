use std::io::Write;
use std::path::Path;

use algebroid_core::Point;
use toml::{Table, Value};

use super::Status;
use crate::error::{CliError, CliResult};
use crate::report::{matrix4, matrix5, vector, Report};
use crate::scenario::Scenario;

/// Keys in order: point, R, trFF, R_hat, ricci_hat, einstein.{barbar, mixed, xixi}.
pub fn run(s: &Scenario, at: Option<Point>, out: Option<&Path>, stdout: &mut dyn Write) -> CliResult<Status> {
    let p = at
        .or(s.curvature_at)
        .ok_or_else(|| CliError::Usage("no evaluation point: pass --at or set curvature.at".into()))?;
    let (st, scale) = s.spacetime(&[p])?;
    let c = st.curvature(&p)?;
    let blocks = c.einstein_blocks();

    let mut report = Report::new("curvature");
    report
        .set("scenario", s.label.as_str())
        .set("metric", st.metric().name())
        .set("potential", st.potential().name());
    if let Some(k) = scale {
        report.set("potential_scale", k);
    }
    report
        .set("point", vector(&p))
        .set("R", c.base.scalar)
        .set("trFF", c.trace_ff)
        .set("R_hat", c.scalar_hat())
        .set("ricci_hat", matrix5(&c.ricci_hat().0));
    let mut e = Table::new();
    e.insert("barbar".into(), matrix4(&blocks.barbar));
    e.insert("mixed".into(), vector(&blocks.mixed));
    e.insert("xixi".into(), Value::Float(blocks.xixi));
    report.set("einstein", e);
    report.emit(out, stdout)?;
    Ok(Status::Pass)
}
