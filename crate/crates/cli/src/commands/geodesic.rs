use std::io::Write;
use std::path::Path;

use algebroid_core::dynamics::{lift_check, Integrator, WorldlineState};

use super::Status;
use crate::error::{CliError, CliResult};
use crate::report::{vector, Report};
use crate::scenario::Scenario;

/// The trajectory CSV goes to `out`, or to stdout without `out`. The summary
/// report goes to stdout when the CSV went to a file, otherwise to `summary`
/// if given, otherwise to stderr.
pub fn run(s: &Scenario, out: Option<&Path>, summary: Option<&Path>, stdout: &mut dyn Write) -> CliResult<Status> {
    let g = &s.geodesic;
    let x = g
        .x
        .ok_or_else(|| CliError::Usage("no initial point: pass --at or set geodesic.x".into()))?;
    let u = g
        .u
        .ok_or_else(|| CliError::Usage("no initial velocity: pass --velocity or set geodesic.u".into()))?;
    if !(g.step.is_finite() && g.step > 0.0) {
        return Err(CliError::Usage(format!("step must be positive, got {}", g.step)));
    }
    let (st, scale) = s.spacetime(&[x])?;
    let s0 = WorldlineState::prepared(st.metric(), x, u, g.lambda, g.normalize)?;
    let traj = Integrator::new(g.step).integrate(&st, s0, g.steps)?;
    let lift = lift_check(&traj, &st)?;

    match out {
        Some(path) => {
            let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
            traj.write_csv(std::io::BufWriter::new(file)).map_err(|e| CliError::io(path, e))?;
        }
        None => traj.write_csv(&mut *stdout).map_err(|e| CliError::io("<stdout>", e))?,
    }

    let norm_drift = traj.max_norm_drift();
    let pass = norm_drift < s.tolerance("norm_drift") && lift < s.tolerance("lift");
    let last = traj.last();
    let mut report = Report::new("geodesic");
    report
        .set("scenario", s.label.as_str())
        .set("metric", st.metric().name())
        .set("potential", st.potential().name());
    if let Some(k) = scale {
        report.set("potential_scale", k);
    }
    report
        .set("lambda", g.lambda)
        .set("step", g.step)
        .set("steps_requested", g.steps as i64)
        .set("steps_taken", (traj.samples.len() - 1) as i64)
        .set(
            "exit_reason",
            traj.exit.as_ref().map_or("completed".to_string(), |e| e.reason.clone()),
        )
        .set("tau_final", last.tau)
        .set("max_norm_drift", norm_drift)
        .set("max_energy_drift", traj.max_energy_drift())
        .set("lift_violation", lift)
        .set("pass", pass)
        .set("initial_u", vector(&traj.samples[0].u))
        .set("final_x", vector(&last.x))
        .set("final_u", vector(&last.u));
    match (out, summary) {
        (Some(_), _) => report.emit(None, stdout)?,
        (None, Some(path)) => report.emit(Some(path), stdout)?,
        (None, None) => report.emit(None, &mut std::io::stderr())?,
    }
    Ok(Status::from_pass(pass))
}
