use std::io::Write;
use std::path::Path;

use algebroid_core::affine::{decompose, AffineInnerProduct, TwoAffineSample, PROBE_TOLERANCE};
use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use super::{AffineAction, Status};
use crate::error::{CliError, CliResult};
use crate::report::{rows, Report};

/// Either a black-box quadratic form `uᵀQv + left·u + right·v + constant`
/// or the decomposed data directly.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AffineInput {
    quadratic: Option<Vec<Vec<f64>>>,
    left: Option<Vec<f64>>,
    right: Option<Vec<f64>>,
    constant: Option<f64>,
    bilinear: Option<Vec<Vec<f64>>>,
    center: Option<Vec<f64>>,
    lambda: Option<f64>,
}

fn square(rows: &[Vec<f64>], key: &str) -> CliResult<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(CliError::config(key, "expected a non-empty square matrix"));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn sized(v: Option<Vec<f64>>, n: usize, key: &str) -> CliResult<DVector<f64>> {
    match v {
        None => Ok(DVector::zeros(n)),
        Some(v) if v.len() == n => Ok(DVector::from_vec(v)),
        Some(v) => Err(CliError::config(key, format!("expected {n} entries, got {}", v.len()))),
    }
}

fn build(input: AffineInput, path: &Path) -> CliResult<AffineInnerProduct> {
    let loc = |k: &str| format!("{}: {k}", path.display());
    match (input.quadratic, input.bilinear) {
        (Some(q), None) => {
            if input.center.is_some() || input.lambda.is_some() {
                return Err(CliError::config(loc("quadratic"), "cannot be combined with center or lambda"));
            }
            let q = square(&q, &loc("quadratic"))?;
            let n = q.nrows();
            let l = sized(input.left, n, &loc("left"))?;
            let r = sized(input.right, n, &loc("right"))?;
            let c = input.constant.unwrap_or(0.0);
            let sample = TwoAffineSample::new(n, move |u, v| (u.transpose() * &q * v)[0] + l.dot(u) + r.dot(v) + c);
            Ok(decompose(&sample, PROBE_TOLERANCE)?)
        }
        (None, Some(b)) => {
            if input.left.is_some() || input.right.is_some() || input.constant.is_some() {
                return Err(CliError::config(loc("bilinear"), "cannot be combined with left, right or constant"));
            }
            let b = square(&b, &loc("bilinear"))?;
            let n = b.nrows();
            let z = sized(input.center, n, &loc("center"))?;
            let lambda = input
                .lambda
                .ok_or_else(|| CliError::config(loc("lambda"), "required with bilinear"))?;
            Ok(AffineInnerProduct::new(b, z, lambda)?)
        }
        _ => Err(CliError::config(path.display().to_string(), "give exactly one of `quadratic` or `bilinear`")),
    }
}

pub fn run(action: AffineAction, input: &Path, out: Option<&Path>, stdout: &mut dyn Write) -> CliResult<Status> {
    let text = std::fs::read_to_string(input).map_err(|e| CliError::io(input, e))?;
    let parsed: AffineInput =
        toml::from_str(&text).map_err(|e| CliError::config(input.display().to_string(), e.message().to_string()))?;
    let a = build(parsed, input)?;

    let mut report = Report::new(match action {
        AffineAction::Decompose => "affine decompose",
        AffineAction::HatMetric => "affine hat-metric",
    });
    report.set("dim", a.dim() as i64);
    match action {
        AffineAction::Decompose => {
            report
                .set("lambda", a.lambda())
                .set("center", toml::Value::Array(a.center().iter().map(|x| (*x).into()).collect()))
                .set("bilinear", rows(a.bilinear()));
        }
        AffineAction::HatMetric => {
            report.set("hat_metric", rows(&a.hat_metric()?));
        }
    }
    report.emit(out, stdout)?;
    Ok(Status::Pass)
}
