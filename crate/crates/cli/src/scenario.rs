//! Scenario files.
//!
//! A scenario is a TOML document written as flat dotted keys, one per line:
//!
//! ```text
//! seed = 42
//! metric.name = "schwarzschild"
//! metric.M = 1.0
//! potential.name = "zero"
//! region.lo = [-1, 3, 0.3, 0]
//! region.hi = [1, 10, 2.8, 6.2]
//! grid.counts = [1, 8, 3, 2]
//! tolerances.koszul = 1e-6
//! ```
//!
//! Recognized tables: `metric`, `potential`, `region`, `grid`, `tolerances`,
//! `sources`, `verify`, `geodesic`, `curvature`, `fd`. Unknown keys are errors.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use algebroid_core::algebroid::{fit_potential_scale, AffineSpacetime, SourceBlocks};
use algebroid_core::em::PotentialField;
use algebroid_core::families::{
    build_metric, build_potential, metric_parameters, potential_parameters, Params, RestrictedMetric,
};
use algebroid_core::geometry::{FiniteDifference, MetricField, StencilOrder};
use algebroid_core::{Point, ValidityBox};
use nalgebra::{Matrix4, Vector4};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::{CliError, CliResult};

/// Default tolerances, overridable per scenario under `tolerances.<name>`.
pub const DEFAULT_TOLERANCES: &[(&str, f64)] = &[
    ("koszul", 1e-6),
    ("curvature", 1e-5),
    ("ricci", 1e-6),
    ("scalar_identity", 1e-6),
    ("einstein", 1e-6),
    ("maxwell", 1e-6),
    ("scalar_residual", 1e-6),
    ("norm_drift", 1e-8),
    ("lift", 1e-6),
];

/// Grid points keep this many stencil reaches away from the validity boundary,
/// enough for the nested derivatives of the curvature oracle.
pub const GRID_MARGIN_REACHES: f64 = 4.0;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    seed: Option<u64>,
    metric: toml::Table,
    potential: Option<toml::Table>,
    region: Option<RawRegion>,
    grid: Option<RawGrid>,
    tolerances: Option<BTreeMap<String, f64>>,
    sources: Option<RawSources>,
    verify: Option<RawVerify>,
    geodesic: Option<RawGeodesic>,
    curvature: Option<RawCurvature>,
    fd: Option<RawFd>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRegion {
    lo: [f64; 4],
    hi: [f64; 4],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    points: Option<Vec<[f64; 4]>>,
    counts: Option<[usize; 4]>,
    lo: Option<[f64; 4]>,
    hi: Option<[f64; 4]>,
    random: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSources {
    t_mass: Option<[[f64; 4]; 4]>,
    current: Option<[f64; 4]>,
    h: Option<f64>,
    charge_density: Option<f64>,
    mass_density: Option<f64>,
    table: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVerify {
    triples: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGeodesic {
    x: Option<[f64; 4]>,
    u: Option<[f64; 4]>,
    lambda: Option<f64>,
    step: Option<f64>,
    steps: Option<usize>,
    normalize: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCurvature {
    at: Option<[f64; 4]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFd {
    step: Option<f64>,
    order: Option<u8>,
    richardson: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilySpec {
    pub name: String,
    pub params: Params,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GridSpec {
    Unspecified,
    Points(Vec<Point>),
    Lattice {
        lo: Option<[f64; 4]>,
        hi: Option<[f64; 4]>,
        counts: [usize; 4],
    },
    Random(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SourceSpec {
    Vacuum,
    Constant(SourceBlocks),
    /// Rows of `(point, sources)` read from a CSV file.
    Table(Vec<(Point, SourceBlocks)>),
}

impl SourceSpec {
    /// Sources at a grid point; table rows must match the point to 1e-9.
    pub fn at(&self, p: &Point) -> CliResult<SourceBlocks> {
        match self {
            SourceSpec::Vacuum => Ok(SourceBlocks::vacuum()),
            SourceSpec::Constant(s) => Ok(*s),
            SourceSpec::Table(rows) => rows
                .iter()
                .find(|(q, _)| (q - p).abs().max() < 1e-9)
                .map(|(_, s)| *s)
                .ok_or_else(|| {
                    CliError::config("sources.table", format!("no row for grid point {:?}", p.as_slice()))
                }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicSettings {
    pub x: Option<Point>,
    pub u: Option<Vector4<f64>>,
    pub lambda: f64,
    pub step: f64,
    pub steps: usize,
    pub normalize: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Where the scenario came from, for reports.
    pub label: String,
    pub seed: u64,
    pub metric: FamilySpec,
    pub potential: FamilySpec,
    /// Rescale the potential so the Einstein block is best satisfied on the grid.
    pub fit_potential: bool,
    pub region: Option<ValidityBox>,
    pub grid: GridSpec,
    pub tolerances: BTreeMap<String, f64>,
    pub sources: SourceSpec,
    pub triples: usize,
    pub geodesic: GeodesicSettings,
    pub curvature_at: Option<Point>,
    pub fd: FiniteDifference,
}

fn family(table: &toml::Table, key: &str) -> CliResult<(FamilySpec, bool)> {
    let name = match table.get("name") {
        Some(toml::Value::String(s)) => s.clone(),
        Some(_) => return Err(CliError::config(format!("{key}.name"), "expected a string")),
        None => return Err(CliError::config(format!("{key}.name"), "missing family name")),
    };
    let known = if key == "metric" {
        metric_parameters(&name)
    } else {
        potential_parameters(&name)
    }
    .ok_or_else(|| CliError::config(format!("{key}.name"), format!("unknown family `{name}`")))?;
    let mut params = Params::default();
    let mut fit = false;
    for (k, v) in table {
        if k == "name" {
            continue;
        }
        if key == "potential" && k == "fit_scale" {
            fit = v
                .as_bool()
                .ok_or_else(|| CliError::config(format!("{key}.{k}"), "expected true or false"))?;
            continue;
        }
        if !known.contains(&k.as_str()) {
            return Err(CliError::config(
                format!("{key}.{k}"),
                format!("`{name}` has no parameter `{k}` (known: {})", known.join(", ")),
            ));
        }
        match v {
            toml::Value::Float(f) => {
                params.numbers.insert(k.clone(), *f);
            }
            toml::Value::Integer(i) => {
                params.numbers.insert(k.clone(), *i as f64);
            }
            toml::Value::Boolean(b) => {
                params.numbers.insert(k.clone(), if *b { 1.0 } else { 0.0 });
            }
            toml::Value::String(s) => {
                params.texts.insert(k.clone(), s.clone());
            }
            _ => return Err(CliError::config(format!("{key}.{k}"), "expected a number or string")),
        }
    }
    Ok((FamilySpec { name, params }, fit))
}

fn positive(location: &str, v: f64) -> CliResult<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::config(location, format!("must be positive, got {v}")))
    }
}

/// `x0,x1,x2,x3,t00,…,t33,j0,…,j3,h` with a header line.
fn read_source_table(path: &Path) -> CliResult<Vec<(Point, SourceBlocks)>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let location = |line: usize| format!("{}:{line}", path.display());
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate().skip(1) {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::config(location(n + 1), format!("bad number: {e}")))?;
        if cols.len() != 25 {
            return Err(CliError::config(
                location(n + 1),
                format!("expected 25 columns (x0..x3, t00..t33, j0..j3, h), got {}", cols.len()),
            ));
        }
        let point = Point::from_fn(|i, _| cols[i]);
        let t_mass = Matrix4::from_fn(|i, j| cols[4 + 4 * i + j]);
        if (t_mass - t_mass.transpose()).abs().max() > 1e-12 {
            return Err(CliError::config(location(n + 1), "mass stress-energy must be symmetric"));
        }
        let current = Vector4::from_fn(|i, _| cols[20 + i]);
        rows.push((point, SourceBlocks { t_mass, current, h: cols[24] }));
    }
    if rows.is_empty() {
        return Err(CliError::config(path.display().to_string(), "source table has no rows"));
    }
    Ok(rows)
}

impl Scenario {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let dir = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, dir, &path.display().to_string())
    }

    /// Parses scenario text; relative paths inside resolve against `dir`.
    pub fn parse(text: &str, dir: &Path, label: &str) -> CliResult<Self> {
        let raw: RawScenario = toml::from_str(text).map_err(|e| CliError::config(label, e.to_string().trim_end()))?;
        let (metric, _) = family(&raw.metric, "metric")?;
        let (potential, fit_potential) = match &raw.potential {
            Some(t) => family(t, "potential")?,
            None => (
                FamilySpec {
                    name: "zero".into(),
                    params: Params::default(),
                },
                false,
            ),
        };
        let region = raw
            .region
            .map(|r| ValidityBox::new(r.lo, r.hi).map_err(|e| CliError::config("region", e.to_string())))
            .transpose()?;

        let grid = match raw.grid {
            None => GridSpec::Unspecified,
            Some(g) => {
                let given = [g.points.is_some(), g.counts.is_some(), g.random.is_some()];
                if given.iter().filter(|b| **b).count() != 1 {
                    return Err(CliError::config("grid", "give exactly one of points, counts or random"));
                }
                if let Some(points) = g.points {
                    if points.is_empty() {
                        return Err(CliError::config("grid.points", "empty point list"));
                    }
                    GridSpec::Points(points.iter().map(|p| Point::from_column_slice(p)).collect())
                } else if let Some(counts) = g.counts {
                    if counts.contains(&0) {
                        return Err(CliError::config("grid.counts", "counts must be at least 1"));
                    }
                    GridSpec::Lattice {
                        lo: g.lo,
                        hi: g.hi,
                        counts,
                    }
                } else {
                    let n = g.random.unwrap_or(0);
                    if n == 0 {
                        return Err(CliError::config("grid.random", "need at least one point"));
                    }
                    GridSpec::Random(n)
                }
            }
        };

        let mut tolerances: BTreeMap<String, f64> =
            DEFAULT_TOLERANCES.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        for (k, v) in raw.tolerances.unwrap_or_default() {
            let location = format!("tolerances.{k}");
            if !tolerances.contains_key(&k) {
                let names: Vec<&str> = DEFAULT_TOLERANCES.iter().map(|(n, _)| *n).collect();
                return Err(CliError::config(location, format!("unknown tolerance (known: {})", names.join(", "))));
            }
            tolerances.insert(k, positive(&location, v)?);
        }

        let sources = match raw.sources {
            None => SourceSpec::Vacuum,
            Some(s) => {
                if let Some(table) = s.table {
                    if s.t_mass.is_some() || s.current.is_some() || s.h.is_some() {
                        return Err(CliError::config("sources.table", "a table excludes constant source keys"));
                    }
                    SourceSpec::Table(read_source_table(&dir.join(table))?)
                } else {
                    let t_mass = s.t_mass.map(|m| Matrix4::from_fn(|i, j| m[i][j])).unwrap_or_else(Matrix4::zeros);
                    if (t_mass - t_mass.transpose()).abs().max() > 1e-12 {
                        return Err(CliError::config("sources.t_mass", "must be symmetric"));
                    }
                    let current = s.current.map(|c| Vector4::from_column_slice(&c)).unwrap_or_else(Vector4::zeros);
                    let blocks = match (s.h, s.charge_density, s.mass_density) {
                        (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
                            return Err(CliError::config("sources.h", "give h or the two densities, not both"))
                        }
                        (h, None, None) => SourceBlocks {
                            t_mass,
                            current,
                            h: h.unwrap_or(0.0),
                        },
                        (None, Some(eta), Some(rho)) => SourceBlocks::from_densities(t_mass, current, eta, rho)
                            .map_err(|e| CliError::config("sources.mass_density", e.to_string()))?,
                        _ => {
                            return Err(CliError::config(
                                "sources",
                                "charge_density and mass_density go together",
                            ))
                        }
                    };
                    SourceSpec::Constant(blocks)
                }
            }
        };

        let g = raw.geodesic;
        let geodesic = GeodesicSettings {
            x: g.as_ref().and_then(|g| g.x).map(|x| Point::from_column_slice(&x)),
            u: g.as_ref().and_then(|g| g.u).map(|u| Vector4::from_column_slice(&u)),
            lambda: g.as_ref().and_then(|g| g.lambda).unwrap_or(0.0),
            step: positive("geodesic.step", g.as_ref().and_then(|g| g.step).unwrap_or(1e-3))?,
            steps: g.as_ref().and_then(|g| g.steps).unwrap_or(1000),
            normalize: g.as_ref().and_then(|g| g.normalize).unwrap_or(false),
        };

        let mut fd = FiniteDifference::default();
        if let Some(f) = raw.fd {
            if let Some(step) = f.step {
                fd.step = positive("fd.step", step)?;
            }
            fd.order = match f.order.unwrap_or(4) {
                2 => StencilOrder::Second,
                4 => StencilOrder::Fourth,
                other => return Err(CliError::config("fd.order", format!("expected 2 or 4, got {other}"))),
            };
            fd.richardson = f.richardson.unwrap_or(false);
        }

        let triples = raw.verify.and_then(|v| v.triples).unwrap_or(4);
        if triples == 0 {
            return Err(CliError::config("verify.triples", "need at least one triple"));
        }

        Ok(Scenario {
            label: label.to_string(),
            seed: raw.seed.unwrap_or(0),
            metric,
            potential,
            fit_potential,
            region,
            grid,
            tolerances,
            sources,
            triples,
            geodesic,
            curvature_at: raw.curvature.and_then(|c| c.at).map(|p| Point::from_column_slice(&p)),
            fd,
        })
    }

    pub fn tolerance(&self, name: &str) -> f64 {
        self.tolerances[name]
    }

    /// Family parameters with the scenario seed filled in where none is given.
    fn seeded(&self, spec: &FamilySpec) -> Params {
        let mut p = spec.params.clone();
        p.numbers.entry("seed".into()).or_insert(self.seed as f64);
        p
    }

    pub fn metric_field(&self) -> CliResult<Arc<dyn MetricField>> {
        let base = build_metric(&self.metric.name, &self.seeded(&self.metric))?;
        Ok(match &self.region {
            Some(r) => Arc::new(
                RestrictedMetric::new(base, r)
                    .map_err(|_| CliError::config("region", "does not overlap the metric's domain"))?,
            ),
            None => base,
        })
    }

    /// Metric, potential and finite-difference settings. With `fit_scale`, the
    /// potential is rescaled by the least-squares factor over `points`.
    pub fn spacetime(&self, points: &[Point]) -> CliResult<(AffineSpacetime, Option<f64>)> {
        let metric = self.metric_field()?;
        let mut potential = build_potential(&self.potential.name, &self.seeded(&self.potential), metric.clone())?;
        let mut scale = None;
        if self.fit_potential {
            let k = fit_potential_scale(metric.clone(), potential.clone(), points, &self.fd)?;
            potential = Arc::new(Scaled(potential, k));
            scale = Some(k);
        }
        Ok((AffineSpacetime::new(metric, potential).with_finite_difference(self.fd), scale))
    }

    /// Distance kept from the validity boundary.
    pub fn margin(&self) -> f64 {
        GRID_MARGIN_REACHES * self.fd.reach()
    }

    /// Sample points, all at least [`Scenario::margin`] inside the validity box.
    pub fn grid_points(&self) -> CliResult<Vec<Point>> {
        let metric = self.metric_field()?;
        let margin = self.margin();
        let inner = metric
            .validity()
            .shrink(margin)
            .map_err(|_| CliError::config("region", "too small for the finite-difference margin"))?;
        let finite_box = || -> CliResult<ValidityBox> {
            if (0..4).all(|k| inner.lo[k].is_finite() && inner.hi[k].is_finite() && inner.hi[k] - inner.lo[k] < 1e5) {
                Ok(inner)
            } else {
                Err(CliError::config("region", "this grid needs a bounded region"))
            }
        };
        let points = match &self.grid {
            GridSpec::Points(p) => p.clone(),
            GridSpec::Unspecified => match &self.sources {
                SourceSpec::Table(rows) => rows.iter().map(|(p, _)| *p).collect(),
                _ => return Err(CliError::config("grid", "no grid given (use grid.points, grid.counts or grid.random)")),
            },
            GridSpec::Lattice { lo, hi, counts } => {
                let b = match (lo, hi) {
                    (Some(lo), Some(hi)) => ValidityBox::new(*lo, *hi).map_err(|e| CliError::config("grid", e.to_string()))?,
                    (None, None) => finite_box()?,
                    _ => return Err(CliError::config("grid", "give both grid.lo and grid.hi or neither")),
                };
                let axis = |k: usize, i: usize| {
                    if counts[k] == 1 {
                        0.5 * (b.lo[k] + b.hi[k])
                    } else {
                        b.lo[k] + (b.hi[k] - b.lo[k]) * i as f64 / (counts[k] - 1) as f64
                    }
                };
                let mut pts = Vec::with_capacity(counts.iter().product());
                for a in 0..counts[0] {
                    for b1 in 0..counts[1] {
                        for c in 0..counts[2] {
                            for d in 0..counts[3] {
                                pts.push(Point::new(axis(0, a), axis(1, b1), axis(2, c), axis(3, d)));
                            }
                        }
                    }
                }
                pts
            }
            GridSpec::Random(n) => {
                let b = finite_box()?;
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                (0..*n).map(|_| b.sample(&mut rng)).collect()
            }
        };
        for (i, p) in points.iter().enumerate() {
            if !inner.contains(p) {
                return Err(CliError::config(
                    format!("grid point {i}"),
                    format!(
                        "{:?} is outside the validity box or within {margin:e} of its boundary",
                        p.as_slice()
                    ),
                ));
            }
        }
        Ok(points)
    }
}

/// `k · A`.
struct Scaled(Arc<dyn PotentialField>, f64);

impl PotentialField for Scaled {
    fn components(&self, x: &Point) -> algebroid_core::Result<Vector4<f64>> {
        Ok(self.0.components(x)? * self.1)
    }
    fn name(&self) -> String {
        format!("{} scaled by {}", self.0.name(), self.1)
    }
}
