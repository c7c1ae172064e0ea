//! The three JSON schemas: per-point weights/derivatives, constraints, and
//! the validation and solve reports. Field order is declaration order and
//! numbers use the shortest round-trip representation, so equal inputs
//! give equal bytes.

use serde::{Deserialize, Serialize};

use mvc_core::validation::{SuiteReport, ValidationReport};
use mvc_core::{Mat3, Point, SolveReport};

pub fn row_major(m: &Mat3<f64>) -> [f64; 9] {
    m.to_row_major()
}

#[derive(Serialize)]
pub struct PointsOutput {
    pub points: Vec<PointRecord>,
}

#[derive(Serialize)]
pub struct PointRecord {
    pub position: [f64; 3],
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub lambda: Option<Vec<f64>>,
    pub w: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grad_lambda: Option<Option<Vec<[f64; 3]>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hess_lambda: Option<Option<Vec<[f64; 9]>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintsFile {
    pub constraints: Vec<ConstraintSpec>,
    #[serde(default)]
    pub rigidity: Option<RigiditySpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintSpec {
    pub point: [f64; 3],
    #[serde(default)]
    pub value: Option<[f64; 3]>,
    #[serde(default)]
    pub jacobian: Option<[f64; 9]>,
    #[serde(default = "unit")]
    pub weight: f64,
}

fn unit() -> f64 {
    1.0
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RigiditySpec {
    pub points: RigidityPoints,
    #[serde(default = "unit")]
    pub weight: f64,
}

#[derive(Deserialize)]
#[serde(untagged)]
pub enum RigidityPoints {
    List(Vec<[f64; 3]>),
    Grid { grid: usize },
}

#[derive(Serialize)]
pub struct ValidationOutput {
    pub status: &'static str,
    pub samples: usize,
    pub seed: u64,
    pub cage: CageSummary,
    pub suites: Vec<SuiteOutput>,
}

#[derive(Serialize)]
pub struct CageSummary {
    pub vertices: usize,
    pub triangles: usize,
    pub orientation_flipped: bool,
}

#[derive(Serialize)]
pub struct SuiteOutput {
    pub name: &'static str,
    pub status: &'static str,
    pub samples: usize,
    pub failures: usize,
    pub metrics: Vec<MetricOutput>,
    pub observations: Vec<ObservationOutput>,
}

#[derive(Serialize)]
pub struct MetricOutput {
    pub name: &'static str,
    pub status: &'static str,
    /// `null` when the measurement was not a number.
    pub value: Option<f64>,
    pub tolerance: f64,
}

#[derive(Serialize)]
pub struct ObservationOutput {
    pub name: &'static str,
    pub value: Option<f64>,
}

fn status(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

impl SuiteOutput {
    fn new(s: &SuiteReport) -> Self {
        SuiteOutput {
            name: s.name,
            status: status(s.passed()),
            samples: s.samples,
            failures: s.failures,
            metrics: s
                .metrics
                .iter()
                .map(|m| MetricOutput {
                    name: m.name,
                    status: status(m.passed()),
                    value: finite(m.value),
                    tolerance: m.tolerance,
                })
                .collect(),
            observations: s
                .observations
                .iter()
                .map(|(name, v)| ObservationOutput {
                    name,
                    value: finite(*v),
                })
                .collect(),
        }
    }
}

impl ValidationOutput {
    pub fn new(r: &ValidationReport, cage: CageSummary) -> Self {
        ValidationOutput {
            status: status(r.passed()),
            samples: r.samples,
            seed: r.seed,
            cage,
            suites: r.suites.iter().map(SuiteOutput::new).collect(),
        }
    }
}

#[derive(Serialize)]
pub struct SolveOutput {
    pub status: &'static str,
    pub residual: f64,
    pub rank: usize,
    pub unknowns: usize,
    pub rows: usize,
    pub rank_deficient: bool,
    pub largest_singular_value: f64,
    pub smallest_kept_singular_value: Option<f64>,
    pub rigidity_samples: usize,
}

impl SolveOutput {
    pub fn new(r: &SolveReport, rigidity_samples: usize) -> Self {
        SolveOutput {
            status: if r.rank_deficient { "rank_deficient" } else { "ok" },
            residual: r.residual,
            rank: r.rank,
            unknowns: r.unknowns,
            rows: r.rows,
            rank_deficient: r.rank_deficient,
            largest_singular_value: r.largest_singular_value,
            smallest_kept_singular_value: finite(r.smallest_kept_singular_value),
            rigidity_samples,
        }
    }
}

pub fn to_point(p: [f64; 3]) -> Point {
    Point::from_f64(p)
}

/// Point batches are compact; reports are indented.
pub fn to_string<T: Serialize>(v: &T, pretty: bool) -> String {
    let mut s = if pretty {
        serde_json::to_string_pretty(v)
    } else {
        serde_json::to_string(v)
    }
    .expect("serializable output");
    s.push('\n');
    s
}
