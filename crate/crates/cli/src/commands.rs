use std::path::Path;

use mvc_core::shapes::IndexedMesh;
use mvc_core::validation::{run_all, ValidationConfig};
use mvc_core::{
    deform_mesh, solve_constraints, Binding, BoundPoint, Cage, CageMesh, Constraint, DeformedCage, Mat3, MvcError,
    Order, Point, RigidityTerm, SolveOptions, Tolerances,
};

use crate::error::CliError;
use crate::io::{parse_obj, parse_points, read_file, write_obj};
use crate::json::{
    row_major, to_point, to_string, CageSummary, ConstraintsFile, PointRecord, PointsOutput, RigidityPoints,
    SolveOutput, ValidationOutput,
};
use crate::RunConfig;

/// Rigidity lattices reject points closer than this to the surface.
const LATTICE_MARGIN: f64 = 0.05;

fn tolerances(cfg: &RunConfig) -> Tolerances<f64> {
    Tolerances {
        eps_plane: cfg.eps_plane,
        eps_switch: cfg.eps_switch,
        ..Tolerances::default()
    }
    .with_eps_theta(cfg.eps_theta)
}

fn read_mesh(path: &Path) -> Result<IndexedMesh<f64>, CliError> {
    parse_obj(&read_file(path)?, path)
}

fn read_cage(path: &Path) -> Result<Cage, CliError> {
    let mesh = read_mesh(path)?;
    CageMesh::new(mesh.vertices, mesh.triangles).map_err(CliError::invalid(path.display().to_string()))
}

fn emit(cfg: &RunConfig, text: &str) -> Result<(), CliError> {
    write_to(cfg.out.as_deref(), text)
}

fn write_to(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| CliError::Io {
            path: p.display().to_string(),
            source,
        }),
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|source| CliError::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}

fn status_of(e: &MvcError) -> &'static str {
    match e {
        MvcError::OnSurface { .. } => "on_surface",
        _ => "singular",
    }
}

fn record(p: &Point, bp: &BoundPoint<f64>, order: Option<u8>) -> PointRecord {
    let position = p.to_f64();
    let wv = match &bp.weights {
        Ok(wv) => wv,
        Err(e) => {
            return PointRecord {
                position,
                status: status_of(e),
                error: Some(e.to_string()),
                lambda: None,
                w: None,
                grad_lambda: order.map(|_| None),
                hess_lambda: order.filter(|&o| o == 2).map(|_| None),
            }
        }
    };
    let mut rec = PointRecord {
        position,
        status: if wv.on_surface { "on_surface" } else { "ok" },
        error: None,
        lambda: Some(wv.lambda.clone()),
        w: Some(wv.w.clone()),
        grad_lambda: None,
        hess_lambda: None,
    };
    if let Some(order) = order {
        let ds = bp.derivatives.as_ref().and_then(|d| d.as_ref().ok());
        if let Some(Err(e)) = &bp.derivatives {
            if !wv.on_surface {
                rec.status = status_of(e);
                rec.error = Some(e.to_string());
            }
        }
        rec.grad_lambda = Some(ds.map(|d| d.grad_lambda.iter().map(|g| g.to_f64()).collect()));
        if order == 2 {
            rec.hess_lambda = Some(
                ds.and_then(|d| d.hess_lambda.as_ref())
                    .map(|h| h.iter().map(row_major).collect()),
            );
        }
    }
    rec
}

fn points_output(cfg: &RunConfig, cage: &Path, points: &Path, order: Option<u8>) -> Result<(), CliError> {
    let cage = read_cage(cage)?;
    let pts = parse_points(&read_file(points)?, points)?;
    let tol = tolerances(cfg);
    let level = match order {
        None => Order::Value,
        Some(1) => Order::Gradient,
        Some(_) => Order::Hessian,
    };
    let binding = Binding::new(&cage, &pts, &tol, level);
    let out = PointsOutput {
        points: pts
            .iter()
            .zip(binding.points())
            .map(|(p, bp)| record(p, bp, order))
            .collect(),
    };
    emit(cfg, &to_string(&out, false))
}

pub fn weights(cfg: &RunConfig, cage: &Path, points: &Path) -> Result<(), CliError> {
    points_output(cfg, cage, points, None)
}

pub fn derivs(cfg: &RunConfig, cage: &Path, points: &Path, order: u8) -> Result<(), CliError> {
    points_output(cfg, cage, points, Some(order))
}

pub fn deform(cfg: &RunConfig, cage_path: &Path, deformed_path: &Path, mesh_path: &Path) -> Result<(), CliError> {
    let cage = read_cage(cage_path)?;
    let deformed = read_mesh(deformed_path)?;
    let deformed =
        DeformedCage::new(&cage, deformed.vertices).map_err(CliError::invalid(deformed_path.display().to_string()))?;
    let mesh = read_mesh(mesh_path)?;
    let out = deform_mesh(&cage, &deformed, &mesh, &tolerances(cfg))
        .map_err(CliError::invalid(mesh_path.display().to_string()))?;
    emit(cfg, &write_obj(&out))
}

pub fn validate(cfg: &RunConfig, cage_path: &Path, samples: usize) -> Result<(), CliError> {
    if samples == 0 {
        return Err(CliError::Usage("--samples must be positive".into()));
    }
    let cage = read_cage(cage_path)?;
    let vc = ValidationConfig {
        samples,
        seed: cfg.seed,
        tolerances: tolerances(cfg),
        fd_h_gradient: cfg.fd_h,
        ..ValidationConfig::default()
    };
    let report = run_all(&cage, &vc);
    let summary = CageSummary {
        vertices: cage.num_vertices(),
        triangles: cage.num_triangles(),
        orientation_flipped: cage.orientation_flipped(),
    };
    emit(cfg, &to_string(&ValidationOutput::new(&report, summary), true))?;
    match report
        .suites
        .iter()
        .filter(|s| !s.passed())
        .map(|s| s.name)
        .collect::<Vec<_>>()
    {
        failed if failed.is_empty() => Ok(()),
        failed => Err(CliError::Breach(failed.join(", "))),
    }
}

pub fn solve(
    cfg: &RunConfig,
    cage_path: &Path,
    constraints_path: &Path,
    report: Option<&Path>,
) -> Result<(), CliError> {
    let cage = read_cage(cage_path)?;
    let text = read_file(constraints_path)?;
    let file: ConstraintsFile = serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: constraints_path.display().to_string(),
        line: e.line(),
        message: e.to_string(),
    })?;
    let constraints: Vec<Constraint<f64>> = file
        .constraints
        .iter()
        .map(|c| Constraint {
            point: to_point(c.point),
            target_value: c.value.map(to_point),
            target_jacobian: c.jacobian.map(Mat3::from_row_major),
            weight: c.weight,
        })
        .collect();
    let rigidity = match &file.rigidity {
        None => RigidityTerm::none(),
        Some(r) => match &r.points {
            RigidityPoints::List(pts) => RigidityTerm {
                sample_points: pts.iter().copied().map(to_point).collect(),
                weight: r.weight,
            },
            RigidityPoints::Grid { grid } => RigidityTerm::lattice(&cage, *grid, LATTICE_MARGIN, r.weight),
        },
    };
    let context = constraints_path.display().to_string();
    let sol = solve_constraints(
        &cage,
        &constraints,
        &rigidity,
        &tolerances(cfg),
        &SolveOptions::default(),
    )
    .map_err(CliError::invalid(context.clone()))?;
    let mesh = IndexedMesh {
        vertices: sol.deformed.positions().to_vec(),
        triangles: cage.triangles().to_vec(),
    };
    emit(cfg, &write_obj(&mesh))?;
    let text = to_string(&SolveOutput::new(&sol.report, rigidity.sample_points.len()), true);
    match report {
        Some(p) => write_to(Some(p), &text)?,
        None => eprint!("{text}"),
    }
    sol.report.check().map_err(CliError::invalid(context))
}
