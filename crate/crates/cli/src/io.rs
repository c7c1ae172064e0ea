//! Wavefront OBJ subset and point lists.
//!
//! OBJ: `v x y z` and `f i j k` (1-based, plain indices); blank lines and
//! `#` comments are skipped, anything else is a parse error.

use std::fmt::Write as _;
use std::path::Path;

use mvc_core::shapes::IndexedMesh;
use mvc_core::{Point, Vec3};

use crate::error::CliError;

pub fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> CliError {
    CliError::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

fn content(line: &str) -> &str {
    line.split('#').next().unwrap_or("").trim()
}

fn parse_coords<'a>(fields: impl Iterator<Item = &'a str>, path: &Path, line: usize) -> Result<Point, CliError> {
    let v: Vec<&str> = fields.collect();
    if v.len() != 3 {
        return Err(parse_error(
            path,
            line,
            format!("expected 3 coordinates, found {}", v.len()),
        ));
    }
    let mut p = [0.0; 3];
    for (k, s) in v.iter().enumerate() {
        p[k] = s
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| parse_error(path, line, format!("invalid coordinate `{s}`")))?;
    }
    Ok(Vec3::from_f64(p))
}

pub fn parse_obj(text: &str, path: &Path) -> Result<IndexedMesh<f64>, CliError> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = content(raw);
        if body.is_empty() {
            continue;
        }
        let mut fields = body.split_whitespace();
        match fields.next() {
            Some("v") => vertices.push(parse_coords(fields, path, line)?),
            Some("f") => {
                let idx: Vec<&str> = fields.collect();
                if idx.len() != 3 {
                    return Err(parse_error(
                        path,
                        line,
                        format!("expected a triangle, found {} indices", idx.len()),
                    ));
                }
                let mut tri = [0usize; 3];
                for (k, s) in idx.iter().enumerate() {
                    tri[k] = match s.parse::<usize>() {
                        Ok(n) if n >= 1 => n - 1,
                        _ => return Err(parse_error(path, line, format!("invalid vertex index `{s}`"))),
                    };
                }
                faces.push((line, tri));
            }
            Some(other) => return Err(parse_error(path, line, format!("unsupported statement `{other}`"))),
            None => {}
        }
    }
    let mut triangles = Vec::with_capacity(faces.len());
    for (line, tri) in faces {
        if let Some(&bad) = tri.iter().find(|&&k| k >= vertices.len()) {
            return Err(parse_error(
                path,
                line,
                format!("vertex index {} out of range", bad + 1),
            ));
        }
        triangles.push(tri);
    }
    Ok(IndexedMesh { vertices, triangles })
}

/// Coordinates with 17 significant digits, which re-parse to the same
/// doubles.
pub fn write_obj(mesh: &IndexedMesh<f64>) -> String {
    let mut s = String::new();
    for v in &mesh.vertices {
        let _ = writeln!(s, "v {:.16e} {:.16e} {:.16e}", v[0], v[1], v[2]);
    }
    for t in &mesh.triangles {
        let _ = writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    s
}

/// One `x y z` per line; blank lines and `#` comments are skipped.
pub fn parse_points(text: &str, path: &Path) -> Result<Vec<Point>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let body = content(raw);
        if !body.is_empty() {
            out.push(parse_coords(body.split_whitespace(), path, i + 1)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("test.obj")
    }

    #[test]
    fn obj_round_trip_is_exact() {
        let text = "# tetra\nv 0.1 0 0\nv 0 0.30000000000000004 0\nv 0 0 1e-7\nv 1 1 1\nf 1 2 3\nf 1 3 4 # tail\n";
        let mesh = parse_obj(text, p()).unwrap();
        let again = parse_obj(&write_obj(&mesh), p()).unwrap();
        assert_eq!(mesh.vertices, again.vertices);
        assert_eq!(mesh.triangles, again.triangles);
        assert_eq!(write_obj(&again), write_obj(&mesh));
    }

    #[test]
    fn obj_errors_carry_line_numbers() {
        let cases = [
            ("v 0 0 0\nvn 0 0 1\n", 2),
            ("v 0 0 0\nv 1 0\n", 2),
            ("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2\n", 4),
            ("v 0 0 0\nv 1 0 0\nv 0 1 0\n\nf 1/1 2 3\n", 5),
            ("v 0 0 0\nf 1 2 3\nv 1 0 0\n", 2),
            ("v 0 0 nan\n", 1),
            ("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1 2\n", 4),
        ];
        for (text, line) in cases {
            match parse_obj(text, p()) {
                Err(CliError::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn points_skip_comments_and_blank_lines() {
        let pts = parse_points("# header\n0 0 0\n\n  1 2 3  # note\n", p()).unwrap();
        assert_eq!(pts, vec![Vec3::zero(), Vec3::new(1.0, 2.0, 3.0)]);
        assert!(matches!(
            parse_points("0 0 0\n1 2\n", p()),
            Err(CliError::Parse { line: 2, .. })
        ));
    }
}
