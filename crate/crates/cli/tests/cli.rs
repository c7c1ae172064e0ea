use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const CUBE: &str = "\
v -1 -1 -1
v 1 -1 -1
v -1 1 -1
v 1 1 -1
v -1 -1 1
v 1 -1 1
v -1 1 1
v 1 1 1
f 1 3 2
f 2 3 4
f 5 6 7
f 6 8 7
f 1 2 5
f 2 6 5
f 3 7 4
f 4 7 8
f 1 5 3
f 3 5 7
f 2 4 6
f 4 8 6
";

struct Dir(TempDir);

impl Dir {
    fn new() -> Self {
        let d = Dir(TempDir::new().unwrap());
        d.write("cube.obj", CUBE);
        d
    }

    fn write(&self, name: &str, text: &str) -> PathBuf {
        let p = self.0.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    fn path(&self, name: &str) -> PathBuf {
        self.0.path().join(name)
    }
}

fn mvc(dir: &Dir, args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_mvc"));
    cmd.current_dir(dir.0.path()).args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    for k in [
        "MVC_EPS_PLANE",
        "MVC_EPS_THETA",
        "MVC_EPS_SWITCH",
        "MVC_FD_H",
        "MVC_THREADS",
        "MVC_SEED",
        "MVC_OUT",
    ] {
        if !env.iter().any(|(e, _)| *e == k) {
            cmd.env_remove(k);
        }
    }
    cmd.output().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

fn obj_vertices(text: &str) -> Vec<[f64; 3]> {
    text.lines()
        .filter_map(|l| l.strip_prefix("v "))
        .map(|l| {
            let c: Vec<f64> = l.split_whitespace().map(|s| s.parse().unwrap()).collect();
            [c[0], c[1], c[2]]
        })
        .collect()
}

fn translated_cube(d: [f64; 3]) -> String {
    CUBE.lines()
        .map(|l| match l.strip_prefix("v ") {
            Some(rest) => {
                let c: Vec<f64> = rest.split_whitespace().map(|s| s.parse().unwrap()).collect();
                format!("v {} {} {}\n", c[0] + d[0], c[1] + d[1], c[2] + d[2])
            }
            None => format!("{l}\n"),
        })
        .collect()
}

#[test]
fn weights_at_center_are_symmetric_and_sum_to_one() {
    let d = Dir::new();
    d.write("pts.txt", "# center\n0 0 0\n\n1 0 0\n");
    let v = json(&mvc(&d, &["weights", "cube.obj", "pts.txt"], &[]));
    let pts = v["points"].as_array().unwrap();
    assert_eq!(pts.len(), 2);
    assert_eq!(pts[0]["status"], "ok");
    let l = floats(&pts[0]["lambda"]);
    assert!((l.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    for i in 0..8 {
        assert!((l[i] - l[7 - i]).abs() < 1e-14, "point reflection through the center");
        assert!(l[i] > 0.0);
    }
    assert!(pts[0].get("grad_lambda").is_none());
    assert_eq!(pts[1]["status"], "on_surface");
    let l = floats(&pts[1]["lambda"]);
    assert_eq!(l[5], 0.5);
    assert_eq!(l[3], 0.5);
}

#[test]
fn derivatives_have_requested_order() {
    let d = Dir::new();
    d.write("pts.txt", "0.2 0.1 -0.3\n");
    let v = json(&mvc(&d, &["derivs", "--order", "1", "cube.obj", "pts.txt"], &[]));
    let p = &v["points"][0];
    assert_eq!(p["grad_lambda"].as_array().unwrap().len(), 8);
    assert!(p.get("hess_lambda").is_none());
    let v = json(&mvc(&d, &["derivs", "cube.obj", "pts.txt"], &[]));
    let h = v["points"][0]["hess_lambda"].as_array().unwrap();
    assert_eq!(h.len(), 8);
    let mut sum = [0.0; 9];
    for hi in h {
        for (s, x) in sum.iter_mut().zip(floats(hi)) {
            *s += x;
        }
    }
    assert!(sum.iter().all(|s| s.abs() < 1e-12), "{sum:?}");
    let out = mvc(&d, &["derivs", "--order", "3", "cube.obj", "pts.txt"], &[]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn deform_by_translated_cage_translates_the_mesh() {
    let d = Dir::new();
    d.write("moved.obj", &translated_cube([0.5, -0.25, 2.0]));
    let mesh = "v 0.1 0.2 0.3\nv 0.5 0 0\nv 0 -0.5 0.7\nf 1 2 3\n";
    d.write("mesh.obj", mesh);
    let out = mvc(&d, &["deform", "cube.obj", "moved.obj", "mesh.obj"], &[]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.ends_with("f 1 2 3\n"));
    for (a, b) in obj_vertices(&text).iter().zip(obj_vertices(mesh)) {
        let want = [b[0] + 0.5, b[1] - 0.25, b[2] + 2.0];
        for k in 0..3 {
            assert!((a[k] - want[k]).abs() < 1e-13);
        }
    }
}

#[test]
fn validate_passes_on_cube_and_is_byte_identical_across_threads() {
    let d = Dir::new();
    let run = |threads: &str, out: &str| {
        let o = mvc(
            &d,
            &[
                "validate",
                "cube.obj",
                "--samples",
                "1000",
                "--seed",
                "42",
                "--threads",
                threads,
                "--out",
                out,
            ],
            &[],
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(d.path(out)).unwrap()
    };
    let a = run("1", "a.json");
    let b = run("1", "b.json");
    let c = run("4", "c.json");
    assert_eq!(a, b);
    assert_eq!(a, c);
    let v: Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(v["status"], "pass");
    for s in v["suites"].as_array().unwrap() {
        assert_eq!(s["status"], "pass", "{}", s["name"]);
    }
}

#[test]
fn validate_breach_exits_with_two() {
    let d = Dir::new();
    // a huge step ruins the finite-difference comparison
    let o = mvc(&d, &["validate", "cube.obj", "--samples", "50", "--fd-h", "5e-3"], &[]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["status"], "fail");
}

#[test]
fn parse_errors_carry_line_numbers() {
    let d = Dir::new();
    d.write("bad.obj", "v 0 0 0\n# fine\nvn 0 0 1\n");
    d.write("pts.txt", "0 0 0\n");
    let o = mvc(&d, &["weights", "bad.obj", "pts.txt"], &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.obj:3"));
    d.write("pts2.txt", "0 0 0\n1 2\n");
    let o = mvc(&d, &["weights", "cube.obj", "pts2.txt"], &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("pts2.txt:2"));
    let o = mvc(&d, &["weights", "missing.obj", "pts.txt"], &[]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn invalid_cages_exit_with_two() {
    let d = Dir::new();
    d.write(
        "open.obj",
        "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nf 1 3 2\nf 1 2 4\nf 1 4 3\n",
    );
    d.write("pts.txt", "0.1 0.1 0.1\n");
    let o = mvc(&d, &["weights", "open.obj", "pts.txt"], &[]);
    assert_eq!(o.status.code(), Some(2));
    d.write("short.obj", "v 0 0 0\n");
    d.write("mesh.obj", "v 0 0 0\n");
    let o = mvc(&d, &["deform", "cube.obj", "short.obj", "mesh.obj"], &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn solve_recovers_translation() {
    let d = Dir::new();
    d.write(
        "c.json",
        r#"{"constraints": [
            {"point": [0, 0, 0], "value": [0.5, 0, 0], "weight": 1},
            {"point": [0.5, 0, 0], "value": [1, 0, 0], "weight": 1},
            {"point": [0, 0.5, 0], "value": [0.5, 0.5, 0], "weight": 1},
            {"point": [0, 0, 0.5], "value": [0.5, 0, 0.5], "weight": 1}],
           "rigidity": {"points": {"grid": 6}, "weight": 1}}"#,
    );
    let o = mvc(
        &d,
        &["solve", "cube.obj", "c.json", "--out", "s.obj", "--report", "r.json"],
        &[],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let solved = obj_vertices(&std::fs::read_to_string(d.path("s.obj")).unwrap());
    for (a, b) in solved.iter().zip(obj_vertices(CUBE)) {
        for k in 0..3 {
            let want = b[k] + if k == 0 { 0.5 } else { 0.0 };
            assert!((a[k] - want).abs() < 1e-10);
        }
    }
    let r: Value = serde_json::from_slice(&std::fs::read(d.path("r.json")).unwrap()).unwrap();
    assert_eq!(r["status"], "ok");
    assert_eq!(r["rank"], 8);
    assert!(r["residual"].as_f64().unwrap() < 1e-10);
    assert!(r["rigidity_samples"].as_u64().unwrap() > 0);
}

#[test]
fn underdetermined_solve_exits_with_two() {
    let d = Dir::new();
    d.write(
        "c.json",
        r#"{"constraints": [{"point": [0, 0, 0], "value": [1, 0, 0], "weight": 1}]}"#,
    );
    let o = mvc(&d, &["solve", "cube.obj", "c.json"], &[]);
    assert_eq!(o.status.code(), Some(2));
    d.write("bad.json", "{\"constraints\": [\n{\"point\": [0, 0]}]}");
    let o = mvc(&d, &["solve", "cube.obj", "bad.json"], &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.json:2"));
}

#[test]
fn environment_mirrors_flags() {
    let d = Dir::new();
    d.write("pts.txt", "0.3 0.2 0.1\n");
    let flag = mvc(
        &d,
        &["weights", "cube.obj", "pts.txt", "--out", "flag.json", "--threads", "2"],
        &[],
    );
    assert!(flag.status.success());
    let env = mvc(
        &d,
        &["weights", "cube.obj", "pts.txt"],
        &[("MVC_OUT", "env.json"), ("MVC_THREADS", "2")],
    );
    assert!(env.status.success());
    assert!(env.stdout.is_empty());
    assert_eq!(
        std::fs::read(d.path("flag.json")).unwrap(),
        std::fs::read(d.path("env.json")).unwrap()
    );
    let bad = mvc(&d, &["weights", "cube.obj", "pts.txt"], &[("MVC_EPS_PLANE", "0")]);
    assert_eq!(bad.status.code(), Some(1));
    let bad = mvc(&d, &["weights", "cube.obj", "pts.txt"], &[("MVC_THREADS", "many")]);
    assert_eq!(bad.status.code(), Some(1));
}
