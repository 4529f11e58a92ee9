use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use stable_theta::expansion::{deserialize, serialize, AnyExpansion};
use stable_theta::lattice::e8;
use stable_theta::theta::siegel_theta;
use stable_theta::Limits;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_stable-theta"));
    c.env_remove("STABLE_THETA_CONFIG");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn theta_output_matches_library() {
    let o = run(&["theta", "siegel", "--lattice", "E8", "--genus", "2", "--bound", "2"]);
    assert_eq!(code(&o), 0);
    let lib = siegel_theta(&e8(), 2, 2, &Limits::default()).unwrap();
    assert_eq!(stdout(&o), serialize(&lib));
    assert_eq!(deserialize(&stdout(&o)).unwrap(), AnyExpansion::Siegel(lib));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let args = [
        "theta",
        "jacobi",
        "--index-lattice",
        "E8",
        "--genus",
        "2",
        "--bound",
        "2",
    ];
    let a = run(&args);
    let b = run(&[&args[..], &["--threads", "3"]].concat());
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&["theta", "siegel", "--lattice", "E7", "--genus", "1"])), 2);
    assert_eq!(
        code(&run(&[
            "theta",
            "siegel",
            "--lattice",
            "E8",
            "--genus",
            "1",
            "--bound",
            "-1"
        ])),
        2
    );
    assert_eq!(code(&run(&["theta", "frobnicate"])), 2);
    assert_eq!(code(&run(&["--format", "xml", "igusa", "--genus", "1"])), 2);
    let garbage = write(dir.path(), "bad.json", "{\"kind\":\"siegel\"");
    assert_eq!(code(&run(&["op", "phi", "--input", &garbage])), 2);

    let tiny = write(dir.path(), "tiny.toml", "node_budget = 10\n");
    let o = run(&[
        "--config",
        &tiny,
        "theta",
        "siegel",
        "--lattice",
        "E8",
        "--genus",
        "2",
        "--bound",
        "3",
    ]);
    assert_eq!(code(&o), 3);
    assert!(o.stdout.is_empty());

    // a broken family fails verification
    let g1 = stdout(&run(&[
        "theta",
        "siegel",
        "--lattice",
        "E8",
        "--genus",
        "1",
        "--bound",
        "2",
    ]));
    let g2 = stdout(&run(&[
        "theta",
        "siegel",
        "--lattice",
        "D16plus",
        "--genus",
        "2",
        "--bound",
        "2",
    ]))
    .replace("\"weight\":8", "\"weight\":4");
    let a = write(dir.path(), "a.json", &g1);
    let b = write(dir.path(), "b.json", &g2);
    let o = run(&["verify", "stable", "--kind", "siegel", "--input", &a, "--input", &b]);
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("\"pass\":false"));
}

#[test]
fn config_from_env_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "default_bound = 1\nformat = \"table\"\n");
    let o = bin()
        .env("STABLE_THETA_CONFIG", &cfg)
        .args(["theta", "siegel", "--lattice", "E8", "--genus", "1"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.starts_with("# kind \"siegel\""), "{text}");
    assert!(text.contains("# bound 1"));
    assert!(!text.contains("[[4]]"));

    let o = bin()
        .env("STABLE_THETA_CONFIG", &cfg)
        .args([
            "--format",
            "json",
            "theta",
            "siegel",
            "--lattice",
            "E8",
            "--genus",
            "1",
            "--bound",
            "2",
        ])
        .output()
        .unwrap();
    assert_eq!(deserialize(&stdout(&o)).unwrap().bound(), 2);

    let unknown = write(dir.path(), "u.toml", "default_bound = 1\ncolour = \"red\"\n");
    assert_eq!(code(&run(&["--config", &unknown, "igusa", "--genus", "1"])), 2);
}

#[test]
fn catalog_extension_via_config() {
    let dir = tempfile::tempdir().unwrap();
    let cat = write(
        dir.path(),
        "cat.json",
        r#"[{"name": "E8copy", "gram": [[2,-1,0,0,0,0,0,0],[-1,2,-1,0,0,0,0,0],[0,-1,2,-1,0,0,0,-1],[0,0,-1,2,-1,0,0,0],[0,0,0,-1,2,-1,0,0],[0,0,0,0,-1,2,-1,0],[0,0,0,0,0,-1,2,0],[0,0,-1,0,0,0,0,2]]}]"#,
    );
    let cfg = write(dir.path(), "c.toml", &format!("catalog_path = {cat:?}\n"));
    let a = run(&[
        "--config",
        &cfg,
        "theta",
        "siegel",
        "--lattice",
        "E8copy",
        "--genus",
        "2",
        "--bound",
        "2",
    ]);
    let b = run(&["theta", "siegel", "--lattice", "E8", "--genus", "2", "--bound", "2"]);
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn stdin_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("phi.json");
    let doc = stdout(&run(&[
        "theta",
        "siegel",
        "--lattice",
        "D16plus",
        "--genus",
        "2",
        "--bound",
        "2",
    ]));
    let mut child = bin()
        .args(["--out", out.to_str().unwrap(), "op", "phi", "--input", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(doc.as_bytes()).unwrap();
    let o = child.wait_with_output().unwrap();
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    let lowered = std::fs::read_to_string(&out).unwrap();
    let direct = stdout(&run(&[
        "theta",
        "siegel",
        "--lattice",
        "D16plus",
        "--genus",
        "1",
        "--bound",
        "2",
    ]));
    assert_eq!(lowered, direct);
}

#[test]
fn psi_and_product_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(
        dir.path(),
        "f.json",
        &stdout(&run(&[
            "theta",
            "siegel",
            "--lattice",
            "E8",
            "--genus",
            "2",
            "--bound",
            "2",
        ])),
    );
    let j = write(
        dir.path(),
        "j.json",
        &stdout(&run(&[
            "theta",
            "jacobi",
            "--index-lattice",
            "E8",
            "--genus",
            "2",
            "--bound",
            "2",
        ])),
    );
    let p = run(&["product", "--input", &j, "--input", &f]);
    assert_eq!(code(&p), 0);
    let prod = deserialize(&stdout(&p)).unwrap();
    assert_eq!(prod.weight(), 8);
    let pj = write(dir.path(), "p.json", &stdout(&p));
    let lowered = run(&["op", "psi", "--input", &pj]);
    assert_eq!(code(&lowered), 0);
    assert_eq!(deserialize(&stdout(&lowered)).unwrap().genus(), 1);
    assert_eq!(code(&run(&["op", "phi", "--input", &pj])), 2);
}

#[test]
fn singular_and_schottky_commands() {
    let o = run(&[
        "verify",
        "singular",
        "--index-lattice",
        "E8",
        "--genus",
        "1",
        "--bound",
        "2",
    ]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("\"all_singular\":true"));
    let o = run(&[
        "schottky-jacobi",
        "--p",
        "E8+E8",
        "--q",
        "D16plus",
        "--index-lattice",
        "E8",
        "--genus",
        "2",
        "--bound",
        "2",
    ]);
    assert_eq!(code(&o), 0);
    let e = deserialize(&stdout(&o)).unwrap();
    assert!(e.is_zero());
    assert_eq!(e.weight(), 12);
    let o = run(&["igusa", "--genus", "2", "--bound", "2"]);
    assert!(deserialize(&stdout(&o)).unwrap().is_zero());
    let o = run(&["diff", "--p", "E8", "--q", "D16plus", "--genus", "1"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn table_reports() {
    let o = run(&[
        "--format",
        "table",
        "lattice",
        "info",
        "--lattice",
        "E8",
        "--bound",
        "4",
    ]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.lines().any(|l| l.starts_with("rank\t8")), "{text}");
}

#[test]
fn eval_and_inversion() {
    let dir = tempfile::tempdir().unwrap();
    let pt = write(dir.path(), "pt.json", r#"{"tau_re": [[0.3]], "tau_im": [[1.1]]}"#);
    let o = run(&["check", "inversion", "--lattice", "D16plus", "--input", &pt]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["residual"].as_f64().unwrap() < 1e-8);

    let direct = run(&["eval", "--lattice", "E8", "--bound", "8", "--input", &pt]);
    let th = write(
        dir.path(),
        "th.json",
        &stdout(&run(&[
            "theta",
            "siegel",
            "--lattice",
            "E8",
            "--genus",
            "1",
            "--bound",
            "8",
        ])),
    );
    let series = run(&["eval", "--input", &th, "--input", &pt]);
    let value = |o: &Output| {
        let v: serde_json::Value = serde_json::from_str(&stdout(o)).unwrap();
        num_complex::Complex64::new(v["value"][0].as_f64().unwrap(), v["value"][1].as_f64().unwrap())
    };
    assert!((value(&direct) - value(&series)).norm() < 1e-12);
    assert_eq!(code(&run(&["eval", "--input", &pt])), 2);
}
