use std::path::Path;
use std::process::{Command, Output};

use jnspace::io::{decode_grid, read_grid};

fn jnspace(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jnspace")).args(args).output().expect("binary runs")
}

fn field(out: &Output, key: &str) -> String {
    let text = String::from_utf8_lossy(&out.stdout);
    let prefix = format!("{key} = ");
    text.lines().find_map(|l| l.strip_prefix(&prefix)).unwrap_or_else(|| panic!("{key} missing in\n{text}")).to_string()
}

fn body(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).lines().filter(|l| !l.starts_with("wall_time")).collect::<Vec<_>>().join("\n")
}

fn gen_file(dir: &Path, name: &str, args: &[&str]) -> String {
    let path = dir.join(name).display().to_string();
    let mut full = vec!["gen", "--out", &path];
    full.extend_from_slice(args);
    assert!(jnspace(&full).status.success());
    path
}

#[test]
fn constant_jn_on_two_unit_cubes() {
    let dir = tempfile::tempdir().unwrap();
    let path = gen_file(dir.path(), "c.jngrid", &["--kind", "constant", "--amplitude", "-1.5", "--m", "1", "--depth", "3"]);
    for p in [2.0f64, 3.0, 7.5] {
        let out = jnspace(&["norm", &path, "--which", "jn", "--p", &p.to_string()]);
        assert!(out.status.success());
        let value: f64 = field(&out, "result.value").parse().unwrap();
        let expected = 2f64.powf(1.0 / p) * 1.5;
        assert!((value - expected).abs() <= 1e-12 * expected, "p={p}: {value} vs {expected}");
    }
    let out = jnspace(&["norm", &path, "--which", "JN"]);
    assert!(field(&out, "result.value").parse::<f64>().unwrap() <= 1e-12);
}

#[test]
fn lp_and_zero_grids() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen_file(dir.path(), "a.jngrid", &["--kind", "constant", "--amplitude", "2.5", "--depth", "3"]);
    let out = jnspace(&["norm", &a, "--which", "lp", "--p", "3"]);
    assert_eq!(field(&out, "result.value"), "2.5");
    let z = gen_file(dir.path(), "z.jngrid", &["--kind", "constant", "--amplitude", "0", "--depth", "3"]);
    for which in ["jn", "JN", "campanato", "lp", "weak"] {
        let out = jnspace(&["norm", &z, "--which", which]);
        assert!(out.status.success(), "{which}");
        assert_eq!(field(&out, "result.value"), "0.0", "{which}");
    }
}

#[test]
fn gen_is_deterministic_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    for bin in [false, true] {
        let mut args = vec!["gen", "--kind", "haar-sum", "--seed", "11", "--n", "2", "--depth", "3"];
        if bin {
            args.push("--bin");
        }
        let a = jnspace(&args);
        let b = jnspace(&args);
        assert!(a.status.success());
        assert_eq!(a.stdout, b.stdout);
        let f = decode_grid(&a.stdout).unwrap();
        let path = gen_file(dir.path(), "h.jngrid", &args[1..]);
        assert_eq!(read_grid(Path::new(&path)).unwrap(), f);
    }
    let spike = decode_grid(&jnspace(&["gen", "--kind", "spike", "--depth", "2"]).stdout).unwrap();
    assert_eq!(spike.values(), &[4.0, 0.0, 0.0, 0.0]);
}

#[test]
fn reports_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let path = gen_file(dir.path(), "r.jngrid", &["--kind", "random", "--seed", "5", "--depth", "4"]);
    let args = ["norm", path.as_str(), "--which", "jn", "--s", "1", "--q", "2"];
    assert_eq!(body(&jnspace(&args)), body(&jnspace(&args)));
}

#[test]
fn cz_dump_of_spike() {
    let dir = tempfile::tempdir().unwrap();
    let path = gen_file(dir.path(), "s.jngrid", &["--kind", "spike", "--depth", "2"]);
    let dump = dir.path().join("dump");
    let out = jnspace(&["decompose", &path, "--mode", "cz", "--ctilde", "3", "--gamma", "1", "--dump-dir", dump.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(field(&out, "result.levels"), "2");
    let records = std::fs::read_to_string(dump.join("cz.txt")).unwrap();
    let rows: Vec<_> = records.lines().skip(1).collect();
    assert_eq!(rows, ["0 0 0 3.0 12.0 0.0", "1 2 0 0.0 36.0 0.0"]);
    let a0 = read_grid(&dump.join("piece_0_0.jngrid")).unwrap();
    assert_eq!(a0.values(), &[3.0, -1.0, -1.0, -1.0]);

    let c = gen_file(dir.path(), "c.jngrid", &["--kind", "constant", "--amplitude", "2", "--depth", "2"]);
    let out = jnspace(&["decompose", &c, "--mode", "cz"]);
    assert_eq!(field(&out, "result.pieces"), "1");
}

#[test]
fn atomize_and_refine() {
    let dir = tempfile::tempdir().unwrap();
    let path = gen_file(dir.path(), "r.jngrid", &["--kind", "random", "--seed", "3", "--m", "1", "--depth", "4"]);
    let dump = dir.path().join("atoms");
    let out = jnspace(&["decompose", &path, "--mode", "atomize", "--c0", "0.5", "--dump-dir", dump.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(field(&out, "summary.status"), "pass");
    assert!(std::fs::read_to_string(dump.join("decomposition.txt")).unwrap().contains("sign-power"));

    let out = jnspace(&["decompose", &path, "--mode", "refine", "--v", "1.5", "--w", "2", "--c0", "0.5", "--level", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(field(&out, "result.passthrough"), "false");
    let out = jnspace(&["decompose", &path, "--mode", "refine", "--w", "inf"]);
    assert_eq!(field(&out, "result.passthrough"), "true");
}

#[test]
fn verify_exit_codes() {
    let out = jnspace(&["verify", "--suite", "oracle", "--trials", "5"]);
    assert!(out.status.success());
    assert_eq!(field(&out, "result.criterion.1.pass"), "true");
    assert_eq!(jnspace(&["verify", "--suite", "oracle", "--trials", "0"]).status.code(), Some(2));
    assert_eq!(jnspace(&["verify", "--suite", "nonsense"]).status.code(), Some(2));
}

#[test]
fn input_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.jngrid");
    std::fs::write(&bad, "jngrid v1 n=1 m=0 K=2 order=0\n1 2 3\n").unwrap();
    assert_eq!(jnspace(&["norm", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(jnspace(&["norm", "/no/such/file"]).status.code(), Some(2));
    let ok = gen_file(dir.path(), "ok.jngrid", &["--kind", "step", "--depth", "2"]);
    assert_eq!(jnspace(&["norm", &ok, "--p", "0.5"]).status.code(), Some(2));
    assert_eq!(jnspace(&["gen", "--kind", "bogus"]).status.code(), Some(2));
}
