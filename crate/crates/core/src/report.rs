//! Key/value reports, assertion records and dump formats.

use std::fmt::{self, Display, Write as _};

use crate::atoms::AtomicDecomposition;
use crate::cz::CzDecomposition;
use crate::grid::{CellCube, DomainSpec};
use crate::norms::Packing;

/// One checked inequality `lhs <= rhs` with its relative slack.
#[derive(Clone, Debug, PartialEq)]
pub struct Assertion {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `(rhs - lhs) / max(|lhs|, |rhs|)`, or `rhs - lhs` for absolute checks.
    pub slack: f64,
    pub tol: f64,
    pub pass: bool,
}

impl Assertion {
    /// `lhs <= rhs` up to a relative tolerance.
    pub fn le(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        let scale = lhs.abs().max(rhs.abs());
        let slack = if scale == 0.0 { 0.0 } else { (rhs - lhs) / scale };
        let pass = slack >= -tol && lhs.is_finite() && !rhs.is_nan();
        Self { name: name.into(), lhs, rhs, slack, tol, pass }
    }

    /// `lhs <= rhs` exactly, slack reported in absolute units.
    pub fn le_abs(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        let slack = rhs - lhs;
        Self { name: name.into(), lhs, rhs, slack, tol: 0.0, pass: slack >= 0.0 }
    }

    /// `|a - b| <= tol max(|a|, |b|)`, recorded as `lhs = |a - b| / scale`, `rhs = tol`.
    pub fn close(name: impl Into<String>, a: f64, b: f64, tol: f64) -> Self {
        let scale = a.abs().max(b.abs());
        let rel = if scale == 0.0 { 0.0 } else { (a - b).abs() / scale };
        Self { name: name.into(), lhs: rel, rhs: tol, slack: tol - rel, tol: 0.0, pass: rel <= tol }
    }

    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        let v = if ok { 0.0 } else { 1.0 };
        Self { name: name.into(), lhs: v, rhs: 0.0, slack: -v, tol: 0.0, pass: ok }
    }
}

/// Many trials of one assertion, keeping the worst instance.
#[derive(Clone, Debug, PartialEq)]
pub struct Tally {
    pub name: String,
    pub trials: usize,
    pub failures: usize,
    pub worst: Option<Assertion>,
}

impl Tally {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), trials: 0, failures: 0, worst: None }
    }

    pub fn add(&mut self, a: Assertion) -> bool {
        self.trials += 1;
        let pass = a.pass;
        if !pass {
            self.failures += 1;
        }
        let replace = match &self.worst {
            None => true,
            Some(w) => (w.pass && !pass) || (w.pass == pass && a.slack < w.slack),
        };
        if replace {
            self.worst = Some(a);
        }
        pass
    }

    pub fn pass(&self) -> bool {
        self.failures == 0 && self.trials > 0
    }
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    lines: Vec<(String, String)>,
    assertions: usize,
    failures: usize,
    wall_time: Option<f64>,
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

impl Report {
    pub fn new(command: &str) -> Self {
        let mut r = Self::default();
        r.put("command", command);
        r
    }

    pub fn put(&mut self, key: impl Into<String>, value: impl Display) {
        self.lines.push((key.into(), value.to_string()));
    }

    pub fn config(&mut self, key: &str, value: impl Display) {
        self.put(format!("config.{key}"), value);
    }

    pub fn config_f64(&mut self, key: &str, value: f64) {
        self.put(format!("config.{key}"), fmt_f64(value));
    }

    pub fn result(&mut self, key: &str, value: f64) {
        self.put(format!("result.{key}"), fmt_f64(value));
    }

    pub fn result_text(&mut self, key: &str, value: impl Display) {
        self.put(format!("result.{key}"), value);
    }

    pub fn certificate(&mut self, key: &str, value: impl Display) {
        self.put(format!("certificate.{key}"), value);
    }

    pub fn assert(&mut self, a: &Assertion) -> bool {
        let base = format!("assert.{}", a.name);
        self.put(format!("{base}.lhs"), fmt_f64(a.lhs));
        self.put(format!("{base}.rhs"), fmt_f64(a.rhs));
        self.put(format!("{base}.slack"), fmt_f64(a.slack));
        self.put(format!("{base}.pass"), a.pass);
        self.assertions += 1;
        if !a.pass {
            self.failures += 1;
        }
        a.pass
    }

    /// Worst instance of a tally plus its trial and failure counts.
    pub fn tally(&mut self, t: &Tally) -> bool {
        let base = format!("assert.{}", t.name);
        self.put(format!("{base}.trials"), t.trials);
        self.put(format!("{base}.failures"), t.failures);
        if let Some(w) = &t.worst {
            self.put(format!("{base}.lhs"), fmt_f64(w.lhs));
            self.put(format!("{base}.rhs"), fmt_f64(w.rhs));
            self.put(format!("{base}.slack"), fmt_f64(w.slack));
        }
        self.put(format!("{base}.pass"), t.pass());
        self.assertions += 1;
        if !t.pass() {
            self.failures += 1;
        }
        t.pass()
    }

    pub fn failures(&self) -> usize {
        self.failures
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    pub fn set_wall_time(&mut self, seconds: f64) {
        self.wall_time = Some(seconds);
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.lines.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Everything except the wall time; identical inputs give identical bodies.
    pub fn body(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.lines {
            let _ = writeln!(out, "{k} = {v}");
        }
        let _ = writeln!(out, "summary.assertions = {}", self.assertions);
        let _ = writeln!(out, "summary.failures = {}", self.failures);
        let _ = writeln!(out, "summary.status = {}", if self.passed() { "pass" } else { "fail" });
        out
    }
}

impl Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.body())?;
        if let Some(t) = self.wall_time {
            writeln!(f, "wall_time = {t:.6}")?;
        }
        Ok(())
    }
}

/// `L<k>[i,j]` for dyadic cubes, `@[i,j]+side` in cell units otherwise.
pub fn cube_label(domain: &DomainSpec, cube: &CellCube) -> String {
    match domain.dyadic_cube(cube) {
        Some(c) => c.to_string(),
        None => {
            let idx: Vec<String> = cube.origin().iter().map(u32::to_string).collect();
            format!("@[{}]+{}", idx.join(","), cube.side())
        }
    }
}

fn level_index(domain: &DomainSpec, cube: &CellCube) -> (String, String) {
    match domain.dyadic_cube(cube) {
        Some(c) => {
            let idx: Vec<String> = c.index().iter().map(u32::to_string).collect();
            (c.level().to_string(), idx.join(","))
        }
        None => ("-".into(), cube_label(domain, cube)),
    }
}

pub fn packing_certificate(domain: &DomainSpec, packing: &Packing) -> String {
    let labels: Vec<String> = packing.cubes.iter().map(|c| cube_label(domain, c)).collect();
    labels.join(" ")
}

/// One record per atom: `polymer lambda level index kind ref`.
///
/// `reference` names a dumped atom grid; when it returns `None` the kind tag stands in.
pub fn decomposition_records(
    domain: &DomainSpec,
    d: &AtomicDecomposition,
    reference: impl Fn(usize, usize) -> Option<String>,
) -> String {
    let mut out = String::from("# polymer lambda level index kind ref\n");
    for (i, g) in d.polymers.iter().enumerate() {
        for (j, (lambda, atom)) in g.terms.iter().enumerate() {
            let (level, index) = level_index(domain, &atom.cube);
            let r = reference(i, j).unwrap_or_else(|| atom.kind.tag().to_string());
            let _ = writeln!(out, "{i} {} {level} {index} {} {r}", fmt_f64(*lambda), atom.kind.tag());
        }
    }
    out
}

/// One record per piece: `k level index sup_norm sup_bound moment_residual`.
pub fn cz_records(domain: &DomainSpec, d: &CzDecomposition) -> String {
    let mut out = String::from("# k level index sup_norm sup_bound moment_residual\n");
    for piece in d.pieces() {
        let (level, index) = level_index(domain, piece.cube());
        let _ = writeln!(
            out,
            "{} {level} {index} {} {} {}",
            piece.k,
            fmt_f64(piece.sup_norm),
            fmt_f64(piece.sup_bound),
            fmt_f64(piece.moment_residual)
        );
    }
    out
}
