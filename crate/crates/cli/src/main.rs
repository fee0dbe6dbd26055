//! `jnspace` command-line front end.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use jnspace::atoms::{dual_optimizer, hk_upper_bound, pair, refine_atoms, tiling_polymer, AtomParams, AtomicDecomposition};
use jnspace::cz::{cz_decompose, CzConfig};
use jnspace::gen::{generate, GenKind};
use jnspace::io::{encode_grid, read_grid, write_grid};
use jnspace::norms::{
    big_jn_norm_dyadic, campanato_norm_dyadic, jn_norm_dyadic, lebesgue_norm, residual_lebesgue_norm, weak_quasi_norm,
};
use jnspace::report::{cube_label, cz_records, decomposition_records, packing_certificate};
use jnspace::{run_suite, Assertion, DomainSpec, GridFunction, NormParams, Report, Suite};

#[derive(Parser)]
#[command(name = "jnspace", version, about = "Dyadic jn / JN / Campanato norms, CZ and atomic decompositions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a norm of a grid file.
    Norm {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "jn")]
        which: Which,
        #[command(flatten)]
        opts: Opts,
    },
    /// Calderon-Zygmund pieces, dual atoms, or atom refinement of a grid file.
    Decompose {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "cz")]
        mode: Mode,
        #[arg(long)]
        dump_dir: Option<PathBuf>,
        /// Tiling level of the input polymer for `refine`.
        #[arg(long, default_value_t = 1)]
        level: u32,
        #[command(flatten)]
        opts: Opts,
    },
    /// Run a randomized verification suite.
    Verify {
        #[arg(long)]
        suite: Suite,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        trials: Option<usize>,
        #[command(flatten)]
        opts: Opts,
    },
    /// Write a test function as a grid file.
    Gen {
        #[arg(long)]
        kind: GenKind,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        amplitude: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Binary body instead of decimal text.
        #[arg(long)]
        bin: bool,
        #[command(flatten)]
        opts: Opts,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    #[value(name = "jn")]
    Jn,
    #[value(name = "JN")]
    BigJn,
    Campanato,
    Lp,
    Weak,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Cz,
    Atomize,
    Refine,
}

#[derive(Args)]
struct Opts {
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, default_value_t = 1.0)]
    q: f64,
    #[arg(long, default_value_t = 0)]
    s: usize,
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    c0: f64,
    #[arg(long, default_value_t = 2.0)]
    v: f64,
    /// Atom size exponent; `inf` is accepted.
    #[arg(long, default_value_t = 2.0)]
    w: f64,
    /// Defaults to `2^(n+1)`.
    #[arg(long)]
    ctilde: Option<f64>,
    /// Defaults to the mean of `|f|` over the domain.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value_t = 4)]
    depth: u32,
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    m: i32,
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Opts {
    fn norm_params(&self) -> jnspace::Result<NormParams> {
        NormParams::new(self.p, self.q, self.s, self.alpha, self.c0)
    }

    fn atom_params(&self) -> jnspace::Result<AtomParams> {
        AtomParams::new(self.v, self.w, self.s, self.alpha, self.c0)
    }

    fn ctilde(&self, dim: usize) -> f64 {
        self.ctilde.unwrap_or(((dim + 1) as f64).exp2())
    }

    fn echo(&self, r: &mut Report) {
        for (k, v) in [("p", self.p), ("q", self.q), ("alpha", self.alpha), ("c0", self.c0)] {
            r.config_f64(k, v);
        }
        r.config("s", self.s);
    }
}

fn echo_domain(r: &mut Report, d: &DomainSpec) {
    r.config("n", d.dim());
    r.config("m", d.side_exponent());
    r.config("depth", d.depth());
}

fn cmd_norm(input: &Path, which: Which, o: &Opts) -> jnspace::Result<Report> {
    let f = read_grid(input)?;
    let d = *f.domain();
    let mut r = Report::new("norm");
    r.config("input", input.display());
    echo_domain(&mut r, &d);
    o.echo(&mut r);
    let params = o.norm_params()?;
    let f = f.with_moment_order(o.s);
    match which {
        Which::Jn | Which::BigJn => {
            let (name, res) = match which {
                Which::Jn => ("jn", jn_norm_dyadic(&f, &params)?),
                _ => ("JN", big_jn_norm_dyadic(&f, &params)?),
            };
            r.config("which", name);
            r.result("value", res.value);
            r.result("log_total", res.log_total);
            r.result_text("packing.size", res.packing.len());
            r.certificate("packing", packing_certificate(&d, &res.packing));
            r.assert(&Assertion::holds("packing_disjoint", res.packing.is_disjoint()));
            r.assert(&Assertion::close("packing_value", res.packing.value(), res.value, 1e-12));
        }
        Which::Campanato => {
            r.config("which", "campanato");
            let (value, cube) = campanato_norm_dyadic(&f, &params)?;
            r.result("value", value);
            r.certificate("cube", cube_label(&d, &d.cell_cube(&cube)));
        }
        Which::Lp => {
            r.config("which", "lp");
            r.result("value", lebesgue_norm(&f, o.p)?);
        }
        Which::Weak => {
            r.config("which", "weak");
            let root = d.root();
            let weak = weak_quasi_norm(&f, &root, o.s, o.p)?;
            let strong = residual_lebesgue_norm(&f, &root, o.s, o.p)?;
            r.result("value", weak);
            r.result("residual_lp", strong);
            r.assert(&Assertion::le("chebyshev", weak, strong, 1e-12));
        }
    }
    Ok(r)
}

fn dump(dir: Option<&Path>, name: &str, bytes: &[u8]) -> jnspace::Result<()> {
    if let Some(dir) = dir {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(name), bytes)?;
    }
    Ok(())
}

fn dump_decomposition(dir: Option<&Path>, d: &DomainSpec, dec: &AtomicDecomposition) -> jnspace::Result<()> {
    let Some(dir) = dir else { return Ok(()) };
    fs::create_dir_all(dir)?;
    let mut names = Vec::new();
    for (i, g) in dec.polymers.iter().enumerate() {
        for (j, (_, atom)) in g.terms.iter().enumerate() {
            let name = format!("atom_{i}_{j}.jngrid");
            write_grid(&dir.join(&name), &atom.field.to_grid(d)?, false)?;
            names.push(((i, j), name));
        }
    }
    let lookup = |i: usize, j: usize| names.iter().find(|(k, _)| *k == (i, j)).map(|(_, n)| n.clone());
    dump(Some(dir), "decomposition.txt", decomposition_records(d, dec, lookup).as_bytes())
}

fn cmd_decompose(input: &Path, mode: Mode, level: u32, dump_dir: Option<&Path>, o: &Opts) -> jnspace::Result<Report> {
    let f = read_grid(input)?.with_moment_order(o.s);
    let d = *f.domain();
    let mut r = Report::new("decompose");
    r.config("input", input.display());
    echo_domain(&mut r, &d);
    o.echo(&mut r);
    let ratio = o.ctilde(d.dim());
    match mode {
        Mode::Cz => {
            r.config("mode", "cz");
            let gamma = o.gamma.unwrap_or_else(|| f.values().iter().map(|v| v.abs()).sum::<f64>() / d.cell_count() as f64);
            r.config_f64("ctilde", ratio);
            r.config_f64("gamma", gamma);
            let cz = cz_decompose(&f, &d.root(), &CzConfig::new(o.s, ratio, gamma))?;
            r.result_text("levels", cz.levels.len());
            r.result_text("pieces", cz.piece_count());
            r.result("sharp_constant", cz.sharp_constant);
            for (k, mu) in cz.thresholds.iter().enumerate() {
                r.result(&format!("threshold.{}", k + 1), *mu);
            }
            let diag = &cz.diagnostics;
            let scale = f.max_abs().max(f64::MIN_POSITIVE);
            r.assert(&Assertion::le_abs("reconstruction", diag.reconstruction_residual, 1e-9 * scale));
            r.assert(&Assertion::le_abs("moments", diag.max_moment_residual, 1e-9));
            r.assert(&Assertion::le("sup_bound", diag.max_sup_ratio, 1.0, 1e-12));
            r.assert(&Assertion::holds("level_sets_exact", diag.level_sets_exact));
            dump(dump_dir, "cz.txt", cz_records(&d, &cz).as_bytes())?;
            if let Some(dir) = dump_dir {
                for (k, level) in cz.levels.iter().enumerate() {
                    for (j, piece) in level.iter().enumerate() {
                        write_grid(&dir.join(format!("piece_{k}_{j}.jngrid")), &piece.field.to_grid(&d)?, false)?;
                    }
                }
            }
        }
        Mode::Atomize => {
            r.config("mode", "atomize");
            let params = o.atom_params()?;
            r.config_f64("v", params.v);
            r.config_f64("w", params.w);
            let jn = jn_norm_dyadic(&f, &params.dual_norm_params()?)?;
            let res = dual_optimizer(&f, &jn.packing, &params)?;
            r.result("dual_norm", jn.value);
            r.result("pairing", res.pairing);
            r.result("budget", res.budget);
            r.result("ratio", res.ratio);
            r.result_text("atoms", res.decomposition.atoms().count());
            r.certificate("packing", packing_certificate(&d, &jn.packing));
            let valid = res.decomposition.validate(&d).iter().all(|v| v.valid);
            r.assert(&Assertion::holds("atoms_valid", valid));
            r.assert(&Assertion::le("ratio_lower", res.lower_threshold, res.ratio, 1e-12));
            r.assert(&Assertion::le("ratio_upper", res.ratio, jn.value, 1e-12));
            dump_decomposition(dump_dir, &d, &res.decomposition)?;
        }
        Mode::Refine => {
            r.config("mode", "refine");
            let params = o.atom_params()?;
            r.config_f64("v", params.v);
            r.config_f64("w", params.w);
            r.config_f64("ctilde", ratio);
            r.config("level", level);
            let g = tiling_polymer(&f, &params, level)?;
            let res = refine_atoms(&d, &g, &params, ratio)?;
            for (i, note) in res.notices.iter().enumerate() {
                r.result_text(&format!("notice.{i}"), note);
            }
            r.result_text("passthrough", res.passthrough);
            r.result("input_budget", res.input_budget);
            r.result("output_budget", res.output_budget);
            r.result("hk_upper_bound", hk_upper_bound(&res.decomposition));
            for (k, b) in res.level_budgets.iter().enumerate() {
                r.result(&format!("level_budget.{k}"), *b);
            }
            let valid = res.decomposition.validate(&d).iter().all(|v| v.valid);
            r.assert(&Assertion::holds("atoms_valid", valid));
            r.assert(&Assertion::holds("budget_finite", res.output_budget.is_finite()));
            let input = AtomicDecomposition::new(vec![g], params);
            for (name, t) in [("f", f.clone()), ("one", GridFunction::constant(d, 1.0))] {
                let (a, b) = (pair(&input, &t, false)?, pair(&res.decomposition, &t, false)?);
                r.assert(&Assertion::close(format!("pairing_preserved.{name}"), b, a, 1e-8));
            }
            dump_decomposition(dump_dir, &d, &res.decomposition)?;
        }
    }
    Ok(r)
}

fn cmd_verify(suite: Suite, seed: u64, trials: Option<usize>) -> jnspace::Result<Report> {
    let out = run_suite(suite, seed, trials)?;
    let mut r = Report::new("verify");
    if let Some(t) = trials {
        r.config("trials", t);
    }
    out.write(&mut r);
    Ok(r)
}

fn cmd_gen(kind: GenKind, amplitude: f64, seed: u64, bin: bool, o: &Opts) -> jnspace::Result<(Report, Vec<u8>)> {
    let d = DomainSpec::new(o.n, o.m, o.depth)?;
    let f = generate(d, kind, amplitude, seed)?;
    let mut r = Report::new("gen");
    r.config("kind", kind);
    r.config_f64("amplitude", amplitude);
    r.config("seed", seed);
    echo_domain(&mut r, &d);
    r.result("mean", f.mean());
    r.result("max_abs", f.max_abs());
    Ok((r, encode_grid(&f, bin)))
}

fn emit(out: Option<&Path>, text: &[u8]) -> jnspace::Result<()> {
    match out {
        Some(p) => Ok(fs::write(p, text)?),
        None => {
            use std::io::Write;
            Ok(std::io::stdout().write_all(text)?)
        }
    }
}

fn run(cli: Cli) -> jnspace::Result<bool> {
    let start = Instant::now();
    let finish = |mut r: Report, out: Option<&Path>| -> jnspace::Result<bool> {
        r.set_wall_time(start.elapsed().as_secs_f64());
        emit(out, r.to_string().as_bytes())?;
        Ok(r.passed())
    };
    match cli.command {
        Command::Norm { input, which, opts } => finish(cmd_norm(&input, which, &opts)?, opts.out.as_deref()),
        Command::Decompose { input, mode, dump_dir, level, opts } => {
            finish(cmd_decompose(&input, mode, level, dump_dir.as_deref(), &opts)?, opts.out.as_deref())
        }
        Command::Verify { suite, seed, trials, opts } => finish(cmd_verify(suite, seed, trials)?, opts.out.as_deref()),
        Command::Gen { kind, amplitude, seed, bin, opts } => {
            let (report, grid) = cmd_gen(kind, amplitude, seed, bin, &opts)?;
            match opts.out.as_deref() {
                Some(p) => {
                    fs::write(p, grid)?;
                    eprint!("{}", report.body());
                }
                None => emit(None, &grid)?,
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
