//! Seeded verification suites, one per acceptance area.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::atoms::{
    dual_optimizer, hk_lower_bound, hk_upper_bound, pair, refine_atoms, validate_atom, AtomKind, AtomParams,
    AtomicDecomposition, LocalAtom, Polymer,
};
use crate::cz::{cz_decompose, dyadic_maximal, stopping_cubes, tail_bound_check, CzConfig};
use crate::error::{Error, Result};
use crate::experiments::{equivalence_experiments, norm_limit_sweep, Equivalence};
use crate::gen::random_function;
use crate::grid::{CellCube, CubeField, DomainSpec, DyadicCube, GridFunction, MultiIndex};
use crate::norms::{
    big_jn_norm_dyadic, campanato_norm_dyadic, jn_norm_dyadic, lebesgue_norm, oscillation, packing_oracle,
    residual_lebesgue_norm, weak_quasi_norm, NormParams, Variant,
};
use crate::poly::{project, sharp_constant, CellModel};
use crate::report::{Assertion, Report, Tally};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Oracle,
    Projections,
    Cz,
    Duality,
    Limits,
    Lebesgue,
}

impl Suite {
    pub const ALL: [Suite; 6] =
        [Suite::Oracle, Suite::Projections, Suite::Cz, Suite::Duality, Suite::Limits, Suite::Lebesgue];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Oracle => "oracle",
            Suite::Projections => "projections",
            Suite::Cz => "cz",
            Suite::Duality => "duality",
            Suite::Limits => "limits",
            Suite::Lebesgue => "lebesgue",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown suite '{s}'")))
    }
}

/// One acceptance criterion and the tallies that decide it.
#[derive(Clone, Debug)]
pub struct Criterion {
    pub id: u8,
    pub title: &'static str,
    pub tallies: Vec<Tally>,
}

impl Criterion {
    pub fn pass(&self) -> bool {
        !self.tallies.is_empty() && self.tallies.iter().all(Tally::pass)
    }

    /// `trials` and `failures` summed over the tallies.
    pub fn counts(&self) -> (usize, usize) {
        self.tallies.iter().fold((0, 0), |(t, f), x| (t + x.trials, f + x.failures))
    }

    /// Smallest slack among the worst instances.
    pub fn worst_slack(&self) -> f64 {
        self.tallies.iter().filter_map(|t| t.worst.as_ref()).map(|a| a.slack).fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Debug)]
pub struct SuiteOutcome {
    pub suite: Suite,
    pub seed: u64,
    pub criteria: Vec<Criterion>,
    /// Property checks that are not acceptance criteria.
    pub extra: Vec<Tally>,
    /// Tracked quantities that are reported, not asserted.
    pub reported: Vec<(String, f64)>,
}

impl SuiteOutcome {
    pub fn pass(&self) -> bool {
        self.criteria.iter().all(Criterion::pass) && self.extra.iter().all(Tally::pass)
    }

    pub fn write(&self, report: &mut Report) {
        report.config("suite", self.suite);
        report.config("seed", self.seed);
        for c in &self.criteria {
            let (t, f) = c.counts();
            report.result_text(&format!("criterion.{}.title", c.id), c.title);
            report.result_text(&format!("criterion.{}.trials", c.id), t);
            report.result_text(&format!("criterion.{}.failures", c.id), f);
            report.result_text(&format!("criterion.{}.pass", c.id), c.pass());
            for tally in &c.tallies {
                report.tally(tally);
            }
        }
        for tally in &self.extra {
            report.tally(tally);
        }
        for (k, v) in &self.reported {
            report.result(&format!("reported.{k}"), *v);
        }
    }
}

pub fn run_suite(suite: Suite, seed: u64, trials: Option<usize>) -> Result<SuiteOutcome> {
    if trials == Some(0) {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    let count = |default: usize| trials.unwrap_or(default);
    let mut out = SuiteOutcome { suite, seed, criteria: Vec::new(), extra: Vec::new(), reported: Vec::new() };
    match suite {
        Suite::Oracle => {
            out.criteria.push(criterion_oracle(seed, count(200), count(50))?);
        }
        Suite::Projections => {
            out.extra = projection_properties(seed, count(100))?;
        }
        Suite::Cz => {
            let (c4, extra, reported) = criterion_cz(seed, count(100))?;
            out.criteria.push(c4);
            out.criteria.push(criterion_tail(seed, count(500))?);
            out.extra = extra;
            out.reported = reported;
        }
        Suite::Duality => {
            let (c6, extra) = criterion_duality_inequality(seed, count(1000), count(200))?;
            out.criteria.push(c6);
            out.criteria.push(criterion_dual_optimizer(seed, count(100))?);
            out.criteria.push(criterion_refinement(seed, count(50))?);
            out.extra = extra;
        }
        Suite::Limits => {
            out.criteria.push(criterion_constant_separation()?);
            let (c3, extra) = criterion_limit(seed, count(20))?;
            out.criteria.push(c3);
            out.extra = extra;
        }
        Suite::Lebesgue => {
            let (c8, extra) = criterion_lebesgue(seed, count(100))?;
            out.criteria.push(c8);
            let (c10, reported) = criterion_weak(seed, count(200))?;
            out.criteria.push(c10);
            out.extra = extra;
            out.reported = reported;
        }
    }
    Ok(out)
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn random_domain(rng: &mut ChaCha8Rng, n: usize, depth: (u32, u32), m: (i32, i32)) -> DomainSpec {
    let k = rng.gen_range(depth.0..=depth.1);
    let m = rng.gen_range(m.0..=m.1);
    DomainSpec::new(n, m, k).expect("suite domains are valid")
}

/// A `c0` in `[2^j, 2^(j+1))` with `2^j` between twice the cell side and the domain side.
fn random_c0(rng: &mut ChaCha8Rng, domain: &DomainSpec) -> f64 {
    let hi = domain.side_exponent();
    let lo = (domain.cell_log2_side() + 1).min(hi);
    let j = rng.gen_range(lo..=hi);
    (j as f64).exp2() * rng.gen_range(1.0..1.9)
}

fn random_alpha(rng: &mut ChaCha8Rng, max: f64) -> f64 {
    if rng.gen_bool(0.5) {
        0.0
    } else {
        rng.gen_range(0.0..max)
    }
}

fn random_norm_params(rng: &mut ChaCha8Rng, domain: &DomainSpec) -> NormParams {
    let p = rng.gen_range(1.1..5.0);
    let q = if rng.gen_bool(0.3) { 1.0 } else { rng.gen_range(1.0..4.0) };
    let s = rng.gen_range(0..=2);
    let alpha = random_alpha(rng, 0.4);
    NormParams::new(p, q, s, alpha, random_c0(rng, domain)).expect("valid parameters")
}

fn criterion_oracle(seed: u64, trials_1d: usize, trials_2d: usize) -> Result<Criterion> {
    let mut rng = rng_for(seed, 1);
    let mut t1 = Tally::new("c1_dp_equals_oracle_1d");
    let mut t2 = Tally::new("c1_dp_equals_oracle_2d");
    for (n, trials, tally) in [(1usize, trials_1d, &mut t1), (2, trials_2d, &mut t2)] {
        let max_depth = if n == 1 { 4 } else { 2 };
        for _ in 0..trials {
            let domain = random_domain(&mut rng, n, (1, max_depth), (-1, 2));
            let f = random_function(domain, &mut rng);
            let params = random_norm_params(&mut rng, &domain);
            for variant in [Variant::Localized, Variant::Plain] {
                let pv = params.with_variant(variant);
                let dp = if variant == Variant::Localized {
                    jn_norm_dyadic(&f, &pv)?.value
                } else {
                    big_jn_norm_dyadic(&f, &pv)?.value
                };
                let oracle = packing_oracle(&f, &pv)?;
                tally.add(Assertion::close(&tally.name, dp, oracle, 1e-12));
            }
        }
    }
    Ok(Criterion { id: 1, title: "oracle equivalence", tallies: vec![t1, t2] })
}

fn criterion_constant_separation() -> Result<Criterion> {
    let mut big = Tally::new("c2_big_jn_vanishes");
    let mut exact = Tally::new("c2_jn_equals_3_2_pow_m_half");
    let mut cert = Tally::new("c2_uniform_tiling_certificate");
    let params = NormParams::new(2.0, 1.0, 0, 0.0, 1.0)?;
    for m in 0..=6 {
        let domain = DomainSpec::new(1, m, (m + 2) as u32)?;
        let f = GridFunction::constant(domain, 3.0);
        big.add(Assertion::le_abs(&big.name, big_jn_norm_dyadic(&f, &params)?.value, 1e-12));
        let jn = jn_norm_dyadic(&f, &params)?;
        let expected = 3.0 * (m as f64 / 2.0).exp2();
        exact.add(Assertion::close(&exact.name, jn.value, expected, 1e-12));
        let mut total = 0.0;
        for cube in domain.cubes_at_level(m as u32) {
            total += cube.measure() * oscillation(&f, &cube, &params)?.powf(params.p);
        }
        let tiling = total.powf(1.0 / params.p);
        cert.add(Assertion::close(&cert.name, tiling, jn.value, 1e-12));
        cert.add(Assertion::close(&cert.name, jn.packing.value(), jn.value, 1e-12));
    }
    Ok(Criterion { id: 2, title: "constant-function separation", tallies: vec![big, exact, cert] })
}

const P_SWEEP: [f64; 9] = [2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0, 512.0];

fn criterion_limit(seed: u64, trials: usize) -> Result<(Criterion, Vec<Tally>)> {
    let mut rng = rng_for(seed, 3);
    let mut gap = Tally::new("c3_terminal_gap");
    let mut single = Tally::new("c3_single_cube_lower_bound");
    let mut dominance = Tally::new("campanato_dominance");
    for i in 0..trials {
        let n = 1 + i % 2;
        let depth = if n == 1 { 6 } else { 3 };
        let domain = DomainSpec::new(n, 0, depth)?;
        let f = random_function(domain, &mut rng);
        let q = if rng.gen_bool(0.5) { 1.0 } else { 2.0 };
        let c0 = [1.0, 0.5, 0.25][rng.gen_range(0..3)];
        let params = NormParams::new(2.0, q, rng.gen_range(0..=2), random_alpha(&mut rng, 0.2), c0)?;
        let sweep = norm_limit_sweep(&f, &params, &P_SWEEP)?;
        gap.add(Assertion::le(&gap.name, sweep.terminal_gap, 0.02, 0.0));
        for row in &sweep.rows {
            single.add(Assertion::le(&single.name, row.single_cube, row.value, 1e-12));
            dominance.add(Assertion::le(&dominance.name, row.value, row.measure_bound, 1e-12));
        }
    }
    Ok((Criterion { id: 3, title: "p to infinity limit", tallies: vec![gap, single] }, vec![dominance]))
}

type CzOutcome = (Criterion, Vec<Tally>, Vec<(String, f64)>);

fn criterion_cz(seed: u64, trials: usize) -> Result<CzOutcome> {
    let mut rng = rng_for(seed, 4);
    let mut built = Tally::new("c4_decomposition_built");
    let mut recon = Tally::new("c4_reconstruction");
    let mut moments = Tally::new("c4_moments");
    let mut sup = Tally::new("c4_sup_bound");
    let mut level_sets = Tally::new("c4_level_sets_exact");
    let mut constants = Tally::new("c4_sharp_constants");
    let mut disjoint = Tally::new("cz_piece_disjointness");
    constants.add(Assertion::close(&constants.name, sharp_constant(0, 1), 1.0, 0.0));
    constants.add(Assertion::close(&constants.name, sharp_constant(0, 2), 1.0, 0.0));
    constants.add(Assertion::close(&constants.name, sharp_constant(1, 1), 4.0, 1e-12));
    let mut max_ratio = 0.0f64;
    let mut max_levels = 0usize;
    for i in 0..trials {
        let n = 1 + i % 2;
        let domain = if n == 1 {
            random_domain(&mut rng, 1, (4, 7), (-1, 1))
        } else {
            random_domain(&mut rng, 2, (2, 4), (-1, 1))
        };
        let mut f = random_function(domain, &mut rng);
        if rng.gen_bool(0.4) {
            let mut v = f.clone().into_values();
            let hot = rng.gen_range(0..v.len());
            v[hot] += 40.0 * rng.gen_range(-1.0..1.0);
            f = GridFunction::new(domain, v)?;
        }
        let s = rng.gen_range(0..=2);
        let level = if rng.gen_bool(0.7) { 0 } else { 1 };
        let cube = domain.cubes_at_level(level).nth(rng.gen_range(0..1usize << (n * level as usize))).expect("cube");
        let cells = domain.cell_cube(&cube);
        let local = f.cells_of(&cells);
        let mean = local.iter().map(|v| v.abs()).sum::<f64>() / local.len() as f64;
        let ratio = if rng.gen_bool(0.5) { (n as f64).exp2() + 1.0 } else { ((n + 1) as f64).exp2() };
        let gamma = if rng.gen_bool(0.5) { mean } else { 2.0 * mean };
        let config = CzConfig::new(s, ratio, gamma);
        let d = match cz_decompose(&f, &cube, &config) {
            Ok(d) => {
                built.add(Assertion::holds(&built.name, true));
                d
            }
            Err(e) => {
                built.add(Assertion::holds(format!("{}: {e}", built.name), false));
                continue;
            }
        };
        let model = CellModel::new(domain, s);
        let fmax = local.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let residual = model.residual_local(&cells, &local);
        let rec = d.reconstruct(&domain);
        let err = rec.values().iter().zip(&residual).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        recon.add(Assertion::le_abs(&recon.name, err, 1e-9 * fmax));
        let cs = sharp_constant(s, n);
        for piece in d.pieces() {
            let mom = model.max_moment(piece.cube(), piece.field.values());
            moments.add(Assertion::le_abs(&moments.name, mom, 1e-9 * fmax));
            let bound = ((n + 1) as f64).exp2() * cs * ratio.powi(piece.k as i32 + 1) * gamma;
            sup.add(Assertion::le(&sup.name, piece.field.max_abs(), bound, 1e-12));
            if bound > 0.0 {
                max_ratio = max_ratio.max(piece.field.max_abs() / bound);
            }
        }
        for level in &d.levels {
            let ok = level.iter().enumerate().all(|(j, a)| level[j + 1..].iter().all(|b| !a.cube().intersects(b.cube())));
            disjoint.add(Assertion::holds(&disjoint.name, ok));
        }
        max_levels = max_levels.max(d.levels.len());
        let maximal = dyadic_maximal(&f, &cube)?;
        let cell_idx = domain.cell_indices(&cells);
        for k in 1..=d.levels.len() as u32 {
            let t = ratio.powi(k as i32) * gamma;
            let stops = stopping_cubes(&f, &cube, &config, k)?;
            let mut mask = vec![false; domain.cell_count()];
            for c in &stops {
                for g in domain.cell_indices(&domain.cell_cube(c)) {
                    mask[g] = true;
                }
            }
            let ok = cell_idx.iter().all(|&g| mask[g] == (maximal.values()[g] > t));
            let count = mask.iter().filter(|&&m| m).count();
            let listed: usize = d.levels.get(k as usize).map_or(0, |l| l.iter().map(|p| p.cube().cell_count()).sum());
            level_sets.add(Assertion::holds(&level_sets.name, ok && count == listed));
        }
    }
    let c = Criterion { id: 4, title: "CZ conclusions", tallies: vec![built, recon, moments, sup, level_sets, constants] };
    Ok((c, vec![disjoint], vec![("cz_max_sup_ratio".into(), max_ratio), ("cz_max_levels".into(), max_levels as f64)]))
}

fn criterion_tail(seed: u64, trials: usize) -> Result<Criterion> {
    let mut rng = rng_for(seed, 5);
    let mut tally = Tally::new("c5_tail_bound");
    for i in 0..trials {
        let n = 1 + i % 2;
        let domain = if n == 1 {
            random_domain(&mut rng, 1, (2, 7), (-2, 2))
        } else {
            random_domain(&mut rng, 2, (1, 4), (-2, 2))
        };
        let f = random_function(domain, &mut rng);
        let w = rng.gen_range(1.0..6.0);
        let ratio = rng.gen_range(1.05..6.0);
        let gamma = f.values().iter().map(|v| v.abs()).sum::<f64>() / f.values().len() as f64 * rng.gen_range(0.05..2.0);
        let tb = tail_bound_check(&f, &domain.root(), ratio, w, gamma.max(1e-6))?;
        tally.add(Assertion::le(&tally.name, tb.lhs, tb.rhs, 1e-12));
    }
    Ok(Criterion { id: 5, title: "tail bound", tallies: vec![tally] })
}

fn random_atom_params(rng: &mut ChaCha8Rng, domain: &DomainSpec, v: f64, w: f64) -> AtomParams {
    let s = rng.gen_range(0..=2);
    let alpha = random_alpha(rng, 0.3);
    AtomParams::new(v, w, s, alpha, random_c0(rng, domain)).expect("valid atom parameters")
}

/// Disjoint dyadic cubes picked by a random descent from the root.
fn random_packing(rng: &mut ChaCha8Rng, domain: &DomainSpec, max: usize) -> Vec<DyadicCube> {
    let mut out = Vec::new();
    let mut stack = vec![domain.root()];
    while let Some(c) = stack.pop() {
        if out.len() >= max {
            break;
        }
        let leaf = c.level() == domain.depth();
        let u: f64 = rng.gen();
        if u < 0.3 || (leaf && u < 0.7) {
            out.push(c);
        } else if !leaf && u < 0.9 {
            let mut kids = domain.cube_children(&c).expect("inner cube");
            kids.reverse();
            stack.extend(kids);
        }
    }
    if out.is_empty() {
        out.push(domain.root());
    }
    out
}

/// A random `(v,w,s)` atom on `cube` with size ratio in `(0.2, 1]`.
fn random_atom(rng: &mut ChaCha8Rng, domain: &DomainSpec, cube: CellCube, params: &AtomParams) -> LocalAtom {
    let mut vals: Vec<f64> = (0..cube.cell_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    if rng.gen_bool(0.3) {
        let hot = rng.gen_range(0..vals.len());
        vals[hot] += 5.0;
    }
    if params.requires_moments(domain.box_side(&cube)) {
        let before = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        vals = CellModel::new(*domain, params.s).residual_local(&cube, &vals);
        if vals.iter().all(|v| v.abs() <= 1e-12 * before) {
            vals.iter_mut().for_each(|v| *v = 0.0);
        }
    }
    let norm = crate::norms::lebesgue_norm_cells(domain, &vals, domain.cell_measure(), params.w).expect("w > 1");
    let measure = domain.box_measure(&cube);
    let limit = if params.w.is_infinite() {
        measure.powf(-1.0 / params.v - params.alpha)
    } else {
        measure.powf(1.0 / params.w - 1.0 / params.v - params.alpha)
    };
    let factor = if norm > 0.0 { rng.gen_range(0.2..1.0) * limit / norm } else { 0.0 };
    let field = CubeField::new(cube, vals.iter().map(|v| v * factor).collect()).expect("finite atom");
    LocalAtom::new(field, AtomKind::Grid)
}

fn random_polymer(rng: &mut ChaCha8Rng, domain: &DomainSpec, params: &AtomParams, max: usize) -> Polymer {
    let cubes = random_packing(rng, domain, max);
    Polymer::new(
        cubes
            .iter()
            .map(|c| (rng.gen_range(-2.0..2.0), random_atom(rng, domain, domain.cell_cube(c), params)))
            .collect(),
    )
}

fn small_domain(rng: &mut ChaCha8Rng, i: usize) -> DomainSpec {
    if i.is_multiple_of(2) {
        random_domain(rng, 1, (2, 6), (-1, 1))
    } else {
        random_domain(rng, 2, (1, 3), (-1, 1))
    }
}

/// `sum_j |lambda_j| int |a_j| |f|`, the scale for pairing comparisons.
fn pairing_scale(d: &AtomicDecomposition, f: &GridFunction) -> f64 {
    let abs_f = f.map(f64::abs).expect("finite");
    d.atoms()
        .map(|(l, a)| {
            let abs_a = CubeField::new(*a.field.cube(), a.field.values().iter().map(|v| v.abs()).collect());
            l.abs() * abs_a.expect("finite").pair(&abs_f)
        })
        .sum()
}

fn criterion_duality_inequality(seed: u64, trials: usize, sandwich: usize) -> Result<(Criterion, Vec<Tally>)> {
    let mut rng = rng_for(seed, 6);
    let mut ineq = Tally::new("c6_pairing_bound");
    let mut valid = Tally::new("generated_atoms_valid");
    let mut bilinear = Tally::new("pairing_bilinearity");
    let mut homog = Tally::new("pairing_homogeneity");
    let mut sandwich_t = Tally::new("duality_sandwich");
    for i in 0..trials.max(sandwich) {
        let domain = small_domain(&mut rng, i);
        let v = rng.gen_range(1.2..4.0);
        let w = rng.gen_range(1.2..4.0);
        let params = random_atom_params(&mut rng, &domain, v, w);
        let g = random_polymer(&mut rng, &domain, &params, 6);
        let d = AtomicDecomposition::new(vec![g], params);
        let f = random_function(domain, &mut rng);
        if i < trials {
            for rep in d.validate(&domain) {
                valid.add(Assertion::holds(&valid.name, rep.valid));
            }
            let lhs = pair(&d, &f, true)?.abs();
            let norm = jn_norm_dyadic(&f, &params.dual_norm_params()?)?.value;
            ineq.add(Assertion::le(&ineq.name, lhs, hk_upper_bound(&d) * norm, 1e-12));
        }
        if i < sandwich {
            let f2 = random_function(domain, &mut rng);
            let sum = f.add(&f2)?;
            let scale = pairing_scale(&d, &f) + pairing_scale(&d, &f2);
            let a = pair(&d, &sum, true)?;
            let b = pair(&d, &f, true)? + pair(&d, &f2, true)?;
            bilinear.add(Assertion::le_abs(&bilinear.name, (a - b).abs(), 1e-12 * scale));
            let lam = [-2.0, 0.5, 4.0][i % 3];
            homog.add(Assertion::close(&homog.name, pair(&d.scaled(lam), &f, true)?, lam * pair(&d, &f, true)?, 0.0));
            let tests = [f.clone(), f2, sum];
            if let Ok(lower) = hk_lower_bound(&d, &tests) {
                sandwich_t.add(Assertion::le(&sandwich_t.name, lower, hk_upper_bound(&d), 1e-12));
            }
        }
    }
    let c = Criterion { id: 6, title: "duality inequality", tallies: vec![ineq] };
    Ok((c, vec![valid, bilinear, homog, sandwich_t]))
}

fn criterion_dual_optimizer(seed: u64, trials: usize) -> Result<Criterion> {
    let mut rng = rng_for(seed, 7);
    let mut lower = Tally::new("c7_ratio_lower");
    let mut upper = Tally::new("c7_ratio_upper");
    let mut done = 0;
    let mut i = 0;
    while done < trials {
        i += 1;
        let domain = small_domain(&mut rng, i);
        let v = rng.gen_range(1.3..4.0);
        let w = rng.gen_range(1.3..4.0);
        let params = random_atom_params(&mut rng, &domain, v, w);
        let f = random_function(domain, &mut rng);
        let np = params.dual_norm_params()?;
        let jn = jn_norm_dyadic(&f, &np)?;
        if jn.value == 0.0 {
            continue;
        }
        done += 1;
        let cs = sharp_constant(params.s, domain.dim());
        match dual_optimizer(&f, &jn.packing, &params) {
            Ok(r) => {
                lower.add(Assertion::le(&lower.name, jn.value / (4.0 * (1.0 + cs)), r.ratio, 0.0));
                upper.add(Assertion::le(&upper.name, r.ratio, jn.value, 1e-12));
            }
            Err(e) => {
                lower.add(Assertion::holds(format!("{}: {e}", lower.name), false));
            }
        }
    }
    Ok(Criterion { id: 7, title: "duality lower construction", tallies: vec![lower, upper] })
}

/// `v = 1.5` for `w = 2` and `v = 2` for `w = 4`.
pub const REFINEMENT_EXPONENTS: [(f64, f64); 2] = [(1.5, 2.0), (2.0, 4.0)];

fn criterion_refinement(seed: u64, trials: usize) -> Result<Criterion> {
    let mut rng = rng_for(seed, 9);
    let mut built = Tally::new("c9_refinement_built");
    let mut valid = Tally::new("c9_output_atoms_valid");
    let mut pairing = Tally::new("c9_pairing_preserved");
    let mut budget = Tally::new("c9_budget_finite");
    for i in 0..trials {
        let domain = small_domain(&mut rng, i);
        let (v, w) = REFINEMENT_EXPONENTS[i % 2];
        let params = random_atom_params(&mut rng, &domain, v, w);
        let n = domain.dim();
        let ratio = if rng.gen_bool(0.5) { (n as f64).exp2() + 1.0 } else { ((n + 1) as f64).exp2() };
        let g = random_polymer(&mut rng, &domain, &params, 5);
        let refined = match refine_atoms(&domain, &g, &params, ratio) {
            Ok(r) => {
                built.add(Assertion::holds(&built.name, true));
                r
            }
            Err(e) => {
                built.add(Assertion::holds(format!("{}: {e}", built.name), false));
                continue;
            }
        };
        let out_params = params.with_w(f64::INFINITY);
        for (_, atom) in refined.decomposition.atoms() {
            valid.add(Assertion::holds(&valid.name, validate_atom(&domain, atom, &out_params).valid));
        }
        let input = AtomicDecomposition::new(vec![g], params);
        for _ in 0..10 {
            let f = random_function(domain, &mut rng);
            let a = pair(&refined.decomposition, &f, false)?;
            let b = pair(&input, &f, false)?;
            let scale = pairing_scale(&input, &f).max(pairing_scale(&refined.decomposition, &f));
            pairing.add(Assertion::le_abs(&pairing.name, (a - b).abs(), 1e-8 * scale));
        }
        budget.add(Assertion::holds(&budget.name, refined.output_budget.is_finite()));
    }
    Ok(Criterion { id: 9, title: "atom refinement", tallies: vec![built, valid, pairing, budget] })
}

fn criterion_lebesgue(seed: u64, trials: usize) -> Result<(Criterion, Vec<Tally>)> {
    let mut rng = rng_for(seed, 8);
    let mut below = Tally::new("c8_lp_below_jn");
    let mut above = Tally::new("c8_jn_below_2_lp");
    let mut lq = Tally::new("c8_lq_below_scaled_jn");
    let mut lq_upper = Tally::new("lq_scaled_jn_upper");
    let mut equiv = Tally::new("equivalence_experiments");
    for i in 0..trials {
        let domain = small_domain(&mut rng, i);
        let f = random_function(domain, &mut rng);
        let p = rng.gen_range(1.1..5.0);
        let params = NormParams::new(p, p, 0, 0.0, random_c0(&mut rng, &domain))?;
        let jn = jn_norm_dyadic(&f, &params)?.value;
        let lp = lebesgue_norm(&f, p)?;
        below.add(Assertion::le(&below.name, lp, jn, 1e-12));
        above.add(Assertion::le(&above.name, jn, 2.0 * lp, 1e-12));

        let q = rng.gen_range(p..6.0);
        let s = rng.gen_range(0..=2);
        let pq = NormParams::new(p, q, s, 0.0, random_c0(&mut rng, &domain))?;
        let value = jn_norm_dyadic(&f, &pq)?.value;
        let scaled = domain.measure().powf(1.0 / q - 1.0 / p) * value;
        let lqv = lebesgue_norm(&f, q)?;
        lq.add(Assertion::le(&lq.name, lqv, scaled, 1e-12));
        lq_upper.add(Assertion::le(&lq_upper.name, scaled, (1.0 + sharp_constant(s, domain.dim())) * lqv, 1e-12));

        if i < 20 {
            let general = NormParams::new(p, rng.gen_range(1.0..p), s, random_alpha(&mut rng, 0.3), pq.c0)?;
            let configs = [
                Equivalence::C0Robustness { c0_alt: general.c0 * 0.5 },
                Equivalence::PlainVsLocalized,
                Equivalence::QuotientNorm { samples: 6 },
                Equivalence::JnFromJnAndLp,
                Equivalence::QIndependence,
                Equivalence::CampanatoDominance,
                Equivalence::WeakBound,
            ];
            for out in equivalence_experiments(&f, &general, &configs)? {
                for a in out.assertions {
                    equiv.add(a);
                }
            }
        }
    }
    let c = Criterion { id: 8, title: "Lebesgue identifications", tallies: vec![below, above, lq] };
    Ok((c, vec![lq_upper, equiv]))
}

fn criterion_weak(seed: u64, trials: usize) -> Result<(Criterion, Vec<(String, f64)>)> {
    let mut rng = rng_for(seed, 10);
    let mut tally = Tally::new("c10_weak_below_strong");
    let mut rmin = f64::INFINITY;
    let mut rmax = 0.0f64;
    for i in 0..trials {
        let domain = small_domain(&mut rng, i);
        let f = random_function(domain, &mut rng);
        let p = rng.gen_range(1.1..5.0);
        let s = rng.gen_range(0..=2);
        let root = domain.root();
        let weak = weak_quasi_norm(&f, &root, s, p)?;
        let strong = residual_lebesgue_norm(&f, &root, s, p)?;
        tally.add(Assertion::le(&tally.name, weak, strong, 1e-12));
        let alpha = random_alpha(&mut rng, 0.3);
        let params = NormParams::new(p, 1.0, s, alpha, random_c0(&mut rng, &domain))?;
        let jn = jn_norm_dyadic(&f, &params)?.value;
        if jn > 0.0 {
            let r = weak / (domain.measure().powf(alpha) * jn);
            rmin = rmin.min(r);
            rmax = rmax.max(r);
        }
    }
    let c = Criterion { id: 10, title: "weak-type bound", tallies: vec![tally] };
    Ok((c, vec![("weak_ratio_min".into(), rmin), ("weak_ratio_max".into(), rmax)]))
}

fn projection_properties(seed: u64, trials: usize) -> Result<Vec<Tally>> {
    let mut rng = rng_for(seed, 11);
    let mut ortho = Tally::new("moment_orthogonality");
    let mut cell_ortho = Tally::new("cell_model_orthogonality");
    let mut bound = Tally::new("projection_sup_bound");
    let mut reproduce = Tally::new("polynomial_reproduction");
    let mut linear = Tally::new("projection_linearity");
    let mut tables = Tally::new("moment_table_consistency");
    let mut additive = Tally::new("partition_additivity");
    let mut qmono = Tally::new("q_monotonicity");
    let mut homog = Tally::new("norm_homogeneity");
    let mut triangle = Tally::new("norm_triangle");
    let mut truncation = Tally::new("monotone_truncation");
    let mut campanato = Tally::new("campanato_dominance");
    for i in 0..trials {
        let domain = small_domain(&mut rng, i);
        let n = domain.dim();
        let s = rng.gen_range(0..=2);
        let f = random_function(domain, &mut rng).with_moment_order(s + 1);
        let g = random_function(domain, &mut rng).with_moment_order(s + 1);
        let level = rng.gen_range(0..=domain.depth());
        let count = 1usize << (n * level as usize);
        let cube = domain.cubes_at_level(level).nth(rng.gen_range(0..count)).expect("cube");
        let cells = domain.cell_cube(&cube);

        let poly = project(&f, &cube, s)?;
        for beta in MultiIndex::up_to(n, s) {
            let fi = f.integrate_monomial(&cube, &beta)?;
            let pi = poly.integrate_global_monomial(&beta);
            ortho.add(Assertion::le_abs(&ortho.name, (fi - pi).abs(), 1e-10 * (1.0 + fi.abs())));
        }
        let model = CellModel::new(domain, s);
        let local = f.cells_of(&cells);
        let r = model.residual_local(&cells, &local);
        let mean_abs = local.iter().map(|v| v.abs()).sum::<f64>() / local.len() as f64;
        cell_ortho.add(Assertion::le_abs(&cell_ortho.name, model.max_moment(&cells, &r), 1e-12 * (1.0 + mean_abs)));
        let pv = model.project_local(&cells, &local);
        let sup = pv.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        bound.add(Assertion::le(&bound.name, sup, sharp_constant(s, n) * mean_abs, 1e-12));
        let again = model.project_local(&cells, &pv);
        let err = again.iter().zip(&pv).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        reproduce.add(Assertion::le_abs(&reproduce.name, err, 1e-10 * (1.0 + sup)));
        let lg = g.cells_of(&cells);
        let c = rng.gen_range(-3.0..3.0);
        let comb: Vec<f64> = local.iter().zip(&lg).map(|(a, b)| a + c * b).collect();
        let pc = model.project_local(&cells, &comb);
        let pg = model.project_local(&cells, &lg);
        let err = pc.iter().zip(pv.iter().zip(&pg)).map(|(x, (a, b))| (x - a - c * b).abs()).fold(0.0, f64::max);
        linear.add(Assertion::le_abs(&linear.name, err, 1e-10 * (1.0 + f.max_abs() + c.abs() * g.max_abs())));

        for _ in 0..2 {
            let side = 1u32 << rng.gen_range(0..=domain.depth());
            let cells_axis = domain.cells_per_axis() as u32;
            let origin: Vec<u32> = (0..n).map(|_| rng.gen_range(0..=cells_axis - side)).collect();
            let box_cube = CellCube::new(&origin, side)?;
            let order = rng.gen_range(0..=s + 1);
            let beta = MultiIndex::up_to(n, order).pop().expect("nonempty basis");
            let (fast, abs_scale) = f.integrate_monomial_with_scale(&box_cube, &beta)?;
            let naive = f.naive_integrate_monomial(&box_cube, &beta);
            tables.add(Assertion::le_abs(&tables.name, (fast - naive).abs(), 1e-12 * abs_scale.max(f64::MIN_POSITIVE)));
        }
        if let Ok(kids) = domain.cube_children(&cube) {
            let beta = MultiIndex::up_to(n, s).pop().expect("nonempty");
            let whole = f.integrate_monomial(&cube, &beta)?;
            let parts: f64 = kids.iter().map(|k| f.integrate_monomial(k, &beta)).sum::<Result<f64>>()?;
            additive.add(Assertion::le_abs(&additive.name, (whole - parts).abs(), 1e-12 * (1.0 + whole.abs())));
        }

        let params = random_norm_params(&mut rng, &domain).with_shifted_grids(false);
        let p1 = params.with_q(rng.gen_range(1.0..2.0));
        let p2 = p1.with_q(p1.q + rng.gen_range(0.0..2.0));
        qmono.add(Assertion::le(&qmono.name, oscillation(&f, &cube, &p1)?, oscillation(&f, &cube, &p2)?, 1e-12));
        let nf = jn_norm_dyadic(&f, &params)?.value;
        let lam = rng.gen_range(-3.0..3.0);
        let scaled = f.map(|v| lam * v)?;
        homog.add(Assertion::close(&homog.name, jn_norm_dyadic(&scaled, &params)?.value, lam.abs() * nf, 1e-12));
        let ng = jn_norm_dyadic(&g, &params)?.value;
        let sum = f.add(&g)?;
        triangle.add(Assertion::le(&triangle.name, jn_norm_dyadic(&sum, &params)?.value, nf + ng, 1e-10));
        let (lam_c, _) = campanato_norm_dyadic(&f, &params)?;
        campanato.add(Assertion::le(&campanato.name, nf, domain.measure().powf(1.0 / params.p) * lam_c, 1e-12));

        let shift = GridFunction::from_fn(domain, |x| {
            let mut acc = 0.7;
            for (a, xa) in x.iter().enumerate() {
                acc += (a as f64 + 1.0) * 0.3 * xa.powi(params.s.min(1) as i32);
            }
            acc
        })?;
        let shifted = f.add(&shift)?;
        let plain = params.with_variant(Variant::Plain).with_c0(2.0 * domain.side());
        let a = big_jn_norm_dyadic(&f, &plain)?.value;
        let b = big_jn_norm_dyadic(&shifted, &plain)?.value;
        let scale = 1.0 + f.max_abs() + shift.max_abs();
        truncation.add(Assertion::le_abs(&truncation.name, (a - b).abs(), 1e-10 * scale));
        if cube.side() < params.snapped_c0() {
            let oa = oscillation(&f, &cube, &params)?;
            let ob = oscillation(&shifted, &cube, &params)?;
            truncation.add(Assertion::le_abs(&truncation.name, (oa - ob).abs(), 1e-10 * scale));
        }
    }
    Ok(vec![ortho, cell_ortho, bound, reproduce, linear, tables, additive, qmono, homog, triangle, truncation, campanato])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_parse() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("everything".parse::<Suite>().is_err());
        assert!(run_suite(Suite::Oracle, 1, Some(0)).is_err());
    }

    #[test]
    fn small_runs_pass() {
        for s in Suite::ALL {
            let out = run_suite(s, 42, Some(3)).unwrap();
            assert!(out.pass(), "{s}: {:?}", out.criteria);
        }
    }
}
