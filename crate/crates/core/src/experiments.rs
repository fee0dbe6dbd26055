//! The p -> infinity sweep and the norm-equivalence experiments.

use crate::error::{Error, Result};
use crate::grid::{DomainSpec, GridFunction};
use crate::norms::{
    big_jn_norm_dyadic, campanato_norm_dyadic, jn_norm_dyadic, lebesgue_norm, residual_lebesgue_norm,
    weak_quasi_norm, NormParams, OscillationTable, Variant,
};
use crate::poly::{sharp_constant, CellModel};
use crate::report::Assertion;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub p: f64,
    pub value: f64,
    /// `max_Q |Q|^(1/p) |Q|^-alpha osc_Q`.
    pub single_cube: f64,
    /// `|X|^(1/p) Lambda`.
    pub measure_bound: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LimitSweep {
    pub rows: Vec<SweepRow>,
    pub campanato: f64,
    /// `|jn_p - Lambda| / Lambda` at the last swept `p`.
    pub terminal_gap: f64,
    /// Minimum over cubes and `p` of the relative slack `(jn_p - |Q|^(1/p) osc) / jn_p`.
    pub single_cube_slack: f64,
    /// Minimum over `p` of the relative slack in `jn_p <= |X|^(1/p) Lambda`.
    pub measure_bound_slack: f64,
    /// Whether `jn_p |X|^(-1/p)` is nonincreasing in `p` to `1e-12`.
    pub monotone: bool,
}

/// `jn_p` for each `p` against the localized Campanato norm.
pub fn norm_limit_sweep(f: &GridFunction, params: &NormParams, p_list: &[f64]) -> Result<LimitSweep> {
    if p_list.is_empty() {
        return Err(Error::InvalidParameter("empty p list".into()));
    }
    let params = params.with_variant(Variant::Localized);
    let table = OscillationTable::build(f, &params)?;
    let (campanato, _) = campanato_norm_dyadic(f, &params)?;
    let oscs = table.oscillations();
    let measure = f.domain().measure();
    let cell_measure = f.domain().cell_measure();
    let mut rows = Vec::with_capacity(p_list.len());
    let mut single_cube_slack = f64::INFINITY;
    let mut measure_bound_slack = f64::INFINITY;
    for &p in p_list {
        if !(p > 1.0) {
            return Err(Error::InvalidParameter(format!("p = {p} must be > 1")));
        }
        let value = table.solve(p).value;
        let mut single = 0.0f64;
        for (cube, osc) in &oscs {
            let w = (cube.cell_count() as f64 * cell_measure).powf(1.0 / p) * osc;
            single = single.max(w);
            single_cube_slack = single_cube_slack.min(Assertion::le("single", w, value, 0.0).slack);
        }
        let measure_bound = measure.powf(1.0 / p) * campanato;
        measure_bound_slack = measure_bound_slack.min(Assertion::le("measure", value, measure_bound, 0.0).slack);
        rows.push(SweepRow { p, value, single_cube: single, measure_bound });
    }
    let last = rows.last().expect("nonempty").value;
    let terminal_gap = if campanato == 0.0 { last.abs() } else { (last - campanato).abs() / campanato };
    let mut monotone = true;
    let mut sorted = rows.clone();
    sorted.sort_by(|a, b| a.p.partial_cmp(&b.p).expect("finite p"));
    for pair in sorted.windows(2) {
        let a = pair[0].value * measure.powf(-1.0 / pair[0].p);
        let b = pair[1].value * measure.powf(-1.0 / pair[1].p);
        if b > a * (1.0 + 1e-12) {
            monotone = false;
        }
    }
    Ok(LimitSweep { rows, campanato, terminal_gap, single_cube_slack, measure_bound_slack, monotone })
}

/// Which comparison to run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Equivalence {
    /// `jn` at `c0` against `jn` at `c0_alt`; for `c0 < c0'`, `jn_{c0'} <= (1 + C_s) jn_{c0}`.
    C0Robustness { c0_alt: f64 },
    /// `JN <= (1 + C_s) jn`.
    PlainVsLocalized,
    /// `min_t JN(f - t P_Q0 f)` family as an upper bound for the quotient norm.
    QuotientNorm { samples: usize },
    /// `jn <= JN + c0^(-n alpha) ||f||_p` for `q <= p`.
    JnFromJnAndLp,
    /// `jn_(p,1) <= jn_(p,q)` for the given `q`.
    QIndependence,
    /// `||f||_q <= |Q0|^(1/q-1/p) jn_(p,q,s)_0 <= (1 + C_s) ||f||_q` for `p <= q`.
    LebesgueLq,
    /// `||f||_p <= jn_(p,p,s)_0 <= (1 + C_s) ||f||_p`.
    LebesgueLp,
    /// `f = a` on `[0, 2^m)^n` for `m` up to `max_m`, with `alpha < 1/p - 1/q`.
    ConstantGrowth { amplitude: f64, max_m: i32 },
    /// `jn <= |X|^(1/p) Lambda`.
    CampanatoDominance,
    /// Weak quasi-norm on the root against `||f - P f||_p`.
    WeakBound,
}

impl Equivalence {
    pub fn name(&self) -> &'static str {
        match self {
            Equivalence::C0Robustness { .. } => "c0_robustness",
            Equivalence::PlainVsLocalized => "plain_vs_localized",
            Equivalence::QuotientNorm { .. } => "quotient_norm",
            Equivalence::JnFromJnAndLp => "jn_from_jn_and_lp",
            Equivalence::QIndependence => "q_independence",
            Equivalence::LebesgueLq => "lebesgue_lq",
            Equivalence::LebesgueLp => "lebesgue_lp",
            Equivalence::ConstantGrowth { .. } => "constant_growth",
            Equivalence::CampanatoDominance => "campanato_dominance",
            Equivalence::WeakBound => "weak_bound",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentOutcome {
    pub name: String,
    pub reported: Vec<(String, f64)>,
    pub assertions: Vec<Assertion>,
}

impl ExperimentOutcome {
    fn new(name: &str) -> Self {
        Self { name: name.into(), reported: Vec::new(), assertions: Vec::new() }
    }

    fn report(&mut self, key: &str, v: f64) {
        self.reported.push((key.into(), v));
    }

    fn check(&mut self, a: Assertion) {
        self.assertions.push(a);
    }

    pub fn pass(&self) -> bool {
        self.assertions.iter().all(|a| a.pass)
    }
}

const TOL: f64 = 1e-12;

fn ratio(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        if a == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        a / b
    }
}

pub fn equivalence_experiments(
    f: &GridFunction,
    params: &NormParams,
    configs: &[Equivalence],
) -> Result<Vec<ExperimentOutcome>> {
    configs.iter().map(|c| run_one(f, params, c)).collect()
}

fn run_one(f: &GridFunction, params: &NormParams, config: &Equivalence) -> Result<ExperimentOutcome> {
    let domain = *f.domain();
    let n = domain.dim();
    let cs = sharp_constant(params.s, n);
    let mut out = ExperimentOutcome::new(config.name());
    let jn = |g: &GridFunction, p: &NormParams| jn_norm_dyadic(g, p).map(|r| r.value);
    match *config {
        Equivalence::C0Robustness { c0_alt } => {
            let (lo, hi) = if c0_alt < params.c0 { (c0_alt, params.c0) } else { (params.c0, c0_alt) };
            let a = jn(f, &params.with_c0(lo))?;
            let b = jn(f, &params.with_c0(hi))?;
            out.report("jn_small_c0", a);
            out.report("jn_large_c0", b);
            out.report("ratio_small_over_large", ratio(a, b));
            out.check(Assertion::le("large_c0_bound", b, (1.0 + cs) * a, TOL));
        }
        Equivalence::PlainVsLocalized => {
            let a = jn(f, params)?;
            let b = big_jn_norm_dyadic(f, params)?.value;
            out.report("jn", a);
            out.report("big_jn", b);
            out.report("ratio_big_over_jn", ratio(b, a));
            out.check(Assertion::le("big_jn_bound", b, (1.0 + cs) * a, TOL));
        }
        Equivalence::QuotientNorm { samples } => {
            let samples = samples.max(2);
            let root = domain.root();
            let cells = domain.cell_cube(&root);
            let p_root = CellModel::new(domain, params.s).project(f, &cells);
            let big = big_jn_norm_dyadic(f, params)?.value;
            let mut best = f64::INFINITY;
            let mut best_t = 0.0;
            for i in 0..=samples {
                let t = 2.0 * i as f64 / samples as f64;
                let vals: Vec<f64> = f.values().iter().zip(&p_root).map(|(v, p)| v - t * p).collect();
                let g = GridFunction::new(domain, vals)?.with_moment_order(f.moment_order());
                let v = jn(&g, params)?;
                if v < best {
                    best = v;
                    best_t = t;
                }
            }
            out.report("quotient_upper_bound", best);
            out.report("best_t", best_t);
            out.report("big_jn", big);
            out.check(Assertion::le("big_jn_below_quotient", big, (1.0 + cs) * best, TOL));
            out.check(Assertion::le("quotient_below_jn", best, jn(f, params)?, TOL));
        }
        Equivalence::JnFromJnAndLp => {
            if params.q > params.p {
                return Err(Error::InvalidParameter("needs q <= p".into()));
            }
            let a = jn(f, params)?;
            let b = big_jn_norm_dyadic(f, params)?.value;
            let lp = lebesgue_norm(f, params.p)?;
            let c = params.snapped_c0().powf(-(n as f64) * params.alpha);
            out.report("jn", a);
            out.report("big_jn", b);
            out.report("lp", lp);
            out.check(Assertion::le("jn_bound", a, b + c * lp, TOL));
            out.check(Assertion::le("big_jn_bound", b, (1.0 + cs) * a, TOL));
        }
        Equivalence::QIndependence => {
            let a = jn(f, &params.with_q(1.0))?;
            let b = jn(f, params)?;
            out.report("jn_q1", a);
            out.report("jn_q", b);
            out.report("ratio_q_over_q1", ratio(b, a));
            out.check(Assertion::le("holder", a, b, TOL));
        }
        Equivalence::LebesgueLq => {
            if params.p > params.q || params.alpha != 0.0 {
                return Err(Error::InvalidParameter("needs p <= q and alpha = 0".into()));
            }
            let v = jn(f, params)?;
            let lq = lebesgue_norm(f, params.q)?;
            let scaled = domain.measure().powf(1.0 / params.q - 1.0 / params.p) * v;
            out.report("jn", v);
            out.report("lq", lq);
            out.report("scaled_jn", scaled);
            if params.c0_log2() <= domain.side_exponent() {
                out.check(Assertion::le("lq_below_scaled_jn", lq, scaled, TOL));
            }
            out.check(Assertion::le("scaled_jn_bound", scaled, (1.0 + cs) * lq, TOL));
        }
        Equivalence::LebesgueLp => {
            if params.alpha != 0.0 {
                return Err(Error::InvalidParameter("needs alpha = 0".into()));
            }
            let pp = params.with_q(params.p);
            let v = jn(f, &pp)?;
            let lp = lebesgue_norm(f, params.p)?;
            out.report("jn", v);
            out.report("lp", lp);
            out.report("ratio", ratio(v, lp));
            out.check(Assertion::le("lp_below_jn", lp, v, TOL));
            out.check(Assertion::le("jn_bound", v, (1.0 + cs) * lp, TOL));
        }
        Equivalence::ConstantGrowth { amplitude, max_m } => {
            let expo = params.alpha + 1.0 / params.q - 1.0 / params.p;
            if !(expo < 0.0) {
                return Err(Error::InvalidParameter("needs alpha < 1/p - 1/q".into()));
            }
            let m0 = params.c0_log2().max(0);
            for m in m0..=max_m.max(m0) {
                let d = DomainSpec::new(n, m, (m - params.c0_log2() + 1).max(1) as u32)?;
                let g = GridFunction::constant(d, amplitude).with_moment_order(params.s);
                let v = jn(&g, params)?;
                let factor = d.measure().powf(expo);
                let lq = lebesgue_norm(&g, params.q)?;
                out.report(&format!("m{m}.jn"), v);
                out.report(&format!("m{m}.factor"), factor);
                out.report(&format!("m{m}.jn_times_factor"), v * factor);
                out.check(Assertion::le(format!("m{m}_lq_below"), lq, v * factor, TOL));
            }
        }
        Equivalence::CampanatoDominance => {
            let v = jn(f, params)?;
            let (lam, _) = campanato_norm_dyadic(f, params)?;
            let bound = domain.measure().powf(1.0 / params.p) * lam;
            out.report("jn", v);
            out.report("campanato", lam);
            out.check(Assertion::le("dominance", v, bound, TOL));
        }
        Equivalence::WeakBound => {
            let root = domain.root();
            let weak = weak_quasi_norm(f, &root, params.s, params.p)?;
            let strong = residual_lebesgue_norm(f, &root, params.s, params.p)?;
            let v = jn(f, &params.with_q(1.0))?;
            out.report("weak", weak);
            out.report("residual_lp", strong);
            out.report("weak_over_jn", ratio(weak, domain.measure().powf(params.alpha) * v));
            out.check(Assertion::le("chebyshev", weak, strong, TOL));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_sweep_is_flat() {
        let d = DomainSpec::new(1, 0, 4).unwrap();
        let f = GridFunction::constant(d, 2.0);
        let p = NormParams::new(2.0, 1.0, 0, 0.0, 1.0).unwrap();
        let s = norm_limit_sweep(&f, &p, &[2.0, 8.0, 64.0]).unwrap();
        assert!(s.rows.iter().all(|r| (r.value - 2.0).abs() < 1e-12));
        assert!(s.terminal_gap < 1e-12);
        assert!(s.monotone);
    }

    #[test]
    fn experiments_pass_on_a_ramp() {
        let d = DomainSpec::new(1, 1, 4).unwrap();
        let f = GridFunction::from_fn(d, |x| x[0] * x[0] - 0.7 * x[0]).unwrap().with_moment_order(1);
        let p = NormParams::new(3.0, 1.5, 1, 0.0, 1.0).unwrap();
        let all = [
            Equivalence::C0Robustness { c0_alt: 0.25 },
            Equivalence::PlainVsLocalized,
            Equivalence::QuotientNorm { samples: 8 },
            Equivalence::JnFromJnAndLp,
            Equivalence::QIndependence,
            Equivalence::LebesgueLp,
            Equivalence::CampanatoDominance,
            Equivalence::WeakBound,
        ];
        for out in equivalence_experiments(&f, &p, &all).unwrap() {
            assert!(out.pass(), "{}: {:?}", out.name, out.assertions);
        }
        let lq = NormParams::new(1.5, 3.0, 1, 0.0, 1.0).unwrap();
        let out = equivalence_experiments(&f, &lq, &[Equivalence::LebesgueLq]).unwrap();
        assert!(out[0].pass());
        let growth = Equivalence::ConstantGrowth { amplitude: 1.0, max_m: 4 };
        let out = equivalence_experiments(&f, &lq, &[growth]).unwrap();
        assert!(out[0].pass());
        assert!(equivalence_experiments(&f, &p, &[Equivalence::LebesgueLq]).is_err());
    }
}
