//! Local atoms, polymers, duality pairings and the w -> infinity refinement.

use crate::cz::{cz_decompose_field, CzConfig};
use crate::error::{Error, Result};
use crate::grid::{CellCube, CubeField, DomainSpec, GridFunction};
use crate::norms::{jn_norm_dyadic, lebesgue_norm_cells, mean_power, residual_cells, NormParams, Packing};
use crate::poly::{sharp_constant, CellModel};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AtomParams {
    pub v: f64,
    /// Size exponent; `f64::INFINITY` is allowed.
    pub w: f64,
    pub s: usize,
    pub alpha: f64,
    pub c0: f64,
}

impl AtomParams {
    pub fn new(v: f64, w: f64, s: usize, alpha: f64, c0: f64) -> Result<Self> {
        let out = Self { v, w, s, alpha, c0 };
        if !(v > 1.0) || !v.is_finite() {
            return Err(Error::InvalidParameter(format!("v = {v} must be finite and > 1")));
        }
        if !(w > 1.0) {
            return Err(Error::InvalidParameter(format!("w = {w} must be > 1")));
        }
        if !(alpha >= 0.0) || !alpha.is_finite() || !(c0 > 0.0) || !c0.is_finite() {
            return Err(Error::InvalidParameter("alpha must be >= 0 and c0 > 0".into()));
        }
        Ok(out)
    }

    pub fn with_w(mut self, w: f64) -> Self {
        self.w = w;
        self
    }

    pub fn v_conj(&self) -> f64 {
        self.v / (self.v - 1.0)
    }

    pub fn w_conj(&self) -> f64 {
        if self.w.is_infinite() {
            1.0
        } else {
            self.w / (self.w - 1.0)
        }
    }

    /// Parameters of the dual norm `jn_(v',w',s)_alpha,c0`.
    pub fn dual_norm_params(&self) -> Result<NormParams> {
        NormParams::new(self.v_conj(), self.w_conj(), self.s, self.alpha, self.c0)
    }

    pub fn requires_moments(&self, side: f64) -> bool {
        side < (self.c0.log2().floor()).exp2()
    }
}

/// Closed-form origin of an atom, recorded in decomposition files.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AtomKind {
    Indicator,
    SignPower,
    CzPiece,
    Grid,
}

impl AtomKind {
    pub fn tag(&self) -> &'static str {
        match self {
            AtomKind::Indicator => "indicator",
            AtomKind::SignPower => "sign-power",
            AtomKind::CzPiece => "cz-piece",
            AtomKind::Grid => "grid",
        }
    }
}

/// A function on the cells of `field.cube()` claimed to be an atom on `cube`.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalAtom {
    pub cube: CellCube,
    pub field: CubeField,
    pub kind: AtomKind,
}

impl LocalAtom {
    pub fn new(field: CubeField, kind: AtomKind) -> Self {
        Self { cube: *field.cube(), field, kind }
    }

    /// `a = |Q|^(-1/v-alpha) 1_Q`.
    pub fn normalized_indicator(domain: &DomainSpec, cube: CellCube, params: &AtomParams) -> Self {
        let h = domain.box_measure(&cube).powf(-1.0 / params.v - params.alpha);
        Self::new(CubeField::new(cube, vec![h; cube.cell_count()]).expect("finite"), AtomKind::Indicator)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { cube: self.cube, field: self.field.scaled(factor), kind: self.kind }
    }

    pub fn pair(&self, f: &GridFunction) -> f64 {
        self.field.pair(f)
    }

    /// Values restricted to `cube`.
    pub fn restricted(&self, domain: &DomainSpec) -> Vec<f64> {
        if self.field.cube() == &self.cube {
            return self.field.values().to_vec();
        }
        let carrier = domain.cell_indices(self.field.cube());
        let pos: std::collections::HashMap<usize, usize> =
            carrier.iter().enumerate().map(|(p, &g)| (g, p)).collect();
        domain
            .cell_indices(&self.cube)
            .iter()
            .map(|g| pos.get(g).map(|&p| self.field.values()[p]).unwrap_or(0.0))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AtomValidation {
    pub valid: bool,
    pub support_ok: bool,
    /// `int |a|` outside the cube.
    pub outside_mass: f64,
    /// `||a||_{L^w(Q)} / |Q|^(1/w - 1/v - alpha)`.
    pub size_ratio: f64,
    pub moments_required: bool,
    /// `max_beta |avg_Q a u^beta| / avg_Q |a|`, zero when moments are not required.
    pub moment_residual: f64,
}

pub fn validate_atom(domain: &DomainSpec, atom: &LocalAtom, params: &AtomParams) -> AtomValidation {
    let carrier = atom.field.cube();
    let contained = carrier.contains(&atom.cube) || carrier == &atom.cube;
    let mut outside_mass = 0.0;
    if carrier != &atom.cube {
        for (&g, &v) in domain.cell_indices(carrier).iter().zip(atom.field.values()) {
            if !atom.cube.contains_cell(&domain.cell_coords(g)) {
                outside_mass += v.abs() * domain.cell_measure();
            }
        }
    }
    let support_ok = contained && outside_mass == 0.0;
    let vals = atom.restricted(domain);
    let measure = domain.box_measure(&atom.cube);
    let norm = lebesgue_norm_cells(domain, &vals, domain.cell_measure(), params.w).expect("w > 1");
    let limit = if params.w.is_infinite() {
        measure.powf(-1.0 / params.v - params.alpha)
    } else {
        measure.powf(1.0 / params.w - 1.0 / params.v - params.alpha)
    };
    let size_ratio = norm / limit;
    let moments_required = params.requires_moments(domain.box_side(&atom.cube));
    let moment_residual = if moments_required {
        let mean_abs = vals.iter().map(|v| v.abs()).sum::<f64>() / vals.len() as f64;
        if mean_abs == 0.0 {
            0.0
        } else {
            CellModel::new(*domain, params.s).max_moment(&atom.cube, &vals) / mean_abs
        }
    } else {
        0.0
    };
    let valid = support_ok && size_ratio <= 1.0 + 1e-12 && moment_residual <= 1e-9;
    AtomValidation { valid, support_ok, outside_mass, size_ratio, moments_required, moment_residual }
}

/// `sum_j lambda_j a_j` with atoms on pairwise disjoint cubes.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Polymer {
    pub terms: Vec<(f64, LocalAtom)>,
}

impl Polymer {
    pub fn new(terms: Vec<(f64, LocalAtom)>) -> Self {
        Self { terms }
    }

    /// `(sum_j |lambda_j|^v)^(1/v)`.
    pub fn budget(&self, v: f64) -> f64 {
        let m = self.terms.iter().fold(0.0f64, |m, (l, _)| m.max(l.abs()));
        if m == 0.0 {
            return 0.0;
        }
        m * self.terms.iter().map(|(l, _)| (l.abs() / m).powf(v)).sum::<f64>().powf(1.0 / v)
    }

    pub fn is_disjoint(&self) -> bool {
        for (i, (_, a)) in self.terms.iter().enumerate() {
            for (_, b) in &self.terms[i + 1..] {
                if a.cube.intersects(&b.cube) {
                    return false;
                }
            }
        }
        true
    }

    pub fn pair(&self, f: &GridFunction) -> f64 {
        self.terms.iter().map(|(l, a)| l * a.pair(f)).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AtomicDecomposition {
    pub polymers: Vec<Polymer>,
    pub params: AtomParams,
}

impl AtomicDecomposition {
    pub fn new(polymers: Vec<Polymer>, params: AtomParams) -> Self {
        Self { polymers, params }
    }

    pub fn atoms(&self) -> impl Iterator<Item = &(f64, LocalAtom)> {
        self.polymers.iter().flat_map(|g| g.terms.iter())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let polymers = self
            .polymers
            .iter()
            .map(|g| Polymer::new(g.terms.iter().map(|(l, a)| (l * factor, a.clone())).collect()))
            .collect();
        Self { polymers, params: self.params }
    }

    /// Every atom and its validation report.
    pub fn validate(&self, domain: &DomainSpec) -> Vec<AtomValidation> {
        self.atoms().map(|(_, a)| validate_atom(domain, a, &self.params)).collect()
    }
}

/// `sum_{i,j} lambda_ij int a_ij f`; `strict` rejects atoms on non-dyadic cubes.
pub fn pair(d: &AtomicDecomposition, f: &GridFunction, strict: bool) -> Result<f64> {
    if strict && d.atoms().any(|(_, a)| !a.cube.is_dyadic()) {
        return Err(Error::NonDyadicCube);
    }
    Ok(d.polymers.iter().map(|g| g.pair(f)).sum())
}

/// `sum_i (sum_j |lambda_ij|^v)^(1/v)`.
pub fn hk_upper_bound(d: &AtomicDecomposition) -> f64 {
    d.polymers.iter().map(|g| g.budget(d.params.v)).sum()
}

/// `max_f |pair(d, f)| / ||f||_{jn_(v',w',s)_alpha,c0}` over test functions with nonzero norm.
pub fn hk_lower_bound(d: &AtomicDecomposition, tests: &[GridFunction]) -> Result<f64> {
    let np = d.params.dual_norm_params()?;
    let mut best: Option<f64> = None;
    for f in tests {
        let norm = jn_norm_dyadic(f, &np)?.value;
        if norm > 0.0 {
            let r = pair(d, f, true)?.abs() / norm;
            best = Some(best.map_or(r, |b: f64| b.max(r)));
        }
    }
    best.ok_or(Error::ZeroTestNorms)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct H1Bound {
    /// `sum_{i,j} |Q_ij|^(1-1/v) |lambda_ij|`.
    pub fine: f64,
    /// `|Q0|^(1-1/v) hk_upper_bound`.
    pub coarse: f64,
    pub holds: bool,
}

pub fn h1_upper_bound(d: &AtomicDecomposition, domain: &DomainSpec, q0: &CellCube) -> Result<H1Bound> {
    let v = d.params.v;
    let mut fine = 0.0;
    for (l, a) in d.atoms() {
        if !q0.contains(&a.cube) {
            return Err(Error::InvalidParameter("atom cube not contained in Q0".into()));
        }
        fine += domain.box_measure(&a.cube).powf(1.0 - 1.0 / v) * l.abs();
    }
    let coarse = domain.box_measure(q0).powf(1.0 - 1.0 / v) * hk_upper_bound(d);
    Ok(H1Bound { fine, coarse, holds: fine <= coarse * (1.0 + 1e-12) })
}

#[derive(Clone, Debug)]
pub struct Refinement {
    pub decomposition: AtomicDecomposition,
    pub notices: Vec<String>,
    pub input_budget: f64,
    pub output_budget: f64,
    /// Budget of the polymer at each CZ level.
    pub level_budgets: Vec<f64>,
    pub passthrough: bool,
}

/// Rewrites a polymer of `(v,w,s)` atoms as polymers of `(v,inf,s)` atoms, level by level.
pub fn refine_atoms(domain: &DomainSpec, g: &Polymer, params: &AtomParams, ratio: f64) -> Result<Refinement> {
    let input_budget = g.budget(params.v);
    if params.w.is_infinite() {
        return Ok(Refinement {
            decomposition: AtomicDecomposition::new(vec![g.clone()], *params),
            notices: vec!["input atoms already have w = inf; passed through".into()],
            input_budget,
            output_budget: input_budget,
            level_budgets: vec![input_budget],
            passthrough: true,
        });
    }
    let n = domain.dim();
    let out_params = params.with_w(f64::INFINITY);
    let cs = sharp_constant(params.s, n);
    let mut levels: Vec<Polymer> = Vec::new();
    let mut notices = Vec::new();
    for (index, (lambda, atom)) in g.terms.iter().enumerate() {
        let vals = atom.restricted(domain);
        if vals.iter().all(|&v| v == 0.0) {
            notices.push(format!("atom {index} is zero; skipped"));
            continue;
        }
        let field = CubeField::new(atom.cube, vals)?;
        let gamma = mean_power(field.values(), params.w);
        let cfg = CzConfig::new(params.s, ratio, gamma);
        let cz = cz_decompose_field(domain, &field, &cfg)?;
        let model = CellModel::new(*domain, params.s);
        let pa = model.project_local(&atom.cube, field.values());
        let c0 = ((n + 2) as f64).exp2() * cs * ratio;
        let a0: Vec<f64> = cz.levels[0][0].field.values().iter().zip(&pa).map(|(a, p)| (a + p) / c0).collect();
        if levels.is_empty() {
            levels.push(Polymer::default());
        }
        levels[0].terms.push((lambda * c0, LocalAtom::new(CubeField::new(atom.cube, a0)?, AtomKind::CzPiece)));
        for (k, pieces) in cz.levels.iter().enumerate().skip(1) {
            if levels.len() <= k {
                levels.push(Polymer::default());
            }
            for piece in pieces {
                let m = domain.box_measure(piece.cube());
                let scale = ((n + 1) as f64).exp2()
                    * cs
                    * ratio.powi(k as i32 + 1)
                    * gamma
                    * m.powf(1.0 / params.v + params.alpha);
                levels[k].terms.push((lambda * scale, LocalAtom::new(piece.field.scaled(1.0 / scale), AtomKind::CzPiece)));
            }
        }
    }
    let decomposition = AtomicDecomposition::new(levels, out_params);
    for (i, rep) in decomposition.validate(domain).iter().enumerate() {
        if !rep.valid {
            return Err(Error::InvariantViolated(format!(
                "refined atom {i} is not a (v,inf,s) atom: size ratio {}, moment residual {:e}",
                rep.size_ratio, rep.moment_residual
            )));
        }
    }
    let level_budgets: Vec<f64> = decomposition.polymers.iter().map(|p| p.budget(params.v)).collect();
    let output_budget = level_budgets.iter().sum();
    Ok(Refinement { decomposition, notices, input_budget, output_budget, level_budgets, passthrough: false })
}

/// Splits `f` over the level-`level` tiling into `(v,w,s)_alpha` atoms.
///
/// On cubes that need moments the atom is the projection residual of `f`; each atom
/// is scaled to the size limit and `lambda` carries the scale, so the polymer sums to
/// `f` wherever no residual was taken. Zero pieces are dropped.
pub fn tiling_polymer(f: &GridFunction, params: &AtomParams, level: u32) -> Result<Polymer> {
    let domain = *f.domain();
    if level > domain.depth() {
        return Err(Error::InvalidParameter(format!("level {level} exceeds depth {}", domain.depth())));
    }
    let model = CellModel::new(domain, params.s);
    let mut terms = Vec::new();
    for cube in domain.cubes_at_level(level) {
        let cells = domain.cell_cube(&cube);
        let vals = f.cells_of(&cells);
        let vals = if params.requires_moments(cube.side()) { model.residual_local(&cells, &vals) } else { vals };
        let size = if params.w.is_infinite() {
            vals.iter().fold(0.0f64, |m, x| m.max(x.abs()))
        } else {
            mean_power(&vals, params.w) * cube.measure().powf(1.0 / params.w)
        };
        if size == 0.0 {
            continue;
        }
        let inv_w = if params.w.is_infinite() { 0.0 } else { 1.0 / params.w };
        let lambda = size / cube.measure().powf(inv_w - 1.0 / params.v - params.alpha);
        let field = CubeField::new(cells, vals.iter().map(|x| x / lambda).collect())?;
        terms.push((lambda, LocalAtom::new(field, AtomKind::Grid)));
    }
    Ok(Polymer::new(terms))
}

#[derive(Clone, Debug)]
pub struct DualResult {
    pub decomposition: AtomicDecomposition,
    pub pairing: f64,
    pub budget: f64,
    pub ratio: f64,
    /// Value of the packing, i.e. the dyadic norm when the packing is optimal.
    pub norm: f64,
    pub lower_threshold: f64,
}

/// Near-extremal polymer for `f` built from a maximising packing of `jn_(v',w',s)`.
pub fn dual_optimizer(f: &GridFunction, packing: &Packing, params: &AtomParams) -> Result<DualResult> {
    if params.w.is_infinite() {
        return Err(Error::InvalidParameter("dual optimizer needs w < inf".into()));
    }
    let domain = *f.domain();
    let np = params.dual_norm_params()?;
    let wc = params.w_conj();
    let vc = params.v_conj();
    let cs = sharp_constant(params.s, domain.dim());
    let model = CellModel::new(domain, params.s);
    let mut atoms = Vec::new();
    let mut t = Vec::new();
    for cube in &packing.cubes {
        let r = residual_cells(f, cube, &np);
        let big_r = mean_power(&r, wc);
        if big_r == 0.0 {
            continue;
        }
        let measure = domain.box_measure(cube);
        let a: Vec<f64> = r.iter().map(|&x| x.signum() * (x.abs() / big_r).powf(wc - 1.0)).collect();
        let project = np.uses_projection_side(domain.box_side(cube));
        let (b, kappa) = if project {
            (model.residual_local(cube, &a), 1.0 + cs)
        } else {
            (a, 1.0)
        };
        let scale = measure.powf(-1.0 / params.v - params.alpha) / kappa;
        atoms.push(LocalAtom::new(CubeField::new(*cube, b.iter().map(|x| x * scale).collect())?, AtomKind::SignPower));
        t.push(measure.powf(1.0 / vc - params.alpha) * big_r / kappa);
    }
    if atoms.is_empty() {
        return Err(Error::ZeroOscillation);
    }
    let tmax = t.iter().copied().fold(0.0, f64::max);
    let tsum: f64 = t.iter().map(|x| (x / tmax).powf(vc)).sum();
    let denom = tsum.powf(1.0 / params.v);
    let terms: Vec<(f64, LocalAtom)> =
        t.iter().zip(atoms).map(|(ti, a)| ((ti / tmax).powf(vc - 1.0) / denom, a)).collect();
    let decomposition = AtomicDecomposition::new(vec![Polymer::new(terms)], *params);
    for (i, rep) in decomposition.validate(&domain).iter().enumerate() {
        if !rep.valid {
            return Err(Error::InvariantViolated(format!(
                "dual atom {i} invalid: size ratio {}, moment residual {:e}",
                rep.size_ratio, rep.moment_residual
            )));
        }
    }
    let pairing = pair(&decomposition, f, false)?;
    let budget = hk_upper_bound(&decomposition);
    let ratio = pairing / budget;
    let norm = packing.value();
    let lower_threshold = norm / (4.0 * (1.0 + cs));
    if ratio < lower_threshold * (1.0 - 1e-12) {
        return Err(Error::InvariantViolated(format!("dual ratio {ratio} below {lower_threshold}")));
    }
    Ok(DualResult { decomposition, pairing, budget, ratio, norm, lower_threshold })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LebesgueIdentification {
    /// `||g||_{L^w(Q0)}`.
    pub lw_norm: f64,
    /// `|Q0|^(1/v - 1/w) ||g||_{L^w}`, attained by the single atom on `Q0`.
    pub root_budget: f64,
    /// Budget of the one-atom-per-tile decomposition.
    pub tile_budget: f64,
    /// `||g||_w <= |Q0|^(1/w-1/v) * tile_budget` (needs `w <= v`).
    pub lower_holds: bool,
    /// For `w = v`: `tile_budget = ||g||_v`.
    pub tile_equality: Option<f64>,
}

/// One-atom-per-tile decompositions of `g` on the dyadic tiles at `tile_level`, `alpha = 0`.
pub fn lebesgue_identification(g: &GridFunction, params: &AtomParams, tile_level: u32) -> Result<LebesgueIdentification> {
    let domain = *g.domain();
    if params.alpha != 0.0 || params.w.is_infinite() || params.w > params.v {
        return Err(Error::InvalidParameter("identification needs alpha = 0 and w <= v < inf".into()));
    }
    let q0 = domain.cell_cube(&domain.root());
    let side = domain.side() * (-(tile_level as f64)).exp2();
    if params.requires_moments(side) {
        return Err(Error::InvalidParameter("tiles must satisfy l(R) >= c0".into()));
    }
    let lw = lebesgue_norm_cells(&domain, g.values(), domain.cell_measure(), params.w)?;
    let q0m = domain.box_measure(&q0);
    let root_budget = q0m.powf(1.0 / params.v - 1.0 / params.w) * lw;
    let mut terms = Vec::new();
    for tile in domain.cubes_at_level(tile_level) {
        let cells = domain.cell_cube(&tile);
        let vals = g.cells_of(&cells);
        let norm = lebesgue_norm_cells(&domain, &vals, domain.cell_measure(), params.w)?;
        if norm == 0.0 {
            continue;
        }
        let m = domain.box_measure(&cells);
        let factor = m.powf(1.0 / params.w - 1.0 / params.v) / norm;
        let atom = LocalAtom::new(CubeField::new(cells, vals.iter().map(|v| v * factor).collect())?, AtomKind::Grid);
        terms.push((norm * m.powf(1.0 / params.v - 1.0 / params.w), atom));
    }
    let d = AtomicDecomposition::new(vec![Polymer::new(terms)], *params);
    let tile_budget = hk_upper_bound(&d);
    let lower_holds = lw <= q0m.powf(1.0 / params.w - 1.0 / params.v) * tile_budget * (1.0 + 1e-12);
    let tile_equality = (params.w == params.v).then_some(tile_budget);
    Ok(LebesgueIdentification { lw_norm: lw, root_budget, tile_budget, lower_holds, tile_equality })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn dom(n: usize, m: i32, k: u32) -> DomainSpec {
        DomainSpec::new(n, m, k).unwrap()
    }

    #[test]
    fn tiling_polymer_atoms_validate_and_sum_back() {
        let d = dom(1, 1, 3);
        let f = GridFunction::from_fn(d, |x| (3.0 * x[0]).sin() + 0.5).unwrap();
        let big = AtomParams::new(2.0, 3.0, 1, 0.0, 4.0).unwrap();
        let g = tiling_polymer(&f, &big, 1).unwrap();
        assert_eq!(g.terms.len(), 2);
        assert!(AtomicDecomposition::new(vec![g.clone()], big).validate(&d).iter().all(|r| r.valid));
        let small = AtomParams::new(2.0, f64::INFINITY, 0, 0.0, 0.5).unwrap();
        let g = tiling_polymer(&f, &small, 2).unwrap();
        assert_eq!(g.terms.len(), 4);
        assert!(AtomicDecomposition::new(vec![g], small).validate(&d).iter().all(|r| r.valid));
        let plain = AtomParams::new(2.0, 2.0, 0, 0.0, 0.1).unwrap();
        let whole = tiling_polymer(&f, &plain, 2).unwrap();
        let one = GridFunction::constant(d, 1.0);
        assert_relative_eq!(whole.pair(&one), f.values().iter().sum::<f64>() * d.cell_measure(), max_relative = 1e-12);
    }

    #[test]
    fn indicator_atoms() {
        let d = dom(1, 1, 3);
        let p = AtomParams::new(2.0, 3.0, 0, 0.0, 1.0).unwrap();
        let big = d.cell_cube(&d.cube(1, &[0]).unwrap());
        let a = LocalAtom::normalized_indicator(&d, big, &p);
        let rep = validate_atom(&d, &a, &p);
        assert!(rep.valid);
        assert_relative_eq!(rep.size_ratio, 1.0, max_relative = 1e-14);
        let small = d.cell_cube(&d.cube(2, &[0]).unwrap());
        let rep = validate_atom(&d, &LocalAtom::normalized_indicator(&d, small, &p), &p);
        assert!(rep.moments_required && !rep.valid);
        let zero = LocalAtom::new(CubeField::zeros(small), AtomKind::Grid);
        assert!(validate_atom(&d, &zero, &p).valid);
    }

    #[test]
    fn pairing_examples() {
        let d = dom(1, 0, 2);
        let p = AtomParams::new(2.0, 2.0, 0, 0.0, 1.0).unwrap();
        let root = d.cell_cube(&d.root());
        let a = LocalAtom::new(CubeField::new(root, vec![1.0; 4]).unwrap(), AtomKind::Indicator);
        let dec = AtomicDecomposition::new(vec![Polymer::new(vec![(1.0, a)])], p);
        let one = GridFunction::constant(d, 1.0);
        assert_relative_eq!(pair(&dec, &one, true).unwrap(), 1.0);
        let small = d.cell_cube(&d.cube(1, &[0]).unwrap());
        let m = LocalAtom::new(CubeField::new(small, vec![1.0, -1.0]).unwrap(), AtomKind::Grid);
        let dec = AtomicDecomposition::new(vec![Polymer::new(vec![(2.0, m)])], p);
        assert_eq!(pair(&dec, &one, true).unwrap(), 0.0);
        let odd = CellCube::new(&[1], 2).unwrap();
        let dec = AtomicDecomposition::new(vec![Polymer::new(vec![(1.0, LocalAtom::new(CubeField::zeros(odd), AtomKind::Grid))])], p);
        assert!(matches!(pair(&dec, &one, true), Err(Error::NonDyadicCube)));
        assert!(pair(&dec, &one, false).is_ok());
    }

    #[test]
    fn budgets() {
        let d = dom(1, 0, 2);
        let p = AtomParams::new(2.0, 2.0, 0, 0.0, 1.0).unwrap();
        let cube = d.cell_cube(&d.cube(2, &[0]).unwrap());
        let z = LocalAtom::new(CubeField::zeros(cube), AtomKind::Grid);
        let g = Polymer::new(vec![(3.0, z.clone()), (4.0, z.clone())]);
        assert_relative_eq!(g.budget(2.0), 5.0);
        let two = AtomicDecomposition::new(vec![Polymer::new(vec![(1.0, z.clone())]), Polymer::new(vec![(-1.0, z)])], p);
        assert_relative_eq!(hk_upper_bound(&two), 2.0);
        assert_eq!(hk_upper_bound(&AtomicDecomposition::new(vec![], p)), 0.0);
        let root = d.cell_cube(&d.root());
        let single = AtomicDecomposition::new(vec![Polymer::new(vec![(2.5, LocalAtom::new(CubeField::zeros(root), AtomKind::Grid))])], p);
        let h = h1_upper_bound(&single, &d, &root).unwrap();
        assert_relative_eq!(h.fine, 2.5);
        assert!(h.holds);
    }

    #[test]
    fn refine_constant_atom() {
        let d = dom(1, 0, 3);
        let p = AtomParams::new(1.5, 2.0, 1, 0.0, 1.0).unwrap();
        let root = d.cell_cube(&d.root());
        let a = LocalAtom::new(CubeField::new(root, vec![1.0; 8]).unwrap(), AtomKind::Indicator);
        let g = Polymer::new(vec![(1.0, a)]);
        let r = refine_atoms(&d, &g, &p, 4.0).unwrap();
        assert_eq!(r.decomposition.polymers.len(), 1);
        assert_eq!(r.decomposition.polymers[0].terms.len(), 1);
        let f = GridFunction::from_fn(d, |x| x[0] * x[0]).unwrap();
        assert_relative_eq!(
            pair(&r.decomposition, &f, true).unwrap(),
            g.pair(&f),
            max_relative = 1e-12
        );
        let pass = refine_atoms(&d, &g, &p.with_w(f64::INFINITY), 4.0).unwrap();
        assert!(pass.passthrough);
        assert_eq!(pass.output_budget, pass.input_budget);
    }

    #[test]
    fn dual_constant_is_exact() {
        let d = dom(1, 2, 4);
        let f = GridFunction::constant(d, -2.0);
        let p = AtomParams::new(2.0, 2.0, 0, 0.0, 1.0).unwrap();
        let np = p.dual_norm_params().unwrap();
        let norm = jn_norm_dyadic(&f, &np).unwrap();
        let tiles: Vec<CellCube> = d.cubes_at_level(2).map(|c| d.cell_cube(&c)).collect();
        let packing = Packing {
            log_weights: tiles.iter().map(|_| 2.0f64 * 2.0f64.ln()).collect(),
            cubes: tiles,
            p: np.p,
        };
        let r = dual_optimizer(&f, &packing, &p).unwrap();
        assert_relative_eq!(r.ratio, norm.value, max_relative = 1e-12);
        assert_relative_eq!(r.norm, norm.value, max_relative = 1e-12);
    }

    #[test]
    fn lebesgue_tiles() {
        let d = dom(2, 1, 3);
        let g = GridFunction::from_fn(d, |x| x[0] - 2.0 * x[1] + 0.3).unwrap();
        let p = AtomParams::new(3.0, 3.0, 1, 0.0, 1.0).unwrap();
        let r = lebesgue_identification(&g, &p, 1).unwrap();
        assert_relative_eq!(r.tile_equality.unwrap(), r.lw_norm, max_relative = 1e-12);
        let p = AtomParams::new(3.0, 2.0, 1, 0.0, 1.0).unwrap();
        let r = lebesgue_identification(&g, &p, 1).unwrap();
        assert!(r.lower_holds);
        assert!(r.root_budget <= r.tile_budget * (1.0 + 1e-12));
    }
}
