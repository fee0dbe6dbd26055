//! Dyadic maximal function, stopping cubes and the Calderon-Zygmund decomposition.

use crate::error::{Error, Result};
use crate::grid::{dyadic_sums, CellCube, CubeField, DomainSpec, DyadicCube, GridFunction};
use crate::poly::{sharp_constant, CellModel};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CzConfig {
    pub s: usize,
    /// `C~`, strictly greater than `2^n`.
    pub ratio: f64,
    /// `gamma >= avg_Q |f|`.
    pub gamma: f64,
}

impl CzConfig {
    pub fn new(s: usize, ratio: f64, gamma: f64) -> Self {
        Self { s, ratio, gamma }
    }

    /// `C~ = 2^(n+1)` and `gamma = avg_Q |f|`.
    pub fn default_for(field: &CubeField, s: usize) -> Self {
        let n = field.cube().dim();
        Self { s, ratio: ((n + 1) as f64).exp2(), gamma: mean_abs(field.values()) }
    }

    fn validate(&self, dim: usize, mean: f64) -> Result<()> {
        if !(self.ratio > (dim as f64).exp2()) || !self.ratio.is_finite() {
            return Err(Error::RatioTooSmall);
        }
        if !self.gamma.is_finite() || self.gamma < mean * (1.0 - 1e-12) {
            return Err(Error::ThresholdBelowMean);
        }
        Ok(())
    }
}

fn mean_abs(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum::<f64>() / v.len() as f64
}

/// Averages of `|f|` over every dyadic subcube of a cube, in a local coordinate system.
struct LocalTree {
    local: DomainSpec,
    origin: CellCube,
    averages: Vec<Vec<f64>>,
}

impl LocalTree {
    fn new(field: &CubeField) -> Result<Self> {
        let cube = *field.cube();
        if !cube.side().is_power_of_two() {
            return Err(Error::InvalidParameter("decomposition cube must have 2^d cells per side".into()));
        }
        let depth = cube.side().trailing_zeros();
        let local = DomainSpec::new(cube.dim(), 0, depth)?;
        let abs: Vec<f64> = field.values().iter().map(|v| v.abs()).collect();
        let sums = dyadic_sums(&local, &abs);
        let averages = sums
            .into_iter()
            .enumerate()
            .map(|(k, lvl)| {
                let cells = (1usize << ((depth as usize - k) * cube.dim())) as f64;
                lvl.into_iter().map(|v| v / cells).collect()
            })
            .collect();
        Ok(Self { local, origin: cube, averages })
    }

    fn maximal(&self) -> Vec<f64> {
        let mut running = vec![self.averages[0][0]];
        for k in 1..=self.local.depth() {
            running = self
                .local
                .cubes_at_level(k)
                .map(|c| {
                    let parent = c.parent().expect("level above zero").linear_index();
                    running[parent].max(self.averages[k as usize][c.linear_index()])
                })
                .collect();
        }
        running
    }

    /// Maximal local cubes with average above `t`, sorted by (level, index).
    fn stopping(&self, t: f64) -> Vec<DyadicCube> {
        let mut out = Vec::new();
        let mut stack = vec![self.local.root()];
        while let Some(c) = stack.pop() {
            if self.averages[c.level() as usize][c.linear_index()] > t {
                out.push(c);
            } else if let Ok(kids) = self.local.cube_children(&c) {
                stack.extend(kids);
            }
        }
        out.sort();
        out
    }

    fn global(&self, c: &DyadicCube) -> CellCube {
        let lc = self.local.cell_cube(c);
        let origin: Vec<u32> = (0..self.origin.dim()).map(|i| self.origin.origin()[i] + lc.origin()[i]).collect();
        CellCube::new(&origin, lc.side()).expect("valid cube")
    }
}

/// `M^(d)_Q f` on the cells of `Q`, zero elsewhere.
pub fn dyadic_maximal(f: &GridFunction, cube: &DyadicCube) -> Result<GridFunction> {
    let cells = f.domain().cell_cube(cube);
    let field = CubeField::from_grid(f, &cells)?;
    let tree = LocalTree::new(&field)?;
    CubeField::new(cells, tree.maximal())?.to_grid(f.domain())
}

/// Maximal dyadic subcubes of `Q` with `avg |f| > C~^k gamma`.
pub fn stopping_cubes(f: &GridFunction, cube: &DyadicCube, config: &CzConfig, k: u32) -> Result<Vec<DyadicCube>> {
    if k == 0 {
        return Err(Error::InvalidParameter("stopping level k must be at least 1".into()));
    }
    let domain = f.domain();
    let cells = domain.cell_cube(cube);
    let field = CubeField::from_grid(f, &cells)?;
    let tree = LocalTree::new(&field)?;
    let t = config.ratio.powi(k as i32) * config.gamma;
    Ok(tree
        .stopping(t)
        .iter()
        .map(|c| domain.dyadic_cube(&tree.global(c)).expect("dyadic subcube of a dyadic cube"))
        .collect())
}

/// One piece `A_{k,j}` supported on the stopping cube `Q_{k,j}`.
#[derive(Clone, Debug)]
pub struct CzPiece {
    pub k: usize,
    pub field: CubeField,
    pub sup_norm: f64,
    /// `2^(n+1) C_(s) C~^(k+1) gamma`.
    pub sup_bound: f64,
    /// `max_beta |avg_Q A u^beta|` relative to `||f||_inf`.
    pub moment_residual: f64,
}

impl CzPiece {
    pub fn cube(&self) -> &CellCube {
        self.field.cube()
    }
}

#[derive(Clone, Debug, Default)]
pub struct CzDiagnostics {
    pub reconstruction_residual: f64,
    pub max_moment_residual: f64,
    pub max_sup_ratio: f64,
    pub level_sets_exact: bool,
}

#[derive(Clone, Debug)]
pub struct CzDecomposition {
    pub config: CzConfig,
    pub root: CellCube,
    /// `P_Q f` on the cells of the root.
    pub root_projection: Vec<f64>,
    /// `levels[k]` holds the pieces on the level-`k` stopping cubes.
    pub levels: Vec<Vec<CzPiece>>,
    /// `mu_k = C~^k gamma` for every populated level `k >= 1`.
    pub thresholds: Vec<f64>,
    pub sharp_constant: f64,
    pub diagnostics: CzDiagnostics,
}

impl CzDecomposition {
    pub fn pieces(&self) -> impl Iterator<Item = &CzPiece> {
        self.levels.iter().flatten()
    }

    pub fn piece_count(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }

    /// `sum_{k,j} A_{k,j}` on the cells of the root.
    pub fn reconstruct(&self, domain: &DomainSpec) -> CubeField {
        let mut acc = vec![0.0; self.root.cell_count()];
        let root_cells = domain.cell_indices(&self.root);
        let pos: std::collections::HashMap<usize, usize> =
            root_cells.iter().enumerate().map(|(p, &g)| (g, p)).collect();
        for piece in self.pieces() {
            for (&g, &v) in domain.cell_indices(piece.cube()).iter().zip(piece.field.values()) {
                acc[pos[&g]] += v;
            }
        }
        CubeField::new(self.root, acc).expect("finite sums")
    }
}

pub fn cz_decompose(f: &GridFunction, cube: &DyadicCube, config: &CzConfig) -> Result<CzDecomposition> {
    let cells = f.domain().cell_cube(cube);
    let field = CubeField::from_grid(f, &cells)?;
    cz_decompose_field(f.domain(), &field, config)
}

/// Decomposition of `f - P_Q f` for local data on a cube with `2^d` cells per side.
pub fn cz_decompose_field(domain: &DomainSpec, field: &CubeField, config: &CzConfig) -> Result<CzDecomposition> {
    let root = *field.cube();
    let n = root.dim();
    let f = field.values();
    config.validate(n, mean_abs(f))?;
    let tree = LocalTree::new(field)?;
    let local = tree.local;
    let maximal = tree.maximal();
    let mmax = maximal.iter().copied().fold(0.0, f64::max);
    let model = CellModel::new(*domain, config.s);
    let cs = sharp_constant(config.s, n);
    let fmax = field.max_abs();
    let scale = fmax.max(f64::MIN_POSITIVE);

    let mut stops: Vec<Vec<DyadicCube>> = vec![vec![local.root()]];
    let mut thresholds = Vec::new();
    let mut k = 1;
    loop {
        let t = config.ratio.powi(k) * config.gamma;
        if !(t < mmax) {
            break;
        }
        let s = tree.stopping(t);
        if s.is_empty() {
            break;
        }
        thresholds.push(t);
        stops.push(s);
        k += 1;
    }

    let local_of = |c: &DyadicCube| -> (Vec<usize>, Vec<f64>) {
        let idx = local.cell_indices(&local.cell_cube(c));
        let vals = idx.iter().map(|&i| f[i]).collect();
        (idx, vals)
    };
    let projections: Vec<Vec<Vec<f64>>> = stops
        .iter()
        .map(|level| {
            level
                .iter()
                .map(|c| {
                    let (_, vals) = local_of(c);
                    model.project_local(&tree.global(c), &vals)
                })
                .collect()
        })
        .collect();

    let total_cells = root.cell_count();
    let mut level_sets_exact = true;
    for (k, level) in stops.iter().enumerate().skip(1) {
        let mut mask = vec![false; total_cells];
        for c in level {
            for i in local.cell_indices(&local.cell_cube(c)) {
                mask[i] = true;
            }
        }
        let t = thresholds[k - 1];
        if mask.iter().zip(&maximal).any(|(&m, &mv)| m != (mv > t)) {
            level_sets_exact = false;
        }
    }
    let t_next = config.ratio.powi(stops.len() as i32) * config.gamma;
    if maximal.iter().any(|&mv| mv > t_next) {
        level_sets_exact = false;
    }

    let mut levels = Vec::with_capacity(stops.len());
    let mut recon = vec![0.0; total_cells];
    let mut diag = CzDiagnostics { level_sets_exact, ..Default::default() };
    for (k, level) in stops.iter().enumerate() {
        let mut owner: Vec<Option<(usize, usize)>> = vec![None; total_cells];
        if let Some(next) = stops.get(k + 1) {
            for (i, c) in next.iter().enumerate() {
                for (pos, cell) in local.cell_indices(&local.cell_cube(c)).into_iter().enumerate() {
                    owner[cell] = Some((i, pos));
                }
            }
        }
        let bound = ((n + 1) as f64).exp2() * cs * config.ratio.powi(k as i32 + 1) * config.gamma;
        let mut pieces = Vec::with_capacity(level.len());
        for (j, c) in level.iter().enumerate() {
            let (idx, vals) = local_of(c);
            let pk = &projections[k][j];
            let a: Vec<f64> = idx
                .iter()
                .enumerate()
                .map(|(pos, &cell)| match owner[cell] {
                    Some((i, ipos)) => projections[k + 1][i][ipos] - pk[pos],
                    None => vals[pos] - pk[pos],
                })
                .collect();
            for (&cell, &v) in idx.iter().zip(&a) {
                recon[cell] += v;
            }
            let gcube = tree.global(c);
            let moment_residual = model.max_moment(&gcube, &a) / scale;
            let field = CubeField::new(gcube, a)?;
            let sup_norm = field.max_abs();
            diag.max_moment_residual = diag.max_moment_residual.max(moment_residual);
            if bound > 0.0 {
                diag.max_sup_ratio = diag.max_sup_ratio.max(sup_norm / bound);
            } else if sup_norm > 0.0 {
                diag.max_sup_ratio = f64::INFINITY;
            }
            pieces.push(CzPiece { k, field, sup_norm, sup_bound: bound, moment_residual });
        }
        levels.push(pieces);
    }
    let root_projection = projections[0][0].clone();
    diag.reconstruction_residual = recon
        .iter()
        .zip(f)
        .zip(&root_projection)
        .map(|((r, fv), p)| (r - (fv - p)).abs())
        .fold(0.0, f64::max)
        / scale;

    let out = CzDecomposition {
        config: *config,
        root,
        root_projection,
        levels,
        thresholds,
        sharp_constant: cs,
        diagnostics: diag,
    };
    verify(&out)?;
    Ok(out)
}

fn verify(d: &CzDecomposition) -> Result<()> {
    let g = &d.diagnostics;
    if d.levels[0].len() != 1 || *d.levels[0][0].cube() != d.root {
        return Err(Error::InvariantViolated("level 0 must consist of the root cube alone".into()));
    }
    if !g.level_sets_exact {
        return Err(Error::InvariantViolated("stopping cubes differ from maximal-function level sets".into()));
    }
    if g.max_moment_residual > 1e-9 {
        return Err(Error::InvariantViolated(format!("moment residual {:e} exceeds 1e-9", g.max_moment_residual)));
    }
    if g.max_sup_ratio > 1.0 + 1e-12 {
        return Err(Error::InvariantViolated(format!("sup bound exceeded by ratio {}", g.max_sup_ratio)));
    }
    if g.reconstruction_residual > 1e-9 {
        return Err(Error::InvariantViolated(format!(
            "reconstruction residual {:e} exceeds 1e-9",
            g.reconstruction_residual
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailBound {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
    pub levels: usize,
}

/// `sum_{k>=1} mu_k^w |{|f| > mu_k}|` against `||f||_w^w / (1 - C~^-w)` on `Q0`.
pub fn tail_bound_check(f: &GridFunction, cube: &DyadicCube, ratio: f64, w: f64, gamma: f64) -> Result<TailBound> {
    if !(w >= 1.0) || !w.is_finite() {
        return Err(Error::InvalidParameter("w must be finite and at least 1".into()));
    }
    if !(ratio > 1.0) || !(gamma > 0.0) {
        return Err(Error::InvalidParameter("need C~ > 1 and gamma > 0".into()));
    }
    let cells = f.domain().cell_cube(cube);
    let mut vals: Vec<f64> = f.cells_of(&cells).into_iter().map(f64::abs).collect();
    vals.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let cm = f.domain().cell_measure();
    let vmax = vals.last().copied().unwrap_or(0.0);
    let mut lhs = 0.0;
    let mut k = 1;
    let mut levels = 0;
    loop {
        let mu = ratio.powi(k) * gamma;
        if !(mu < vmax) {
            break;
        }
        let above = vals.len() - vals.partition_point(|&v| v <= mu);
        lhs += mu.powf(w) * above as f64 * cm;
        levels += 1;
        k += 1;
    }
    let norm_w: f64 = vals.iter().map(|v| v.powf(w)).sum::<f64>() * cm;
    let rhs = norm_w / (1.0 - ratio.powf(-w));
    Ok(TailBound { lhs, rhs, pass: lhs <= rhs * (1.0 + 1e-12), levels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spike() -> GridFunction {
        GridFunction::new(DomainSpec::new(1, 0, 2).unwrap(), vec![4.0, 0.0, 0.0, 0.0]).unwrap()
    }

    #[test]
    fn maximal_function_spike() {
        let f = spike();
        let m = dyadic_maximal(&f, &f.domain().root()).unwrap();
        assert_eq!(m.values(), &[4.0, 2.0, 1.0, 1.0]);
        let c = GridFunction::constant(DomainSpec::new(2, 0, 2).unwrap(), -2.0);
        assert!(dyadic_maximal(&c, &c.domain().root()).unwrap().values().iter().all(|&v| v == 2.0));
    }

    #[test]
    fn stopping_cubes_spike() {
        let f = spike();
        let cfg = CzConfig::new(0, 3.0, 1.0);
        let s = stopping_cubes(&f, &f.domain().root(), &cfg, 1).unwrap();
        assert_eq!(s, vec![f.domain().cube(2, &[0]).unwrap()]);
        assert!(stopping_cubes(&f, &f.domain().root(), &CzConfig::new(0, 3.0, 2.0), 1).unwrap().is_empty());
    }

    #[test]
    fn spike_two_levels() {
        let f = spike();
        let d = cz_decompose(&f, &f.domain().root(), &CzConfig::new(0, 3.0, 1.0)).unwrap();
        assert_eq!(d.levels.len(), 2);
        assert_eq!(d.sharp_constant, 1.0);
        assert!(d.diagnostics.reconstruction_residual <= 1e-12);
        let a0 = d.levels[0][0].field.values();
        assert_eq!(a0, &[3.0, -1.0, -1.0, -1.0]);
        assert!(d.levels[1][0].field.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_single_zero_piece() {
        let dom = DomainSpec::new(2, 0, 3).unwrap();
        let f = GridFunction::constant(dom, 5.0);
        let d = cz_decompose(&f, &dom.root(), &CzConfig::new(1, 5.0, 5.0)).unwrap();
        assert_eq!(d.piece_count(), 1);
        assert!(d.levels[0][0].sup_norm < 1e-12);
    }

    #[test]
    fn config_errors() {
        let f = spike();
        let root = f.domain().root();
        assert!(matches!(cz_decompose(&f, &root, &CzConfig::new(0, 2.0, 1.0)), Err(Error::RatioTooSmall)));
        assert!(matches!(cz_decompose(&f, &root, &CzConfig::new(0, 3.0, 0.5)), Err(Error::ThresholdBelowMean)));
    }

    #[test]
    fn tail_bound_spike() {
        let t = tail_bound_check(&spike(), &spike().domain().root(), 2.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(t.lhs, 0.5);
        assert_relative_eq!(t.rhs, 2.0);
        assert!(t.pass);
    }

    #[test]
    fn higher_degree_pieces() {
        let dom = DomainSpec::new(2, 0, 4).unwrap();
        let f = GridFunction::from_fn(dom, |x| 1.0 / ((x[0] - 0.3).powi(2) + (x[1] - 0.7).powi(2) + 1e-3)).unwrap();
        for s in 0..=2 {
            let field = CubeField::from_grid(&f, &dom.cell_cube(&dom.root())).unwrap();
            let cfg = CzConfig::default_for(&field, s);
            let d = cz_decompose(&f, &dom.root(), &cfg).unwrap();
            assert!(d.levels.len() >= 2);
            let r = d.reconstruct(&dom);
            assert!(r.values().iter().all(|v| v.is_finite()));
        }
    }
}
