//! Moment-orthogonal polynomial projections and their constants.
//!
//! Two realisations are provided. [`project`] returns the analytic polynomial
//! `P_Q f` with `int_Q (f - P) x^beta = 0`. [`CellModel`] is the same projection
//! restricted to piecewise-constant data: it projects onto cell averages of
//! `P_s(Q)`, so residuals are again piecewise constant and their moments vanish
//! exactly. Norms, decompositions and atoms use the cell model.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{poly_space_dim, power_integral, CellCube, DomainSpec, DyadicCube, GridFunction, MultiIndex, MAX_DIM};
use crate::norms::NormParams;

/// `int_{-1/2}^{1/2} u^k du`.
fn centered_moment(k: u32) -> f64 {
    if k % 2 == 1 {
        0.0
    } else {
        0.5f64.powi(k as i32) / (k + 1) as f64
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// An element of `P_s(Q)` in the basis `((x - center(Q)) / l(Q))^beta`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpacePolynomial {
    dim: usize,
    lower: [f64; MAX_DIM],
    side: f64,
    degree: usize,
    coeffs: Vec<f64>,
}

impl SpacePolynomial {
    pub fn zero(cube: &DyadicCube, degree: usize) -> Self {
        Self::zero_on_box(cube.dim(), cube.lower_corner(), cube.side(), degree)
    }

    pub fn zero_on_box(dim: usize, lower: [f64; MAX_DIM], side: f64, degree: usize) -> Self {
        Self { dim, lower, side, degree, coeffs: vec![0.0; poly_space_dim(dim, degree)] }
    }

    pub fn from_coeffs(cube: &DyadicCube, degree: usize, coeffs: Vec<f64>) -> Result<Self> {
        Self::from_coeffs_on_box(cube.dim(), cube.lower_corner(), cube.side(), degree, coeffs)
    }

    pub fn from_coeffs_on_box(
        dim: usize,
        lower: [f64; MAX_DIM],
        side: f64,
        degree: usize,
        coeffs: Vec<f64>,
    ) -> Result<Self> {
        if coeffs.len() != poly_space_dim(dim, degree) {
            return Err(Error::InvalidParameter(format!(
                "expected {} coefficients, got {}",
                poly_space_dim(dim, degree),
                coeffs.len()
            )));
        }
        Ok(Self { dim, lower, side, degree, coeffs })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn center(&self) -> [f64; MAX_DIM] {
        let mut c = self.lower;
        for v in c.iter_mut().take(self.dim) {
            *v += 0.5 * self.side;
        }
        c
    }

    /// Coefficients ordered as [`MultiIndex::up_to`].
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn basis(&self) -> Vec<MultiIndex> {
        MultiIndex::up_to(self.dim, self.degree)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    fn local(&self, x: &[f64]) -> [f64; MAX_DIM] {
        let c = self.center();
        let mut u = [0.0; MAX_DIM];
        for i in 0..self.dim {
            u[i] = (x[i] - c[i]) / self.side;
        }
        u
    }

    pub fn eval_local(&self, u: &[f64]) -> f64 {
        self.basis()
            .iter()
            .zip(&self.coeffs)
            .map(|(b, &c)| c * b.exps().iter().zip(u).map(|(&e, &ui)| ui.powi(e as i32)).product::<f64>())
            .sum()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.eval_local(&self.local(x))
    }

    /// `int_B P dx` over the axis-aligned box `B = [lo, hi)`.
    pub fn integrate_box(&self, lo: &[f64], hi: &[f64]) -> f64 {
        let ulo = self.local(lo);
        let uhi = self.local(hi);
        let jac = self.side.powi(self.dim as i32);
        self.basis()
            .iter()
            .zip(&self.coeffs)
            .map(|(b, &c)| {
                c * (0..self.dim)
                    .map(|i| power_integral(ulo[i], uhi[i], b.exps()[i]))
                    .product::<f64>()
            })
            .sum::<f64>()
            * jac
    }

    /// `int_Q P x^beta dx` over the anchor cube, in global coordinates.
    pub fn integrate_global_monomial(&self, beta: &MultiIndex) -> f64 {
        let c = self.center();
        let l = self.side;
        let jac = l.powi(self.dim as i32);
        self.basis()
            .iter()
            .zip(&self.coeffs)
            .map(|(g, &coef)| {
                coef * (0..self.dim)
                    .map(|i| {
                        let b = beta.exps()[i];
                        (0..=b)
                            .map(|j| {
                                binomial(b, j)
                                    * c[i].powi((b - j) as i32)
                                    * l.powi(j as i32)
                                    * centered_moment(g.exps()[i] + j)
                            })
                            .sum::<f64>()
                    })
                    .product::<f64>()
            })
            .sum::<f64>()
            * jac
    }

    /// Averages of `P` over the cells of `cube`, in local row-major order.
    pub fn cell_averages(&self, domain: &DomainSpec, cube: &CellCube) -> Vec<f64> {
        let h = domain.cell_side();
        let mcell = domain.cell_measure();
        domain
            .cell_indices(cube)
            .into_iter()
            .map(|lin| {
                let cc = domain.cell_coords(lin);
                let mut lo = [0.0; MAX_DIM];
                let mut hi = [0.0; MAX_DIM];
                for i in 0..self.dim {
                    lo[i] = cc[i] as f64 * h;
                    hi[i] = (cc[i] + 1) as f64 * h;
                }
                self.integrate_box(&lo[..self.dim], &hi[..self.dim]) / mcell
            })
            .collect()
    }

    pub fn scale(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= factor);
        out
    }

    pub fn add(&self, other: &SpacePolynomial) -> Result<Self> {
        if self.dim != other.dim || self.degree != other.degree || self.lower != other.lower || self.side != other.side
        {
            return Err(Error::InvalidParameter("polynomials anchored on different cubes".into()));
        }
        let mut out = self.clone();
        out.coeffs.iter_mut().zip(&other.coeffs).for_each(|(a, b)| *a += b);
        Ok(out)
    }
}

/// Gram matrix of the centred scaled monomials in the normalised measure.
fn analytic_gram(dim: usize, basis: &[MultiIndex]) -> DMatrix<f64> {
    DMatrix::from_fn(basis.len(), basis.len(), |a, b| {
        (0..dim).map(|i| centered_moment(basis[a].exps()[i] + basis[b].exps()[i])).product()
    })
}

/// 1-D integrals `int_{cell j} u^k du` on the reference cube split into `side` cells.
fn reference_axis_integrals(side: usize, s: usize) -> Vec<Vec<f64>> {
    let inv = 1.0 / side as f64;
    (0..side)
        .map(|j| {
            let a = -0.5 + j as f64 * inv;
            let b = -0.5 + (j + 1) as f64 * inv;
            (0..=s as u32).map(|k| power_integral(a, b, k)).collect()
        })
        .collect()
}

/// The analytic projection `P_Q^(s) f` of a grid function onto `P_s(Q)`.
pub fn project(f: &GridFunction, cube: &DyadicCube, s: usize) -> Result<SpacePolynomial> {
    let domain = f.domain();
    if !domain.contains(cube) {
        return Err(Error::CubeOutsideDomain);
    }
    let cells = domain.cell_cube(cube);
    project_cells(domain, &f.cells_of(&cells), &cells, s)
}

/// Analytic projection of local cell values on a cell-aligned cube.
pub fn project_cells(domain: &DomainSpec, local: &[f64], cube: &CellCube, s: usize) -> Result<SpacePolynomial> {
    let n = domain.dim();
    let basis = MultiIndex::up_to(n, s);
    let gram = analytic_gram(n, &basis);
    let axis = reference_axis_integrals(cube.side() as usize, s);
    let side = cube.side() as usize;
    let mut rhs = DVector::zeros(basis.len());
    let mut coords = [0usize; MAX_DIM];
    for &v in local {
        if v != 0.0 {
            for (row, b) in basis.iter().enumerate() {
                let w: f64 = (0..n).map(|i| axis[coords[i]][b.exps()[i] as usize]).product();
                rhs[row] += v * w;
            }
        }
        for i in (0..n).rev() {
            coords[i] += 1;
            if coords[i] < side {
                break;
            }
            coords[i] = 0;
        }
    }
    let chol = gram.cholesky().ok_or(Error::SingularGram)?;
    let c = chol.solve(&rhs);
    SpacePolynomial::from_coeffs_on_box(n, domain.box_lower(cube), domain.box_side(cube), s, c.iter().copied().collect())
}

/// `P_{Q,c0}`: the projection when `l(Q) < c0`, zero otherwise.
pub fn localized_project(f: &GridFunction, cube: &DyadicCube, params: &NormParams) -> Result<SpacePolynomial> {
    if params.uses_projection(cube.log2_side()) {
        Ok(project(f, cube, params.s)?)
    } else {
        Ok(SpacePolynomial::zero(cube, params.s))
    }
}

/// Reference-cube data of the cell-model projection for cubes of `side^n` cells.
#[derive(Debug)]
pub struct CellBasis {
    dim: usize,
    side: usize,
    degree: usize,
    basis: Vec<MultiIndex>,
    /// `int_{cell} u^beta du` on the unit-measure reference cube, row per cell.
    moments: Vec<f64>,
    /// Pseudo-inverse of the Gram matrix of the cell-averaged basis.
    gram_pinv: Vec<f64>,
}

impl CellBasis {
    fn build(dim: usize, side: usize, degree: usize) -> Self {
        let basis = MultiIndex::up_to(dim, degree);
        let nb = basis.len();
        let axis = reference_axis_integrals(side, degree);
        let cells = side.pow(dim as u32);
        let mut moments = vec![0.0; cells * nb];
        let mut coords = [0usize; MAX_DIM];
        for c in 0..cells {
            for (j, b) in basis.iter().enumerate() {
                moments[c * nb + j] = (0..dim).map(|i| axis[coords[i]][b.exps()[i] as usize]).product();
            }
            for i in (0..dim).rev() {
                coords[i] += 1;
                if coords[i] < side {
                    break;
                }
                coords[i] = 0;
            }
        }
        let inv_w = cells as f64;
        let mut gram = DMatrix::<f64>::zeros(nb, nb);
        for c in 0..cells {
            let row = &moments[c * nb..(c + 1) * nb];
            for a in 0..nb {
                for b in 0..nb {
                    gram[(a, b)] += row[a] * row[b] * inv_w;
                }
            }
        }
        let eig = nalgebra::SymmetricEigen::new(gram);
        let lmax = eig.eigenvalues.iter().fold(0.0f64, |m: f64, v: &f64| m.max(v.abs()));
        let tol = lmax * 1e-12;
        let mut pinv = DMatrix::<f64>::zeros(nb, nb);
        for (k, &lam) in eig.eigenvalues.iter().enumerate() {
            if lam > tol {
                let v = eig.eigenvectors.column(k);
                pinv += (v * v.transpose()) / lam;
            }
        }
        let gram_pinv = (0..nb * nb).map(|i| pinv[(i / nb, i % nb)]).collect();
        Self { dim, side, degree, basis, moments, gram_pinv }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn basis(&self) -> &[MultiIndex] {
        &self.basis
    }

    pub fn cell_count(&self) -> usize {
        self.side.pow(self.dim as u32)
    }

    /// Normalised moments `(1/|Q|) int_Q g u^beta` of local cell values `g`.
    pub fn moments_of(&self, local: &[f64]) -> Vec<f64> {
        let nb = self.basis.len();
        let mut out = vec![0.0; nb];
        for (c, &v) in local.iter().enumerate() {
            if v != 0.0 {
                let row = &self.moments[c * nb..(c + 1) * nb];
                for j in 0..nb {
                    out[j] += v * row[j];
                }
            }
        }
        out
    }

    /// Coefficients of the projection in the centred scaled monomial basis.
    pub fn coefficients(&self, local: &[f64]) -> Vec<f64> {
        let nb = self.basis.len();
        let b = self.moments_of(local);
        (0..nb).map(|i| (0..nb).map(|j| self.gram_pinv[i * nb + j] * b[j]).sum()).collect()
    }

    /// Cell values of the projection of `local`.
    pub fn project(&self, local: &[f64]) -> Vec<f64> {
        let nb = self.basis.len();
        let coeffs = self.coefficients(local);
        let inv_w = self.cell_count() as f64;
        (0..self.cell_count())
            .map(|c| {
                let row = &self.moments[c * nb..(c + 1) * nb];
                row.iter().zip(&coeffs).map(|(m, k)| m * k).sum::<f64>() * inv_w
            })
            .collect()
    }

    /// `max_c K(c,c)` of the discrete kernel, the operator bound from mean-|f| to sup.
    pub fn discrete_constant(&self) -> f64 {
        let nb = self.basis.len();
        let inv_w = self.cell_count() as f64;
        (0..self.cell_count())
            .map(|c| {
                let y: Vec<f64> = self.moments[c * nb..(c + 1) * nb].iter().map(|m| m * inv_w).collect();
                let mut k = 0.0;
                for i in 0..nb {
                    for j in 0..nb {
                        k += y[i] * self.gram_pinv[i * nb + j] * y[j];
                    }
                }
                k
            })
            .fold(0.0, f64::max)
    }
}

type BasisKey = (usize, usize, usize);

fn basis_cache() -> &'static Mutex<HashMap<BasisKey, Arc<CellBasis>>> {
    static CACHE: OnceLock<Mutex<HashMap<BasisKey, Arc<CellBasis>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Shared reference data for cubes with `side` cells per axis.
pub fn cell_basis(dim: usize, side: usize, degree: usize) -> Arc<CellBasis> {
    let key = (dim, side, degree);
    if let Some(b) = basis_cache().lock().expect("basis cache").get(&key) {
        return Arc::clone(b);
    }
    let built = Arc::new(CellBasis::build(dim, side, degree));
    basis_cache().lock().expect("basis cache").entry(key).or_insert(built).clone()
}

/// Cell-model projection `P^_Q` on a grid.
#[derive(Clone, Copy, Debug)]
pub struct CellModel {
    domain: DomainSpec,
    degree: usize,
}

impl CellModel {
    pub fn new(domain: DomainSpec, degree: usize) -> Self {
        Self { domain, degree }
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn basis_for(&self, cube: &CellCube) -> Arc<CellBasis> {
        cell_basis(self.domain.dim(), cube.side() as usize, self.degree)
    }

    /// Projected cell values on `cube` of local values `local`.
    pub fn project_local(&self, cube: &CellCube, local: &[f64]) -> Vec<f64> {
        if self.degree == 0 {
            let mean = local.iter().sum::<f64>() / local.len() as f64;
            return vec![mean; local.len()];
        }
        self.basis_for(cube).project(local)
    }

    /// Residual `g - P^_Q g` on the cells of `cube`.
    pub fn residual_local(&self, cube: &CellCube, local: &[f64]) -> Vec<f64> {
        let p = self.project_local(cube, local);
        local.iter().zip(p).map(|(g, pv)| g - pv).collect()
    }

    pub fn project(&self, f: &GridFunction, cube: &CellCube) -> Vec<f64> {
        self.project_local(cube, &f.cells_of(cube))
    }

    /// The projection as a polynomial on `cube`, whose cell averages reproduce [`CellModel::project`].
    pub fn polynomial(&self, f: &GridFunction, cube: &CellCube) -> SpacePolynomial {
        let coeffs = self.basis_for(cube).coefficients(&f.cells_of(cube));
        SpacePolynomial::from_coeffs_on_box(
            self.domain.dim(),
            self.domain.box_lower(cube),
            self.domain.box_side(cube),
            self.degree,
            coeffs,
        )
        .expect("coefficient count matches basis")
    }

    /// Largest normalised moment `|(1/|Q|) int_Q g u^beta|` of local values.
    pub fn max_moment(&self, cube: &CellCube, local: &[f64]) -> f64 {
        self.basis_for(cube).moments_of(local).iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Orthonormal shifted Legendre values `sqrt(2k+1) P_k(2u)` for `u` in `[-1/2, 1/2]`.
fn legendre_values(u: f64, s: usize) -> Vec<f64> {
    let t = 2.0 * u;
    let mut p = vec![0.0; s + 1];
    p[0] = 1.0;
    if s >= 1 {
        p[1] = t;
    }
    for k in 1..s {
        p[k + 1] = ((2 * k + 1) as f64 * t * p[k] - k as f64 * p[k - 1]) / (k + 1) as f64;
    }
    p.iter().enumerate().map(|(k, v)| v * ((2 * k + 1) as f64).sqrt()).collect()
}

/// `sup_{x,y in Q} |K_s(x,y)|` for the reproducing kernel of `P_s` in the normalised measure.
///
/// The sup is taken over a `resolution^n` grid of the reference cube that includes its corners.
pub fn projection_constant(s: usize, n: usize, resolution: usize) -> Result<f64> {
    if resolution < 64 {
        return Err(Error::InvalidParameter("sampling resolution must be at least 64 per axis".into()));
    }
    if n == 0 || n > MAX_DIM {
        return Err(Error::InvalidParameter(format!("dimension {n} out of range")));
    }
    let basis = MultiIndex::up_to(n, s);
    let axis: Vec<Vec<f64>> = (0..resolution)
        .map(|j| legendre_values(-0.5 + j as f64 / (resolution - 1) as f64, s))
        .collect();
    let total = resolution.pow(n as u32);
    let mut best = 0.0f64;
    let mut coords = [0usize; MAX_DIM];
    for _ in 0..total {
        let diag: f64 = basis
            .iter()
            .map(|b| (0..n).map(|i| axis[coords[i]][b.exps()[i] as usize].powi(2)).product::<f64>())
            .sum();
        best = best.max(diag);
        for i in (0..n).rev() {
            coords[i] += 1;
            if coords[i] < resolution {
                break;
            }
            coords[i] = 0;
        }
    }
    Ok(best)
}

/// Closed form `sum_{|beta|<=s} prod_i (2 beta_i + 1)` of [`projection_constant`].
pub fn projection_constant_exact(s: usize, n: usize) -> f64 {
    MultiIndex::up_to(n, s)
        .iter()
        .map(|b| b.exps().iter().map(|&e| (2 * e + 1) as f64).product::<f64>())
        .sum()
}

/// Cached `C_(s)` for the given dimension.
pub fn sharp_constant(s: usize, n: usize) -> f64 {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(&v) = cache.lock().expect("constant cache").get(&(s, n)) {
        return v;
    }
    let v = projection_constant(s, n, 64).expect("valid resolution");
    cache.lock().expect("constant cache").insert((s, n), v);
    v
}

/// Empirical lower estimate of `C_(s,n)`: the max of `sup|P| / (avg |P|^q)^(1/q)` over random `P`.
pub fn poly_norm_ratio_constant(s: usize, n: usize, q: f64, trials: usize) -> Result<f64> {
    poly_norm_ratio_constant_seeded(s, n, q, trials, 0x5eed)
}

pub fn poly_norm_ratio_constant_seeded(s: usize, n: usize, q: f64, trials: usize, seed: u64) -> Result<f64> {
    if trials < 100 {
        return Err(Error::InvalidParameter("at least 100 trials required".into()));
    }
    if q < 1.0 || !q.is_finite() {
        return Err(Error::InvalidParameter("q must be finite and at least 1".into()));
    }
    if n == 0 || n > MAX_DIM {
        return Err(Error::InvalidParameter(format!("dimension {n} out of range")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let basis = MultiIndex::up_to(n, s);
    let mut best = 1.0f64;
    for _ in 0..trials {
        let coeffs: Vec<f64> = basis.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
        if coeffs.iter().all(|&c| c == 0.0) {
            continue;
        }
        if let Some(r) = poly_norm_ratio(n, s, &coeffs, q) {
            best = best.max(r);
        }
    }
    Ok(best)
}

/// `sup|P| / (avg |P|^q)^(1/q)` on the reference cube, `None` for the zero polynomial.
pub fn poly_norm_ratio(n: usize, s: usize, coeffs: &[f64], q: f64) -> Option<f64> {
    let per_axis = match n {
        1 => 256,
        2 => 64,
        _ => 24,
    };
    let p = SpacePolynomial::from_coeffs_on_box(n, [-0.5; MAX_DIM], 1.0, s, coeffs.to_vec()).ok()?;
    let eval_grid = |pts: &dyn Fn(usize) -> f64, count: usize, f: &mut dyn FnMut(f64)| {
        let mut coords = [0usize; MAX_DIM];
        for _ in 0..count.pow(n as u32) {
            let x: Vec<f64> = (0..n).map(|i| pts(coords[i])).collect();
            f(p.eval(&x));
            for i in (0..n).rev() {
                coords[i] += 1;
                if coords[i] < count {
                    break;
                }
                coords[i] = 0;
            }
        }
    };
    let mut sup = 0.0f64;
    let mut sum = 0.0f64;
    eval_grid(&|j| -0.5 + (j as f64 + 0.5) / per_axis as f64, per_axis, &mut |v| {
        sup = sup.max(v.abs());
        sum += v.abs().powf(q);
    });
    eval_grid(&|j| -0.5 + j as f64 / per_axis as f64, per_axis + 1, &mut |v| sup = sup.max(v.abs()));
    let mean = (sum / per_axis.pow(n as u32) as f64).powf(1.0 / q);
    if mean == 0.0 {
        None
    } else {
        Some(sup / mean)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn dom(n: usize, m: i32, k: u32) -> DomainSpec {
        DomainSpec::new(n, m, k).unwrap()
    }

    #[test]
    fn step_function_projection() {
        let d = dom(1, 0, 2);
        let f = GridFunction::new(d, vec![1.0, 1.0, -1.0, -1.0]).unwrap();
        let p = project(&f, &d.root(), 1).unwrap();
        for x in [0.0, 0.1, 0.5, 0.77, 1.0] {
            assert_relative_eq!(p.eval(&[x]), 1.5 - 3.0 * x, epsilon = 1e-13);
        }
    }

    #[test]
    fn constants_and_mean() {
        let d = dom(2, 1, 3);
        let f = GridFunction::constant(d, 2.5);
        let p = project(&f, &d.root(), 3).unwrap();
        assert_relative_eq!(p.coeffs()[0], 2.5, epsilon = 1e-12);
        assert!(p.coeffs()[1..].iter().all(|c| c.abs() < 1e-12));
        let g = GridFunction::from_fn(d, |x| x[0] * x[1]).unwrap();
        let cube = d.cube(1, &[1, 0]).unwrap();
        let p0 = project(&g, &cube, 0).unwrap();
        assert_relative_eq!(p0.coeffs()[0], g.cell_average(&cube).unwrap(), epsilon = 1e-13);
    }

    #[test]
    fn localized_truncation() {
        let d = dom(1, 1, 3);
        let f = GridFunction::constant(d, 1.0);
        let params = NormParams::new(2.0, 1.0, 1, 0.0, 1.0).unwrap();
        let big = d.cube(1, &[0]).unwrap();
        assert!(localized_project(&f, &big, &params).unwrap().is_zero());
        let small = d.cube(2, &[1]).unwrap();
        assert_eq!(localized_project(&f, &small, &params).unwrap(), project(&f, &small, 1).unwrap());
    }

    #[test]
    fn analytic_moments_vanish() {
        let d = dom(2, 0, 3);
        let f = GridFunction::from_fn(d, |x| (5.0 * x[0]).cos() + x[1].powi(3)).unwrap().with_moment_order(3);
        let cube = d.cube(1, &[1, 1]).unwrap();
        let p = project(&f, &cube, 3).unwrap();
        for beta in MultiIndex::up_to(2, 3) {
            let fi = f.integrate_monomial(&cube, &beta).unwrap();
            let pi = p.integrate_global_monomial(&beta);
            assert!((fi - pi).abs() <= 1e-10 * (1.0 + fi.abs()));
        }
    }

    #[test]
    fn sampled_constants() {
        assert_relative_eq!(projection_constant(0, 1, 64).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(projection_constant(1, 1, 64).unwrap(), 4.0, epsilon = 1e-12);
        assert_relative_eq!(projection_constant(1, 2, 64).unwrap(), 7.0, epsilon = 1e-12);
        assert_relative_eq!(projection_constant(2, 2, 64).unwrap(), 26.0, epsilon = 1e-10);
        for (s, n) in [(2, 1), (3, 1), (3, 2), (2, 3)] {
            assert_relative_eq!(
                projection_constant(s, n, 64).unwrap(),
                projection_constant_exact(s, n),
                epsilon = 1e-9
            );
        }
        assert!(projection_constant(1, 1, 10).is_err());
    }

    #[test]
    fn discrete_kernel_below_sharp_constant() {
        for n in 1..=2 {
            for s in 0..=3 {
                let cs = projection_constant_exact(s, n);
                let sides: &[usize] = if n == 1 { &[1, 2, 3, 4, 8, 16, 64] } else { &[1, 2, 4, 8, 16] };
                for &side in sides {
                    let k = cell_basis(n, side, s).discrete_constant();
                    assert!(k <= cs * (1.0 + 1e-12), "n={n} s={s} side={side}: {k} > {cs}");
                }
            }
        }
    }

    #[test]
    fn cell_model_reproduces_cell_averaged_polynomials() {
        let d = dom(2, 0, 3);
        let cube = d.cell_cube(&d.root());
        let poly = SpacePolynomial::from_coeffs_on_box(2, [0.0; MAX_DIM], 1.0, 2, vec![1.0, -2.0, 0.5, 3.0, 1.0, -1.0])
            .unwrap();
        let vals = poly.cell_averages(&d, &cube);
        let model = CellModel::new(d, 2);
        let proj = model.project_local(&cube, &vals);
        for (a, b) in vals.iter().zip(&proj) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
        let f = GridFunction::from_fn(d, |x| (9.0 * x[0] * x[1]).sin()).unwrap();
        let res = model.residual_local(&cube, &f.cells_of(&cube));
        assert!(model.max_moment(&cube, &res) < 1e-14);
    }

    #[test]
    fn ratio_constants() {
        assert_relative_eq!(poly_norm_ratio(1, 1, &[0.0, 1.0], 1.0).unwrap(), 2.0, epsilon = 1e-12);
        assert_relative_eq!(poly_norm_ratio(2, 0, &[3.0], 2.0).unwrap(), 1.0, epsilon = 1e-12);
        assert!(poly_norm_ratio(1, 1, &[0.0, 0.0], 1.0).is_none());
        let c = poly_norm_ratio_constant(2, 2, 1.5, 100).unwrap();
        assert!(c >= 1.0);
        assert!(poly_norm_ratio_constant(1, 1, 1.0, 10).is_err());
    }
}
