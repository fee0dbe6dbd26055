//! Dyadic domains, cubes, multi-indices and grid functions with prefix moment tables.

use std::sync::OnceLock;

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 3;

/// Upper bound on `dim * depth`, i.e. at most 2^24 cells.
pub const MAX_CELL_BITS: u32 = 24;

/// The domain `[0, 2^m)^n` resolved into `2^(nK)` cells of side `2^(m-K)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DomainSpec {
    dim: usize,
    side_exponent: i32,
    depth: u32,
}

impl DomainSpec {
    pub fn new(dim: usize, side_exponent: i32, depth: u32) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidDomain(format!("dimension {dim} not in 1..={MAX_DIM}")));
        }
        if dim as u32 * depth > MAX_CELL_BITS {
            return Err(Error::InvalidDomain(format!(
                "2^{} cells exceeds the limit of 2^{MAX_CELL_BITS}",
                dim as u32 * depth
            )));
        }
        if side_exponent.abs() > 60 {
            return Err(Error::InvalidDomain(format!("side exponent {side_exponent} out of range")));
        }
        Ok(Self { dim, side_exponent, depth })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side_exponent(&self) -> i32 {
        self.side_exponent
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn side(&self) -> f64 {
        (self.side_exponent as f64).exp2()
    }

    pub fn measure(&self) -> f64 {
        (self.side_exponent as f64 * self.dim as f64).exp2()
    }

    pub fn cells_per_axis(&self) -> usize {
        1usize << self.depth
    }

    pub fn cell_count(&self) -> usize {
        1usize << (self.depth as usize * self.dim)
    }

    pub fn cell_log2_side(&self) -> i32 {
        self.side_exponent - self.depth as i32
    }

    pub fn cell_side(&self) -> f64 {
        (self.cell_log2_side() as f64).exp2()
    }

    pub fn cell_measure(&self) -> f64 {
        (self.cell_log2_side() as f64 * self.dim as f64).exp2()
    }

    pub fn root(&self) -> DyadicCube {
        DyadicCube {
            level: 0,
            index: [0; MAX_DIM],
            dim: self.dim as u8,
            log2_side: self.side_exponent,
        }
    }

    /// Dyadic cube at `level` with per-axis `index`, validated against the domain.
    pub fn cube(&self, level: u32, index: &[u32]) -> Result<DyadicCube> {
        if level > self.depth || index.len() != self.dim {
            return Err(Error::CubeOutsideDomain);
        }
        let mut idx = [0u32; MAX_DIM];
        for (i, &v) in index.iter().enumerate() {
            if (v as u64) >= (1u64 << level) {
                return Err(Error::CubeOutsideDomain);
            }
            idx[i] = v;
        }
        Ok(DyadicCube {
            level,
            index: idx,
            dim: self.dim as u8,
            log2_side: self.side_exponent - level as i32,
        })
    }

    pub fn contains(&self, cube: &DyadicCube) -> bool {
        cube.dim as usize == self.dim
            && cube.level <= self.depth
            && cube.log2_side == self.side_exponent - cube.level as i32
            && cube.index().iter().all(|&v| (v as u64) < (1u64 << cube.level))
    }

    pub fn cubes_at_level(&self, level: u32) -> impl Iterator<Item = DyadicCube> + '_ {
        let per_axis = 1u64 << level.min(self.depth);
        let count = if level > self.depth { 0 } else { per_axis.pow(self.dim as u32) };
        (0..count).map(move |lin| {
            let mut idx = [0u32; MAX_DIM];
            let mut rest = lin;
            for i in (0..self.dim).rev() {
                idx[i] = (rest % per_axis) as u32;
                rest /= per_axis;
            }
            DyadicCube {
                level,
                index: idx,
                dim: self.dim as u8,
                log2_side: self.side_exponent - level as i32,
            }
        })
    }

    /// The `2^n` dyadic children in row-major offset order.
    pub fn cube_children(&self, cube: &DyadicCube) -> Result<Vec<DyadicCube>> {
        if !self.contains(cube) {
            return Err(Error::CubeOutsideDomain);
        }
        if cube.level == self.depth {
            return Err(Error::NoChildren);
        }
        let n = self.dim;
        Ok((0..1u32 << n)
            .map(|mask| {
                let mut idx = [0u32; MAX_DIM];
                for i in 0..n {
                    let bit = (mask >> (n - 1 - i)) & 1;
                    idx[i] = 2 * cube.index[i] + bit;
                }
                DyadicCube {
                    level: cube.level + 1,
                    index: idx,
                    dim: cube.dim,
                    log2_side: cube.log2_side - 1,
                }
            })
            .collect())
    }

    /// The cell-aligned box occupied by a dyadic cube.
    pub fn cell_cube(&self, cube: &DyadicCube) -> CellCube {
        let side = 1u32 << (self.depth - cube.level);
        let mut origin = [0u32; MAX_DIM];
        for (i, o) in origin.iter_mut().enumerate().take(self.dim) {
            *o = cube.index[i] * side;
        }
        CellCube { dim: self.dim as u8, origin, side }
    }

    /// Inverse of [`DomainSpec::cell_cube`] for dyadically aligned boxes.
    pub fn dyadic_cube(&self, cube: &CellCube) -> Option<DyadicCube> {
        if !cube.is_dyadic() || !self.contains_cells(cube) {
            return None;
        }
        let level = self.depth - cube.side.trailing_zeros();
        let mut idx = [0u32; MAX_DIM];
        for (i, v) in idx.iter_mut().enumerate().take(self.dim) {
            *v = cube.origin[i] / cube.side;
        }
        Some(DyadicCube {
            level,
            index: idx,
            dim: self.dim as u8,
            log2_side: self.side_exponent - level as i32,
        })
    }

    pub fn contains_cells(&self, cube: &CellCube) -> bool {
        let n = self.cells_per_axis() as u64;
        cube.dim as usize == self.dim
            && cube.side > 0
            && (0..self.dim).all(|i| cube.origin[i] as u64 + cube.side as u64 <= n)
    }

    pub fn cell_linear_index(&self, coords: &[u32]) -> usize {
        let n = self.cells_per_axis();
        coords.iter().fold(0usize, |acc, &c| acc * n + c as usize)
    }

    pub fn cell_coords(&self, linear: usize) -> [u32; MAX_DIM] {
        let n = self.cells_per_axis();
        let mut out = [0u32; MAX_DIM];
        let mut rest = linear;
        for i in (0..self.dim).rev() {
            out[i] = (rest % n) as u32;
            rest /= n;
        }
        out
    }

    /// Global linear indices of the cells of `cube`, in local row-major order.
    pub fn cell_indices(&self, cube: &CellCube) -> Vec<usize> {
        let n = self.dim;
        let side = cube.side as usize;
        let stride = self.cells_per_axis();
        let mut base = 0usize;
        for i in 0..n {
            base = base * stride + cube.origin[i] as usize;
        }
        let mut out = Vec::with_capacity(side.pow(n as u32));
        match n {
            1 => out.extend(base..base + side),
            2 => {
                for a in 0..side {
                    let row = base + a * stride;
                    out.extend(row..row + side);
                }
            }
            _ => {
                for a in 0..side {
                    for b in 0..side {
                        let row = base + a * stride * stride + b * stride;
                        out.extend(row..row + side);
                    }
                }
            }
        }
        out
    }

    /// Lower corner of a cell-aligned box in physical coordinates.
    pub fn box_lower(&self, cube: &CellCube) -> [f64; MAX_DIM] {
        let h = self.cell_side();
        let mut out = [0.0; MAX_DIM];
        for i in 0..self.dim {
            out[i] = cube.origin[i] as f64 * h;
        }
        out
    }

    pub fn box_side(&self, cube: &CellCube) -> f64 {
        cube.side as f64 * self.cell_side()
    }

    pub fn box_measure(&self, cube: &CellCube) -> f64 {
        self.box_side(cube).powi(self.dim as i32)
    }
}

/// A half-open dyadic cube `2^(m-k) (index + [0,1)^n)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DyadicCube {
    level: u32,
    index: [u32; MAX_DIM],
    dim: u8,
    log2_side: i32,
}

impl DyadicCube {
    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn index(&self) -> &[u32] {
        &self.index[..self.dim as usize]
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn log2_side(&self) -> i32 {
        self.log2_side
    }

    pub fn side(&self) -> f64 {
        (self.log2_side as f64).exp2()
    }

    pub fn measure(&self) -> f64 {
        (self.log2_side as f64 * self.dim as f64).exp2()
    }

    pub fn lower_corner(&self) -> [f64; MAX_DIM] {
        let side = self.side();
        let mut out = [0.0; MAX_DIM];
        for i in 0..self.dim() {
            out[i] = self.index[i] as f64 * side;
        }
        out
    }

    pub fn center(&self) -> [f64; MAX_DIM] {
        let side = self.side();
        let mut out = self.lower_corner();
        for v in out.iter_mut().take(self.dim()) {
            *v += 0.5 * side;
        }
        out
    }

    pub fn parent(&self) -> Option<DyadicCube> {
        if self.level == 0 {
            return None;
        }
        let mut idx = self.index;
        for v in idx.iter_mut().take(self.dim()) {
            *v /= 2;
        }
        Some(DyadicCube { level: self.level - 1, index: idx, dim: self.dim, log2_side: self.log2_side + 1 })
    }

    /// True when `other` is contained in `self` (including equality).
    pub fn contains(&self, other: &DyadicCube) -> bool {
        if other.level < self.level || other.dim != self.dim {
            return false;
        }
        let shift = other.level - self.level;
        (0..self.dim()).all(|i| other.index[i] >> shift == self.index[i])
    }

    pub fn linear_index(&self) -> usize {
        let per_axis = 1usize << self.level;
        self.index().iter().fold(0usize, |acc, &c| acc * per_axis + c as usize)
    }
}

impl std::fmt::Display for DyadicCube {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "L{}[", self.level)?;
        for (i, v) in self.index().iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "]")
    }
}

/// A cube made of whole cells: `origin + [0, side)^n` in cell units, not necessarily dyadic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellCube {
    dim: u8,
    origin: [u32; MAX_DIM],
    side: u32,
}

impl CellCube {
    pub fn new(origin: &[u32], side: u32) -> Result<Self> {
        if origin.is_empty() || origin.len() > MAX_DIM || side == 0 {
            return Err(Error::InvalidParameter("cell cube needs 1..=3 coordinates and positive side".into()));
        }
        let mut o = [0u32; MAX_DIM];
        o[..origin.len()].copy_from_slice(origin);
        Ok(Self { dim: origin.len() as u8, origin: o, side })
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn origin(&self) -> &[u32] {
        &self.origin[..self.dim as usize]
    }

    pub fn side(&self) -> u32 {
        self.side
    }

    pub fn cell_count(&self) -> usize {
        (self.side as usize).pow(self.dim as u32)
    }

    pub fn is_dyadic(&self) -> bool {
        self.side.is_power_of_two() && self.origin().iter().all(|&o| o % self.side == 0)
    }

    pub fn contains_cell(&self, coords: &[u32]) -> bool {
        (0..self.dim()).all(|i| coords[i] >= self.origin[i] && coords[i] < self.origin[i] + self.side)
    }

    pub fn contains(&self, other: &CellCube) -> bool {
        other.dim == self.dim
            && (0..self.dim()).all(|i| {
                other.origin[i] >= self.origin[i] && other.origin[i] + other.side <= self.origin[i] + self.side
            })
    }

    pub fn intersects(&self, other: &CellCube) -> bool {
        other.dim == self.dim
            && (0..self.dim()).all(|i| {
                other.origin[i] < self.origin[i] + self.side && self.origin[i] < other.origin[i] + other.side
            })
    }
}

/// A multi-index `beta` in `N^n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex {
    exps: [u32; MAX_DIM],
    dim: u8,
}

impl MultiIndex {
    pub fn new(exps: &[u32]) -> Self {
        assert!(!exps.is_empty() && exps.len() <= MAX_DIM, "multi-index dimension out of range");
        let mut e = [0u32; MAX_DIM];
        e[..exps.len()].copy_from_slice(exps);
        Self { exps: e, dim: exps.len() as u8 }
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(&vec![0; dim])
    }

    pub fn exps(&self) -> &[u32] {
        &self.exps[..self.dim as usize]
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn degree(&self) -> usize {
        self.exps().iter().map(|&e| e as usize).sum()
    }

    /// All multi-indices with `|beta| <= s`, graded, then lexicographic with the first axis largest.
    pub fn up_to(dim: usize, s: usize) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        for deg in 0..=s {
            let mut cur = vec![0u32; dim];
            collect_degree(&mut out, &mut cur, 0, deg as u32);
        }
        out
    }
}

fn collect_degree(out: &mut Vec<MultiIndex>, cur: &mut Vec<u32>, axis: usize, left: u32) {
    if axis + 1 == cur.len() {
        cur[axis] = left;
        out.push(MultiIndex::new(cur));
        return;
    }
    for e in (0..=left).rev() {
        cur[axis] = e;
        collect_degree(out, cur, axis + 1, left - e);
    }
}

/// Number of multi-indices with `|beta| <= s` in dimension `n`.
pub fn poly_space_dim(n: usize, s: usize) -> usize {
    let mut num = 1u128;
    let mut den = 1u128;
    for i in 1..=n as u128 {
        num *= s as u128 + i;
        den *= i;
    }
    (num / den) as usize
}

/// `int_a^b x^k dx` for `0 <= a <= b` without cancellation.
pub(crate) fn power_integral_nonneg(a: f64, b: f64, k: u32) -> f64 {
    let sum: f64 = (0..=k as i32).map(|j| a.powi(j) * b.powi(k as i32 - j)).sum();
    (b - a) * sum / (k + 1) as f64
}

/// `int_a^b u^k du` for any `a <= b`.
pub(crate) fn power_integral(a: f64, b: f64, k: u32) -> f64 {
    if a >= 0.0 {
        power_integral_nonneg(a, b, k)
    } else if b <= 0.0 {
        let v = power_integral_nonneg(-b, -a, k);
        if k.is_multiple_of(2) {
            v
        } else {
            -v
        }
    } else {
        (b.powi(k as i32 + 1) - a.powi(k as i32 + 1)) / (k + 1) as f64
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct DoubleDouble {
    hi: f64,
    lo: f64,
}

impl DoubleDouble {
    fn from(v: f64) -> Self {
        Self { hi: v, lo: 0.0 }
    }

    fn add(self, other: Self) -> Self {
        let (s, e) = two_sum(self.hi, other.hi);
        let e = e + self.lo + other.lo;
        let (hi, lo) = two_sum(s, e);
        Self { hi, lo }
    }

    fn neg(self) -> Self {
        Self { hi: -self.hi, lo: -self.lo }
    }

    fn value(self) -> f64 {
        self.hi + self.lo
    }
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

/// Summed-area tables of `f * x^beta` for every `|beta| <= order`.
#[derive(Clone, Debug)]
struct MomentTables {
    order: usize,
    betas: Vec<MultiIndex>,
    tables: Vec<Vec<DoubleDouble>>,
    abs_tables: Vec<Vec<f64>>,
}

impl MomentTables {
    fn build(domain: &DomainSpec, values: &[f64], order: usize) -> Self {
        let n = domain.dim();
        let cells = domain.cells_per_axis();
        let stride = cells + 1;
        let size = stride.pow(n as u32);
        let betas = MultiIndex::up_to(n, order);
        let h = domain.cell_side();
        let mut tables = Vec::with_capacity(betas.len());
        let mut abs_tables = Vec::with_capacity(betas.len());
        let axis_integrals: Vec<Vec<f64>> = (0..=order as u32)
            .map(|k| (0..cells).map(|j| power_integral_nonneg(j as f64 * h, (j + 1) as f64 * h, k)).collect())
            .collect();
        for beta in &betas {
            let mut t = vec![DoubleDouble::default(); size];
            let mut a = vec![0.0f64; size];
            for (lin, &v) in values.iter().enumerate() {
                let c = domain.cell_coords(lin);
                let mut w = 1.0;
                let mut pos = 0usize;
                for i in 0..n {
                    w *= axis_integrals[beta.exps()[i] as usize][c[i] as usize];
                    pos = pos * stride + c[i] as usize + 1;
                }
                t[pos] = DoubleDouble::from(v * w);
                a[pos] = (v * w).abs();
            }
            for axis in 0..n {
                let step = stride.pow((n - 1 - axis) as u32);
                for pos in 0..size {
                    if !(pos / step).is_multiple_of(stride) {
                        let prev = pos - step;
                        t[pos] = t[pos].add(t[prev]);
                        a[pos] += a[prev];
                    }
                }
            }
            tables.push(t);
            abs_tables.push(a);
        }
        Self { order, betas, tables, abs_tables }
    }

    fn query(&self, domain: &DomainSpec, beta_pos: usize, cube: &CellCube) -> (f64, f64) {
        let n = domain.dim();
        let stride = domain.cells_per_axis() + 1;
        let t = &self.tables[beta_pos];
        let a = &self.abs_tables[beta_pos];
        let mut acc = DoubleDouble::default();
        let mut abs_acc = 0.0;
        for corner in 0..1usize << n {
            let mut pos = 0usize;
            let mut lower = 0;
            for i in 0..n {
                let hi = (corner >> (n - 1 - i)) & 1 == 1;
                let c = cube.origin()[i] as usize + if hi { cube.side() as usize } else { 0 };
                if !hi {
                    lower += 1;
                }
                pos = pos * stride + c;
            }
            if lower % 2 == 0 {
                acc = acc.add(t[pos]);
                abs_acc += a[pos];
            } else {
                acc = acc.add(t[pos].neg());
                abs_acc -= a[pos];
            }
        }
        (acc.value(), abs_acc.abs())
    }
}

/// Cell values of a function on a [`DomainSpec`], row-major with the last axis fastest.
#[derive(Clone, Debug)]
pub struct GridFunction {
    domain: DomainSpec,
    values: Vec<f64>,
    order: usize,
    tables: OnceLock<MomentTables>,
}

impl PartialEq for GridFunction {
    fn eq(&self, other: &Self) -> bool {
        self.domain == other.domain && self.order == other.order && self.values == other.values
    }
}

impl GridFunction {
    pub fn new(domain: DomainSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.cell_count() {
            return Err(Error::InvalidParameter(format!(
                "expected {} cell values, got {}",
                domain.cell_count(),
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite value at cell {pos}")));
        }
        Ok(Self { domain, values, order: 0, tables: OnceLock::new() })
    }

    pub fn constant(domain: DomainSpec, value: f64) -> Self {
        Self::new(domain, vec![value; domain.cell_count()]).expect("finite constant")
    }

    pub fn zeros(domain: DomainSpec) -> Self {
        Self::constant(domain, 0.0)
    }

    /// Samples `f` at cell centres.
    pub fn from_fn(domain: DomainSpec, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let h = domain.cell_side();
        let n = domain.dim();
        let values = (0..domain.cell_count())
            .map(|lin| {
                let c = domain.cell_coords(lin);
                let x: Vec<f64> = (0..n).map(|i| (c[i] as f64 + 0.5) * h).collect();
                f(&x)
            })
            .collect();
        Self::new(domain, values)
    }

    /// Sets the moment order for the prefix tables (built lazily on first query).
    pub fn with_moment_order(mut self, order: usize) -> Self {
        if order != self.order {
            self.order = order;
            self.tables = OnceLock::new();
        }
        self
    }

    pub fn moment_order(&self) -> usize {
        self.order
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// `int_Q f` over the whole domain divided by its measure.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.domain, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn add(&self, other: &GridFunction) -> Result<Self> {
        if self.domain != other.domain {
            return Err(Error::InvalidParameter("grid domains differ".into()));
        }
        Self::new(self.domain, self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect())
    }

    fn tables(&self) -> &MomentTables {
        self.tables.get_or_init(|| MomentTables::build(&self.domain, &self.values, self.order))
    }

    fn check_beta(&self, beta: &MultiIndex) -> Result<()> {
        if beta.dim() != self.domain.dim() {
            return Err(Error::InvalidParameter("multi-index dimension mismatch".into()));
        }
        if beta.degree() > self.order {
            return Err(Error::MomentOrderNotPrepared { requested: beta.degree(), built: self.order });
        }
        Ok(())
    }

    /// `int_Q f x^beta` from the prefix tables.
    pub fn integrate_monomial(&self, cube: &DyadicCube, beta: &MultiIndex) -> Result<f64> {
        if !self.domain.contains(cube) {
            return Err(Error::CubeOutsideDomain);
        }
        self.integrate_monomial_cells(&self.domain.cell_cube(cube), beta)
    }

    pub fn integrate_monomial_cells(&self, cube: &CellCube, beta: &MultiIndex) -> Result<f64> {
        Ok(self.integrate_monomial_with_scale(cube, beta)?.0)
    }

    /// Integral together with the sum of absolute cell contributions.
    pub fn integrate_monomial_with_scale(&self, cube: &CellCube, beta: &MultiIndex) -> Result<(f64, f64)> {
        if !self.domain.contains_cells(cube) {
            return Err(Error::CubeOutsideDomain);
        }
        self.check_beta(beta)?;
        let tables = self.tables();
        debug_assert!(tables.order == self.order);
        let pos = tables.betas.iter().position(|b| b == beta).expect("beta within order");
        Ok(tables.query(&self.domain, pos, cube))
    }

    /// Direct summation of `int_Q f x^beta`, independent of the prefix tables.
    pub fn naive_integrate_monomial(&self, cube: &CellCube, beta: &MultiIndex) -> f64 {
        let h = self.domain.cell_side();
        let n = self.domain.dim();
        self.domain
            .cell_indices(cube)
            .into_iter()
            .map(|lin| {
                let c = self.domain.cell_coords(lin);
                let w: f64 = (0..n)
                    .map(|i| power_integral_nonneg(c[i] as f64 * h, (c[i] + 1) as f64 * h, beta.exps()[i]))
                    .product();
                self.values[lin] * w
            })
            .sum()
    }

    pub fn cell_average(&self, cube: &DyadicCube) -> Result<f64> {
        let v = self.integrate_monomial(cube, &MultiIndex::zero(self.domain.dim()))?;
        Ok(v / cube.measure())
    }

    pub fn cells_of(&self, cube: &CellCube) -> Vec<f64> {
        self.domain.cell_indices(cube).into_iter().map(|i| self.values[i]).collect()
    }
}

/// Values on the cells of a single cell-aligned cube, in local row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct CubeField {
    cube: CellCube,
    values: Vec<f64>,
}

impl CubeField {
    pub fn new(cube: CellCube, values: Vec<f64>) -> Result<Self> {
        if values.len() != cube.cell_count() {
            return Err(Error::InvalidParameter(format!(
                "expected {} cell values, got {}",
                cube.cell_count(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite cube value".into()));
        }
        Ok(Self { cube, values })
    }

    pub fn zeros(cube: CellCube) -> Self {
        Self { cube, values: vec![0.0; cube.cell_count()] }
    }

    pub fn from_grid(f: &GridFunction, cube: &CellCube) -> Result<Self> {
        if !f.domain().contains_cells(cube) {
            return Err(Error::CubeOutsideDomain);
        }
        Ok(Self { cube: *cube, values: f.cells_of(cube) })
    }

    pub fn cube(&self) -> &CellCube {
        &self.cube
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { cube: self.cube, values: self.values.iter().map(|v| v * factor).collect() }
    }

    /// `int f g` against a grid function, exact for piecewise-constant data.
    pub fn pair(&self, f: &GridFunction) -> f64 {
        let idx = f.domain().cell_indices(&self.cube);
        let fv = f.values();
        let s: f64 = idx.iter().zip(&self.values).map(|(&i, &a)| a * fv[i]).sum();
        s * f.domain().cell_measure()
    }

    /// Embeds the field in a full grid, zero outside the cube.
    pub fn to_grid(&self, domain: &DomainSpec) -> Result<GridFunction> {
        if !domain.contains_cells(&self.cube) {
            return Err(Error::CubeOutsideDomain);
        }
        let mut vals = vec![0.0; domain.cell_count()];
        for (&i, &v) in domain.cell_indices(&self.cube).iter().zip(&self.values) {
            vals[i] = v;
        }
        GridFunction::new(*domain, vals)
    }
}

/// Sums of `values` over every dyadic cube, indexed `[level][linear index]`.
pub fn dyadic_sums(domain: &DomainSpec, values: &[f64]) -> Vec<Vec<f64>> {
    let k = domain.depth() as usize;
    let n = domain.dim();
    let mut levels = vec![Vec::new(); k + 1];
    levels[k] = values.to_vec();
    for level in (0..k).rev() {
        let per_axis = 1usize << level;
        let child_axis = per_axis * 2;
        let mut sums = vec![0.0; per_axis.pow(n as u32)];
        for (lin, &v) in levels[level + 1].iter().enumerate() {
            let mut rest = lin;
            let mut parent = 0usize;
            let mut mul = 1usize;
            for _ in 0..n {
                let c = rest % child_axis;
                rest /= child_axis;
                parent += (c / 2) * mul;
                mul *= per_axis;
            }
            sums[parent] += v;
        }
        levels[level] = sums;
    }
    levels
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(n: usize, m: i32, k: u32) -> DomainSpec {
        DomainSpec::new(n, m, k).unwrap()
    }

    #[test]
    fn children_and_leaf() {
        let dom = d(2, 0, 2);
        let kids = dom.cube_children(&dom.root()).unwrap();
        assert_eq!(kids.len(), 4);
        assert_eq!(kids[1].index(), &[0, 1]);
        assert!(kids.iter().all(|c| c.measure() == 0.25));
        let leaf = dom.cube(2, &[3, 1]).unwrap();
        assert!(matches!(dom.cube_children(&leaf), Err(Error::NoChildren)));
        assert_eq!(leaf.parent().unwrap().index(), &[1, 0]);
        assert!(dom.root().contains(&leaf));
    }

    #[test]
    fn cell_indices_row_major() {
        let dom = d(2, 0, 2);
        let c = dom.cell_cube(&dom.cube(1, &[1, 0]).unwrap());
        assert_eq!(dom.cell_indices(&c), vec![8, 9, 12, 13]);
        assert_eq!(dom.dyadic_cube(&c).unwrap(), dom.cube(1, &[1, 0]).unwrap());
        let dom3 = d(3, 0, 1);
        assert_eq!(dom3.cell_indices(&dom3.cell_cube(&dom3.root())), (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn monomial_integrals_examples() {
        let dom = d(1, 0, 2);
        let f = GridFunction::constant(dom, 1.0).with_moment_order(1);
        let root = dom.root();
        assert!((f.integrate_monomial(&root, &MultiIndex::new(&[0])).unwrap() - 1.0).abs() < 1e-15);
        assert!((f.integrate_monomial(&root, &MultiIndex::new(&[1])).unwrap() - 0.5).abs() < 1e-15);
        let half = dom.cube(1, &[0]).unwrap();
        assert!((f.integrate_monomial(&half, &MultiIndex::new(&[1])).unwrap() - 0.125).abs() < 1e-15);
        assert!(matches!(
            f.integrate_monomial(&root, &MultiIndex::new(&[2])),
            Err(Error::MomentOrderNotPrepared { .. })
        ));
    }

    #[test]
    fn cell_average_spike() {
        let dom = d(1, 0, 2);
        let f = GridFunction::new(dom, vec![4.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(f.cell_average(&dom.root()).unwrap(), 1.0);
        assert_eq!(f.cell_average(&dom.cube(2, &[0]).unwrap()).unwrap(), 4.0);
    }

    #[test]
    fn tables_match_naive_sums() {
        let dom = d(2, 3, 4);
        let f = GridFunction::from_fn(dom, |x| (x[0] * 1.3).sin() + x[1] * x[1] - 2.0)
            .unwrap()
            .with_moment_order(3);
        for level in 0..=4 {
            for cube in dom.cubes_at_level(level) {
                let cc = dom.cell_cube(&cube);
                for beta in MultiIndex::up_to(2, 3) {
                    let (t, scale) = f.integrate_monomial_with_scale(&cc, &beta).unwrap();
                    let naive = f.naive_integrate_monomial(&cc, &beta);
                    assert!((t - naive).abs() <= 1e-12 * scale.max(1e-300), "{t} vs {naive}");
                }
            }
        }
    }

    #[test]
    fn multi_index_counts() {
        assert_eq!(MultiIndex::up_to(2, 2).len(), 6);
        assert_eq!(poly_space_dim(3, 2), 10);
        assert_eq!(MultiIndex::up_to(3, 3).len(), poly_space_dim(3, 3));
        assert_eq!(MultiIndex::up_to(2, 1)[1].exps(), &[1, 0]);
    }

    #[test]
    fn dyadic_sums_total() {
        let dom = d(2, 0, 3);
        let vals: Vec<f64> = (0..64).map(|i| i as f64).collect();
        let sums = dyadic_sums(&dom, &vals);
        assert_eq!(sums[0][0], (0..64).sum::<i32>() as f64);
        let cube = dom.cube(1, &[1, 0]).unwrap();
        let direct: f64 = dom.cell_indices(&dom.cell_cube(&cube)).iter().map(|&i| vals[i]).sum();
        assert_eq!(sums[1][cube.linear_index()], direct);
    }

    #[test]
    fn power_integral_signs() {
        assert!((power_integral(-0.5, 0.5, 2) - 1.0 / 12.0).abs() < 1e-16);
        assert!(power_integral(-0.5, 0.5, 3).abs() < 1e-16);
        assert!((power_integral(-0.5, -0.25, 1) - (0.0625 - 0.25) / 2.0).abs() < 1e-16);
    }
}
