//! Python bindings for `jnspace`.

use std::path::PathBuf;

use jnspace::atoms::{dual_optimizer, AtomParams};
use jnspace::cz::{cz_decompose, CzConfig};
use jnspace::gen::{generate, GenKind};
use jnspace::io::{decode_grid, encode_grid, read_grid, write_grid};
use jnspace::norms::{
    big_jn_norm_dyadic, campanato_norm_dyadic, jn_norm_dyadic, lebesgue_norm, weak_quasi_norm, DyadicNorm,
};
use jnspace::poly::sharp_constant;
use jnspace::report::{cube_label, packing_certificate};
use jnspace::{run_suite, CellModel, DomainSpec, GridFunction, NormParams, Suite};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: jnspace::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Piecewise-constant function on the cells of `[0, 2^m)^n` at depth `depth`.
#[pyclass(name = "Grid", module = "jnspace_py", skip_from_py_object)]
#[derive(Clone)]
struct PyGrid {
    inner: GridFunction,
}

#[pymethods]
impl PyGrid {
    #[new]
    fn new(n: usize, m: i32, depth: u32, values: Vec<f64>) -> PyResult<Self> {
        let d = DomainSpec::new(n, m, depth).map_err(err)?;
        Ok(Self { inner: GridFunction::new(d, values).map_err(err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (kind, n=1, m=0, depth=4, amplitude=1.0, seed=0))]
    fn generate(kind: &str, n: usize, m: i32, depth: u32, amplitude: f64, seed: u64) -> PyResult<Self> {
        let kind: GenKind = kind.parse().map_err(err)?;
        let d = DomainSpec::new(n, m, depth).map_err(err)?;
        Ok(Self { inner: generate(d, kind, amplitude, seed).map_err(err)? })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: read_grid(&path).map_err(err)? })
    }

    #[staticmethod]
    fn from_bytes(data: &[u8]) -> PyResult<Self> {
        Ok(Self { inner: decode_grid(data).map_err(err)? })
    }

    #[pyo3(signature = (path, binary=false))]
    fn save(&self, path: PathBuf, binary: bool) -> PyResult<()> {
        write_grid(&path, &self.inner, binary).map_err(err)
    }

    #[pyo3(signature = (binary=false))]
    fn to_bytes(&self, binary: bool) -> Vec<u8> {
        encode_grid(&self.inner, binary)
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.domain().dim()
    }

    #[getter]
    fn m(&self) -> i32 {
        self.inner.domain().side_exponent()
    }

    #[getter]
    fn depth(&self) -> u32 {
        self.inner.domain().depth()
    }

    fn __len__(&self) -> usize {
        self.inner.values().len()
    }

    fn __repr__(&self) -> String {
        let d = self.inner.domain();
        format!("Grid(n={}, m={}, depth={})", d.dim(), d.side_exponent(), d.depth())
    }
}

/// Exponents `(p, q, s, alpha, c0)` of the oscillation norms.
#[pyclass(name = "Params", module = "jnspace_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyParams {
    inner: NormParams,
}

#[pymethods]
impl PyParams {
    #[new]
    #[pyo3(signature = (p=2.0, q=1.0, s=0, alpha=0.0, c0=1.0))]
    fn new(p: f64, q: f64, s: usize, alpha: f64, c0: f64) -> PyResult<Self> {
        Ok(Self { inner: NormParams::new(p, q, s, alpha, c0).map_err(err)? })
    }

    #[getter]
    fn p(&self) -> f64 {
        self.inner.p
    }

    #[getter]
    fn q(&self) -> f64 {
        self.inner.q
    }

    #[getter]
    fn s(&self) -> usize {
        self.inner.s
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    #[getter]
    fn c0(&self) -> f64 {
        self.inner.c0
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!("Params(p={}, q={}, s={}, alpha={}, c0={})", p.p, p.q, p.s, p.alpha, p.c0)
    }
}

fn prepared(grid: &PyGrid, params: &PyParams) -> GridFunction {
    grid.inner.clone().with_moment_order(params.inner.s)
}

fn packing_labels(f: &GridFunction, r: &DyadicNorm) -> Vec<String> {
    r.packing.cubes.iter().map(|c| cube_label(f.domain(), c)).collect()
}

/// Dyadic jn norm and the labels of a maximising packing.
#[pyfunction]
fn jn_norm(grid: &PyGrid, params: &PyParams) -> PyResult<(f64, Vec<String>)> {
    let f = prepared(grid, params);
    let r = jn_norm_dyadic(&f, &params.inner).map_err(err)?;
    Ok((r.value, packing_labels(&f, &r)))
}

/// Dyadic JN norm (projection on every cube) and its packing.
#[pyfunction]
fn big_jn_norm(grid: &PyGrid, params: &PyParams) -> PyResult<(f64, Vec<String>)> {
    let f = prepared(grid, params);
    let r = big_jn_norm_dyadic(&f, &params.inner).map_err(err)?;
    Ok((r.value, packing_labels(&f, &r)))
}

#[pyfunction]
fn campanato_norm(grid: &PyGrid, params: &PyParams) -> PyResult<(f64, String)> {
    let f = prepared(grid, params);
    let (v, c) = campanato_norm_dyadic(&f, &params.inner).map_err(err)?;
    Ok((v, c.to_string()))
}

#[pyfunction]
fn lp_norm(grid: &PyGrid, p: f64) -> PyResult<f64> {
    lebesgue_norm(&grid.inner, p).map_err(err)
}

/// Weak-type quasi-norm of `f - P f` on the whole domain.
#[pyfunction]
#[pyo3(signature = (grid, p, s=0))]
fn weak_norm(grid: &PyGrid, p: f64, s: usize) -> PyResult<f64> {
    let f = grid.inner.clone().with_moment_order(s);
    weak_quasi_norm(&f, &f.domain().root(), s, p).map_err(err)
}

/// Cell values of the degree-`s` projection on the dyadic cube `(level, index)`.
#[pyfunction]
#[pyo3(signature = (grid, level, index, s=0))]
fn project(grid: &PyGrid, level: u32, index: Vec<u32>, s: usize) -> PyResult<Vec<f64>> {
    let d = *grid.inner.domain();
    let cube = d.cube(level, &index).map_err(err)?;
    Ok(CellModel::new(d, s).project(&grid.inner, &d.cell_cube(&cube)))
}

/// Sup-norm constant of the cell-model projection, `sum_{|b| <= s} prod (2 b_i + 1)`.
#[pyfunction]
fn projection_constant(s: usize, n: usize) -> f64 {
    sharp_constant(s, n)
}

#[pyfunction]
#[pyo3(signature = (grid, s=0, ctilde=None, gamma=None))]
fn cz_summary<'py>(
    py: Python<'py>,
    grid: &PyGrid,
    s: usize,
    ctilde: Option<f64>,
    gamma: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let f = grid.inner.clone().with_moment_order(s);
    let d = *f.domain();
    let ratio = ctilde.unwrap_or(((d.dim() + 1) as f64).exp2());
    let gamma = gamma.unwrap_or_else(|| f.values().iter().map(|v| v.abs()).sum::<f64>() / d.cell_count() as f64);
    let cz = cz_decompose(&f, &d.root(), &CzConfig::new(s, ratio, gamma)).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("levels", cz.levels.len())?;
    out.set_item("pieces", cz.piece_count())?;
    out.set_item("thresholds", cz.thresholds.clone())?;
    out.set_item("sharp_constant", cz.sharp_constant)?;
    out.set_item("reconstruction_residual", cz.diagnostics.reconstruction_residual)?;
    out.set_item("max_moment_residual", cz.diagnostics.max_moment_residual)?;
    out.set_item("max_sup_ratio", cz.diagnostics.max_sup_ratio)?;
    out.set_item("level_sets_exact", cz.diagnostics.level_sets_exact)?;
    let pieces: Vec<(usize, String, f64, f64)> =
        cz.pieces().map(|p| (p.k, cube_label(&d, p.cube()), p.sup_norm, p.sup_bound)).collect();
    out.set_item("records", pieces)?;
    Ok(out)
}

/// Pairing, budget and ratio of the near-extremal polymer for `f`.
#[pyfunction]
#[pyo3(signature = (grid, v=2.0, w=2.0, s=0, alpha=0.0, c0=1.0))]
fn dual_ratio<'py>(
    py: Python<'py>,
    grid: &PyGrid,
    v: f64,
    w: f64,
    s: usize,
    alpha: f64,
    c0: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let params = AtomParams::new(v, w, s, alpha, c0).map_err(err)?;
    let f = grid.inner.clone().with_moment_order(s);
    let jn = jn_norm_dyadic(&f, &params.dual_norm_params().map_err(err)?).map_err(err)?;
    let r = dual_optimizer(&f, &jn.packing, &params).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("norm", jn.value)?;
    out.set_item("pairing", r.pairing)?;
    out.set_item("budget", r.budget)?;
    out.set_item("ratio", r.ratio)?;
    out.set_item("lower_threshold", r.lower_threshold)?;
    out.set_item("packing", packing_certificate(f.domain(), &jn.packing))?;
    Ok(out)
}

/// Runs a verification suite; returns `(passed, {criterion: (trials, failures, passed)})`.
#[pyfunction]
#[pyo3(signature = (suite, seed=42, trials=None))]
fn verify<'py>(
    py: Python<'py>,
    suite: &str,
    seed: u64,
    trials: Option<usize>,
) -> PyResult<(bool, Bound<'py, PyDict>)> {
    let suite: Suite = suite.parse().map_err(err)?;
    let out = py.detach(|| run_suite(suite, seed, trials)).map_err(err)?;
    let table = PyDict::new(py);
    for c in &out.criteria {
        let (t, f) = c.counts();
        table.set_item(c.id, (t, f, c.pass()))?;
    }
    Ok((out.pass(), table))
}

#[pymodule]
fn jnspace_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PyParams>()?;
    m.add_function(wrap_pyfunction!(jn_norm, m)?)?;
    m.add_function(wrap_pyfunction!(big_jn_norm, m)?)?;
    m.add_function(wrap_pyfunction!(campanato_norm, m)?)?;
    m.add_function(wrap_pyfunction!(lp_norm, m)?)?;
    m.add_function(wrap_pyfunction!(weak_norm, m)?)?;
    m.add_function(wrap_pyfunction!(project, m)?)?;
    m.add_function(wrap_pyfunction!(projection_constant, m)?)?;
    m.add_function(wrap_pyfunction!(cz_summary, m)?)?;
    m.add_function(wrap_pyfunction!(dual_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
