//! Python module `measys`: problems, block systems, and the command-line reports.

use measys_core::blocksystem::{self, PointKind};
use measys_core::cli::{self, Mode, Options, ProblemFile};
use measys_core::linalg::{CMat, CVec};
use measys_core::{checks, propagation, solutions, Error, Tolerances};
use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn py_err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_matrix(rows: Vec<Vec<Complex64>>) -> PyResult<CMat> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err(
            "expected a square matrix given as a list of rows",
        ));
    }
    Ok(CMat::from_fn(n, n, |i, j| rows[i][j]))
}

fn from_matrix(m: &CMat) -> Vec<Vec<Complex64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn from_vector(v: &CVec) -> Vec<Complex64> {
    v.iter().copied().collect()
}

/// A problem `Ju′ + qu = wf` read from the JSON problem format.
#[pyclass(module = "measys")]
struct Problem {
    loaded: cli::Loaded,
}

#[pymethods]
impl Problem {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let loaded = ProblemFile::from_json(text)
            .and_then(|f| f.load())
            .map_err(py_err)?;
        Ok(Self { loaded })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.loaded.problem.dim()
    }

    #[getter]
    fn window(&self) -> (f64, f64) {
        self.loaded.window
    }

    /// List of `(name, defect, tolerance, pass)`.
    fn validate(&self) -> PyResult<Vec<(String, f64, f64, bool)>> {
        let report = measys_core::validate(&self.loaded.problem, self.loaded.tolerances.structure)
            .map_err(py_err)?;
        Ok(report
            .checks
            .into_iter()
            .map(|c| (c.name, c.defect, c.tolerance, c.pass))
            .collect())
    }

    fn singular_points(&self) -> Vec<f64> {
        blocksystem::find_singular_points(
            &self.loaded.problem,
            self.loaded.window,
            self.loaded.tolerances.sing,
        )
    }

    #[pyo3(signature = (window=None, forced=Vec::new()))]
    fn block_system(&self, window: Option<(f64, f64)>, forced: Vec<f64>) -> PyResult<BlockSystem> {
        let window = window.unwrap_or(self.loaded.window);
        let mut forced_all = self.loaded.forced.clone();
        forced_all.extend(forced);
        let bs = blocksystem::assemble_window(
            &self.loaded.problem,
            window,
            &forced_all,
            &self.loaded.tolerances,
        )
        .map_err(py_err)?;
        Ok(BlockSystem { inner: bs })
    }

    fn __repr__(&self) -> String {
        let (a, b) = self.loaded.problem.interval();
        format!("Problem(n={}, interval=({a}, {b}))", self.dim())
    }
}

/// The block system of a window together with its partition.
#[pyclass(module = "measys")]
struct BlockSystem {
    inner: blocksystem::BlockSystem,
}

#[pymethods]
impl BlockSystem {
    /// Shape of `B`: `(nN, n(N+1))`.
    fn shape(&self) -> (usize, usize) {
        self.inner.b.shape()
    }

    #[getter]
    fn partition(&self) -> Vec<f64> {
        self.inner.partition.points().to_vec()
    }

    #[getter]
    fn kinds(&self) -> Vec<&'static str> {
        self.inner
            .partition
            .kinds()
            .iter()
            .map(|k| match k {
                PointKind::Singular => "singular",
                PointKind::Forced => "forced",
                PointKind::Padded => "padded",
            })
            .collect()
    }

    fn b(&self) -> Vec<Vec<Complex64>> {
        from_matrix(&self.inner.b)
    }

    fn c(&self) -> Vec<Vec<Complex64>> {
        from_matrix(&self.inner.c)
    }

    fn kernel_dim(&self) -> usize {
        self.inner.kernel().ncols()
    }

    fn cokernel_dim(&self) -> usize {
        self.inner.cokernel().ncols()
    }

    /// `‖C*B − B*C − diag(−J, 0, …, 0, J)‖` and `‖C_m*B − B_m*C‖`.
    fn cbbc_defects(&self) -> (f64, f64) {
        let ch = checks::cbbc(&self.inner);
        (ch[0].defect, ch[1].defect)
    }

    /// Compactly supported homogeneous solutions sampled on `samples` points of the window.
    #[pyo3(signature = (samples=101))]
    fn compact_solutions<'py>(
        &self,
        py: Python<'py>,
        samples: usize,
    ) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let grid = cli::sample_grid(self.inner.partition.window(), samples);
        solutions::compact_support_solutions(&self.inner)
            .map_err(py_err)?
            .into_iter()
            .map(|cs| {
                let d = PyDict::new(py);
                d.set_item("u_hat", from_vector(&cs.hat))?;
                d.set_item("u_tilde", from_vector(&cs.tilde))?;
                d.set_item("endpoint_defect", cs.endpoint_defect)?;
                d.set_item("x", grid.clone())?;
                let values = grid
                    .iter()
                    .map(|&x| cs.solution.sample(x).map(|v| from_vector(&v)))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(py_err)?;
                d.set_item("u", values)?;
                Ok(d)
            })
            .collect()
    }

    fn __repr__(&self) -> String {
        let (r, c) = self.shape();
        format!("BlockSystem(N={}, B={r}x{c})", self.inner.interior_count())
    }
}

/// `B₊⁻¹B₋` for the atom `Δq`; raises if `J + Δq/2` is singular.
#[pyfunction]
#[pyo3(signature = (j, dq, tol_sing=Tolerances::default().sing))]
fn atom_transfer(
    j: Vec<Vec<Complex64>>,
    dq: Vec<Vec<Complex64>>,
    tol_sing: f64,
) -> PyResult<Vec<Vec<Complex64>>> {
    let t =
        propagation::atom_transfer(&to_matrix(j)?, &to_matrix(dq)?, tol_sing).map_err(py_err)?;
    Ok(from_matrix(&t))
}

/// `exp(−dx J⁻¹q0)`.
#[pyfunction]
fn segment_exponential(
    j: Vec<Vec<Complex64>>,
    q0: Vec<Vec<Complex64>>,
    dx: f64,
) -> PyResult<Vec<Vec<Complex64>>> {
    let e =
        propagation::segment_exponential(&to_matrix(j)?, &to_matrix(q0)?, dx).map_err(py_err)?;
    Ok(from_matrix(&e))
}

/// Runs a command as the `measys` binary would. Returns `(report_json, exit_code)`.
#[pyfunction]
#[pyo3(signature = (mode, input=None, seed=0, samples=101, checks=None, random=0, tol_sing=None, tol_rank=None))]
#[allow(clippy::too_many_arguments)]
fn run(
    mode: &str,
    input: Option<&str>,
    seed: u64,
    samples: usize,
    checks: Option<Vec<String>>,
    random: usize,
    tol_sing: Option<f64>,
    tol_rank: Option<f64>,
) -> PyResult<(String, i32)> {
    let mode: Mode = mode.parse().map_err(py_err)?;
    let opts = Options {
        seed,
        samples,
        tol_sing,
        tol_rank,
        checks,
        random,
    };
    let out = cli::execute(mode, input, &opts);
    Ok((out.report, out.exit_code))
}

#[pymodule]
fn measys(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", cli::VERSION)?;
    m.add_class::<Problem>()?;
    m.add_class::<BlockSystem>()?;
    m.add_function(wrap_pyfunction!(atom_transfer, m)?)?;
    m.add_function(wrap_pyfunction!(segment_exponential, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
