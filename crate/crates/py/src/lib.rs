//! Python bindings: exponents, rotations, fixed points and the linear case.
//!
//! Heavy calls release the interpreter lock while they run.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use twistlab::experiments::{self, DiffusedSpec, GridSpec, OrbitSpec};
use twistlab::exponents::{self, SeriesRegime};
use twistlab::fixedpoints;
use twistlab::geometry::{sample_haar, solve_kepler as kepler};
use twistlab::linear::{self, Matrix2};
use twistlab::{Error, ExponentEstimate, Rotation, Seed, SpherePoint, TwistFamily, Vec3};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Domain { .. }
        | Error::NotUnimodular(_)
        | Error::UnsupportedEstimator(_)
        | Error::Config(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn vec3(v: [f64; 3]) -> Vec3 {
    Vec3::new(v[0], v[1], v[2])
}

fn matrix(m: [[f64; 2]; 2]) -> Matrix2 {
    Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1])
}

/// An exponent value with its standard error.
#[pyclass(name = "Estimate", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
pub struct PyEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_iterates: u64,
    pub n_samples: u64,
    pub estimator: String,
    /// Standard error times √(NM), for Monte-Carlo runs.
    pub kappa: Option<f64>,
}

impl PyEstimate {
    fn from_core(e: ExponentEstimate, kappa: Option<f64>) -> PyEstimate {
        PyEstimate {
            value: e.value,
            std_error: e.std_error,
            n_iterates: e.n_iterates,
            n_samples: e.n_samples,
            estimator: e.estimator.as_str().to_string(),
            kappa,
        }
    }
}

#[pymethods]
impl PyEstimate {
    fn __repr__(&self) -> String {
        format!(
            "Estimate(value={}, std_error={}, estimator='{}')",
            self.value, self.std_error, self.estimator
        )
    }
}

/// A rotation of the sphere.
#[pyclass(name = "Rotation", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
pub struct PyRotation {
    inner: Rotation,
}

#[pymethods]
impl PyRotation {
    #[new]
    fn new(axis: [f64; 3], angle: f64) -> PyResult<PyRotation> {
        if vec3(axis).norm() == 0.0 {
            return Err(PyValueError::new_err("rotation axis must be nonzero"));
        }
        Ok(PyRotation {
            inner: Rotation::from_axis_angle(vec3(axis), angle),
        })
    }

    #[staticmethod]
    fn identity() -> PyRotation {
        PyRotation {
            inner: Rotation::IDENTITY,
        }
    }

    /// Haar-distributed rotation from stream `stream` of `seed`.
    #[staticmethod]
    #[pyo3(signature = (seed, stream = 0))]
    fn haar(seed: u64, stream: u64) -> PyRotation {
        PyRotation {
            inner: sample_haar(&mut Seed::new(seed).rng(stream)).rotation,
        }
    }

    #[getter]
    fn angle(&self) -> f64 {
        self.inner.angle()
    }

    #[getter]
    fn axis(&self) -> [f64; 3] {
        self.inner.axis().to_array()
    }

    fn matrix(&self) -> [[f64; 3]; 3] {
        self.inner.matrix()
    }

    fn apply(&self, v: [f64; 3]) -> [f64; 3] {
        self.inner.apply(vec3(v)).to_array()
    }

    fn compose(&self, other: &PyRotation) -> PyRotation {
        PyRotation {
            inner: self.inner.compose(&other.inner),
        }
    }

    fn inverse(&self) -> PyRotation {
        PyRotation {
            inner: self.inner.inverse(),
        }
    }

    fn __repr__(&self) -> String {
        let a = self.inner.axis();
        format!(
            "Rotation(axis=[{}, {}, {}], angle={})",
            a.x,
            a.y,
            a.z,
            self.inner.angle()
        )
    }
}

/// The integrable twist of the sphere about its polar axis.
#[pyclass(name = "TwistFamily", frozen)]
pub struct PyTwistFamily {
    inner: TwistFamily,
}

#[pymethods]
impl PyTwistFamily {
    #[new]
    fn new(eps: f64) -> PyResult<PyTwistFamily> {
        Ok(PyTwistFamily {
            inner: TwistFamily::new(eps).map_err(py_err)?,
        })
    }

    #[getter]
    fn eps(&self) -> f64 {
        self.inner.eps()
    }

    /// Image of a point, normalized onto the sphere first.
    fn apply(&self, p: [f64; 3]) -> PyResult<[f64; 3]> {
        let v = vec3(p);
        if v.norm() == 0.0 {
            return Err(PyValueError::new_err("point must be nonzero"));
        }
        Ok(self.inner.apply(SpherePoint::new(v)).vec().to_array())
    }
}

/// One fixed point of g∘f_ε.
#[pyclass(name = "FixedPoint", frozen, get_all)]
pub struct PyFixedPoint {
    pub b: f64,
    pub location: [f64; 3],
    pub trace: f64,
    /// "E", "H" or "R".
    pub stability: String,
    pub max_modulus: f64,
    pub residual: f64,
    pub flagged: bool,
}

#[pymethods]
impl PyFixedPoint {
    fn __repr__(&self) -> String {
        format!(
            "FixedPoint(b={}, stability='{}', trace={})",
            self.b, self.stability, self.trace
        )
    }
}

/// Summary of a grid average over SO(3).
#[pyclass(name = "LambdaScan", frozen, get_all)]
pub struct PyLambdaScan {
    pub eps: f64,
    pub lambda_num: f64,
    pub extrapolated: f64,
    /// Λ at M/4, M/2 and M.
    pub snapshots: [f64; 3],
    pub std_error: f64,
    pub sigma_s2: f64,
    pub sigma_total: f64,
    /// (θ, β, λ, σ) per grid node.
    pub cells: Vec<(f64, f64, f64, f64)>,
}

#[pymethods]
impl PyLambdaScan {
    fn __repr__(&self) -> String {
        format!(
            "LambdaScan(eps={}, lambda_num={}, extrapolated={})",
            self.eps, self.lambda_num, self.extrapolated
        )
    }
}

/// R(ε) by quadrature.
#[pyfunction]
fn random_exponent(eps: f64) -> PyResult<PyEstimate> {
    let e = exponents::random_exponent_quadrature(eps).map_err(py_err)?;
    Ok(PyEstimate::from_core(e, None))
}

/// Small- or large-ε series for R(ε).
#[pyfunction]
#[pyo3(signature = (eps, regime = "small"))]
fn random_exponent_series(eps: f64, regime: &str) -> PyResult<f64> {
    let regime = match regime {
        "small" => SeriesRegime::Small,
        "large" => SeriesRegime::Large,
        other => return Err(PyValueError::new_err(format!("unknown regime `{other}`"))),
    };
    exponents::random_exponent_series(eps, regime).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (eps, n, m, seed = 1))]
fn random_exponent_montecarlo(py: Python<'_>, eps: f64, n: u64, m: u64, seed: u64) -> PyResult<PyEstimate> {
    let r = py
        .detach(|| exponents::random_exponent_montecarlo(eps, n, m, Seed::new(seed)))
        .map_err(py_err)?;
    Ok(PyEstimate::from_core(r.estimate, Some(r.kappa)))
}

/// (λ_g, σ_g) for one rotation, averaged over `n_p` random starts.
#[pyfunction]
#[pyo3(signature = (rotation, eps, n_p, m, seed = 1))]
fn lambda_for_rotation(
    py: Python<'_>,
    rotation: &PyRotation,
    eps: f64,
    n_p: usize,
    m: u64,
    seed: u64,
) -> PyResult<(f64, f64)> {
    let g = rotation.inner;
    let r = py
        .detach(|| experiments::lambda_for_rotation(&g, eps, &OrbitSpec::new(n_p, m), Seed::new(seed)))
        .map_err(py_err)?;
    Ok((r.lambda, r.sigma))
}

#[pyfunction]
#[pyo3(signature = (eps, n_g, n_p, m, seed = 1))]
fn lambda_scan(py: Python<'_>, eps: f64, n_g: usize, n_p: usize, m: u64, seed: u64) -> PyResult<PyLambdaScan> {
    let grid = GridSpec::new(n_g).map_err(py_err)?;
    let s = py
        .detach(|| experiments::lambda_scan(eps, grid, OrbitSpec::new(n_p, m), Seed::new(seed)))
        .map_err(py_err)?;
    Ok(PyLambdaScan {
        eps,
        lambda_num: s.lambda_num,
        extrapolated: s.extrapolation.a,
        snapshots: s.snapshots,
        std_error: s.std_error(),
        sigma_s2: s.sigma_s2,
        sigma_total: s.sigma_total,
        cells: s
            .cells
            .iter()
            .map(|c| (c.node.theta, c.node.beta, c.lambda, c.sigma))
            .collect(),
    })
}

/// R(ε, δ) with rotations diffused over a ball of radius δ.
#[pyfunction]
#[pyo3(signature = (eps, delta, n, m_r, m_p, seed = 1))]
fn diffused_exponent(
    py: Python<'_>,
    eps: f64,
    delta: f64,
    n: u64,
    m_r: usize,
    m_p: usize,
    seed: u64,
) -> PyResult<PyEstimate> {
    let spec = DiffusedSpec { eps, delta, n, m_r, m_p };
    let e = py
        .detach(|| experiments::diffused_exponent(&spec, Seed::new(seed)))
        .map_err(py_err)?;
    Ok(PyEstimate::from_core(e, None))
}

/// Fixed points of g∘f_ε for g the rotation by θ about (cos β, 0, sin β).
#[pyfunction]
fn find_fixed_points(beta: f64, theta: f64, eps: f64) -> PyResult<Vec<PyFixedPoint>> {
    let recs = fixedpoints::find_fixed_points(beta, theta, eps).map_err(py_err)?;
    Ok(recs
        .iter()
        .map(|r| PyFixedPoint {
            b: r.b,
            location: r.location.vec().to_array(),
            trace: r.trace,
            stability: r.stability.letter().to_string(),
            max_modulus: r.max_modulus(),
            residual: r.residual,
            flagged: r.flags.any(),
        })
        .collect())
}

/// Largest eigenvalue modulus over all fixed points and rotations.
#[pyfunction]
fn max_eigenvalue(eps: f64) -> PyResult<f64> {
    fixedpoints::max_eigenvalue(eps).map_err(py_err)
}

/// Inverse of θ ↦ θ − sin θ on [0, 2π].
#[pyfunction]
fn solve_kepler(z: f64) -> PyResult<f64> {
    kepler(z).map_err(py_err)
}

/// Closed-form exponent of SO(2)-randomized products of a 2×2 matrix.
#[pyfunction]
fn avila_bochi(m: [[f64; 2]; 2]) -> PyResult<f64> {
    linear::avila_bochi(&matrix(m)).map_err(py_err)
}

/// Λ of the coset A·SO(2) by quadrature over the circle.
#[pyfunction]
#[pyo3(signature = (m, n_phi = 4096))]
fn lambda_of_coset(m: [[f64; 2]; 2], n_phi: usize) -> PyResult<f64> {
    linear::lambda_of_coset(&matrix(m), n_phi).map_err(py_err)
}

/// Top exponent of i.i.d. products of matrices drawn uniformly from `mats`.
#[pyfunction]
#[pyo3(signature = (mats, n, m, seed = 1))]
fn random_product_exponent(
    py: Python<'_>,
    mats: Vec<[[f64; 2]; 2]>,
    n: u64,
    m: u64,
    seed: u64,
) -> PyResult<PyEstimate> {
    let mats: Vec<Matrix2> = mats.into_iter().map(matrix).collect();
    let e = py
        .detach(|| linear::random_product_exponent(&mats, n, m, Seed::new(seed)))
        .map_err(py_err)?;
    Ok(PyEstimate::from_core(e, None))
}

#[pymodule]
#[pyo3(name = "twistlab")]
fn twistlab_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyEstimate>()?;
    m.add_class::<PyRotation>()?;
    m.add_class::<PyTwistFamily>()?;
    m.add_class::<PyFixedPoint>()?;
    m.add_class::<PyLambdaScan>()?;
    m.add_function(wrap_pyfunction!(random_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(random_exponent_series, m)?)?;
    m.add_function(wrap_pyfunction!(random_exponent_montecarlo, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_for_rotation, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_scan, m)?)?;
    m.add_function(wrap_pyfunction!(diffused_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(find_fixed_points, m)?)?;
    m.add_function(wrap_pyfunction!(max_eigenvalue, m)?)?;
    m.add_function(wrap_pyfunction!(solve_kepler, m)?)?;
    m.add_function(wrap_pyfunction!(avila_bochi, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_of_coset, m)?)?;
    m.add_function(wrap_pyfunction!(random_product_exponent, m)?)?;
    Ok(())
}
