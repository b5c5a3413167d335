//! Python module `tendonhand`.
//!
//! Designs are opaque `HandDesign` objects; results come back as plain
//! dicts and lists keyed by joint and tendon ids.

use std::path::{Path, PathBuf};

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use tendonhand as th;

create_exception!(tendonhand, TendonhandError, PyException);
create_exception!(tendonhand, ParseError, TendonhandError);
create_exception!(tendonhand, ValidationError, TendonhandError);
create_exception!(tendonhand, SolverError, TendonhandError);
create_exception!(tendonhand, OptimizationError, TendonhandError);

fn to_py(e: th::Error) -> PyErr {
    let message = e.to_string();
    match e.root() {
        th::Error::Io { .. } => pyo3::exceptions::PyOSError::new_err(message),
        th::Error::Parse { .. } => ParseError::new_err(message),
        th::Error::InvalidDesign(_)
        | th::Error::InvalidInput(_)
        | th::Error::UnknownJoint(_)
        | th::Error::UnknownTendon(_)
        | th::Error::JointOutOfRange { .. }
        | th::Error::MotorOutOfRange { .. } => ValidationError::new_err(message),
        th::Error::BudgetTooSmall { .. } | th::Error::NoValidCandidate => OptimizationError::new_err(message),
        _ => SolverError::new_err(message),
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for th::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

#[pyclass(name = "HandDesign", module = "tendonhand", from_py_object)]
#[derive(Clone)]
pub struct PyHandDesign {
    inner: th::HandDesign,
}

#[pymethods]
impl PyHandDesign {
    /// The built-in three-finger hand.
    #[staticmethod]
    fn default() -> Self {
        PyHandDesign {
            inner: th::default_iss_hand(),
        }
    }

    #[staticmethod]
    #[pyo3(signature = (text, origin = "<string>"))]
    fn from_toml(text: &str, origin: &str) -> PyResult<Self> {
        Ok(PyHandDesign {
            inner: th::design_file::parse_design(text, origin).py()?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyHandDesign {
            inner: th::design_file::read_design(&path).py()?,
        })
    }

    fn to_toml(&self) -> String {
        th::design_file::design_to_toml(&self.inner)
    }

    #[getter]
    fn joint_ids(&self) -> Vec<String> {
        self.inner.joints.iter().map(|j| j.id.clone()).collect()
    }

    #[getter]
    fn tendon_ids(&self) -> Vec<String> {
        self.inner.tendons.iter().map(|t| t.id.clone()).collect()
    }

    #[getter]
    fn motor_range(&self) -> (f64, f64) {
        (self.inner.motor.angle_min, self.inner.motor.angle_max)
    }

    /// Rule violations as `"path: rule"` strings; empty when valid.
    fn violations(&self) -> Vec<String> {
        th::validate_design(&self.inner)
            .iter()
            .map(ToString::to_string)
            .collect()
    }

    /// Paradigm cell of a tendon, such as `"TA+MJT"`.
    fn classify(&self, tendon: &str) -> PyResult<String> {
        Ok(th::classify_paradigm(&self.inner, tendon).py()?.cell.to_string())
    }

    /// Reads a parameter such as `"joint.F1A.stiffness"` or `"motor.radius"`.
    fn get(&self, path: &str) -> PyResult<f64> {
        let path: th::ParameterPath = path.parse().py()?;
        path.get(&self.inner).py()
    }

    /// Copy of the design with one parameter replaced.
    fn with_value(&self, path: &str, value: f64) -> PyResult<Self> {
        let path: th::ParameterPath = path.parse().py()?;
        let mut inner = self.inner.clone();
        path.set(&mut inner, value).py()?;
        Ok(PyHandDesign { inner })
    }

    #[pyo3(signature = (stiction))]
    fn with_stiction(&self, stiction: f64) -> Self {
        let mut inner = self.inner.clone();
        inner.motor.stiction = stiction;
        PyHandDesign { inner }
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!(
            "HandDesign({} joints, {} tendons)",
            self.inner.joints.len(),
            self.inner.tendons.len()
        )
    }
}

fn contacts_from(contacts: Option<Vec<(String, f64)>>) -> Vec<th::ContactConstraint> {
    contacts
        .unwrap_or_default()
        .iter()
        .map(|(joint, cap)| th::ContactConstraint::new(joint, *cap))
        .collect()
}

fn equilibrium_dict<'py>(
    py: Python<'py>,
    design: &th::HandDesign,
    eq: &th::EquilibriumResult,
) -> PyResult<Bound<'py, PyDict>> {
    let angles = PyDict::new(py);
    for (j, a) in design.joints.iter().zip(&eq.configuration.angles) {
        angles.set_item(&j.id, a)?;
    }
    let tensions = PyDict::new(py);
    let slacks = PyDict::new(py);
    let taut = PyDict::new(py);
    for s in &eq.tendon_statuses {
        tensions.set_item(&s.tendon, s.tension)?;
        slacks.set_item(&s.tendon, s.slack)?;
        taut.set_item(&s.tendon, s.taut)?;
    }
    let contact_torques = PyDict::new(py);
    for (joint, torque) in &eq.contact_torques {
        contact_torques.set_item(joint, torque)?;
    }
    let out = PyDict::new(py);
    out.set_item("motor_angle", eq.configuration.motor_angle)?;
    out.set_item("angles", angles)?;
    out.set_item("tensions", tensions)?;
    out.set_item("slacks", slacks)?;
    out.set_item("taut", taut)?;
    out.set_item("contact_torques", contact_torques)?;
    out.set_item("energy", eq.energy)?;
    Ok(out)
}

/// Quasi-static equilibrium at one motor angle. `contacts` is a list of
/// `(joint, cap)` pairs.
#[pyfunction]
#[pyo3(signature = (design, motor_angle, contacts = None))]
fn solve_pose<'py>(
    py: Python<'py>,
    design: &PyHandDesign,
    motor_angle: f64,
    contacts: Option<Vec<(String, f64)>>,
) -> PyResult<Bound<'py, PyDict>> {
    let contacts = contacts_from(contacts);
    let eq = py
        .detach(|| th::solve_pose(&design.inner, motor_angle, &contacts))
        .py()?;
    equilibrium_dict(py, &design.inner, &eq)
}

/// Brute-force equilibrium on a lattice of spacing `resolution`.
#[pyfunction]
#[pyo3(signature = (design, motor_angle, contacts = None, resolution = 1e-2))]
fn grid_search_pose<'py>(
    py: Python<'py>,
    design: &PyHandDesign,
    motor_angle: f64,
    contacts: Option<Vec<(String, f64)>>,
    resolution: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let contacts = contacts_from(contacts);
    let eq = py
        .detach(|| th::grid_search_pose(&design.inner, motor_angle, &contacts, resolution))
        .py()?;
    equilibrium_dict(py, &design.inner, &eq)
}

/// Sweeps `samples` motor angles over the motor range. `contacts` is a list
/// of `(joint, activate_at, cap)` triples.
#[pyfunction]
#[pyo3(signature = (design, samples = 100, contacts = None))]
fn simulate_closing<'py>(
    py: Python<'py>,
    design: &PyHandDesign,
    samples: usize,
    contacts: Option<Vec<(String, f64, f64)>>,
) -> PyResult<Bound<'py, PyDict>> {
    let schedule: Vec<th::ScheduledContact> = contacts
        .unwrap_or_default()
        .iter()
        .map(|(joint, at, cap)| th::ScheduledContact::new(*at, joint, *cap))
        .collect();
    let grid = th::motor_grid(&design.inner, samples);
    let trace = py
        .detach(|| th::simulate_closing(&design.inner, &grid, &schedule))
        .py()?;
    let out = PyDict::new(py);
    let samples = trace
        .samples
        .iter()
        .map(|eq| equilibrium_dict(py, &design.inner, eq))
        .collect::<PyResult<Vec<_>>>()?;
    let events: Vec<(f64, String, String)> = trace
        .events
        .iter()
        .map(|e| (e.motor_angle, e.kind.to_string(), e.subject.clone()))
        .collect();
    out.set_item("samples", samples)?;
    out.set_item("events", events)?;
    Ok(out)
}

#[pyclass(name = "TorqueProfile", module = "tendonhand", frozen, skip_from_py_object)]
pub struct PyTorqueProfile {
    inner: th::TorqueProfile,
}

#[pymethods]
impl PyTorqueProfile {
    #[getter]
    fn motor_angles(&self) -> Vec<f64> {
        self.inner.motor_angles.clone()
    }
    #[getter]
    fn agonist(&self) -> Vec<f64> {
        self.inner.agonist.clone()
    }
    #[getter]
    fn antagonist(&self) -> Vec<f64> {
        self.inner.antagonist.clone()
    }
    #[getter]
    fn net(&self) -> Vec<f64> {
        self.inner.net.clone()
    }
    #[getter]
    fn stiction(&self) -> f64 {
        self.inner.stiction
    }
    fn max_abs_net(&self) -> f64 {
        self.inner.max_abs_net()
    }
    fn changes_sign(&self) -> bool {
        self.inner.changes_sign()
    }

    /// `(pass, worst_violation, worst_angle)` of the qualified-zone test.
    fn check(&self) -> PyResult<(bool, f64, f64)> {
        let z = th::check_qualified_zone(&self.inner).py()?;
        Ok((z.pass, z.worst_violation, z.worst_angle))
    }

    fn to_csv(&self) -> String {
        th::table::profile_csv(&self.inner)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

#[pyfunction]
#[pyo3(signature = (design, samples = 1000))]
fn torque_profile(py: Python<'_>, design: &PyHandDesign, samples: usize) -> PyResult<PyTorqueProfile> {
    let inner = py.detach(|| th::torque_profile(&design.inner, samples)).py()?;
    Ok(PyTorqueProfile { inner })
}

/// Picks the adduction spring minimizing the worst net shaft torque.
/// `catalog` is a list of `(stiffness, preload_min, preload_max)`; the
/// built-in catalog when omitted.
#[pyfunction]
#[pyo3(signature = (design, catalog = None, preload_step = th::cancellation::DEFAULT_PRELOAD_STEP, samples = 1000))]
fn select_adduction_springs<'py>(
    py: Python<'py>,
    design: &PyHandDesign,
    catalog: Option<Vec<(f64, f64, f64)>>,
    preload_step: f64,
    samples: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let catalog = match catalog {
        Some(entries) => entries
            .into_iter()
            .map(|(k, lo, hi)| th::SpringCatalogEntry::new(k, lo, hi))
            .collect(),
        None => th::model::iss_spring_catalog(),
    };
    let s = py
        .detach(|| th::select_adduction_springs(&design.inner, &catalog, preload_step, samples))
        .py()?;
    let out = PyDict::new(py);
    out.set_item("catalog_index", s.catalog_index)?;
    out.set_item("stiffness", s.stiffness)?;
    out.set_item("preload", s.preload)?;
    out.set_item("max_abs_net", s.max_abs_net)?;
    out.set_item("pass", s.pass)?;
    out.set_item("candidates", s.candidates_evaluated)?;
    out.set_item("design", PyHandDesign { inner: s.design })?;
    Ok(out)
}

/// Runs a synergy problem file and returns the fitted design and its tables.
#[pyfunction]
#[pyo3(signature = (problem, seed = None, budget = None))]
fn optimize<'py>(
    py: Python<'py>,
    problem: PathBuf,
    seed: Option<u64>,
    budget: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let mut problem = th::design_file::read_problem(Path::new(&problem)).py()?;
    if let Some(seed) = seed {
        problem.seed = seed;
    }
    if let Some(budget) = budget {
        problem.budget = budget;
    }
    let r = py.detach(|| th::optimize_design(&problem)).py()?;
    let parameters = PyDict::new(py);
    for (b, v) in problem.parameters.iter().zip(&r.parameters) {
        parameters.set_item(b.path.to_string(), v)?;
    }
    let residuals: Vec<(f64, f64)> = r.residuals.iter().map(|g| (g.distance, g.motor_angle)).collect();
    let out = PyDict::new(py);
    out.set_item("objective", r.objective)?;
    out.set_item("initial_objective", r.initial_objective)?;
    out.set_item("evaluations", r.evaluations)?;
    out.set_item("parameters", parameters)?;
    out.set_item("residuals", residuals)?;
    out.set_item("history", r.history)?;
    out.set_item("design", PyHandDesign { inner: r.design })?;
    Ok(out)
}

/// Net, agonist and antagonist shaft torque at a solved pose.
#[pyfunction]
#[pyo3(signature = (design, motor_angle, contacts = None))]
fn net_motor_torque(
    design: &PyHandDesign,
    motor_angle: f64,
    contacts: Option<Vec<(String, f64)>>,
) -> PyResult<(f64, f64, f64)> {
    let contacts = contacts_from(contacts);
    let eq = th::solve_pose(&design.inner, motor_angle, &contacts).py()?;
    let t = th::net_motor_torque(&design.inner, &eq.configuration).py()?;
    Ok((t.net, t.agonist, t.antagonist))
}

#[pymodule(name = "tendonhand")]
fn tendonhand_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add_class::<PyHandDesign>()?;
    m.add_class::<PyTorqueProfile>()?;
    m.add_function(wrap_pyfunction!(solve_pose, m)?)?;
    m.add_function(wrap_pyfunction!(grid_search_pose, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_closing, m)?)?;
    m.add_function(wrap_pyfunction!(torque_profile, m)?)?;
    m.add_function(wrap_pyfunction!(net_motor_torque, m)?)?;
    m.add_function(wrap_pyfunction!(select_adduction_springs, m)?)?;
    m.add_function(wrap_pyfunction!(optimize, m)?)?;
    m.add("TendonhandError", py.get_type::<TendonhandError>())?;
    m.add("ParseError", py.get_type::<ParseError>())?;
    m.add("ValidationError", py.get_type::<ValidationError>())?;
    m.add("SolverError", py.get_type::<SolverError>())?;
    m.add("OptimizationError", py.get_type::<OptimizationError>())?;
    Ok(())
}
