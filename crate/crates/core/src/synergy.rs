//! Fitting transmission parameters so the single-motor posture manifold
//! passes close to a set of target grasps.
//!
//! The free-motion equilibria over the motor range form a one-dimensional
//! curve in joint space. A target's residual is its weighted Euclidean
//! distance to that curve; the design objective is the sum of squared
//! residuals over all targets.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::closing::motor_grid;
use crate::error::{Error, Result};
use crate::model::{HandDesign, JointConfiguration, SpringSense};
use crate::search::{golden_section, nelder_mead, parabola_vertex, SimplexOptions};
use crate::statics::{solve_with_layout, Layout};

pub const DEFAULT_MOTOR_SAMPLES: usize = 200;
pub const DEFAULT_RESTARTS: usize = 8;
pub const DEFAULT_BUDGET: usize = 5000;
/// Motor-angle tolerance of the residual line search, radians.
pub const MOTOR_TOLERANCE: f64 = 1e-4;

/// A tunable design quantity.
///
/// Text form: `joint.<id>.stiffness`, `joint.<id>.preload`,
/// `stop.<joint>.moment_arm` or `motor.radius`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ParameterPath {
    Stiffness(String),
    Preload(String),
    MomentArm(String),
    MotorRadius,
}

impl FromStr for ParameterPath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split('.').collect();
        match parts.as_slice() {
            ["joint", id, "stiffness"] => Ok(ParameterPath::Stiffness(id.to_string())),
            ["joint", id, "preload"] => Ok(ParameterPath::Preload(id.to_string())),
            ["stop", id, "moment_arm"] => Ok(ParameterPath::MomentArm(id.to_string())),
            ["motor", "radius"] => Ok(ParameterPath::MotorRadius),
            _ => Err(Error::InvalidInput(format!("unrecognised parameter path `{s}`"))),
        }
    }
}

impl fmt::Display for ParameterPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParameterPath::Stiffness(id) => write!(f, "joint.{id}.stiffness"),
            ParameterPath::Preload(id) => write!(f, "joint.{id}.preload"),
            ParameterPath::MomentArm(id) => write!(f, "stop.{id}.moment_arm"),
            ParameterPath::MotorRadius => f.write_str("motor.radius"),
        }
    }
}

impl ParameterPath {
    /// Checks that the path names something tunable in `design`. Springs on
    /// SA joints are excluded: they do not move the posture manifold.
    pub fn check(&self, design: &HandDesign) -> Result<()> {
        match self {
            ParameterPath::Stiffness(id) | ParameterPath::Preload(id) => {
                design.joint(id)?;
                if design.spring_sense(id) == SpringSense::Agonist {
                    return Err(Error::InvalidInput(format!(
                        "`{self}` is an SA spring parameter and cannot be optimized"
                    )));
                }
                Ok(())
            }
            ParameterPath::MomentArm(id) => {
                design.joint(id)?;
                design
                    .stop_for_joint(id)
                    .map(|_| ())
                    .ok_or_else(|| Error::InvalidInput(format!("joint `{id}` is not routed by any tendon")))
            }
            ParameterPath::MotorRadius => Ok(()),
        }
    }

    pub fn get(&self, design: &HandDesign) -> Result<f64> {
        match self {
            ParameterPath::Stiffness(id) => Ok(design.joint(id)?.stiffness),
            ParameterPath::Preload(id) => Ok(design.joint(id)?.preload),
            ParameterPath::MomentArm(id) => design
                .stop_for_joint(id)
                .map(|(_, s)| s.moment_arm)
                .ok_or_else(|| Error::UnknownJoint(id.clone())),
            ParameterPath::MotorRadius => Ok(design.motor.radius),
        }
    }

    pub fn set(&self, design: &mut HandDesign, value: f64) -> Result<()> {
        match self {
            ParameterPath::Stiffness(id) => design.joint_mut(id)?.stiffness = value,
            ParameterPath::Preload(id) => design.joint_mut(id)?.preload = value,
            ParameterPath::MomentArm(id) => {
                design
                    .stop_for_joint_mut(id)
                    .ok_or_else(|| Error::UnknownJoint(id.clone()))?
                    .moment_arm = value
            }
            ParameterPath::MotorRadius => design.motor.radius = value,
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterBound {
    pub path: ParameterPath,
    pub lower: f64,
    pub upper: f64,
}

impl ParameterBound {
    pub fn new(path: ParameterPath, lower: f64, upper: f64) -> Self {
        ParameterBound { path, lower, upper }
    }

    fn value_to_unit(&self, value: f64) -> f64 {
        ((value - self.lower) / (self.upper - self.lower)).clamp(0.0, 1.0)
    }

    fn unit_to_value(&self, u: f64) -> f64 {
        self.lower + u * (self.upper - self.lower)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynergyProblem {
    pub base: HandDesign,
    /// Full joint-angle vectors in design joint order.
    pub targets: Vec<Vec<f64>>,
    pub parameters: Vec<ParameterBound>,
    /// Per-joint weights of the distance metric.
    pub weights: Vec<f64>,
    pub budget: usize,
    pub restarts: usize,
    pub seed: u64,
    pub motor_samples: usize,
}

impl SynergyProblem {
    /// Problem with unit weights and default budget, restarts and sampling.
    pub fn new(base: HandDesign, targets: Vec<Vec<f64>>, parameters: Vec<ParameterBound>) -> Self {
        let weights = vec![1.0; base.joints.len()];
        SynergyProblem {
            base,
            targets,
            parameters,
            weights,
            budget: DEFAULT_BUDGET,
            restarts: DEFAULT_RESTARTS,
            seed: 0,
            motor_samples: DEFAULT_MOTOR_SAMPLES,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.base.ensure_valid()?;
        let n = self.base.joints.len();
        if self.weights.len() != n || self.weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidInput(format!(
                "weights must be {n} finite nonnegative numbers"
            )));
        }
        for (g, target) in self.targets.iter().enumerate() {
            check_target(&self.base, target).map_err(|e| match e {
                Error::InvalidInput(msg) => Error::InvalidInput(format!("target {g}: {msg}")),
                other => other,
            })?;
        }
        if self.parameters.is_empty() {
            return Err(Error::InvalidInput("no parameters to optimize".into()));
        }
        for (i, bound) in self.parameters.iter().enumerate() {
            bound.path.check(&self.base)?;
            if !(bound.lower.is_finite() && bound.upper.is_finite() && bound.lower < bound.upper) {
                return Err(Error::InvalidInput(format!(
                    "bounds of `{}` must be finite with lower < upper",
                    bound.path
                )));
            }
            if self.parameters[..i].iter().any(|b| b.path == bound.path) {
                return Err(Error::InvalidInput(format!("parameter `{}` listed twice", bound.path)));
            }
        }
        if self.restarts == 0 {
            return Err(Error::InvalidInput("at least one restart is required".into()));
        }
        if self.motor_samples < 2 {
            return Err(Error::InvalidInput("motor_samples must be at least 2".into()));
        }
        Ok(())
    }

    /// Base design with parameter vector `values` applied, validated.
    pub fn apply(&self, values: &[f64]) -> Result<HandDesign> {
        if values.len() != self.parameters.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} parameter values, got {}",
                self.parameters.len(),
                values.len()
            )));
        }
        let mut design = self.base.clone();
        for (bound, &value) in self.parameters.iter().zip(values) {
            bound.path.set(&mut design, value)?;
        }
        design.ensure_valid()?;
        Ok(design)
    }

    /// Parameter values of the base design, in problem order.
    pub fn base_values(&self) -> Result<Vec<f64>> {
        self.parameters.iter().map(|b| b.path.get(&self.base)).collect()
    }

    /// Sum of squared residuals of `design` over all targets.
    pub fn objective(&self, design: &HandDesign) -> Result<f64> {
        let residuals = residuals_with(design, &self.targets, &self.weights, self.motor_samples)?;
        Ok(residuals.iter().map(|r| r.distance * r.distance).sum())
    }
}

fn check_target(design: &HandDesign, target: &[f64]) -> Result<()> {
    if target.len() != design.joints.len() {
        return Err(Error::InvalidInput(format!(
            "expected {} joint angles, found {}",
            design.joints.len(),
            target.len()
        )));
    }
    for (joint, &angle) in design.joints.iter().zip(target) {
        if !(angle >= joint.angle_min && angle <= joint.angle_max) {
            return Err(Error::JointOutOfRange {
                joint: joint.id.clone(),
                angle,
                min: joint.angle_min,
                max: joint.angle_max,
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraspResidual {
    pub distance: f64,
    pub motor_angle: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RestartReport {
    pub restart: usize,
    pub evaluations: usize,
    pub best_objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynergyResult {
    pub design: HandDesign,
    /// Optimized values in problem parameter order.
    pub parameters: Vec<f64>,
    pub residuals: Vec<GraspResidual>,
    pub objective: f64,
    /// Objective of the base design.
    pub initial_objective: f64,
    /// Best-so-far objective after each evaluation.
    pub history: Vec<f64>,
    pub evaluations: usize,
    pub restarts: Vec<RestartReport>,
}

/// Free-motion postures at `n_samples` uniform motor angles.
pub fn trajectory_postures(design: &HandDesign, n_samples: usize) -> Result<Vec<JointConfiguration>> {
    if n_samples < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 samples, got {n_samples}")));
    }
    let layout = Layout::new(design)?;
    motor_grid(design, n_samples)
        .into_iter()
        .enumerate()
        .map(|(i, m)| {
            solve_with_layout(design, &layout, m, &[])
                .map(|eq| eq.configuration)
                .map_err(|e| Error::at_sample(i, e))
        })
        .collect()
}

/// Distance from `target` to the posture manifold and the motor angle where
/// it is attained, using [`DEFAULT_MOTOR_SAMPLES`] for the coarse scan.
pub fn grasp_residual(design: &HandDesign, target: &[f64], weights: &[f64]) -> Result<GraspResidual> {
    Ok(residuals_with(design, &[target.to_vec()], weights, DEFAULT_MOTOR_SAMPLES)?[0])
}

fn residuals_with(
    design: &HandDesign,
    targets: &[Vec<f64>],
    weights: &[f64],
    samples: usize,
) -> Result<Vec<GraspResidual>> {
    if weights.len() != design.joints.len() {
        return Err(Error::InvalidInput(format!(
            "expected {} weights, found {}",
            design.joints.len(),
            weights.len()
        )));
    }
    for target in targets {
        check_target(design, target)?;
    }
    let layout = Layout::new(design)?;
    let posture = |m: f64| solve_with_layout(design, &layout, m, &[]).map(|eq| eq.configuration.angles);
    let grid = motor_grid(design, samples.max(2));
    let scan: Vec<Vec<f64>> = grid
        .iter()
        .enumerate()
        .map(|(i, &m)| posture(m).map_err(|e| Error::at_sample(i, e)))
        .collect::<Result<_>>()?;

    targets
        .iter()
        .map(|target| {
            let squared = |angles: &[f64]| -> f64 {
                angles
                    .iter()
                    .zip(target)
                    .zip(weights)
                    .map(|((a, t), w)| (w * (a - t)).powi(2))
                    .sum()
            };
            let (mut best_i, mut best) = (0, f64::INFINITY);
            for (i, angles) in scan.iter().enumerate() {
                let d = squared(angles);
                if d < best {
                    best_i = i;
                    best = d;
                }
            }
            let mut best_m = grid[best_i];

            let lo = grid[best_i.saturating_sub(1)];
            let hi = grid[(best_i + 1).min(grid.len() - 1)];
            let mut failure = None;
            let mut eval = |m: f64| match posture(m) {
                Ok(angles) => squared(&angles),
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::INFINITY
                }
            };
            let (gm, gd) = golden_section(lo, hi, MOTOR_TOLERANCE, &mut eval);
            if gd < best {
                (best_m, best) = (gm, gd);
            }
            // The posture is piecewise linear in motor angle, so the squared
            // distance is locally an exact parabola.
            let h = MOTOR_TOLERANCE;
            let (a, b) = ((gm - h).max(lo), (gm + h).min(hi));
            if a < gm && gm < b {
                let points = [(a, eval(a)), (gm, gd), (b, eval(b))];
                if let Some(v) = parabola_vertex(points[0], points[1], points[2]) {
                    if v >= lo && v <= hi {
                        let dv = eval(v);
                        if dv < best {
                            (best_m, best) = (v, dv);
                        }
                    }
                }
                for (m, d) in [points[0], points[2]] {
                    if d < best {
                        (best_m, best) = (m, d);
                    }
                }
            }
            if let Some(e) = failure {
                return Err(e);
            }
            Ok(GraspResidual {
                distance: best.sqrt(),
                motor_angle: best_m,
            })
        })
        .collect()
}

/// Minimizes the sum of squared grasp residuals over the problem's
/// parameter box with seeded multi-start Nelder-Mead.
///
/// Restart 0 starts from the base design; the others from points drawn
/// uniformly in the box. Restarts run in order and each may use the budget
/// left over by its predecessors, split evenly over the remaining restarts.
pub fn optimize_design(problem: &SynergyProblem) -> Result<SynergyResult> {
    problem.validate()?;
    let n = problem.parameters.len();
    let per_restart = n + 1;
    if problem.budget < problem.restarts * per_restart {
        return Err(Error::BudgetTooSmall {
            budget: problem.budget,
            restarts: problem.restarts,
            per_restart,
        });
    }

    let bounds = &problem.parameters;
    let to_values = |u: &[f64]| -> Vec<f64> { bounds.iter().zip(u).map(|(b, &x)| b.unit_to_value(x)).collect() };
    let score = |u: &[f64]| -> f64 {
        problem
            .apply(&to_values(u))
            .and_then(|design| problem.objective(&design))
            .ok()
            .filter(|v| v.is_finite())
            .unwrap_or(f64::INFINITY)
    };

    let base_values = problem.base_values()?;
    let initial_objective = problem.objective(&problem.base).unwrap_or(f64::INFINITY);
    let mut rng = ChaCha8Rng::seed_from_u64(problem.seed);
    let starts: Vec<Vec<f64>> = (0..problem.restarts)
        .map(|r| {
            if r == 0 {
                bounds
                    .iter()
                    .zip(&base_values)
                    .map(|(b, &v)| b.value_to_unit(v))
                    .collect()
            } else {
                (0..n).map(|_| rng.random::<f64>()).collect()
            }
        })
        .collect();

    let mut history: Vec<f64> = Vec::with_capacity(problem.budget);
    let mut reports = Vec::with_capacity(problem.restarts);
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut used = 0;
    for (r, start) in starts.iter().enumerate() {
        let remaining = problem.budget - used;
        let options = SimplexOptions {
            max_evaluations: remaining / (problem.restarts - r),
            ..SimplexOptions::default()
        };
        let run = nelder_mead(start, &options, &score);
        used += run.evaluations;
        let floor = history.last().copied().unwrap_or(f64::INFINITY);
        history.extend(run.history.iter().map(|&v| v.min(floor)));
        reports.push(RestartReport {
            restart: r,
            evaluations: run.evaluations,
            best_objective: run.value,
        });
        if best.as_ref().is_none_or(|(_, v)| run.value < *v) {
            best = Some((run.x, run.value));
        }
    }

    let (x, objective) = best.filter(|(_, v)| v.is_finite()).ok_or(Error::NoValidCandidate)?;
    let parameters = to_values(&x);
    let design = problem.apply(&parameters)?;
    let residuals = residuals_with(&design, &problem.targets, &problem.weights, problem.motor_samples)?;
    Ok(SynergyResult {
        design,
        parameters,
        residuals,
        objective,
        initial_objective,
        history,
        evaluations: used,
        restarts: reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{default_iss_hand, Agonist};
    use crate::statics::tests::one_joint;

    fn unit_weights(design: &HandDesign) -> Vec<f64> {
        vec![1.0; design.joints.len()]
    }

    #[test]
    fn parameter_paths_round_trip() {
        for text in [
            "joint.F1P.stiffness",
            "joint.TD.preload",
            "stop.F1A.moment_arm",
            "motor.radius",
        ] {
            assert_eq!(text.parse::<ParameterPath>().unwrap().to_string(), text);
        }
        assert!("joint.F1P".parse::<ParameterPath>().is_err());
        assert!("motor.stiction".parse::<ParameterPath>().is_err());
    }

    #[test]
    fn sa_springs_are_not_tunable() {
        let hand = default_iss_hand();
        assert!(ParameterPath::Stiffness("F1A".into()).check(&hand).is_err());
        assert!(ParameterPath::Preload("F2A".into()).check(&hand).is_err());
        assert!(ParameterPath::MomentArm("F1A".into()).check(&hand).is_ok());
        assert!(ParameterPath::Stiffness("ghost".into()).check(&hand).is_err());
    }

    #[test]
    fn single_joint_postures_are_linear() {
        // theta = 5 m / 10 while the tendon starts taut at the reference
        let design = one_joint(Agonist::Tendon, 1.0, 1.0, 10.0, 5.0);
        let postures = trajectory_postures(&design, 11).unwrap();
        for p in &postures {
            assert!((p.angles[0] - 0.5 * p.motor_angle).abs() < 1e-12);
        }
        assert_eq!(trajectory_postures(&design, 2).unwrap().len(), 2);
        assert!(trajectory_postures(&design, 1).is_err());
    }

    #[test]
    fn iss_postures_have_monotone_columns() {
        let hand = default_iss_hand();
        let postures = trajectory_postures(&hand, 50).unwrap();
        assert_eq!(postures.len(), 50);
        assert!(postures.iter().all(|p| p.angles.len() == 8));
        for pair in postures.windows(2) {
            for (a, b) in pair[0].angles.iter().zip(&pair[1].angles) {
                assert!(b >= a);
            }
        }
    }

    #[test]
    fn on_manifold_target_has_zero_residual() {
        let hand = default_iss_hand();
        let target = crate::statics::solve_pose(&hand, 1.2345, &[])
            .unwrap()
            .configuration
            .angles;
        let r = grasp_residual(&hand, &target, &unit_weights(&hand)).unwrap();
        assert!(r.distance <= 1e-6, "{}", r.distance);
        assert!((r.motor_angle - 1.2345).abs() < 1e-4);
    }

    #[test]
    fn unreachable_single_joint_target() {
        // motor range [0, 3] reaches theta = 1.5, the joint limit
        let mut design = one_joint(Agonist::Tendon, 1.0, 1.0, 10.0, 5.0);
        design.joints[0].angle_max = 2.0;
        design.motor.angle_max = 3.0;
        let r = grasp_residual(&design, &[1.9], &[2.0]).unwrap();
        assert!((r.distance - 2.0 * 0.4).abs() < 1e-12, "{}", r.distance);
        assert_eq!(r.motor_angle, 3.0);
    }

    #[test]
    fn zero_weights_give_zero_distance() {
        let hand = default_iss_hand();
        let r = grasp_residual(&hand, &[1.0; 8], &[0.0; 8]).unwrap();
        assert_eq!(r.distance, 0.0);
    }

    fn inconsistent_problem() -> SynergyProblem {
        // theta_max = r_mot * 1 / 10, at most 0.4 within the bounds
        let mut design = one_joint(Agonist::Tendon, 1.0, 1.0, 10.0, 2.0);
        design.joints[0].angle_max = 1.0;
        design.motor.angle_max = 1.0;
        let mut problem = SynergyProblem::new(
            design,
            vec![vec![0.2], vec![0.6]],
            vec![ParameterBound::new(ParameterPath::MotorRadius, 1.0, 4.0)],
        );
        problem.budget = 400;
        problem.restarts = 2;
        problem
    }

    #[test]
    fn inconsistent_targets_reach_the_least_squares_compromise() {
        let result = optimize_design(&inconsistent_problem()).unwrap();
        assert!((result.parameters[0] - 4.0).abs() < 1e-9, "{:?}", result.parameters);
        assert!(result.residuals[0].distance < 1e-6);
        assert!((result.residuals[1].distance - 0.2).abs() < 1e-6);
        assert!((result.objective - 0.04).abs() < 1e-9, "{}", result.objective);
    }

    #[test]
    fn history_and_objective_bookkeeping() {
        let problem = inconsistent_problem();
        let result = optimize_design(&problem).unwrap();
        assert_eq!(result.history.len(), result.evaluations);
        assert!(result.evaluations <= problem.budget);
        assert!(result.history.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(*result.history.last().unwrap(), result.objective);
        let recomputed: f64 = result.residuals.iter().map(|r| r.distance * r.distance).sum();
        assert_eq!(recomputed, result.objective);
        assert!(result.objective <= result.initial_objective);
        assert_eq!(result.restarts.len(), problem.restarts);
        assert_eq!(result, optimize_design(&problem).unwrap());
    }

    #[test]
    fn start_at_optimum_does_not_degrade() {
        let hand = default_iss_hand();
        let target = crate::statics::solve_pose(&hand, 0.8, &[])
            .unwrap()
            .configuration
            .angles;
        let mut problem = SynergyProblem::new(
            hand,
            vec![target],
            vec![ParameterBound::new(ParameterPath::MotorRadius, 4.0, 8.0)],
        );
        problem.budget = 60;
        problem.restarts = 2;
        let result = optimize_design(&problem).unwrap();
        assert!(result.initial_objective <= 1e-12);
        assert!(result.objective <= result.initial_objective);
    }

    #[test]
    fn budget_and_problem_errors() {
        let mut problem = inconsistent_problem();
        problem.budget = 3;
        assert!(matches!(optimize_design(&problem), Err(Error::BudgetTooSmall { .. })));

        let mut problem = inconsistent_problem();
        problem.targets.push(vec![1.5]);
        assert!(matches!(optimize_design(&problem), Err(Error::JointOutOfRange { .. })));

        let mut problem = inconsistent_problem();
        problem.parameters[0].upper = 1.0;
        assert!(optimize_design(&problem).is_err());

        let mut problem = inconsistent_problem();
        problem.parameters.push(problem.parameters[0].clone());
        assert!(optimize_design(&problem).is_err());
    }
}
