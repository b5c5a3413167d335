//! Quasi-static equilibrium of a hand design.
//!
//! The equilibrium at a motor angle minimizes the spring potential
//! `sum 1/2 k (preload + d*angle)^2` over joint angles subject to
//!
//! * `slack >= 0` for every tendon (inextensible, pull-only),
//! * `angle <= blocked_at` for every active contact,
//! * joint limits.
//!
//! Because a joint is routed by at most one tendon and the potential is
//! separable, the problem splits into one block per tendon with a single
//! linear constraint and box bounds. Each block is solved exactly by walking
//! the piecewise-linear map from tendon tension to tendon slack.

use crate::error::{Error, Result};
use crate::model::{HandDesign, JointConfiguration};

/// Below this free length (mm) a tendon is taut.
pub const SLACK_TOLERANCE: f64 = 1e-6;
pub const ENERGY_TOLERANCE: f64 = 1e-9;
const BOUND_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ContactConstraint {
    pub joint: String,
    /// Upper cap on the joint angle, radians.
    pub blocked_at: f64,
}

impl ContactConstraint {
    pub fn new(joint: &str, blocked_at: f64) -> Self {
        ContactConstraint {
            joint: joint.to_string(),
            blocked_at,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TendonStatus {
    pub tendon: String,
    /// N
    pub tension: f64,
    /// mm
    pub slack: f64,
    pub taut: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumResult {
    pub configuration: JointConfiguration,
    pub tendon_statuses: Vec<TendonStatus>,
    /// Signed generalized torque (N·mm) of each active contact; negative
    /// values push the joint toward lower angles.
    pub contact_torques: Vec<(String, f64)>,
    /// Signed reaction torque of each joint limit, indexed like the joints.
    pub limit_torques: Vec<f64>,
    /// N·mm
    pub energy: f64,
}

impl EquilibriumResult {
    pub fn status(&self, tendon_id: &str) -> Option<&TendonStatus> {
        self.tendon_statuses.iter().find(|s| s.tendon == tendon_id)
    }

    pub fn contact_torque(&self, joint_id: &str) -> f64 {
        self.contact_torques
            .iter()
            .find(|(j, _)| j == joint_id)
            .map_or(0.0, |(_, t)| *t)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct RoutedJoint {
    pub joint: usize,
    /// sign * moment_arm: d(slack)/d(angle)
    pub gain: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct RoutedTendon {
    pub joints: Vec<RoutedJoint>,
    /// winding * motor radius: d(slack)/d(motor) is the negation of this.
    pub motor_gain: f64,
}

/// Index-resolved view of a design used by the numeric routines.
#[derive(Debug, Clone)]
pub(crate) struct Layout {
    pub tendons: Vec<RoutedTendon>,
    pub tendon_of: Vec<Option<usize>>,
    pub stiffness: Vec<f64>,
    pub preload: Vec<f64>,
    pub direction: Vec<f64>,
    pub reference: Vec<f64>,
    pub reference_motor: f64,
}

impl Layout {
    pub fn new(design: &HandDesign) -> Result<Layout> {
        let n = design.joints.len();
        if design.reference_pose.angles.len() != n {
            return Err(Error::InvalidInput(format!(
                "reference pose has {} angles for {n} joints",
                design.reference_pose.angles.len()
            )));
        }
        let mut tendon_of = vec![None; n];
        let mut tendons = Vec::with_capacity(design.tendons.len());
        for (t, tendon) in design.tendons.iter().enumerate() {
            let mut joints = Vec::with_capacity(tendon.stops.len());
            for stop in &tendon.stops {
                let joint = design.joint_index(&stop.joint)?;
                tendon_of[joint] = Some(t);
                joints.push(RoutedJoint {
                    joint,
                    gain: f64::from(stop.sign) * stop.moment_arm,
                });
            }
            tendons.push(RoutedTendon {
                joints,
                motor_gain: f64::from(tendon.winding) * design.motor.radius,
            });
        }
        let direction = design
            .joints
            .iter()
            .map(|j| design.spring_sense(&j.id).direction())
            .collect();
        Ok(Layout {
            tendons,
            tendon_of,
            stiffness: design.joints.iter().map(|j| j.stiffness).collect(),
            preload: design.joints.iter().map(|j| j.preload).collect(),
            direction,
            reference: design.reference_pose.angles.clone(),
            reference_motor: design.reference_pose.motor_angle,
        })
    }

    /// Signed free length; negative means the tendon would have to stretch.
    pub fn raw_slack(&self, tendon: usize, angles: &[f64], motor_angle: f64) -> f64 {
        let t = &self.tendons[tendon];
        let joints: f64 = t
            .joints
            .iter()
            .map(|r| r.gain * (angles[r.joint] - self.reference[r.joint]))
            .sum();
        joints - t.motor_gain * (motor_angle - self.reference_motor)
    }

    pub fn deflection(&self, joint: usize, angle: f64) -> f64 {
        self.preload[joint] + self.direction[joint] * angle
    }

    /// dV/d(angle) of a single joint.
    pub fn spring_gradient(&self, joint: usize, angle: f64) -> f64 {
        self.stiffness[joint] * self.direction[joint] * self.deflection(joint, angle)
    }

    pub fn energy(&self, angles: &[f64]) -> f64 {
        angles
            .iter()
            .enumerate()
            .map(|(j, &a)| 0.5 * self.stiffness[j] * self.deflection(j, a).powi(2))
            .sum()
    }

    /// Angle at which the joint spring is relaxed.
    pub fn rest_angle(&self, joint: usize) -> f64 {
        -self.direction[joint] * self.preload[joint]
    }
}

/// Free tendon length at `config`, in mm.
pub fn tendon_slack(design: &HandDesign, config: &JointConfiguration, tendon_id: &str) -> Result<f64> {
    let index = design
        .tendons
        .iter()
        .position(|t| t.id == tendon_id)
        .ok_or_else(|| Error::UnknownTendon(tendon_id.to_string()))?;
    let layout = Layout::new(design)?;
    check_configuration(design, config)?;
    let raw = layout.raw_slack(index, &config.angles, config.motor_angle);
    if raw < -SLACK_TOLERANCE {
        return Err(Error::InextensibilityViolated {
            tendon: tendon_id.to_string(),
            stretch: -raw,
        });
    }
    Ok(raw.max(0.0))
}

/// Total stored spring energy in N·mm; independent of the motor angle.
pub fn potential_energy(design: &HandDesign, config: &JointConfiguration) -> Result<f64> {
    if config.angles.len() != design.joints.len() {
        return Err(Error::InvalidInput(format!(
            "configuration has {} angles for {} joints",
            config.angles.len(),
            design.joints.len()
        )));
    }
    let energy = design
        .joints
        .iter()
        .zip(&config.angles)
        .map(|(joint, &angle)| {
            let d = design.spring_sense(&joint.id).direction();
            0.5 * joint.stiffness * (joint.preload + d * angle).powi(2)
        })
        .sum();
    Ok(energy)
}

fn check_configuration(design: &HandDesign, config: &JointConfiguration) -> Result<()> {
    if config.angles.len() != design.joints.len() {
        return Err(Error::InvalidInput(format!(
            "configuration has {} angles for {} joints",
            config.angles.len(),
            design.joints.len()
        )));
    }
    for (joint, &angle) in design.joints.iter().zip(&config.angles) {
        if angle < joint.angle_min - BOUND_TOLERANCE || angle > joint.angle_max + BOUND_TOLERANCE {
            return Err(Error::JointOutOfRange {
                joint: joint.id.clone(),
                angle,
                min: joint.angle_min,
                max: joint.angle_max,
            });
        }
    }
    check_motor(design, config.motor_angle)
}

pub(crate) fn check_motor(design: &HandDesign, motor_angle: f64) -> Result<()> {
    let m = &design.motor;
    if !(motor_angle >= m.angle_min - BOUND_TOLERANCE && motor_angle <= m.angle_max + BOUND_TOLERANCE) {
        return Err(Error::MotorOutOfRange {
            angle: motor_angle,
            min: m.angle_min,
            max: m.angle_max,
        });
    }
    Ok(())
}

/// Joint boxes after applying contact caps. Also reports which joints are
/// capped by a contact rather than their own upper limit.
pub(crate) fn joint_bounds(
    design: &HandDesign,
    contacts: &[ContactConstraint],
) -> Result<(Vec<f64>, Vec<f64>, Vec<bool>)> {
    let lower: Vec<f64> = design.joints.iter().map(|j| j.angle_min).collect();
    let mut upper: Vec<f64> = design.joints.iter().map(|j| j.angle_max).collect();
    let mut capped = vec![false; design.joints.len()];
    for contact in contacts {
        let j = design.joint_index(&contact.joint)?;
        if !contact.blocked_at.is_finite() || contact.blocked_at < lower[j] - BOUND_TOLERANCE {
            return Err(Error::Infeasible(format!(
                "contact on `{}` at {} is below the joint minimum {}",
                contact.joint, contact.blocked_at, lower[j]
            )));
        }
        if contact.blocked_at <= upper[j] {
            upper[j] = contact.blocked_at.max(lower[j]);
            capped[j] = true;
        }
    }
    Ok((lower, upper, capped))
}

/// Minimum-energy configuration at `motor_angle` with the given contacts.
pub fn solve_pose(design: &HandDesign, motor_angle: f64, contacts: &[ContactConstraint]) -> Result<EquilibriumResult> {
    let layout = Layout::new(design)?;
    solve_with_layout(design, &layout, motor_angle, contacts)
}

pub(crate) fn solve_with_layout(
    design: &HandDesign,
    layout: &Layout,
    motor_angle: f64,
    contacts: &[ContactConstraint],
) -> Result<EquilibriumResult> {
    check_motor(design, motor_angle)?;
    if let Some(joint) = design.joints.iter().find(|j| j.stiffness <= 0.0) {
        return Err(Error::DegenerateDesign(joint.id.clone()));
    }
    let motor_angle = motor_angle.clamp(design.motor.angle_min, design.motor.angle_max);
    let (lower, upper, capped) = joint_bounds(design, contacts)?;

    let n = design.joints.len();
    let mut angles: Vec<f64> = (0..n).map(|j| layout.rest_angle(j).clamp(lower[j], upper[j])).collect();
    let mut tensions = vec![0.0; layout.tendons.len()];

    for (t, tendon) in layout.tendons.iter().enumerate() {
        let tension = solve_block(design, layout, t, tendon, motor_angle, &lower, &upper)?;
        tensions[t] = tension;
        for r in &tendon.joints {
            angles[r.joint] = block_angle(layout, r, tension, lower[r.joint], upper[r.joint]);
        }
    }

    Ok(assemble(
        design,
        layout,
        angles,
        &tensions,
        motor_angle,
        &lower,
        &upper,
        &capped,
    ))
}

/// Builds the result record from solved angles and tendon tensions,
/// attributing leftover joint torque to active contacts and limits.
#[allow(clippy::too_many_arguments)]
pub(crate) fn assemble(
    design: &HandDesign,
    layout: &Layout,
    angles: Vec<f64>,
    tensions: &[f64],
    motor_angle: f64,
    lower: &[f64],
    upper: &[f64],
    capped: &[bool],
) -> EquilibriumResult {
    let n = design.joints.len();
    let mut contact_torques = Vec::new();
    let mut limit_torques = vec![0.0; n];
    for j in 0..n {
        let tendon_torque = layout.tendon_of[j].map_or(0.0, |t| {
            let gain = layout.tendons[t]
                .joints
                .iter()
                .find(|r| r.joint == j)
                .map_or(0.0, |r| r.gain);
            tensions[t] * gain
        });
        let residual = layout.spring_gradient(j, angles[j]) - tendon_torque;
        let at_upper = angles[j] >= upper[j] - BOUND_TOLERANCE;
        let at_lower = angles[j] <= lower[j] + BOUND_TOLERANCE;
        if at_upper && residual < 0.0 {
            if capped[j] {
                contact_torques.push((design.joints[j].id.clone(), residual));
            } else {
                limit_torques[j] = residual;
            }
        } else if at_lower && residual > 0.0 {
            limit_torques[j] = residual;
        }
    }
    for (j, c) in capped.iter().enumerate() {
        let id = &design.joints[j].id;
        if *c && !contact_torques.iter().any(|(k, _)| k == id) {
            contact_torques.push((id.clone(), 0.0));
        }
    }
    contact_torques.sort_by_key(|(id, _)| design.joint_index(id).unwrap_or(usize::MAX));

    let tendon_statuses = design
        .tendons
        .iter()
        .enumerate()
        .map(|(t, tendon)| {
            let slack = layout.raw_slack(t, &angles, motor_angle).max(0.0);
            TendonStatus {
                tendon: tendon.id.clone(),
                tension: tensions[t],
                slack,
                taut: slack < SLACK_TOLERANCE,
            }
        })
        .collect();

    EquilibriumResult {
        energy: layout.energy(&angles),
        configuration: JointConfiguration::new(angles, motor_angle),
        tendon_statuses,
        contact_torques,
        limit_torques,
    }
}

/// Joint angle of a routed joint under tendon tension `tension`.
fn block_angle(layout: &Layout, r: &RoutedJoint, tension: f64, lower: f64, upper: f64) -> f64 {
    let j = r.joint;
    (layout.rest_angle(j) + tension * r.gain / layout.stiffness[j]).clamp(lower, upper)
}

/// Smallest nonnegative tension that makes the tendon slack nonnegative.
fn solve_block(
    design: &HandDesign,
    layout: &Layout,
    t: usize,
    tendon: &RoutedTendon,
    motor_angle: f64,
    lower: &[f64],
    upper: &[f64],
) -> Result<f64> {
    let slack_at = |tension: f64| -> f64 {
        let joints: f64 = tendon
            .joints
            .iter()
            .map(|r| {
                r.gain * (block_angle(layout, r, tension, lower[r.joint], upper[r.joint]) - layout.reference[r.joint])
            })
            .sum();
        joints - tendon.motor_gain * (motor_angle - layout.reference_motor)
    };

    let at_zero = slack_at(0.0);
    if at_zero >= -BOUND_TOLERANCE {
        return Ok(0.0);
    }

    // Tensions at which some joint enters or leaves its box.
    let mut breakpoints: Vec<f64> = tendon
        .joints
        .iter()
        .flat_map(|r| {
            let j = r.joint;
            let k = layout.stiffness[j];
            let rest = layout.rest_angle(j);
            [(lower[j] - rest) * k / r.gain, (upper[j] - rest) * k / r.gain]
        })
        .filter(|&x| x > 0.0 && x.is_finite())
        .collect();
    breakpoints.sort_by(f64::total_cmp);
    breakpoints.dedup();

    let mut prev = (0.0, at_zero);
    for &bp in &breakpoints {
        let value = slack_at(bp);
        if value >= 0.0 {
            let (t0, s0) = prev;
            return Ok(t0 - s0 * (bp - t0) / (value - s0));
        }
        prev = (bp, value);
    }
    Err(Error::Infeasible(format!(
        "tendon `{}` cannot be kept inextensible within joint limits and contacts (short by {} mm)",
        design.tendons[t].id, -prev.1
    )))
}

/// Stationarity residual (N·mm) of every joint.
pub fn stationarity_residuals(design: &HandDesign, result: &EquilibriumResult) -> Result<Vec<f64>> {
    let layout = Layout::new(design)?;
    let angles = &result.configuration.angles;
    let out = (0..design.joints.len())
        .map(|j| {
            let tendon_torque = layout.tendon_of[j].map_or(0.0, |t| {
                let gain = layout.tendons[t]
                    .joints
                    .iter()
                    .find(|r| r.joint == j)
                    .map_or(0.0, |r| r.gain);
                result.tendon_statuses[t].tension * gain
            });
            let contact = result.contact_torque(&design.joints[j].id);
            layout.spring_gradient(j, angles[j]) - tendon_torque - contact - result.limit_torques[j]
        })
        .collect();
    Ok(out)
}
