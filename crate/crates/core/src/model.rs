//! Parametric hand description and the agonist/coupling design matrix.
//!
//! Sign conventions used everywhere in this crate:
//!
//! * flexion and adduction angles increase toward the grasp, the motor angle
//!   increases toward "closed";
//! * a stop's `sign` is `+1` when taking up that tendon flexes/adducts the
//!   joint and `-1` when it extends/abducts it;
//! * units are mm, N and N·mm, angles in radians.
//!
//! Joints driven by a spring-agonist (SA) tendon carry an agonist spring that
//! pushes toward the grasp; every other joint carries a restoring spring.
//! Spring deflection is `preload + angle` for restoring springs and
//! `preload - angle` for agonist springs.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointKind {
    Flexion,
    Abduction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Joint {
    pub id: String,
    pub kind: JointKind,
    pub angle_min: f64,
    pub angle_max: f64,
    /// N·mm/rad
    pub stiffness: f64,
    /// Spring deflection at zero joint angle, radians.
    pub preload: f64,
}

impl Joint {
    pub fn new(id: &str, kind: JointKind, limits: (f64, f64), stiffness: f64, preload: f64) -> Self {
        Joint {
            id: id.to_string(),
            kind,
            angle_min: limits.0,
            angle_max: limits.1,
            stiffness,
            preload,
        }
    }

    pub fn clamp(&self, angle: f64) -> f64 {
        angle.clamp(self.angle_min, self.angle_max)
    }
}

/// Which element drives the joints of a tendon toward the grasp.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Agonist {
    /// Tendons as agonists: the motor takes the tendon up to close.
    #[serde(rename = "TA")]
    Tendon,
    /// Springs as agonists: the motor releases the tendon to let springs close.
    #[serde(rename = "SA")]
    Spring,
}

impl fmt::Display for Agonist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Agonist::Tendon => "TA",
            Agonist::Spring => "SA",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Coupling {
    /// Multiple joints per tendon.
    Mjt,
    /// Single-joint tendons sharing the motor shaft.
    Mts,
}

impl fmt::Display for Coupling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Coupling::Mjt => "MJT",
            Coupling::Mts => "MTS",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParadigmCell {
    pub agonist: Agonist,
    pub coupling: Coupling,
}

impl fmt::Display for ParadigmCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+{}", self.agonist, self.coupling)
    }
}

/// Classification of one tendon. `coupled` is the number of joints on the
/// tendon for MJT, and the number of single-joint tendons on the shaft for MTS.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Classification {
    pub cell: ParadigmCell,
    pub coupled: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stop {
    pub joint: String,
    /// mm, strictly positive
    pub moment_arm: f64,
    pub sign: i8,
}

impl Stop {
    pub fn new(joint: &str, moment_arm: f64, sign: i8) -> Self {
        Stop {
            joint: joint.to_string(),
            moment_arm,
            sign,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TendonRoute {
    pub id: String,
    pub role: Agonist,
    /// Ordered from the proximal (lead) joint outward.
    pub stops: Vec<Stop>,
    pub winding: i8,
}

impl TendonRoute {
    pub fn lead(&self) -> Option<&Stop> {
        self.stops.first()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotorShaft {
    /// mm
    pub radius: f64,
    pub angle_min: f64,
    pub angle_max: f64,
    /// N·mm
    pub stiction: f64,
}

impl MotorShaft {
    pub fn range(&self) -> f64 {
        self.angle_max - self.angle_min
    }
}

/// Joint angles (indexed like `HandDesign::joints`) plus the motor angle.
#[derive(Debug, Clone, PartialEq)]
pub struct JointConfiguration {
    pub angles: Vec<f64>,
    pub motor_angle: f64,
}

impl JointConfiguration {
    pub fn new(angles: Vec<f64>, motor_angle: f64) -> Self {
        JointConfiguration { angles, motor_angle }
    }

    pub fn angle(&self, design: &HandDesign, joint_id: &str) -> Result<f64> {
        let index = design.joint_index(joint_id)?;
        self.angles
            .get(index)
            .copied()
            .ok_or_else(|| Error::InvalidInput(format!("configuration has no angle for `{joint_id}`")))
    }
}

/// Restoring springs resist the grasp direction, agonist springs drive it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpringSense {
    Restoring,
    Agonist,
}

impl SpringSense {
    /// d(deflection)/d(angle)
    pub fn direction(self) -> f64 {
        match self {
            SpringSense::Restoring => 1.0,
            SpringSense::Agonist => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HandDesign {
    pub joints: Vec<Joint>,
    pub tendons: Vec<TendonRoute>,
    pub motor: MotorShaft,
    /// Fully-open datum at which every tendon is exactly taut.
    pub reference_pose: JointConfiguration,
}

impl HandDesign {
    pub fn joint_index(&self, id: &str) -> Result<usize> {
        self.joints
            .iter()
            .position(|j| j.id == id)
            .ok_or_else(|| Error::UnknownJoint(id.to_string()))
    }

    pub fn joint(&self, id: &str) -> Result<&Joint> {
        self.joint_index(id).map(|i| &self.joints[i])
    }

    pub fn joint_mut(&mut self, id: &str) -> Result<&mut Joint> {
        let index = self.joint_index(id)?;
        Ok(&mut self.joints[index])
    }

    pub fn tendon(&self, id: &str) -> Result<&TendonRoute> {
        self.tendons
            .iter()
            .find(|t| t.id == id)
            .ok_or_else(|| Error::UnknownTendon(id.to_string()))
    }

    /// The tendon and stop that route through joint `id`, if any.
    pub fn stop_for_joint(&self, id: &str) -> Option<(&TendonRoute, &Stop)> {
        self.tendons
            .iter()
            .find_map(|t| t.stops.iter().find(|s| s.joint == id).map(|s| (t, s)))
    }

    pub fn stop_for_joint_mut(&mut self, id: &str) -> Option<&mut Stop> {
        self.tendons
            .iter_mut()
            .flat_map(|t| t.stops.iter_mut())
            .find(|s| s.joint == id)
    }

    pub fn spring_sense(&self, joint_id: &str) -> SpringSense {
        match self.stop_for_joint(joint_id) {
            Some((t, _)) if t.role == Agonist::Spring => SpringSense::Agonist,
            _ => SpringSense::Restoring,
        }
    }

    pub fn joint_ids(&self) -> Vec<&str> {
        self.joints.iter().map(|j| j.id.as_str()).collect()
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let violations = validate_design(self);
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidDesign(violations))
        }
    }
}

/// One broken rule, named by field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub rule: String,
}

impl Violation {
    fn new(path: impl Into<String>, rule: impl Into<String>) -> Self {
        Violation {
            path: path.into(),
            rule: rule.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.rule)
    }
}

pub fn classify_paradigm(design: &HandDesign, tendon_id: &str) -> Result<Classification> {
    let tendon = design.tendon(tendon_id)?;
    let classification = if tendon.stops.len() >= 2 {
        Classification {
            cell: ParadigmCell {
                agonist: tendon.role,
                coupling: Coupling::Mjt,
            },
            coupled: tendon.stops.len(),
        }
    } else {
        let single = design.tendons.iter().filter(|t| t.stops.len() == 1).count();
        Classification {
            cell: ParadigmCell {
                agonist: tendon.role,
                coupling: Coupling::Mts,
            },
            coupled: single,
        }
    };
    Ok(classification)
}

pub fn validate_design(design: &HandDesign) -> Vec<Violation> {
    let mut out = Vec::new();

    let mut seen = HashSet::new();
    for joint in &design.joints {
        let path = format!("joints[{}]", joint.id);
        if !seen.insert(joint.id.as_str()) {
            out.push(Violation::new(&path, "duplicate joint id"));
        }
        if !(joint.angle_min.is_finite() && joint.angle_max.is_finite()) || joint.angle_min >= joint.angle_max {
            out.push(Violation::new(&path, "angle_min must be finite and below angle_max"));
        }
        if !(joint.stiffness.is_finite() && joint.stiffness >= 0.0) {
            out.push(Violation::new(
                format!("{path}.stiffness"),
                "must be finite and nonnegative",
            ));
        }
        if !(joint.preload.is_finite() && joint.preload >= 0.0) {
            out.push(Violation::new(
                format!("{path}.preload"),
                "must be finite and nonnegative",
            ));
        }
        match design.spring_sense(&joint.id) {
            SpringSense::Restoring if joint.angle_min < -joint.preload => out.push(Violation::new(
                format!("{path}.angle_min"),
                "restoring spring goes slack: angle_min must be >= -preload",
            )),
            SpringSense::Agonist if joint.angle_max > joint.preload => out.push(Violation::new(
                format!("{path}.angle_max"),
                "agonist spring goes slack: angle_max must be <= preload",
            )),
            _ => {}
        }
    }

    let motor = &design.motor;
    if !(motor.radius.is_finite() && motor.radius > 0.0) {
        out.push(Violation::new("motor.radius", "must be positive"));
    }
    if !(motor.angle_min.is_finite() && motor.angle_max.is_finite()) || motor.angle_min >= motor.angle_max {
        out.push(Violation::new("motor", "angle_min must be finite and below angle_max"));
    }
    if !(motor.stiction.is_finite() && motor.stiction >= 0.0) {
        out.push(Violation::new("motor.stiction", "must be finite and nonnegative"));
    }

    let mut tendon_ids = HashSet::new();
    let mut routed = HashSet::new();
    for tendon in &design.tendons {
        let path = format!("tendons[{}]", tendon.id);
        if !tendon_ids.insert(tendon.id.as_str()) {
            out.push(Violation::new(&path, "duplicate tendon id"));
        }
        if tendon.stops.is_empty() {
            out.push(Violation::new(
                format!("{path}.stops"),
                "tendon needs at least one stop",
            ));
        }
        if tendon.winding != 1 && tendon.winding != -1 {
            out.push(Violation::new(format!("{path}.winding"), "must be +1 or -1"));
        }
        for stop in &tendon.stops {
            let stop_path = format!("{path}.stops[{}]", stop.joint);
            if design.joint_index(&stop.joint).is_err() {
                out.push(Violation::new(&stop_path, "references an unknown joint"));
            }
            if !(stop.moment_arm.is_finite() && stop.moment_arm > 0.0) {
                out.push(Violation::new(
                    format!("{stop_path}.moment_arm"),
                    "must be strictly positive",
                ));
            }
            if stop.sign != 1 && stop.sign != -1 {
                out.push(Violation::new(format!("{stop_path}.sign"), "must be +1 or -1"));
            }
            if !routed.insert(stop.joint.as_str()) {
                out.push(Violation::new(&stop_path, "joint is already routed by another stop"));
            }
        }
        if tendon.role == Agonist::Spring {
            let clash = design
                .tendons
                .iter()
                .any(|t| t.role == Agonist::Tendon && t.winding == tendon.winding);
            if clash {
                out.push(Violation::new(
                    format!("{path}.winding"),
                    "SA tendon must be wound opposite to the TA tendons",
                ));
            }
        }
    }

    let pose = &design.reference_pose;
    if pose.angles.len() != design.joints.len() {
        out.push(Violation::new(
            "reference_pose.angles",
            format!("expected {} angles, found {}", design.joints.len(), pose.angles.len()),
        ));
    } else {
        for (joint, &angle) in design.joints.iter().zip(&pose.angles) {
            if !(angle >= joint.angle_min && angle <= joint.angle_max) {
                out.push(Violation::new(
                    format!("reference_pose.angles[{}]", joint.id),
                    "outside joint limits",
                ));
            }
        }
    }
    if !(pose.motor_angle >= motor.angle_min && pose.motor_angle <= motor.angle_max) {
        out.push(Violation::new("reference_pose.motor_angle", "outside motor range"));
    }

    out
}

/// Adduction spring stiffness of the built-in hand (N·mm/rad), chosen by
/// `select_adduction_springs` over [`iss_spring_catalog`].
pub const ISS_ADDUCTION_STIFFNESS: f64 = 8.0;
/// Adduction spring preload of the built-in hand (rad).
pub const ISS_ADDUCTION_PRELOAD: f64 = 5.5;

/// Synthetic ten-entry torsion spring catalog used to pick the built-in
/// hand's adduction springs.
pub fn iss_spring_catalog() -> Vec<crate::cancellation::SpringCatalogEntry> {
    use crate::cancellation::SpringCatalogEntry;
    [4.0, 6.0, 8.0, 10.0, 12.0, 15.0, 18.0, 22.0, 27.0, 33.0]
        .into_iter()
        .map(|stiffness| SpringCatalogEntry::new(stiffness, 1.75, 2.0 * PI))
        .collect()
}

/// Built-in three-finger, eight-joint, single-motor hand with flexion on
/// TA+MJT tendons and adduction on SA+MTS tendons.
pub fn default_iss_hand() -> HandDesign {
    let flexion = |id: &str| Joint::new(id, JointKind::Flexion, (-0.2, 1.6), 30.0, 0.3);
    let abduction = |id: &str| {
        Joint::new(
            id,
            JointKind::Abduction,
            (-0.2, 1.75),
            ISS_ADDUCTION_STIFFNESS,
            ISS_ADDUCTION_PRELOAD,
        )
    };
    let joints = vec![
        flexion("TP"),
        flexion("TD"),
        flexion("F1P"),
        flexion("F1D"),
        flexion("F2P"),
        flexion("F2D"),
        abduction("F1A"),
        abduction("F2A"),
    ];
    let flex_tendon = |id: &str, proximal: &str, distal: &str| TendonRoute {
        id: id.to_string(),
        role: Agonist::Tendon,
        stops: vec![Stop::new(proximal, 8.0, 1), Stop::new(distal, 6.0, 1)],
        winding: 1,
    };
    let abd_tendon = |id: &str, joint: &str| TendonRoute {
        id: id.to_string(),
        role: Agonist::Spring,
        stops: vec![Stop::new(joint, 8.0, -1)],
        winding: -1,
    };
    let n = joints.len();
    HandDesign {
        joints,
        tendons: vec![
            flex_tendon("T_flex", "TP", "TD"),
            flex_tendon("F1_flex", "F1P", "F1D"),
            flex_tendon("F2_flex", "F2P", "F2D"),
            abd_tendon("F1_abd", "F1A"),
            abd_tendon("F2_abd", "F2A"),
        ],
        motor: MotorShaft {
            radius: 6.0,
            angle_min: 0.0,
            angle_max: 2.0 * PI / 3.0,
            stiction: 84.0,
        },
        reference_pose: JointConfiguration::new(vec![0.0; n], 0.0),
    }
}
