//! Spring torques reflected to the motor shaft and the stiction band check.
//!
//! Each taut tendon pulls on the shaft with its tension times the motor
//! radius. The tension is read from the spring of the tendon's lead (first)
//! joint only, so the spring at a distal joint of the same tendon is never
//! counted twice. TA tendons load the shaft in the closing direction and SA
//! tendons in the opening direction.

use rayon::prelude::*;

use crate::closing::motor_grid;
use crate::error::{Error, Result};
use crate::model::{Agonist, HandDesign, JointConfiguration};
use crate::statics::{solve_with_layout, Layout, SLACK_TOLERANCE};

pub const DEFAULT_PROFILE_SAMPLES: usize = 1000;
pub const DEFAULT_PRELOAD_STEP: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotorTorque {
    pub agonist: f64,
    pub antagonist: f64,
    pub net: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TorqueProfile {
    pub motor_angles: Vec<f64>,
    pub agonist: Vec<f64>,
    pub antagonist: Vec<f64>,
    pub net: Vec<f64>,
    pub stiction: f64,
}

impl TorqueProfile {
    pub fn len(&self) -> usize {
        self.motor_angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.motor_angles.is_empty()
    }

    pub fn max_abs_net(&self) -> f64 {
        self.net.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn changes_sign(&self) -> bool {
        self.net.iter().any(|&v| v > 0.0) && self.net.iter().any(|&v| v < 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZoneCheck {
    pub pass: bool,
    /// max |net| - stiction; negative when passing.
    pub worst_violation: f64,
    pub worst_angle: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpringCatalogEntry {
    pub stiffness: f64,
    pub preload_min: f64,
    pub preload_max: f64,
}

impl SpringCatalogEntry {
    pub fn new(stiffness: f64, preload_min: f64, preload_max: f64) -> Self {
        SpringCatalogEntry {
            stiffness,
            preload_min,
            preload_max,
        }
    }

    fn check(&self) -> Result<()> {
        let ok = self.stiffness.is_finite()
            && self.stiffness > 0.0
            && self.preload_min.is_finite()
            && self.preload_max.is_finite()
            && self.preload_min >= 0.0
            && self.preload_min <= self.preload_max;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid spring catalog entry {self:?}")))
        }
    }

    /// Preloads on a grid of `step` starting at `preload_min`.
    pub fn preloads(&self, step: f64) -> Vec<f64> {
        let count = ((self.preload_max - self.preload_min) / step + 1e-9).floor() as usize;
        (0..=count).map(|i| self.preload_min + i as f64 * step).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpringSelection {
    pub catalog_index: usize,
    pub stiffness: f64,
    pub preload: f64,
    pub max_abs_net: f64,
    pub pass: bool,
    pub candidates_evaluated: usize,
    /// Input design with the chosen spring fitted to every SA joint.
    pub design: HandDesign,
}

pub fn net_motor_torque(design: &HandDesign, config: &JointConfiguration) -> Result<MotorTorque> {
    let layout = Layout::new(design)?;
    Ok(torque_with_layout(design, &layout, config))
}

fn torque_with_layout(design: &HandDesign, layout: &Layout, config: &JointConfiguration) -> MotorTorque {
    let mut agonist = 0.0;
    let mut antagonist = 0.0;
    for (t, tendon) in design.tendons.iter().enumerate() {
        let Some(lead) = layout.tendons[t].joints.first() else {
            continue;
        };
        if layout.raw_slack(t, &config.angles, config.motor_angle) >= SLACK_TOLERANCE {
            continue;
        }
        let j = lead.joint;
        let tension = layout.stiffness[j] * layout.deflection(j, config.angles[j]) / lead.gain.abs();
        let torque = tension * design.motor.radius;
        match tendon.role {
            Agonist::Tendon => agonist += torque,
            Agonist::Spring => antagonist += torque,
        }
    }
    MotorTorque {
        agonist,
        antagonist,
        net: agonist - antagonist,
    }
}

/// Free-motion torque profile on `n_samples` uniform motor angles.
pub fn torque_profile(design: &HandDesign, n_samples: usize) -> Result<TorqueProfile> {
    if n_samples < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 samples, got {n_samples}")));
    }
    let layout = Layout::new(design)?;
    let motor_angles = motor_grid(design, n_samples);
    let mut profile = TorqueProfile {
        motor_angles: Vec::with_capacity(n_samples),
        agonist: Vec::with_capacity(n_samples),
        antagonist: Vec::with_capacity(n_samples),
        net: Vec::with_capacity(n_samples),
        stiction: design.motor.stiction,
    };
    for (index, &m) in motor_angles.iter().enumerate() {
        let eq = solve_with_layout(design, &layout, m, &[]).map_err(|e| Error::at_sample(index, e))?;
        let torque = torque_with_layout(design, &layout, &eq.configuration);
        profile.motor_angles.push(m);
        profile.agonist.push(torque.agonist);
        profile.antagonist.push(torque.antagonist);
        profile.net.push(torque.net);
    }
    Ok(profile)
}

pub fn check_qualified_zone(profile: &TorqueProfile) -> Result<ZoneCheck> {
    if profile.is_empty() {
        return Err(Error::InvalidInput("empty torque profile".into()));
    }
    let mut worst = (0, profile.net[0].abs());
    for (i, v) in profile.net.iter().enumerate().skip(1) {
        if v.abs() > worst.1 {
            worst = (i, v.abs());
        }
    }
    Ok(ZoneCheck {
        pass: worst.1 < profile.stiction,
        worst_violation: worst.1 - profile.stiction,
        worst_angle: profile.motor_angles[worst.0],
    })
}

/// Extra shaft torque the hand resists unpowered at `config`; negative when
/// the springs alone already overcome stiction.
pub fn backdrive_margin(design: &HandDesign, config: &JointConfiguration) -> Result<f64> {
    let torque = net_motor_torque(design, config)?;
    Ok(design.motor.stiction - torque.net.abs())
}

pub fn with_adduction_spring(design: &HandDesign, stiffness: f64, preload: f64) -> HandDesign {
    let mut out = design.clone();
    let sa_joints: Vec<String> = design
        .tendons
        .iter()
        .filter(|t| t.role == Agonist::Spring)
        .flat_map(|t| t.stops.iter().map(|s| s.joint.clone()))
        .collect();
    for joint in out.joints.iter_mut().filter(|j| sa_joints.contains(&j.id)) {
        joint.stiffness = stiffness;
        joint.preload = preload;
    }
    out
}

/// Exhaustive search over catalog springs and preloads, fitting the same
/// spring to every SA joint, minimizing the worst net shaft torque.
pub fn select_adduction_springs(
    design: &HandDesign,
    catalog: &[SpringCatalogEntry],
    preload_step: f64,
    n_samples: usize,
) -> Result<SpringSelection> {
    if catalog.is_empty() {
        return Err(Error::InvalidInput("spring catalog is empty".into()));
    }
    if !design.tendons.iter().any(|t| t.role == Agonist::Spring) {
        return Err(Error::InvalidInput("design has no SA tendon".into()));
    }
    if !(preload_step > 0.0 && preload_step.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "preload step must be positive, got {preload_step}"
        )));
    }
    for entry in catalog {
        entry.check()?;
    }

    let candidates: Vec<(usize, f64, f64)> = catalog
        .iter()
        .enumerate()
        .flat_map(|(i, e)| e.preloads(preload_step).into_iter().map(move |p| (i, e.stiffness, p)))
        .collect();

    let scored: Vec<Option<(f64, usize, f64, f64)>> = candidates
        .par_iter()
        .map(|&(index, stiffness, preload)| {
            let candidate = with_adduction_spring(design, stiffness, preload);
            if candidate.ensure_valid().is_err() {
                return None;
            }
            let profile = torque_profile(&candidate, n_samples).ok()?;
            Some((profile.max_abs_net(), index, stiffness, preload))
        })
        .collect();

    let best = scored
        .iter()
        .flatten()
        .copied()
        .min_by(|a, b| {
            a.0.total_cmp(&b.0)
                .then(a.2.total_cmp(&b.2))
                .then(a.3.total_cmp(&b.3))
                .then(a.1.cmp(&b.1))
        })
        .ok_or(Error::NoValidCandidate)?;

    let (max_abs_net, catalog_index, stiffness, preload) = best;
    Ok(SpringSelection {
        catalog_index,
        stiffness,
        preload,
        max_abs_net,
        pass: max_abs_net < design.motor.stiction,
        candidates_evaluated: candidates.len(),
        design: with_adduction_spring(design, stiffness, preload),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{default_iss_hand, Joint, JointKind, MotorShaft, Stop, TendonRoute};

    /// One TA joint and one SA joint with equal moment arms.
    pub(crate) fn balanced_pair(k: f64, preload: f64) -> HandDesign {
        HandDesign {
            joints: vec![
                Joint::new("F", JointKind::Flexion, (-0.2, 1.5), k, preload),
                Joint::new("A", JointKind::Abduction, (-0.2, 1.5), k, preload + 1.5),
            ],
            tendons: vec![
                TendonRoute {
                    id: "flex".into(),
                    role: Agonist::Tendon,
                    stops: vec![Stop::new("F", 8.0, 1)],
                    winding: 1,
                },
                TendonRoute {
                    id: "abd".into(),
                    role: Agonist::Spring,
                    stops: vec![Stop::new("A", 8.0, -1)],
                    winding: -1,
                },
            ],
            motor: MotorShaft {
                radius: 6.0,
                angle_min: 0.0,
                angle_max: 1.0,
                stiction: 84.0,
            },
            reference_pose: JointConfiguration::new(vec![0.0, 0.0], 0.0),
        }
    }

    #[test]
    fn zero_angles_and_preloads_give_zero_torque() {
        let mut hand = default_iss_hand();
        for j in &mut hand.joints {
            j.preload = 0.0;
        }
        let t = net_motor_torque(&hand, &JointConfiguration::new(vec![0.0; 8], 0.0)).unwrap();
        assert_eq!((t.agonist, t.antagonist, t.net), (0.0, 0.0, 0.0));
    }

    #[test]
    fn single_lead_term() {
        let mut design = balanced_pair(30.0, 0.3);
        design.tendons.truncate(1);
        // Tendon exactly taut: 8 * 0.2 = 6 * m
        let config = JointConfiguration::new(vec![0.2, 0.0], 0.2 * 8.0 / 6.0);
        let t = net_motor_torque(&design, &config).unwrap();
        assert!((t.agonist - 11.25).abs() < 1e-12);
        assert_eq!(t.antagonist, 0.0);
    }

    #[test]
    fn symmetric_terms_cancel() {
        // F deflection 0.3 + 0.3 and A deflection 1.8 - 1.2: equal spring torques.
        let mut design = balanced_pair(20.0, 0.3);
        design.reference_pose.angles = vec![0.3, 1.2];
        let config = design.reference_pose.clone();
        let t = net_motor_torque(&design, &config).unwrap();
        assert!(t.net.abs() < 1e-12, "{}", t.net);
        assert!(t.agonist > 0.0);
    }

    #[test]
    fn two_samples_hit_the_range_ends() {
        let hand = default_iss_hand();
        let profile = torque_profile(&hand, 2).unwrap();
        assert_eq!(profile.motor_angles, vec![hand.motor.angle_min, hand.motor.angle_max]);
        assert!(torque_profile(&hand, 1).is_err());
    }

    #[test]
    fn no_sa_tendons_means_no_antagonist() {
        let mut design = balanced_pair(10.0, 0.3);
        design.tendons.truncate(1);
        let profile = torque_profile(&design, 20).unwrap();
        assert!(profile.antagonist.iter().all(|&a| a == 0.0));
        assert_eq!(profile.net, profile.agonist);
    }

    #[test]
    fn zone_check_arithmetic() {
        let flat = TorqueProfile {
            motor_angles: vec![0.0, 0.5, 1.0],
            agonist: vec![0.0; 3],
            antagonist: vec![0.0; 3],
            net: vec![0.0; 3],
            stiction: 84.0,
        };
        let c = check_qualified_zone(&flat).unwrap();
        assert!(c.pass);
        assert_eq!(c.worst_violation, -84.0);
        assert_eq!(c.worst_angle, 0.0);

        let mut spike = flat.clone();
        spike.net[1] = 90.0;
        let c = check_qualified_zone(&spike).unwrap();
        assert!(!c.pass);
        assert_eq!(c.worst_violation, 6.0);
        assert_eq!(c.worst_angle, 0.5);

        let empty = TorqueProfile {
            motor_angles: vec![],
            agonist: vec![],
            antagonist: vec![],
            net: vec![],
            stiction: 1.0,
        };
        assert!(check_qualified_zone(&empty).is_err());
    }

    #[test]
    fn backdrive_margin_boundaries() {
        let mut design = balanced_pair(20.0, 0.3);
        design.reference_pose.angles = vec![0.3, 1.2];
        let config = design.reference_pose.clone();
        assert_eq!(backdrive_margin(&design, &config).unwrap(), 84.0);
        let t = net_motor_torque(&design, &config).unwrap();
        design.motor.stiction = t.net.abs();
        assert_eq!(backdrive_margin(&design, &config).unwrap(), 0.0);
    }

    #[test]
    fn matching_spring_centres_the_band() {
        // Over m in [0, 2] both joints travel 1.5 rad, so
        // net = 0.75 * (12 * (0.3 + 0.75 m) - k * (p - 0.75 m)).
        // k = 12 centred at p = 1.8 gives 13.5; k = 8 cannot reach its centre
        // inside [1.5, 1.6] (15.6) and k = 20 has a steeper band (18).
        let mut design = balanced_pair(12.0, 0.3);
        design.motor.angle_max = 2.0;
        let catalog = [
            SpringCatalogEntry::new(8.0, 1.5, 1.6),
            SpringCatalogEntry::new(12.0, 1.5, 2.5),
            SpringCatalogEntry::new(20.0, 1.5, 2.5),
        ];
        let s = select_adduction_springs(&design, &catalog, 0.05, 51).unwrap();
        assert_eq!(s.catalog_index, 1);
        assert!((s.preload - 1.8).abs() < 1e-9, "{}", s.preload);
        assert!((s.max_abs_net - 13.5).abs() < 1e-9, "{}", s.max_abs_net);
        assert!(s.pass);
        assert_eq!(s.candidates_evaluated, 3 + 21 + 21);
    }

    #[test]
    fn single_entry_is_returned_regardless() {
        let design = default_iss_hand();
        let catalog = [SpringCatalogEntry::new(100.0, 1.75, 1.75)];
        let s = select_adduction_springs(&design, &catalog, 0.05, 50).unwrap();
        assert_eq!(s.stiffness, 100.0);
        assert_eq!(s.preload, 1.75);
        assert_eq!(s.pass, s.max_abs_net < 84.0);
        assert!(!s.pass);
    }

    #[test]
    fn selection_errors() {
        let design = default_iss_hand();
        assert!(select_adduction_springs(&design, &[], 0.05, 10).is_err());
        // Preloads below the SA joint range leave the agonist spring slack.
        let catalog = [SpringCatalogEntry::new(5.0, 0.0, 1.0)];
        assert_eq!(
            select_adduction_springs(&design, &catalog, 0.05, 10),
            Err(Error::NoValidCandidate)
        );
    }
}
