//! Closing sweeps over the motor range with contacts activating on schedule.

use std::fmt;

use crate::error::{Error, Result};
use crate::model::HandDesign;
use crate::statics::{solve_with_layout, ContactConstraint, EquilibriumResult, Layout};

const LIMIT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    TendonWentSlack,
    ContactActivated,
    JointLimitHit,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::TendonWentSlack => "tendon-went-slack",
            EventKind::ContactActivated => "contact-activated",
            EventKind::JointLimitHit => "joint-limit-hit",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosingEvent {
    pub motor_angle: f64,
    pub kind: EventKind,
    /// Tendon or joint id.
    pub subject: String,
}

/// A contact that becomes active at the first sample with motor angle at or
/// beyond `activate_at`, and stays active afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduledContact {
    pub activate_at: f64,
    pub contact: ContactConstraint,
}

impl ScheduledContact {
    pub fn new(activate_at: f64, joint: &str, blocked_at: f64) -> Self {
        ScheduledContact {
            activate_at,
            contact: ContactConstraint::new(joint, blocked_at),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ClosingTrace {
    pub samples: Vec<EquilibriumResult>,
    pub events: Vec<ClosingEvent>,
}

impl ClosingTrace {
    pub fn motor_angles(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.configuration.motor_angle).collect()
    }

    pub fn events_for(&self, subject: &str) -> Vec<&ClosingEvent> {
        self.events.iter().filter(|e| e.subject == subject).collect()
    }
}

pub fn simulate_closing(
    design: &HandDesign,
    motor_angles: &[f64],
    schedule: &[ScheduledContact],
) -> Result<ClosingTrace> {
    if motor_angles
        .windows(2)
        .any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater))
    {
        return Err(Error::InvalidInput("motor angles must be strictly increasing".into()));
    }
    for (i, s) in schedule.iter().enumerate() {
        design.joint_index(&s.contact.joint)?;
        if schedule[..i].iter().any(|o| o.contact.joint == s.contact.joint) {
            return Err(Error::InvalidInput(format!(
                "contact on `{}` scheduled more than once",
                s.contact.joint
            )));
        }
    }
    let layout = Layout::new(design)?;

    let mut trace = ClosingTrace::default();
    let mut active: Vec<ContactConstraint> = Vec::new();
    let mut activated = vec![false; schedule.len()];
    let mut was_taut = vec![true; design.tendons.len()];
    let mut was_at_limit = vec![false; design.joints.len()];

    for (index, &motor_angle) in motor_angles.iter().enumerate() {
        for (s, scheduled) in schedule.iter().enumerate() {
            if !activated[s] && motor_angle >= scheduled.activate_at {
                activated[s] = true;
                active.push(scheduled.contact.clone());
                trace.events.push(ClosingEvent {
                    motor_angle,
                    kind: EventKind::ContactActivated,
                    subject: scheduled.contact.joint.clone(),
                });
            }
        }

        let eq = solve_with_layout(design, &layout, motor_angle, &active).map_err(|e| Error::at_sample(index, e))?;

        for (t, status) in eq.tendon_statuses.iter().enumerate() {
            if was_taut[t] && !status.taut {
                trace.events.push(ClosingEvent {
                    motor_angle,
                    kind: EventKind::TendonWentSlack,
                    subject: status.tendon.clone(),
                });
            }
            was_taut[t] = status.taut;
        }
        for (j, joint) in design.joints.iter().enumerate() {
            let angle = eq.configuration.angles[j];
            let at_limit = angle <= joint.angle_min + LIMIT_TOLERANCE || angle >= joint.angle_max - LIMIT_TOLERANCE;
            if at_limit && !was_at_limit[j] {
                trace.events.push(ClosingEvent {
                    motor_angle,
                    kind: EventKind::JointLimitHit,
                    subject: joint.id.clone(),
                });
            }
            was_at_limit[j] = at_limit;
        }
        trace.samples.push(eq);
    }
    Ok(trace)
}

/// `n` uniformly spaced motor angles over the full motor range.
pub fn motor_grid(design: &HandDesign, n: usize) -> Vec<f64> {
    let (lo, hi) = (design.motor.angle_min, design.motor.angle_max);
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::default_iss_hand;

    #[test]
    fn empty_sweep() {
        let trace = simulate_closing(&default_iss_hand(), &[], &[]).unwrap();
        assert!(trace.samples.is_empty());
        assert!(trace.events.is_empty());
    }

    #[test]
    fn free_closing_is_monotone_and_abduction_stays_taut() {
        let hand = default_iss_hand();
        let trace = simulate_closing(&hand, &motor_grid(&hand, 100), &[]).unwrap();
        for pair in trace.samples.windows(2) {
            for (a, b) in pair[0].configuration.angles.iter().zip(&pair[1].configuration.angles) {
                assert!(b >= a, "{a} -> {b}");
            }
        }
        for s in &trace.samples {
            assert!(s.status("F1_abd").unwrap().taut);
            assert!(s.status("F2_abd").unwrap().taut);
        }
        assert!(trace.events.is_empty(), "{:?}", trace.events);
    }

    #[test]
    fn non_increasing_sweep_is_rejected() {
        let hand = default_iss_hand();
        assert!(simulate_closing(&hand, &[0.1, 0.1], &[]).is_err());
    }

    #[test]
    fn duplicate_schedule_is_rejected() {
        let hand = default_iss_hand();
        let schedule = [
            ScheduledContact::new(0.1, "F1A", 0.1),
            ScheduledContact::new(0.2, "F1A", 0.2),
        ];
        assert!(simulate_closing(&hand, &[0.0, 0.5], &schedule).is_err());
    }

    #[test]
    fn solver_errors_carry_the_sample_index() {
        let hand = default_iss_hand();
        // Blocking a TA-only chain completely stalls the motor.
        let schedule = [
            ScheduledContact::new(0.5, "F1P", 0.1),
            ScheduledContact::new(0.5, "F1D", 0.1),
        ];
        let err = simulate_closing(&hand, &motor_grid(&hand, 10), &schedule).unwrap_err();
        match err {
            Error::AtSample { index, source } => {
                assert_eq!(index, 3);
                assert!(matches!(*source, Error::Infeasible(_)));
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
