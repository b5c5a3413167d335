//! Brute-force equilibrium search used to cross-check [`solve_pose`].
//!
//! All joints but the last are sampled on a lattice over their boxes; the
//! last joint is minimized exactly on its feasible interval. The best lattice
//! sample is then polished by nested golden-section search over the same
//! reduced coordinates, which is exact for the convex potential. Tendon
//! tensions are read back from a free joint on each taut tendon.
//!
//! [`solve_pose`]: crate::statics::solve_pose

use crate::error::{Error, Result};
use crate::model::HandDesign;
use crate::statics::{
    assemble, check_motor, joint_bounds, ContactConstraint, EquilibriumResult, Layout, SLACK_TOLERANCE,
};

pub const MAX_ORACLE_JOINTS: usize = 3;
const FEASIBILITY_TOLERANCE: f64 = 1e-12;
const GOLDEN_WIDTH: f64 = 1e-11;
const SNAP: f64 = 1e-9;

struct Search<'a> {
    layout: &'a Layout,
    lower: &'a [f64],
    upper: &'a [f64],
    motor_angle: f64,
}

impl Search<'_> {
    fn n(&self) -> usize {
        self.lower.len()
    }

    /// Interval of joint `i` for which the remaining joints can still keep
    /// its tendon inextensible, given the angles of joints `0..i`.
    fn interval(&self, i: usize, angles: &[f64]) -> (f64, f64) {
        let (mut lo, mut hi) = (self.lower[i], self.upper[i]);
        let Some(t) = self.layout.tendon_of[i] else {
            return (lo, hi);
        };
        let tendon = &self.layout.tendons[t];
        let mut rest = -tendon.motor_gain * (self.motor_angle - self.layout.reference_motor);
        let mut own_gain = 0.0;
        for r in &tendon.joints {
            let j = r.joint;
            let reference = self.layout.reference[j];
            if j < i {
                rest += r.gain * (angles[j] - reference);
            } else if j == i {
                own_gain = r.gain;
            } else {
                rest += (r.gain * (self.lower[j] - reference)).max(r.gain * (self.upper[j] - reference));
            }
        }
        // own_gain * (angle - reference) + rest >= 0
        let bound = self.layout.reference[i] - rest / own_gain;
        if own_gain > 0.0 {
            lo = lo.max(bound - FEASIBILITY_TOLERANCE);
        } else {
            hi = hi.min(bound + FEASIBILITY_TOLERANCE);
        }
        (lo, hi)
    }

    fn feasible(&self, angles: &[f64]) -> bool {
        (0..self.layout.tendons.len()).all(|t| self.layout.raw_slack(t, angles, self.motor_angle) >= -1e-9)
    }

    /// Completes `angles[0..n-1]` with the exact minimizer of the last joint.
    fn complete(&self, angles: &mut [f64]) -> f64 {
        let last = self.n() - 1;
        let (lo, hi) = self.interval(last, angles);
        if lo > hi {
            return f64::INFINITY;
        }
        angles[last] = self.layout.rest_angle(last).clamp(lo, hi);
        if !self.feasible(angles) {
            return f64::INFINITY;
        }
        self.layout.energy(angles)
    }

    /// min over joints i.. with joints 0..i fixed in `angles`.
    fn nested(&self, i: usize, angles: &mut Vec<f64>) -> f64 {
        if i == self.n() - 1 {
            return self.complete(angles);
        }
        let (lo, hi) = self.interval(i, angles);
        if lo > hi {
            return f64::INFINITY;
        }
        let eval = |x: f64, angles: &mut Vec<f64>| {
            angles[i] = x;
            self.nested(i + 1, angles)
        };
        let (best_x, _) = golden_section(lo, hi, |x| eval(x, &mut angles.clone()));
        eval(best_x, angles)
    }
}

fn golden_section(mut a: f64, mut b: f64, mut f: impl FnMut(f64) -> f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut best = (a, f(a));
    let fb = f(b);
    if fb < best.1 {
        best = (b, fb);
    }
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if b - a < GOLDEN_WIDTH {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
        for (x, v) in [(x1, f1), (x2, f2)] {
            if v < best.1 {
                best = (x, v);
            }
        }
    }
    best
}

/// Exhaustive search for the equilibrium of a design with at most three
/// joints. `resolution` is the lattice spacing in radians.
pub fn grid_search_pose(
    design: &HandDesign,
    motor_angle: f64,
    contacts: &[ContactConstraint],
    resolution: f64,
) -> Result<EquilibriumResult> {
    let n = design.joints.len();
    if n == 0 || n > MAX_ORACLE_JOINTS {
        return Err(Error::InvalidInput(format!(
            "grid search supports 1 to {MAX_ORACLE_JOINTS} joints, design has {n}"
        )));
    }
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "resolution must be positive, got {resolution}"
        )));
    }
    check_motor(design, motor_angle)?;
    let layout = Layout::new(design)?;
    let (lower, upper, capped) = match joint_bounds(design, contacts) {
        Ok(b) => b,
        Err(Error::Infeasible(_)) => return Err(Error::NoFeasibleSample),
        Err(e) => return Err(e),
    };
    let search = Search {
        layout: &layout,
        lower: &lower,
        upper: &upper,
        motor_angle,
    };

    let axes: Vec<Vec<f64>> = (0..n - 1)
        .map(|j| {
            let span = upper[j] - lower[j];
            let steps = (span / resolution).floor() as usize;
            let mut axis: Vec<f64> = (0..=steps).map(|i| lower[j] + i as f64 * resolution).collect();
            if axis.last().is_some_and(|&x| x < upper[j]) {
                axis.push(upper[j]);
            }
            axis
        })
        .collect();

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut angles = vec![0.0; n];
    let mut index = vec![0usize; n - 1];
    loop {
        for (j, &i) in index.iter().enumerate() {
            angles[j] = axes[j][i];
        }
        let energy = search.complete(&mut angles);
        if energy.is_finite() && best.as_ref().is_none_or(|(e, _)| energy < *e) {
            best = Some((energy, angles.clone()));
        }
        // odometer increment over the lattice
        let mut carry = true;
        for (j, i) in index.iter_mut().enumerate() {
            *i += 1;
            if *i < axes[j].len() {
                carry = false;
                break;
            }
            *i = 0;
        }
        if carry {
            break;
        }
    }
    let (lattice_energy, lattice_angles) = best.ok_or(Error::NoFeasibleSample)?;

    let mut refined = lattice_angles.clone();
    let refined_energy = search.nested(0, &mut refined);
    let mut angles = if refined_energy <= lattice_energy {
        refined
    } else {
        lattice_angles
    };
    // the line searches stop a hair away from active bounds
    for (j, a) in angles.iter_mut().enumerate() {
        if (*a - lower[j]).abs() < SNAP {
            *a = lower[j];
        } else if (*a - upper[j]).abs() < SNAP {
            *a = upper[j];
        }
    }

    let tensions: Vec<f64> = (0..layout.tendons.len())
        .map(|t| recover_tension(&layout, t, &angles, motor_angle, &lower, &upper))
        .collect();
    Ok(assemble(
        design,
        &layout,
        angles,
        &tensions,
        motor_angle,
        &lower,
        &upper,
        &capped,
    ))
}

fn recover_tension(layout: &Layout, t: usize, angles: &[f64], motor_angle: f64, lower: &[f64], upper: &[f64]) -> f64 {
    if layout.raw_slack(t, angles, motor_angle) >= SLACK_TOLERANCE {
        return 0.0;
    }
    layout.tendons[t]
        .joints
        .iter()
        .find(|r| angles[r.joint] > lower[r.joint] + 1e-9 && angles[r.joint] < upper[r.joint] - 1e-9)
        .map_or(0.0, |r| {
            (layout.spring_gradient(r.joint, angles[r.joint]) / r.gain).max(0.0)
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Agonist;
    use crate::statics::solve_pose;
    use crate::statics::tests::{one_joint, two_joint_chain};

    #[test]
    fn matches_single_joint() {
        let design = one_joint(Agonist::Tendon, 1.0, 1.0, 10.0, 5.0);
        let eq = grid_search_pose(&design, 0.2, &[], 1e-3).unwrap();
        assert!((eq.configuration.angles[0] - 0.1).abs() < 1e-3);
    }

    #[test]
    fn matches_two_joint_chain() {
        let design = two_joint_chain();
        let oracle = grid_search_pose(&design, 1.0, &[], 1e-3).unwrap();
        let solved = solve_pose(&design, 1.0, &[]).unwrap();
        for (a, b) in oracle.configuration.angles.iter().zip(&solved.configuration.angles) {
            assert!((a - b).abs() < 2e-3, "{a} vs {b}");
        }
        assert!((oracle.configuration.angles[0] - 0.28).abs() < 2e-3);
        assert!((oracle.configuration.angles[1] + 0.36).abs() < 2e-3);
    }

    #[test]
    fn cap_below_minimum_has_no_samples() {
        let design = two_joint_chain();
        assert_eq!(
            grid_search_pose(&design, 1.0, &[ContactConstraint::new("P", -0.9)], 1e-2),
            Err(Error::NoFeasibleSample)
        );
    }

    #[test]
    fn stretched_everywhere_has_no_samples() {
        let design = one_joint(Agonist::Tendon, 1.0, 1.0, 10.0, 5.0);
        let contacts = [ContactConstraint::new("J", 0.0)];
        assert_eq!(
            grid_search_pose(&design, 0.5, &contacts, 1e-3),
            Err(Error::NoFeasibleSample)
        );
    }
}
