//! Random small designs shared by the property and acceptance suites.
#![allow(dead_code)]

use tendonhand::*;

/// Unit-interval draws consumed by [`case_from`].
pub const DRAWS: usize = 14;
pub const TOPOLOGIES: usize = 7;

pub struct Case {
    pub design: HandDesign,
    pub motor_angle: f64,
    pub contacts: Vec<ContactConstraint>,
}

fn lerp(lo: f64, hi: f64, u: f64) -> f64 {
    lo + (hi - lo) * u
}

/// Designs with at most three joints:
///
/// | topology | tendons                         |
/// |----------|---------------------------------|
/// | 0        | one TA joint                    |
/// | 1        | TA chain of two                 |
/// | 2        | TA chain of three               |
/// | 3        | TA chain of two + one SA joint  |
/// | 4        | one TA joint + one SA joint     |
/// | 5        | two TA singles + one SA joint   |
/// | 6        | one SA joint                    |
///
/// Stiffness lies in [0.1, 50], moment arms in [2, 15], preloads in [0, 1].
/// With `allow_contact`, draw 13 decides whether one joint is capped.
pub fn case_from(u: &[f64], topology: usize, allow_contact: bool) -> Case {
    assert!(u.len() >= DRAWS);
    let (ta, sa): (Vec<Vec<usize>>, Vec<usize>) = match topology {
        0 => (vec![vec![0]], vec![]),
        1 => (vec![vec![0, 1]], vec![]),
        2 => (vec![vec![0, 1, 2]], vec![]),
        3 => (vec![vec![0, 1]], vec![2]),
        4 => (vec![vec![0]], vec![1]),
        5 => (vec![vec![0], vec![1]], vec![2]),
        _ => (vec![], vec![0]),
    };
    let n = ta.iter().map(Vec::len).sum::<usize>() + sa.len();
    let names = ["A", "B", "C"];

    let joints: Vec<Joint> = (0..n)
        .map(|j| {
            let k = lerp(0.1, 50.0, u[3 * j]);
            let p = u[3 * j + 1];
            let limits = if sa.contains(&j) { (-0.3, p) } else { (-0.5 * p, 1.2) };
            Joint::new(names[j], JointKind::Flexion, limits, k, p)
        })
        .collect();
    let arm = |j: usize| lerp(2.0, 15.0, u[3 * j + 2]);

    let mut tendons: Vec<TendonRoute> = ta
        .iter()
        .enumerate()
        .map(|(t, route)| TendonRoute {
            id: format!("ta{t}"),
            role: Agonist::Tendon,
            stops: route.iter().map(|&j| Stop::new(names[j], arm(j), 1)).collect(),
            winding: 1,
        })
        .collect();
    tendons.extend(sa.iter().enumerate().map(|(t, &j)| TendonRoute {
        id: format!("sa{t}"),
        role: Agonist::Spring,
        stops: vec![Stop::new(names[j], arm(j), -1)],
        winding: -1,
    }));

    let design = HandDesign {
        joints,
        tendons,
        motor: MotorShaft {
            radius: lerp(2.0, 15.0, u[9]),
            angle_min: 0.0,
            angle_max: 1.5,
            stiction: 10.0,
        },
        reference_pose: JointConfiguration::new(vec![0.0; n], 0.0),
    };
    let motor_angle = lerp(0.0, 1.5, u[10]);
    let mut contacts = Vec::new();
    if allow_contact && u[13] < 0.5 {
        let j = ((u[11] * n as f64) as usize).min(n - 1);
        let joint = &design.joints[j];
        contacts.push(ContactConstraint::new(
            &joint.id,
            lerp(joint.angle_min, joint.angle_max, u[12]),
        ));
    }
    Case {
        design,
        motor_angle,
        contacts,
    }
}

/// Largest complementarity product and stationarity residual of `eq`.
pub fn kkt_errors(design: &HandDesign, eq: &EquilibriumResult) -> (f64, f64) {
    let complementarity = eq
        .tendon_statuses
        .iter()
        .map(|s| s.tension * s.slack)
        .fold(0.0, f64::max);
    let stationarity = stationarity_residuals(design, eq)
        .unwrap()
        .into_iter()
        .map(f64::abs)
        .fold(0.0, f64::max);
    (complementarity, stationarity)
}

pub fn max_angle_error(a: &EquilibriumResult, b: &EquilibriumResult) -> f64 {
    a.configuration
        .angles
        .iter()
        .zip(&b.configuration.angles)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
