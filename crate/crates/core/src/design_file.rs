//! TOML design, synergy-problem and spring-catalog files.
//!
//! A design file has a `[motor]` table, a `[reference_pose]` table with a
//! `motor_angle` and an `angles` table keyed by joint id, and arrays
//! `[[joints]]` and `[[tendons]]`. Each tendon lists its `stops` in order from
//! the proximal joint outward. Floats are written with enough digits to
//! round-trip exactly.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::cancellation::SpringCatalogEntry;
use crate::error::{Error, Result};
use crate::model::{
    default_iss_hand, Agonist, HandDesign, Joint, JointConfiguration, JointKind, MotorShaft, Stop, TendonRoute,
};
use crate::synergy::{ParameterBound, SynergyProblem};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DesignDoc {
    motor: MotorDoc,
    reference_pose: PoseDoc,
    joints: Vec<JointDoc>,
    tendons: Vec<TendonDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MotorDoc {
    radius: f64,
    angle_min: f64,
    angle_max: f64,
    stiction: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoseDoc {
    motor_angle: f64,
    angles: BTreeMap<String, f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JointDoc {
    id: String,
    kind: JointKind,
    angle_min: f64,
    angle_max: f64,
    stiffness: f64,
    preload: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TendonDoc {
    id: String,
    role: Agonist,
    winding: i8,
    stops: Vec<StopDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StopDoc {
    joint: String,
    moment_arm: f64,
    sign: i8,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemDoc {
    /// Relative to the problem file; the built-in hand when absent.
    design: Option<String>,
    budget: Option<usize>,
    restarts: Option<usize>,
    seed: Option<u64>,
    motor_samples: Option<usize>,
    targets: Vec<Vec<f64>>,
    #[serde(default)]
    weights: BTreeMap<String, f64>,
    parameters: Vec<ParameterDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParameterDoc {
    path: String,
    min: f64,
    max: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogDoc {
    springs: Vec<CatalogEntryDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogEntryDoc {
    stiffness: f64,
    preload_min: f64,
    preload_max: f64,
}

/// 1-based line and column of a byte offset.
fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before
        .rfind('\n')
        .map_or(before.chars().count(), |i| before[i + 1..].chars().count())
        + 1;
    (line, column)
}

fn parse_toml<T: DeserializeOwned>(text: &str, origin: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((1, 1), |span| line_column(text, span.start));
        Error::Parse {
            path: origin.to_string(),
            line,
            column,
            message: e.message().trim().to_string(),
        }
    })
}

/// A semantic error without a source location, reported at line 1.
fn semantic(origin: &str, message: String) -> Error {
    Error::Parse {
        path: origin.to_string(),
        line: 1,
        column: 1,
        message,
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Parses and validates a design. `origin` names the source in diagnostics.
pub fn parse_design(text: &str, origin: &str) -> Result<HandDesign> {
    let doc: DesignDoc = parse_toml(text, origin)?;
    let joints: Vec<Joint> = doc
        .joints
        .into_iter()
        .map(|j| Joint {
            id: j.id,
            kind: j.kind,
            angle_min: j.angle_min,
            angle_max: j.angle_max,
            stiffness: j.stiffness,
            preload: j.preload,
        })
        .collect();

    let mut pose = doc.reference_pose.angles;
    let mut angles = Vec::with_capacity(joints.len());
    for joint in &joints {
        let angle = pose
            .remove(&joint.id)
            .ok_or_else(|| semantic(origin, format!("reference_pose.angles is missing joint `{}`", joint.id)))?;
        angles.push(angle);
    }
    if let Some(id) = pose.keys().next() {
        return Err(semantic(
            origin,
            format!("reference_pose.angles names unknown joint `{id}`"),
        ));
    }

    let design = HandDesign {
        joints,
        tendons: doc
            .tendons
            .into_iter()
            .map(|t| TendonRoute {
                id: t.id,
                role: t.role,
                winding: t.winding,
                stops: t
                    .stops
                    .into_iter()
                    .map(|s| Stop::new(&s.joint, s.moment_arm, s.sign))
                    .collect(),
            })
            .collect(),
        motor: MotorShaft {
            radius: doc.motor.radius,
            angle_min: doc.motor.angle_min,
            angle_max: doc.motor.angle_max,
            stiction: doc.motor.stiction,
        },
        reference_pose: JointConfiguration::new(angles, doc.reference_pose.motor_angle),
    };
    design.ensure_valid()?;
    Ok(design)
}

pub fn read_design(path: &Path) -> Result<HandDesign> {
    parse_design(&read_text(path)?, &path.display().to_string())
}

/// Design file text for `design`.
pub fn design_to_toml(design: &HandDesign) -> String {
    let doc = DesignDoc {
        motor: MotorDoc {
            radius: design.motor.radius,
            angle_min: design.motor.angle_min,
            angle_max: design.motor.angle_max,
            stiction: design.motor.stiction,
        },
        reference_pose: PoseDoc {
            motor_angle: design.reference_pose.motor_angle,
            angles: design
                .joints
                .iter()
                .zip(&design.reference_pose.angles)
                .map(|(j, &a)| (j.id.clone(), a))
                .collect(),
        },
        joints: design
            .joints
            .iter()
            .map(|j| JointDoc {
                id: j.id.clone(),
                kind: j.kind,
                angle_min: j.angle_min,
                angle_max: j.angle_max,
                stiffness: j.stiffness,
                preload: j.preload,
            })
            .collect(),
        tendons: design
            .tendons
            .iter()
            .map(|t| TendonDoc {
                id: t.id.clone(),
                role: t.role,
                winding: t.winding,
                stops: t
                    .stops
                    .iter()
                    .map(|s| StopDoc {
                        joint: s.joint.clone(),
                        moment_arm: s.moment_arm,
                        sign: s.sign,
                    })
                    .collect(),
            })
            .collect(),
    };
    toml::to_string(&doc).expect("design documents always serialize")
}

/// Parses a synergy problem. A relative `design` path is resolved against
/// `base_dir`; without one the built-in hand is used. Unset options keep the
/// defaults of [`SynergyProblem::new`].
pub fn parse_problem(text: &str, origin: &str, base_dir: &Path) -> Result<SynergyProblem> {
    let doc: ProblemDoc = parse_toml(text, origin)?;
    let base = match &doc.design {
        Some(rel) => read_design(&base_dir.join(rel))?,
        None => default_iss_hand(),
    };
    let parameters = doc
        .parameters
        .iter()
        .map(|p| {
            let path = p.path.parse().map_err(|e: Error| semantic(origin, e.to_string()))?;
            Ok(ParameterBound::new(path, p.min, p.max))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut weights = vec![1.0; base.joints.len()];
    for (id, &w) in &doc.weights {
        let index = base
            .joint_index(id)
            .map_err(|_| semantic(origin, format!("weights names unknown joint `{id}`")))?;
        weights[index] = w;
    }

    let mut problem = SynergyProblem::new(base, doc.targets, parameters);
    problem.weights = weights;
    if let Some(v) = doc.budget {
        problem.budget = v;
    }
    if let Some(v) = doc.restarts {
        problem.restarts = v;
    }
    if let Some(v) = doc.seed {
        problem.seed = v;
    }
    if let Some(v) = doc.motor_samples {
        problem.motor_samples = v;
    }
    problem.validate()?;
    Ok(problem)
}

pub fn read_problem(path: &Path) -> Result<SynergyProblem> {
    let base_dir = path.parent().unwrap_or(Path::new("."));
    parse_problem(&read_text(path)?, &path.display().to_string(), base_dir)
}

pub fn parse_catalog(text: &str, origin: &str) -> Result<Vec<SpringCatalogEntry>> {
    let doc: CatalogDoc = parse_toml(text, origin)?;
    Ok(doc
        .springs
        .into_iter()
        .map(|s| SpringCatalogEntry::new(s.stiffness, s.preload_min, s.preload_max))
        .collect())
}

pub fn read_catalog(path: &Path) -> Result<Vec<SpringCatalogEntry>> {
    parse_catalog(&read_text(path)?, &path.display().to_string())
}

pub fn catalog_to_toml(catalog: &[SpringCatalogEntry]) -> String {
    let doc = CatalogDoc {
        springs: catalog
            .iter()
            .map(|s| CatalogEntryDoc {
                stiffness: s.stiffness,
                preload_min: s.preload_min,
                preload_max: s.preload_max,
            })
            .collect(),
    };
    toml::to_string(&doc).expect("catalog documents always serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_design_round_trips() {
        let hand = default_iss_hand();
        let text = design_to_toml(&hand);
        assert_eq!(parse_design(&text, "mem").unwrap(), hand);
    }

    #[test]
    fn empty_file_fails_at_line_one() {
        match parse_design("", "empty.toml") {
            Err(Error::Parse { line, path, .. }) => {
                assert_eq!(line, 1);
                assert_eq!(path, "empty.toml");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn syntax_errors_carry_a_location() {
        let text = design_to_toml(&default_iss_hand()).replacen("radius = 6.0", "radius = = 6.0", 1);
        let line = text.lines().position(|l| l.contains("= =")).unwrap() + 1;
        match parse_design(&text, "bad.toml") {
            Err(Error::Parse { line: l, column, .. }) => {
                assert_eq!(l, line);
                assert!(column > 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn negative_moment_arm_names_the_stop() {
        let text = design_to_toml(&default_iss_hand()).replacen("moment_arm = 6.0", "moment_arm = -6.0", 1);
        match parse_design(&text, "neg.toml") {
            Err(Error::InvalidDesign(v)) => {
                assert_eq!(v.len(), 1);
                assert_eq!(v[0].path, "tendons[T_flex].stops[TD].moment_arm");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn pose_must_cover_every_joint() {
        let text = design_to_toml(&default_iss_hand()).replacen("F1A = 0.0\n", "", 1);
        assert!(matches!(parse_design(&text, "x"), Err(Error::Parse { .. })));
        let text = design_to_toml(&default_iss_hand()).replacen("F1A = 0.0\n", "F1A = 0.0\nF9A = 0.0\n", 1);
        assert!(matches!(parse_design(&text, "x"), Err(Error::Parse { .. })));
    }

    #[test]
    fn line_column_counts_from_one() {
        assert_eq!(line_column("ab\ncd", 0), (1, 1));
        assert_eq!(line_column("ab\ncd", 4), (2, 2));
    }

    #[test]
    fn problem_defaults_and_weights() {
        let text = r#"
            seed = 3
            targets = [[0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1]]
            [weights]
            F1A = 0.5
            [[parameters]]
            path = "motor.radius"
            min = 4.0
            max = 8.0
        "#;
        let problem = parse_problem(text, "p.toml", Path::new(".")).unwrap();
        assert_eq!(problem.seed, 3);
        assert_eq!(problem.budget, crate::synergy::DEFAULT_BUDGET);
        assert_eq!(problem.weights[6], 0.5);
        assert_eq!(problem.base, default_iss_hand());

        let bad = text.replace("motor.radius", "joint.F1A.stiffness");
        assert!(parse_problem(&bad, "p.toml", Path::new(".")).is_err());
    }

    #[test]
    fn catalog_round_trips() {
        let catalog = crate::model::iss_spring_catalog();
        assert_eq!(parse_catalog(&catalog_to_toml(&catalog), "c").unwrap(), catalog);
    }
}
