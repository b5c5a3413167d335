//! Comma-separated exports with numbers at 9 significant digits.

use std::fmt::Write as _;

use crate::cancellation::TorqueProfile;
use crate::closing::ClosingTrace;
use crate::model::HandDesign;
use crate::synergy::{SynergyProblem, SynergyResult};

const DIGITS: i32 = 9;

/// Formats like C's `%.9g`, with `-0` printed as `0`.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exponent) = sci.split_once('e').expect("exponent present");
    let exponent: i32 = exponent.parse().expect("integer exponent");
    if (-4..DIGITS).contains(&exponent) {
        let decimals = (DIGITS - 1 - exponent).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let sign = if exponent < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa.to_string()), exponent.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn push_row(out: &mut String, cells: impl IntoIterator<Item = String>) {
    let mut first = true;
    for cell in cells {
        if !first {
            out.push(',');
        }
        first = false;
        out.push_str(&cell);
    }
    out.push('\n');
}

/// One row per sample: motor angle, joint angles, tendon tensions, slacks.
pub fn trace_csv(design: &HandDesign, trace: &ClosingTrace) -> String {
    let mut out = String::new();
    let header = std::iter::once("motor_angle".to_string())
        .chain(design.joints.iter().map(|j| format!("angle.{}", j.id)))
        .chain(design.tendons.iter().map(|t| format!("tension.{}", t.id)))
        .chain(design.tendons.iter().map(|t| format!("slack.{}", t.id)));
    push_row(&mut out, header);
    for sample in &trace.samples {
        let cells = std::iter::once(sample.configuration.motor_angle)
            .chain(sample.configuration.angles.iter().copied())
            .chain(sample.tendon_statuses.iter().map(|s| s.tension))
            .chain(sample.tendon_statuses.iter().map(|s| s.slack))
            .map(format_number);
        push_row(&mut out, cells);
    }
    out
}

pub fn events_csv(trace: &ClosingTrace) -> String {
    let mut out = String::from("motor_angle,event,subject\n");
    for e in &trace.events {
        let _ = writeln!(out, "{},{},{}", format_number(e.motor_angle), e.kind, e.subject);
    }
    out
}

/// Torque profile with the stiction band as two extra columns.
pub fn profile_csv(profile: &TorqueProfile) -> String {
    let mut out = String::from("motor_angle,agonist,antagonist,net,upper_band,lower_band\n");
    for i in 0..profile.len() {
        let cells = [
            profile.motor_angles[i],
            profile.agonist[i],
            profile.antagonist[i],
            profile.net[i],
            profile.stiction,
            -profile.stiction,
        ];
        push_row(&mut out, cells.into_iter().map(format_number));
    }
    out
}

pub fn restarts_csv(result: &SynergyResult) -> String {
    let mut out = String::from("restart,evaluations,best_objective\n");
    for r in &result.restarts {
        let _ = writeln!(
            out,
            "{},{},{}",
            r.restart,
            r.evaluations,
            format_number(r.best_objective)
        );
    }
    out
}

pub fn residuals_csv(result: &SynergyResult) -> String {
    let mut out = String::from("target,distance,motor_angle\n");
    for (g, r) in result.residuals.iter().enumerate() {
        let _ = writeln!(
            out,
            "{g},{},{}",
            format_number(r.distance),
            format_number(r.motor_angle)
        );
    }
    out
}

pub fn history_csv(result: &SynergyResult) -> String {
    let mut out = String::from("evaluation,best_objective\n");
    for (i, v) in result.history.iter().enumerate() {
        let _ = writeln!(out, "{},{}", i + 1, format_number(*v));
    }
    out
}

/// Optimized parameter values next to their bounds.
pub fn parameters_csv(problem: &SynergyProblem, result: &SynergyResult) -> String {
    let mut out = String::from("path,min,max,value\n");
    for (b, v) in problem.parameters.iter().zip(&result.parameters) {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            b.path,
            format_number(b.lower),
            format_number(b.upper),
            format_number(*v)
        );
    }
    out
}
