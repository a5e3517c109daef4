//! CPLEX LP text output for debugging and external cross-checks.

use std::fmt::Write;

use super::model::{LinearModel, ObjectiveSense, Sense, VarKind};

fn sanitize(name: &str, fallback: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "_.[]".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect();
    if s.is_empty() || s.starts_with(|c: char| c.is_ascii_digit() || c == '.') {
        format!("{fallback}{s}")
    } else {
        s
    }
}

fn term(out: &mut String, coeff: f64, name: &str, first: bool) {
    if first {
        let _ = write!(out, " {coeff} {name}");
    } else if coeff < 0.0 {
        let _ = write!(out, " - {} {name}", -coeff);
    } else {
        let _ = write!(out, " + {coeff} {name}");
    }
}

pub fn to_lp_string(model: &LinearModel) -> String {
    let names: Vec<String> = model
        .variables
        .iter()
        .enumerate()
        .map(|(j, v)| format!("{}_{j}", sanitize(&v.name, "x")))
        .collect();
    let mut out = String::new();
    out.push_str(match model.sense {
        ObjectiveSense::Minimize => "Minimize\n",
        ObjectiveSense::Maximize => "Maximize\n",
    });
    out.push_str(" obj:");
    if model.objective.is_empty() {
        out.push_str(" 0 ");
        out.push_str(names.first().map_or("x", |s| s.as_str()));
    }
    for (k, &(v, a)) in model.objective.iter().enumerate() {
        term(&mut out, a, &names[v.0], k == 0);
    }
    if model.objective_constant != 0.0 {
        let _ = write!(out, " + {} constant", model.objective_constant);
    }
    out.push_str("\nSubject To\n");
    for (i, c) in model.constraints.iter().enumerate() {
        let _ = write!(out, " {}_{i}:", sanitize(&c.name, "r"));
        if c.coeffs.is_empty() {
            out.push_str(" 0 ");
            out.push_str(names.first().map_or("x", |s| s.as_str()));
        }
        for (k, &(v, a)) in c.coeffs.iter().enumerate() {
            term(&mut out, a, &names[v.0], k == 0);
        }
        let sense = match c.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        let _ = writeln!(out, " {sense} {}", c.rhs);
    }
    out.push_str("Bounds\n");
    if model.objective_constant != 0.0 {
        out.push_str(" constant = 1\n");
    }
    for (v, name) in model.variables.iter().zip(&names) {
        let lo = if v.lower.is_finite() {
            v.lower.to_string()
        } else {
            "-inf".into()
        };
        let hi = if v.upper.is_finite() {
            v.upper.to_string()
        } else {
            "+inf".into()
        };
        let _ = writeln!(out, " {lo} <= {name} <= {hi}");
    }
    let ints: Vec<&String> = model
        .variables
        .iter()
        .zip(&names)
        .filter(|(v, _)| v.kind != VarKind::Continuous)
        .map(|(_, n)| n)
        .collect();
    if !ints.is_empty() {
        out.push_str("General\n");
        for n in ints {
            let _ = writeln!(out, " {n}");
        }
    }
    out.push_str("End\n");
    out
}
