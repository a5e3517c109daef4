use std::fmt;

use crate::error::{Error, Result};

/// Index of a variable inside a [`LinearModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
    /// General integer. Branched on directly by floor/ceil splits.
    Integer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub kind: VarKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sense::Le => write!(f, "<="),
            Sense::Eq => write!(f, "="),
            Sense::Ge => write!(f, ">="),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub coeffs: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveSense {
    Minimize,
    Maximize,
}

/// A linear (mixed-integer) program.
///
/// Variables carry their own bounds, so simple caps such as `s <= D` never
/// become rows. The objective has an optional constant so that models can
/// report profit directly.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub objective: Vec<(VarId, f64)>,
    pub objective_constant: f64,
    pub sense: ObjectiveSense,
}

impl LinearModel {
    pub fn new(sense: ObjectiveSense) -> Self {
        Self {
            variables: Vec::new(),
            constraints: Vec::new(),
            objective: Vec::new(),
            objective_constant: 0.0,
            sense,
        }
    }

    pub fn add_var(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        kind: VarKind,
    ) -> VarId {
        let id = VarId(self.variables.len());
        let (lower, upper) = match kind {
            VarKind::Binary => (lower.max(0.0), upper.min(1.0)),
            _ => (lower, upper),
        };
        self.variables.push(Variable {
            name: name.into(),
            lower,
            upper,
            kind,
        });
        id
    }

    pub fn continuous(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> VarId {
        self.add_var(name, lower, upper, VarKind::Continuous)
    }

    pub fn binary(&mut self, name: impl Into<String>) -> VarId {
        self.add_var(name, 0.0, 1.0, VarKind::Binary)
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        coeffs: Vec<(VarId, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> usize {
        self.constraints.push(Constraint {
            name: name.into(),
            coeffs,
            sense,
            rhs,
        });
        self.constraints.len() - 1
    }

    pub fn set_objective_coeff(&mut self, var: VarId, coeff: f64) {
        if let Some(entry) = self.objective.iter_mut().find(|(v, _)| *v == var) {
            entry.1 = coeff;
        } else {
            self.objective.push((var, coeff));
        }
    }

    pub fn add_objective_coeff(&mut self, var: VarId, coeff: f64) {
        if let Some(entry) = self.objective.iter_mut().find(|(v, _)| *v == var) {
            entry.1 += coeff;
        } else {
            self.objective.push((var, coeff));
        }
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn has_integers(&self) -> bool {
        self.variables.iter().any(|v| v.kind != VarKind::Continuous)
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.variables[id.0]
    }

    /// Structural checks: references in range, finite coefficients,
    /// consistent bounds.
    pub fn check(&self) -> Result<()> {
        let n = self.variables.len();
        for (j, v) in self.variables.iter().enumerate() {
            if v.lower.is_nan() || v.upper.is_nan() || v.lower > v.upper {
                return Err(Error::InvalidModel(format!(
                    "variable {} ({}) has bounds [{}, {}]",
                    j, v.name, v.lower, v.upper
                )));
            }
            if v.kind == VarKind::Binary && (v.lower < 0.0 || v.upper > 1.0) {
                return Err(Error::InvalidModel(format!(
                    "binary variable {} outside [0,1]",
                    v.name
                )));
            }
        }
        for c in &self.constraints {
            if !c.rhs.is_finite() {
                return Err(Error::InvalidModel(format!(
                    "constraint {} has rhs {}",
                    c.name, c.rhs
                )));
            }
            for &(v, a) in &c.coeffs {
                if v.0 >= n {
                    return Err(Error::InvalidModel(format!(
                        "constraint {} references undeclared variable {}",
                        c.name, v.0
                    )));
                }
                if !a.is_finite() {
                    return Err(Error::InvalidModel(format!(
                        "constraint {} has coefficient {}",
                        c.name, a
                    )));
                }
            }
        }
        for &(v, a) in &self.objective {
            if v.0 >= n || !a.is_finite() {
                return Err(Error::InvalidModel(format!(
                    "objective term on variable {} invalid",
                    v.0
                )));
            }
        }
        Ok(())
    }

    /// Objective value of a full assignment, constant included.
    pub fn evaluate(&self, values: &[f64]) -> f64 {
        self.objective_constant
            + self
                .objective
                .iter()
                .map(|&(v, a)| a * values[v.0])
                .sum::<f64>()
    }

    /// Largest violation of bounds, rows and integrality for an assignment.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (v, x) in self.variables.iter().zip(values) {
            worst = worst.max(v.lower - x).max(x - v.upper);
            if v.kind != VarKind::Continuous {
                worst = worst.max((x - x.round()).abs());
            }
        }
        for c in &self.constraints {
            let lhs: f64 = c.coeffs.iter().map(|&(v, a)| a * values[v.0]).sum();
            let viol = match c.sense {
                Sense::Le => lhs - c.rhs,
                Sense::Ge => c.rhs - lhs,
                Sense::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }
}
