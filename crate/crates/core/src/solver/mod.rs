//! LP relaxation, branch-and-bound and text exports of [`MilpModel`]s.
//!
//! [`MilpModel`]: crate::model::MilpModel

pub mod bb;
pub mod lp_format;
pub mod mps;
pub mod simplex;

pub use bb::{solve_bb, solve_model, BbResult, SolveError, SolveLimits, SolveStats, SolveStatus};
pub use lp_format::{export_lp, import_lp};
pub use mps::{export_mps, import_mps};
pub use simplex::{solve_lp, Basis, LpData, LpError, LpOptions, LpSolution, LpStatus};

use std::collections::HashMap;

use crate::model::MilpModel;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FormatError {
    #[error("name '{0}' does not fit an 8-character MPS field")]
    NameTooLong(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Compares two models by names rather than column positions: same
/// variables (kind and bounds), same objective, same rows in the same order.
/// `num_eq` decides equality of every number (bounds, coefficients, rhs).
pub fn models_match(a: &MilpModel, b: &MilpModel, num_eq: impl Fn(f64, f64) -> bool) -> Result<(), String> {
    if a.n_vars() != b.n_vars() || a.n_constraints() != b.n_constraints() {
        return Err(format!(
            "dimensions differ: {}x{} vs {}x{}",
            a.n_constraints(),
            a.n_vars(),
            b.n_constraints(),
            b.n_vars()
        ));
    }
    let bcol: HashMap<&str, usize> = b.variables.iter().enumerate().map(|(j, v)| (v.name.as_str(), j)).collect();
    let mut map = vec![0; a.n_vars()];
    for (j, va) in a.variables.iter().enumerate() {
        let Some(&k) = bcol.get(va.name.as_str()) else {
            return Err(format!("variable {} missing", va.name));
        };
        let vb = &b.variables[k];
        if va.kind != vb.kind {
            return Err(format!("variable {} kind {:?} vs {:?}", va.name, va.kind, vb.kind));
        }
        let same_bound = |x: f64, y: f64| x == y || num_eq(x, y);
        if !same_bound(va.lower, vb.lower) || !same_bound(va.upper, vb.upper) {
            return Err(format!(
                "variable {} bounds [{}, {}] vs [{}, {}]",
                va.name, va.lower, va.upper, vb.lower, vb.upper
            ));
        }
        if !(a.objective[j] == b.objective[k] || num_eq(a.objective[j], b.objective[k])) {
            return Err(format!("objective of {}: {} vs {}", va.name, a.objective[j], b.objective[k]));
        }
        map[j] = k;
    }
    for (ca, cb) in a.constraints.iter().zip(&b.constraints) {
        if ca.name != cb.name || ca.relation != cb.relation {
            return Err(format!("row {} vs {}", ca.name, cb.name));
        }
        if !(ca.rhs == cb.rhs || num_eq(ca.rhs, cb.rhs)) {
            return Err(format!("rhs of {}: {} vs {}", ca.name, ca.rhs, cb.rhs));
        }
        let mut ta: Vec<(usize, f64)> = ca.terms.iter().filter(|t| t.1 != 0.0).map(|&(j, v)| (map[j], v)).collect();
        let mut tb: Vec<(usize, f64)> = cb.terms.iter().filter(|t| t.1 != 0.0).copied().collect();
        ta.sort_by_key(|t| t.0);
        tb.sort_by_key(|t| t.0);
        if ta.len() != tb.len() || ta.iter().zip(&tb).any(|(x, y)| x.0 != y.0 || !(x.1 == y.1 || num_eq(x.1, y.1))) {
            return Err(format!("coefficients of row {} differ", ca.name));
        }
    }
    Ok(())
}
