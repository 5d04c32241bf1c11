//! Instance-to-solution orchestration shared by the CLI and the tests.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::energy::{energy_matrix, EnergyMatrix};
use crate::instance::{validate_instance, Instance, InstanceViolation};
use crate::model::{build_model, ModelError, ObjectiveKind};
use crate::oracle::{enumerate_optimal, plan_to_solution, OracleError};
use crate::solution::Solution;
use crate::solver::{solve_bb, SolveError, SolveLimits, SolveStats, SolveStatus};
use crate::validate::{check_feasibility, recompute_objective, ValidateError, Violation};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    BranchAndBound,
    Oracle,
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bb" => Ok(Method::BranchAndBound),
            "oracle" => Ok(Method::Oracle),
            other => Err(format!("unknown method '{other}' (expected bb or oracle)")),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::BranchAndBound => "bb",
            Method::Oracle => "oracle",
        })
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid instance: {}", join(.0))]
    Instance(Vec<InstanceViolation>),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Validate(#[from] ValidateError),
    #[error("solver returned an infeasible solution: {}", .0.iter().map(|v| v.tsv()).collect::<Vec<_>>().join("; "))]
    Unverified(Vec<Violation>),
}

fn join(v: &[InstanceViolation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub kind: ObjectiveKind,
    pub method: Method,
    pub status: SolveStatus,
    /// Present for optimal and feasible outcomes.
    pub solution: Option<Solution>,
    /// Branch-and-bound statistics; `None` for the oracle.
    pub stats: Option<SolveStats>,
    /// Energy (J) of the solution recomputed from its mass flows.
    pub energy: Option<f64>,
    /// Reasons the instance admits no plan, when that was decided up front.
    pub infeasibility: Vec<InstanceViolation>,
}

/// Validates, solves and re-checks one instance. Structural instance errors
/// fail; an undeliverable instance yields an infeasible outcome.
pub fn solve_instance(
    inst: &Instance,
    kind: ObjectiveKind,
    method: Method,
    limits: &SolveLimits,
) -> Result<SolveOutcome, PipelineError> {
    let problems = validate_instance(inst);
    if problems.iter().any(InstanceViolation::is_structural) {
        return Err(PipelineError::Instance(problems));
    }
    let mut outcome = SolveOutcome {
        kind,
        method,
        status: SolveStatus::Infeasible,
        solution: None,
        stats: None,
        energy: None,
        infeasibility: problems,
    };
    if !outcome.infeasibility.is_empty() {
        return Ok(outcome);
    }
    let em = energy_matrix(inst);
    let solution = match method {
        Method::BranchAndBound => {
            let model = build_model(inst, &em, kind)?;
            let result = solve_bb(&model, limits)?;
            outcome.status = result.stats.status;
            outcome.stats = Some(result.stats);
            match result.assignment {
                Some(x) => crate::model::extract_solution(&model, &x)?,
                None => return Ok(outcome),
            }
        }
        Method::Oracle => match enumerate_optimal(inst, &em, kind) {
            Ok((plan, _)) => {
                outcome.status = SolveStatus::Optimal;
                plan_to_solution(inst, &em, &plan, kind)?
            }
            Err(OracleError::NoFeasiblePlan) => return Ok(outcome),
            Err(e) => return Err(e.into()),
        },
    };
    finish(inst, &em, solution, &mut outcome)?;
    Ok(outcome)
}

fn finish(
    inst: &Instance,
    em: &EnergyMatrix,
    solution: Solution,
    outcome: &mut SolveOutcome,
) -> Result<(), PipelineError> {
    let violations = check_feasibility(inst, &solution)?;
    if !violations.is_empty() {
        return Err(PipelineError::Unverified(violations));
    }
    outcome.energy = Some(recompute_objective(inst, em, &solution, ObjectiveKind::Energy));
    outcome.solution = Some(solution);
    Ok(())
}

#[derive(Debug, Clone)]
pub struct CompareReport {
    pub energy_run: SolveOutcome,
    pub distance_run: SolveOutcome,
    /// Energy of the energy-optimal solution (J).
    pub energy_of_energy_run: f64,
    /// Energy of the distance-optimal solution (J).
    pub energy_of_distance_run: f64,
    /// `energy_of_distance_run / energy_of_energy_run`; 1 when both are 0.
    pub ratio: f64,
}

/// Solves under both objectives and prices both solutions in energy.
pub fn compare_objectives(
    inst: &Instance,
    method: Method,
    limits: &SolveLimits,
) -> Result<CompareReport, PipelineError> {
    let energy_run = solve_instance(inst, ObjectiveKind::Energy, method, limits)?;
    let distance_run = solve_instance(inst, ObjectiveKind::Distance, method, limits)?;
    let e = energy_run.energy.unwrap_or(f64::NAN);
    let d = distance_run.energy.unwrap_or(f64::NAN);
    let ratio = if e == 0.0 && d == 0.0 { 1.0 } else { d / e };
    Ok(CompareReport { energy_run, distance_run, energy_of_energy_run: e, energy_of_distance_run: d, ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::tests::one_station;

    #[test]
    fn both_methods_agree_on_single_station() {
        let inst = one_station(3, 0, vec![2], 4);
        for method in [Method::BranchAndBound, Method::Oracle] {
            let out = solve_instance(&inst, ObjectiveKind::Energy, method, &SolveLimits::default()).unwrap();
            assert_eq!(out.status, SolveStatus::Optimal);
            let obj = out.solution.unwrap().objective_value;
            assert!((obj - 3559.325).abs() < 1e-6, "{method}: {obj}");
            assert_eq!(out.energy.unwrap(), obj);
        }
    }

    #[test]
    fn undeliverable_instance_is_infeasible_not_an_error() {
        let inst = one_station(3, 0, vec![3, 3], 2);
        let out =
            solve_instance(&inst, ObjectiveKind::Energy, Method::BranchAndBound, &SolveLimits::default()).unwrap();
        assert_eq!(out.status, SolveStatus::Infeasible);
        assert!(!out.infeasibility.is_empty());
    }

    #[test]
    fn broken_instance_is_an_error() {
        let mut inst = one_station(3, 0, vec![2], 4);
        inst.loop_length = 10.0;
        assert!(matches!(
            solve_instance(&inst, ObjectiveKind::Energy, Method::Oracle, &SolveLimits::default()),
            Err(PipelineError::Instance(_))
        ));
    }

    #[test]
    fn zero_demand_compare_ratio_is_one() {
        let inst = one_station(3, 0, vec![0], 4);
        let r = compare_objectives(&inst, Method::BranchAndBound, &SolveLimits::default()).unwrap();
        assert_eq!((r.energy_of_energy_run, r.energy_of_distance_run, r.ratio), (0.0, 0.0, 1.0));
        assert_eq!(r.energy_run.stats.unwrap().nodes_explored, 1);
    }

    #[test]
    fn method_parsing() {
        assert_eq!("bb".parse::<Method>().unwrap(), Method::BranchAndBound);
        assert!("simplex".parse::<Method>().is_err());
    }
}
