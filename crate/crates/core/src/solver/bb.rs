//! Best-bound branch-and-bound over the simplex relaxation.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use log::{debug, info};
use thiserror::Error;

use super::simplex::{Basis, LpData, LpError, LpOptions, LpStatus};
use crate::model::{extract_solution, MilpModel, ModelError};
use crate::solution::Solution;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveLimits {
    /// Wall-clock limit in seconds.
    pub time_limit: f64,
    pub node_limit: usize,
    /// Relative optimality gap at which a node is pruned.
    pub gap_tolerance: f64,
    pub integrality_tolerance: f64,
    pub lp_feasibility_tolerance: f64,
}

impl Default for SolveLimits {
    fn default() -> Self {
        Self {
            time_limit: f64::INFINITY,
            node_limit: usize::MAX,
            gap_tolerance: 1e-6,
            integrality_tolerance: 1e-6,
            lp_feasibility_tolerance: 1e-7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    /// A limit stopped the search after an incumbent was found.
    Feasible,
    Infeasible,
    /// A limit stopped the search before any incumbent was found.
    Limit,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Feasible => "feasible",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Limit => "limit",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveStats {
    pub nodes_explored: usize,
    pub lp_iterations: usize,
    pub best_bound: f64,
    /// `+inf` until an incumbent exists.
    pub best_incumbent: f64,
    pub status: SolveStatus,
    /// Seconds.
    pub wall_time: f64,
    /// Nodes whose relaxation came out below their parent's.
    pub bound_regressions: usize,
    /// Every incumbent value in the order found.
    pub incumbent_history: Vec<f64>,
}

impl SolveStats {
    pub fn gap(&self) -> f64 {
        if !self.best_incumbent.is_finite() {
            return f64::INFINITY;
        }
        (self.best_incumbent - self.best_bound).max(0.0) / self.best_incumbent.abs().max(1e-10)
    }
}

#[derive(Debug, Clone)]
pub struct BbResult {
    pub assignment: Option<Vec<f64>>,
    pub stats: SolveStats,
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("LP relaxation failed: {0}")]
    Lp(#[from] LpError),
    #[error("LP relaxation is unbounded")]
    Unbounded,
    #[error("model is infeasible")]
    Infeasible(Box<SolveStats>),
    #[error("limit reached before any feasible solution was found")]
    NoIncumbent(Box<SolveStats>),
    #[error(transparent)]
    Extract(#[from] ModelError),
    #[error("malformed model: {0}")]
    Malformed(String),
}

struct Node {
    id: usize,
    depth: usize,
    bound: f64,
    lower: Vec<f64>,
    upper: Vec<f64>,
    basis: Option<Basis>,
}

impl Node {
    fn key(&self) -> (f64, usize, usize) {
        (self.bound, self.depth, self.id)
    }
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    /// Max-heap order: lowest bound, then deepest, then oldest.
    fn cmp(&self, other: &Self) -> Ordering {
        let (b1, d1, i1) = self.key();
        let (b2, d2, i2) = other.key();
        b2.total_cmp(&b1).then(d1.cmp(&d2)).then(i2.cmp(&i1))
    }
}

/// Column to branch on: the most fractional integral column, lowest index
/// on ties.
fn branching_column(model: &MilpModel, x: &[f64], tol: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (j, v) in model.variables.iter().enumerate() {
        if !v.kind.is_integral() {
            continue;
        }
        let frac = x[j] - x[j].floor();
        let dist = frac.min(1.0 - frac);
        if dist > tol && best.is_none_or(|(_, d)| dist > d) {
            best = Some((j, dist));
        }
    }
    best.map(|(j, _)| j)
}

pub fn solve_bb(model: &MilpModel, limits: &SolveLimits) -> Result<BbResult, SolveError> {
    model.check_well_formed().map_err(SolveError::Malformed)?;
    let started = Instant::now();
    let data = LpData::new(model);
    let opts = LpOptions { feasibility_tol: limits.lp_feasibility_tolerance, ..LpOptions::default() };
    let int_tol = limits.integrality_tolerance;

    let mut stats = SolveStats {
        nodes_explored: 0,
        lp_iterations: 0,
        best_bound: f64::NEG_INFINITY,
        best_incumbent: f64::INFINITY,
        status: SolveStatus::Infeasible,
        wall_time: 0.0,
        bound_regressions: 0,
        incumbent_history: Vec::new(),
    };
    let mut incumbent: Option<Vec<f64>> = None;
    let prune_at = |inc: f64| inc - (limits.gap_tolerance * inc.abs()).max(1e-9);

    let mut heap = BinaryHeap::new();
    let mut next_id = 0;
    heap.push(Node {
        id: next_id,
        depth: 0,
        bound: f64::NEG_INFINITY,
        lower: model.variables.iter().map(|v| v.lower).collect(),
        upper: model.variables.iter().map(|v| v.upper).collect(),
        basis: None,
    });
    next_id += 1;

    let mut hit_limit = false;
    while let Some(node) = heap.pop() {
        if incumbent.is_some() && node.bound >= prune_at(stats.best_incumbent) {
            // Best-first: every remaining node is at least as bad.
            heap.clear();
            break;
        }
        let elapsed = started.elapsed().as_secs_f64();
        if stats.nodes_explored >= limits.node_limit || elapsed >= limits.time_limit {
            heap.push(node);
            hit_limit = true;
            break;
        }
        stats.nodes_explored += 1;
        if stats.nodes_explored.is_multiple_of(1000) {
            info!(
                "nodes {} open {} bound {:.6} incumbent {:.6} gap {:.3e}",
                stats.nodes_explored,
                heap.len(),
                node.bound,
                stats.best_incumbent,
                SolveStats { best_bound: node.bound, ..stats.clone() }.gap()
            );
        }

        let lp = data.solve_with_bounds(&node.lower, &node.upper, node.basis.as_ref(), &opts)?;
        stats.lp_iterations += lp.iterations;
        match lp.status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => return Err(SolveError::Unbounded),
            LpStatus::Optimal => {}
        }
        if node.bound.is_finite() && lp.objective < node.bound - 1e-7 * node.bound.abs().max(1.0) {
            stats.bound_regressions += 1;
            debug!("node {} relaxation {} below parent {}", node.id, lp.objective, node.bound);
        }
        if incumbent.is_some() && lp.objective >= prune_at(stats.best_incumbent) {
            continue;
        }

        match branching_column(model, &lp.x, int_tol) {
            None => {
                let (value, x) = polish(model, &data, &opts, &node, &lp.x, &lp.basis, &mut stats)?;
                if value < stats.best_incumbent {
                    debug!("node {} new incumbent {value}", node.id);
                    stats.best_incumbent = value;
                    stats.incumbent_history.push(value);
                    incumbent = Some(x);
                }
            }
            Some(j) => {
                let v = lp.x[j];
                let mut down_upper = node.upper.clone();
                down_upper[j] = v.floor();
                let mut up_lower = node.lower.clone();
                up_lower[j] = v.ceil();
                for (lower, upper) in [(node.lower.clone(), down_upper), (up_lower, node.upper.clone())] {
                    heap.push(Node {
                        id: next_id,
                        depth: node.depth + 1,
                        bound: lp.objective,
                        lower,
                        upper,
                        basis: Some(lp.basis.clone()),
                    });
                    next_id += 1;
                }
            }
        }
    }

    stats.wall_time = started.elapsed().as_secs_f64();
    let open_bound = heap.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
    stats.status = match (hit_limit, incumbent.is_some()) {
        (false, true) => SolveStatus::Optimal,
        (false, false) => SolveStatus::Infeasible,
        (true, true) => SolveStatus::Feasible,
        (true, false) => SolveStatus::Limit,
    };
    stats.best_bound = match stats.status {
        SolveStatus::Optimal => stats.best_incumbent,
        SolveStatus::Infeasible => f64::INFINITY,
        _ => open_bound.min(stats.best_incumbent),
    };
    info!(
        "status {} nodes {} lp iterations {} bound {} incumbent {} time {:.3}s",
        stats.status,
        stats.nodes_explored,
        stats.lp_iterations,
        stats.best_bound,
        stats.best_incumbent,
        stats.wall_time
    );
    Ok(BbResult { assignment: incumbent, stats })
}

/// Fixes integral columns at their rounded values and re-solves so the
/// continuous part is exactly consistent with the rounding.
fn polish(
    model: &MilpModel,
    data: &LpData,
    opts: &LpOptions,
    node: &Node,
    x: &[f64],
    basis: &Basis,
    stats: &mut SolveStats,
) -> Result<(f64, Vec<f64>), SolveError> {
    let mut lower = node.lower.clone();
    let mut upper = node.upper.clone();
    let mut rounded = x.to_vec();
    for (j, v) in model.variables.iter().enumerate() {
        if v.kind.is_integral() {
            rounded[j] = x[j].round();
            lower[j] = rounded[j];
            upper[j] = rounded[j];
        }
    }
    let lp = data.solve_with_bounds(&lower, &upper, Some(basis), opts)?;
    stats.lp_iterations += lp.iterations;
    let mut out = if lp.status == LpStatus::Optimal { lp.x } else { rounded.clone() };
    for (j, v) in model.variables.iter().enumerate() {
        if v.kind.is_integral() {
            out[j] = rounded[j];
        }
    }
    Ok((model.objective_value(&out), out))
}

/// Solves a formulation model and maps the incumbent to a [`Solution`].
pub fn solve_model(model: &MilpModel, limits: &SolveLimits) -> Result<(Solution, SolveStats), SolveError> {
    let result = solve_bb(model, limits)?;
    match result.assignment {
        Some(x) => Ok((extract_solution(model, &x)?, result.stats)),
        None if result.stats.status == SolveStatus::Infeasible => Err(SolveError::Infeasible(Box::new(result.stats))),
        None => Err(SolveError::NoIncumbent(Box::new(result.stats))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Relation, VarKind};

    #[test]
    fn small_knapsack() {
        // max 5a + 4b + 3c st 2a + 3b + c <= 5, 4a + b + 2c <= 11, 3a + 4b + 2c <= 8, binaries
        let mut m = MilpModel::new("knap");
        for (k, c) in [-5.0, -4.0, -3.0].into_iter().enumerate() {
            m.add_var(format!("x{k}"), VarKind::Binary, 0.0, 1.0, c);
        }
        m.add_constraint("a".into(), vec![(0, 2.0), (1, 3.0), (2, 1.0)], Relation::Le, 5.0);
        m.add_constraint("b".into(), vec![(0, 4.0), (1, 1.0), (2, 2.0)], Relation::Le, 11.0);
        m.add_constraint("c".into(), vec![(0, 3.0), (1, 4.0), (2, 2.0)], Relation::Le, 8.0);
        let r = solve_bb(&m, &SolveLimits::default()).unwrap();
        assert_eq!(r.stats.status, SolveStatus::Optimal);
        // Brute force over the 8 assignments.
        let best = (0..8u32)
            .map(|mask| [(mask & 1) as f64, (mask >> 1 & 1) as f64, (mask >> 2 & 1) as f64])
            .filter(|x| m.constraints.iter().all(|c| c.violation(x) == 0.0))
            .map(|x| m.objective_value(&x))
            .fold(f64::INFINITY, f64::min);
        assert_eq!(r.stats.best_incumbent, best);
    }

    #[test]
    fn integer_rounding_is_branched() {
        // min -x - y st 2x + 2y <= 5, integer -> -2
        let mut m = MilpModel::new("t");
        m.add_var("x".into(), VarKind::Integer, 0.0, 10.0, -1.0);
        m.add_var("y".into(), VarKind::Integer, 0.0, 10.0, -1.0);
        m.add_constraint("r".into(), vec![(0, 2.0), (1, 2.0)], Relation::Le, 5.0);
        let r = solve_bb(&m, &SolveLimits::default()).unwrap();
        assert_eq!(r.stats.best_incumbent, -2.0);
        assert!(r.stats.nodes_explored > 1);
        assert_eq!(r.stats.bound_regressions, 0);
    }

    #[test]
    fn infeasible_integer_program() {
        // 2x = 1 with x integer
        let mut m = MilpModel::new("t");
        m.add_var("x".into(), VarKind::Integer, 0.0, 3.0, 1.0);
        m.add_constraint("r".into(), vec![(0, 2.0)], Relation::Eq, 1.0);
        let r = solve_bb(&m, &SolveLimits::default()).unwrap();
        assert_eq!(r.stats.status, SolveStatus::Infeasible);
        assert!(r.assignment.is_none());
    }

    #[test]
    fn node_limit_reports_limit() {
        let mut m = MilpModel::new("t");
        m.add_var("x".into(), VarKind::Integer, 0.0, 10.0, -1.0);
        m.add_var("y".into(), VarKind::Integer, 0.0, 10.0, -1.0);
        m.add_constraint("r".into(), vec![(0, 2.0), (1, 2.0)], Relation::Le, 5.0);
        let r = solve_bb(&m, &SolveLimits { node_limit: 1, ..SolveLimits::default() }).unwrap();
        assert_eq!(r.stats.status, SolveStatus::Limit);
        assert_eq!(r.stats.nodes_explored, 1);
        assert!((r.stats.best_bound + 2.5).abs() < 1e-9);
    }
}
