//! Solver-independent linear model and the mass-flow formulation built on it.
//!
//! For every period `t` the formulation has, over route nodes `0..=n+1`:
//!
//! * `M[i,j,t] >= 0`  kilograms (vehicle plus load) moving along arc `i -> j`
//! * `Z[i,t]`         boxes delivered to station `i` (integer)
//! * `IL[i,t] >= 0`   boxes held by station `i` at the end of `t`
//! * `PHI[i,j,t]`     arc `i -> j` driven (binary)
//! * `X[i,t]`         tow train stops at station `i` (binary)
//! * `Y[t]`           a tour runs in period `t` (binary)
//!
//! Each station absorbs `m_i Z[i,t]` kilograms of the flow, and exactly the
//! empty vehicle mass must reach the return depot `n + 1`, so the energy of a
//! tour is linear in `M`.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::arcs::ArcSet;
use crate::energy::EnergyMatrix;
use crate::instance::{max_transport_mass, Instance};
use crate::solution::Solution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarKind {
    Continuous,
    Integer,
    Binary,
}

impl VarKind {
    pub fn is_integral(self) -> bool {
        !matches!(self, VarKind::Continuous)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Amount by which `x` violates the row (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.activity(x);
        match self.relation {
            Relation::Le => (lhs - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - lhs).max(0.0),
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// Structured identity of a formulation column. Node indices are route
/// nodes, periods are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarKey {
    Mass { i: usize, j: usize, t: usize },
    Delivery { i: usize, t: usize },
    Inventory { i: usize, t: usize },
    Arc { i: usize, j: usize, t: usize },
    Stop { i: usize, t: usize },
    Tour { t: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveKind {
    Energy,
    Distance,
}

impl fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ObjectiveKind::Energy => "energy",
            ObjectiveKind::Distance => "distance",
        })
    }
}

impl std::str::FromStr for ObjectiveKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "energy" => Ok(Self::Energy),
            "distance" => Ok(Self::Distance),
            other => Err(format!("unknown objective '{other}' (expected energy or distance)")),
        }
    }
}

/// Shape of a formulation: enough to map columns back to a [`Solution`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub n: usize,
    pub nt: usize,
    pub kind: ObjectiveKind,
}

/// A minimization MILP. Models read back from text files carry no
/// `var_index` or `layout`.
#[derive(Debug, Clone, Default)]
pub struct MilpModel {
    pub name: String,
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    /// Objective coefficient per variable.
    pub objective: Vec<f64>,
    pub var_index: BTreeMap<VarKey, usize>,
    pub layout: Option<Layout>,
}

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("energy matrix covers {matrix} nodes but the instance has {instance}")]
    DimensionMismatch { matrix: usize, instance: usize },
    #[error("model has no formulation layout")]
    NoLayout,
    #[error("assignment has {found} values, model has {expected} variables")]
    AssignmentLength { expected: usize, found: usize },
    #[error("integrality violated for {var}: {value}")]
    IntegralityViolated { var: String, value: f64 },
    #[error("assignment infeasible: {name} violated by {magnitude:e}")]
    Infeasible { name: String, magnitude: f64 },
}

impl MilpModel {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), ..Default::default() }
    }

    pub fn n_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn n_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn add_var(&mut self, name: String, kind: VarKind, lower: f64, upper: f64, cost: f64) -> usize {
        let (lower, upper) = match kind {
            VarKind::Binary => (lower.max(0.0), upper.min(1.0)),
            _ => (lower, upper),
        };
        self.variables.push(Variable { name, kind, lower, upper });
        self.objective.push(cost);
        self.variables.len() - 1
    }

    pub fn add_constraint(&mut self, name: String, terms: Vec<(usize, f64)>, relation: Relation, rhs: f64) {
        debug_assert!(terms.iter().all(|&(j, _)| j < self.variables.len()));
        self.constraints.push(Constraint { name, terms, relation, rhs });
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    pub fn column(&self, key: VarKey) -> Option<usize> {
        self.var_index.get(&key).copied()
    }

    /// Checks the model's own invariants: referenced columns exist, bounds
    /// are ordered, names are unique.
    pub fn check_well_formed(&self) -> Result<(), String> {
        let mut seen = std::collections::HashSet::new();
        for v in &self.variables {
            if !(v.lower <= v.upper) {
                return Err(format!("variable {} has lower > upper", v.name));
            }
            if !seen.insert(v.name.as_str()) {
                return Err(format!("duplicate name {}", v.name));
            }
        }
        for c in &self.constraints {
            if let Some(&(j, _)) = c.terms.iter().find(|&&(j, _)| j >= self.variables.len()) {
                return Err(format!("row {} references missing column {j}", c.name));
            }
            if !seen.insert(c.name.as_str()) {
                return Err(format!("duplicate name {}", c.name));
            }
        }
        if self.objective.len() != self.variables.len() {
            return Err("objective length differs from variable count".into());
        }
        Ok(())
    }

    /// Largest row or bound violation of `x`, scaled as
    /// `|lhs - rhs| / max(1, |rhs|)`, with the name of the offender.
    pub fn max_violation(&self, x: &[f64]) -> (f64, String) {
        let mut worst = (0.0, String::new());
        for (v, &val) in self.variables.iter().zip(x) {
            let scaled = if val < v.lower {
                (v.lower - val) / v.lower.abs().max(1.0)
            } else if val > v.upper {
                (val - v.upper) / v.upper.abs().max(1.0)
            } else {
                0.0
            };
            if scaled > worst.0 {
                worst = (scaled, v.name.clone());
            }
        }
        for c in &self.constraints {
            let scaled = c.violation(x) / c.rhs.abs().max(1.0);
            if scaled > worst.0 {
                worst = (scaled, c.name.clone());
            }
        }
        worst
    }
}

// ---------------------------------------------------------------------------
// Formulation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuildOptions {
    /// Add `X[i,t] <= Y[t]`.
    pub stop_implies_tour: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self { stop_implies_tour: true }
    }
}

/// Compact generated names: a role letter followed by fixed-width base-36
/// indices, short enough for fixed-form MPS fields.
struct Namer {
    width: usize,
}

impl Namer {
    fn new(n_nodes: usize, nt: usize) -> Self {
        let largest = n_nodes.max(nt + 1);
        let mut width = 1;
        while 36_usize.pow(width as u32) < largest {
            width += 1;
        }
        Self { width }
    }

    fn name(&self, role: char, idx: &[usize]) -> String {
        let mut s = String::with_capacity(1 + idx.len() * self.width);
        s.push(role);
        for &k in idx {
            let mut digits = vec![b'0'; self.width];
            let mut rest = k;
            for d in digits.iter_mut().rev() {
                *d = b"0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ"[rest % 36];
                rest /= 36;
            }
            s.push_str(std::str::from_utf8(&digits).expect("ascii"));
        }
        s
    }
}

pub fn build_model(inst: &Instance, em: &EnergyMatrix, kind: ObjectiveKind) -> Result<MilpModel, ModelError> {
    build_model_with(inst, em, kind, BuildOptions::default())
}

pub fn build_model_with(
    inst: &Instance,
    em: &EnergyMatrix,
    kind: ObjectiveKind,
    opts: BuildOptions,
) -> Result<MilpModel, ModelError> {
    if em.n_nodes() != inst.n_nodes() {
        return Err(ModelError::DimensionMismatch { matrix: em.n_nodes(), instance: inst.n_nodes() });
    }
    let n = inst.n();
    let sink = n + 1;
    let arcs = ArcSet::new(inst.n_nodes());
    let namer = Namer::new(inst.n_nodes(), inst.nt);
    let big_m = max_transport_mass(inst);
    let cap = f64::from(inst.vehicle.cap_boxes);
    let inf = f64::INFINITY;

    let mut model = MilpModel::new(format!("massflow_{kind}"));
    model.layout = Some(Layout { n, nt: inst.nt, kind });

    for t in 1..=inst.nt {
        let add = |model: &mut MilpModel, key: VarKey, name: String, kind: VarKind, lo: f64, hi: f64, cost: f64| {
            let col = model.add_var(name, kind, lo, hi, cost);
            model.var_index.insert(key, col);
        };
        for (i, j) in arcs.iter() {
            // All arcs are charged, depot arcs included.
            let cost = match kind {
                ObjectiveKind::Energy => em.cost(i, j),
                ObjectiveKind::Distance => 0.0,
            };
            add(&mut model, VarKey::Mass { i, j, t }, namer.name('M', &[i, j, t]), VarKind::Continuous, 0.0, inf, cost);
        }
        for s in &inst.stations {
            let i = s.index;
            let hi = f64::from(s.storage_cap.min(inst.vehicle.cap_boxes));
            add(&mut model, VarKey::Delivery { i, t }, namer.name('Z', &[i, t]), VarKind::Integer, 0.0, hi, 0.0);
        }
        for s in &inst.stations {
            let i = s.index;
            add(&mut model, VarKey::Inventory { i, t }, namer.name('I', &[i, t]), VarKind::Continuous, 0.0, inf, 0.0);
        }
        for (i, j) in arcs.iter() {
            let cost = match kind {
                ObjectiveKind::Energy => 0.0,
                ObjectiveKind::Distance => em.dist(i, j),
            };
            add(&mut model, VarKey::Arc { i, j, t }, namer.name('A', &[i, j, t]), VarKind::Binary, 0.0, 1.0, cost);
        }
        for s in &inst.stations {
            let i = s.index;
            add(&mut model, VarKey::Stop { i, t }, namer.name('X', &[i, t]), VarKind::Binary, 0.0, 1.0, 0.0);
        }
        add(&mut model, VarKey::Tour { t }, namer.name('Y', &[t]), VarKind::Binary, 0.0, 1.0, 0.0);
    }

    let col = |model: &MilpModel, key: VarKey| model.var_index[&key];

    for t in 1..=inst.nt {
        let y = col(&model, VarKey::Tour { t });

        // Inventory balance: Z + IL[t-1] - IL[t] = d.
        for s in &inst.stations {
            let i = s.index;
            let mut terms = vec![(col(&model, VarKey::Delivery { i, t }), 1.0)];
            let mut rhs = f64::from(inst.demand(i, t));
            if t == 1 {
                rhs -= f64::from(s.initial_inventory);
            } else {
                terms.push((col(&model, VarKey::Inventory { i, t: t - 1 }), 1.0));
            }
            terms.push((col(&model, VarKey::Inventory { i, t }), -1.0));
            model.add_constraint(namer.name('D', &[i, t]), terms, Relation::Eq, rhs);
        }

        // Vehicle capacity: sum Z <= A Y.
        let mut terms: Vec<_> =
            inst.stations.iter().map(|s| (col(&model, VarKey::Delivery { i: s.index, t }), 1.0)).collect();
        terms.push((y, -cap));
        model.add_constraint(namer.name('V', &[t]), terms, Relation::Le, 0.0);

        // Storage: Z + IL[t-1] <= c.
        for s in &inst.stations {
            let i = s.index;
            let mut terms = vec![(col(&model, VarKey::Delivery { i, t }), 1.0)];
            let mut rhs = f64::from(s.storage_cap);
            if t == 1 {
                rhs -= f64::from(s.initial_inventory);
            } else {
                terms.push((col(&model, VarKey::Inventory { i, t: t - 1 }), 1.0));
            }
            model.add_constraint(namer.name('S', &[i, t]), terms, Relation::Le, rhs);
        }

        // Mass absorbed at a station is its delivered boxes:
        // m_i Z - sum_{j<i} M[j,i] + sum_{j>i} M[i,j] = 0.
        for s in &inst.stations {
            let i = s.index;
            let mut terms = vec![(col(&model, VarKey::Delivery { i, t }), s.box_mass)];
            for j in 0..i {
                terms.push((col(&model, VarKey::Mass { i: j, j: i, t }), -1.0));
            }
            for j in i + 1..=sink {
                terms.push((col(&model, VarKey::Mass { i, j, t }), 1.0));
            }
            model.add_constraint(namer.name('T', &[i, t]), terms, Relation::Eq, 0.0);
        }

        // Only the empty vehicle returns: sum_i M[i,n+1] = m_v Y.
        let mut terms: Vec<_> = (0..sink).map(|i| (col(&model, VarKey::Mass { i, j: sink, t }), 1.0)).collect();
        terms.push((y, -inst.vehicle.mass));
        model.add_constraint(namer.name('R', &[t]), terms, Relation::Eq, 0.0);

        // Deliveries need a stop: Z <= c X.
        for s in &inst.stations {
            let i = s.index;
            let terms = vec![
                (col(&model, VarKey::Delivery { i, t }), 1.0),
                (col(&model, VarKey::Stop { i, t }), -f64::from(s.storage_cap)),
            ];
            model.add_constraint(namer.name('K', &[i, t]), terms, Relation::Le, 0.0);
        }

        // Degree: one arc out of and into every visited node; the depot
        // copies are visited exactly when a tour runs.
        let visit = |model: &MilpModel, node: usize| {
            if node == 0 || node == sink {
                y
            } else {
                col(model, VarKey::Stop { i: node, t })
            }
        };
        for i in 0..sink {
            let mut terms: Vec<_> = (i + 1..=sink).map(|j| (col(&model, VarKey::Arc { i, j, t }), 1.0)).collect();
            terms.push((visit(&model, i), -1.0));
            model.add_constraint(namer.name('O', &[i, t]), terms, Relation::Eq, 0.0);
        }
        for j in 1..=sink {
            let mut terms: Vec<_> = (0..j).map(|i| (col(&model, VarKey::Arc { i, j, t }), 1.0)).collect();
            terms.push((visit(&model, j), -1.0));
            model.add_constraint(namer.name('N', &[j, t]), terms, Relation::Eq, 0.0);
        }

        // Mass only on driven arcs: M <= m_max PHI.
        for (i, j) in arcs.iter() {
            let terms =
                vec![(col(&model, VarKey::Mass { i, j, t }), 1.0), (col(&model, VarKey::Arc { i, j, t }), -big_m)];
            model.add_constraint(namer.name('L', &[i, j, t]), terms, Relation::Le, 0.0);
        }

        if opts.stop_implies_tour {
            for s in &inst.stations {
                let i = s.index;
                let terms = vec![(col(&model, VarKey::Stop { i, t }), 1.0), (y, -1.0)];
                model.add_constraint(namer.name('W', &[i, t]), terms, Relation::Le, 0.0);
            }
        }
    }
    Ok(model)
}

/// Tolerance used when mapping solver output back to a structured solution.
pub const EXTRACT_TOLERANCE: f64 = 1e-6;

/// Maps a full assignment to a [`Solution`], rounding integral columns and
/// recomputing the objective from the assignment.
pub fn extract_solution(model: &MilpModel, assignment: &[f64]) -> Result<Solution, ModelError> {
    let layout = model.layout.ok_or(ModelError::NoLayout)?;
    if assignment.len() != model.n_vars() {
        return Err(ModelError::AssignmentLength { expected: model.n_vars(), found: assignment.len() });
    }
    let mut x = assignment.to_vec();
    for (v, val) in model.variables.iter().zip(x.iter_mut()) {
        if v.kind.is_integral() {
            let r = val.round();
            if (*val - r).abs() > EXTRACT_TOLERANCE {
                return Err(ModelError::IntegralityViolated { var: v.name.clone(), value: *val });
            }
            *val = r;
        }
    }
    let (worst, name) = model.max_violation(&x);
    if worst > EXTRACT_TOLERANCE {
        return Err(ModelError::Infeasible { name, magnitude: worst });
    }

    let mut sol = Solution::zeros(layout.n, layout.nt, layout.kind);
    for (&key, &c) in &model.var_index {
        let v = x[c];
        match key {
            VarKey::Mass { i, j, t } => sol.set_m_flow(i, j, t, v),
            VarKey::Delivery { i, t } => sol.set_z(i, t, v as u32),
            VarKey::Inventory { i, t } => sol.set_il(i, t, v),
            VarKey::Arc { i, j, t } => sol.set_arc(i, j, t, v > 0.5),
            VarKey::Stop { i, t } => sol.set_stop(i, t, v > 0.5),
            VarKey::Tour { t } => sol.set_tour(t, v > 0.5),
        }
    }
    sol.objective_value = model.objective_value(&x);
    Ok(sol)
}

/// Inverse of [`extract_solution`]: lays a structured solution out as a
/// column vector of `model`. No feasibility check is made.
pub fn solution_to_assignment(model: &MilpModel, sol: &Solution) -> Result<Vec<f64>, ModelError> {
    let layout = model.layout.ok_or(ModelError::NoLayout)?;
    if layout.n != sol.n() || layout.nt != sol.nt() {
        return Err(ModelError::DimensionMismatch { matrix: sol.n() + 2, instance: layout.n + 2 });
    }
    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    let mut x = vec![0.0; model.n_vars()];
    for (&key, &c) in &model.var_index {
        x[c] = match key {
            VarKey::Mass { i, j, t } => sol.m_flow(i, j, t),
            VarKey::Delivery { i, t } => f64::from(sol.z(i, t)),
            VarKey::Inventory { i, t } => sol.il(i, t),
            VarKey::Arc { i, j, t } => flag(sol.arc(i, j, t)),
            VarKey::Stop { i, t } => flag(sol.stop(i, t)),
            VarKey::Tour { t } => flag(sol.tour(t)),
        };
    }
    Ok(x)
}
