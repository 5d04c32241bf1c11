//! Brute-force ground truth for tiny instances.
//!
//! Only the delivery quantities are enumerated. With the route order fixed,
//! stops, arcs and mass flows follow from them: a period's tour visits the
//! stations receiving boxes in index order, and each leg carries the empty
//! vehicle plus everything not yet unloaded.

use thiserror::Error;

use crate::energy::EnergyMatrix;
use crate::instance::Instance;
use crate::model::ObjectiveKind;
use crate::solution::Solution;

pub const MAX_STATIONS: usize = 4;
pub const MAX_PERIODS: usize = 3;
pub const MAX_STORAGE: u32 = 4;

/// Boxes delivered per station and period; the only decision.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeliveryPlan {
    n: usize,
    nt: usize,
    /// Station-major: `z[(i - 1) * nt + (t - 1)]`.
    z: Vec<u32>,
}

impl DeliveryPlan {
    pub fn zeros(n: usize, nt: usize) -> Self {
        Self { n, nt, z: vec![0; n * nt] }
    }

    pub fn for_instance(inst: &Instance) -> Self {
        Self::zeros(inst.n(), inst.nt)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn z(&self, i: usize, t: usize) -> u32 {
        self.z[(i - 1) * self.nt + (t - 1)]
    }

    pub fn set_z(&mut self, i: usize, t: usize, v: u32) {
        self.z[(i - 1) * self.nt + (t - 1)] = v;
    }

    /// Values in station-major order, the order ties are broken in.
    pub fn as_slice(&self) -> &[u32] {
        &self.z
    }

    /// Stations receiving boxes in period `t`, ascending.
    pub fn stops(&self, t: usize) -> Vec<usize> {
        (1..=self.n).filter(|&i| self.z(i, t) > 0).collect()
    }

    pub fn tour_count(&self) -> usize {
        (1..=self.nt).filter(|&t| !self.stops(t).is_empty()).count()
    }

    pub fn from_solution(sol: &Solution) -> Self {
        let mut plan = Self::zeros(sol.n(), sol.nt());
        for i in 1..=sol.n() {
            for t in 1..=sol.nt() {
                plan.set_z(i, t, sol.z(i, t));
            }
        }
        plan
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("instance too large for enumeration: {0}")]
    TooLarge(String),
    #[error("plan is {plan_n}x{plan_nt} but the instance has {n} stations and {nt} periods")]
    Shape { plan_n: usize, plan_nt: usize, n: usize, nt: usize },
    #[error("energy matrix covers {matrix} nodes but the instance has {instance}")]
    MatrixShape { matrix: usize, instance: usize },
    #[error("infeasible plan: {0}")]
    InfeasiblePlan(String),
    #[error("no feasible delivery plan exists")]
    NoFeasiblePlan,
}

fn check_shapes(inst: &Instance, em: Option<&EnergyMatrix>, plan: Option<&DeliveryPlan>) -> Result<(), OracleError> {
    if let Some(em) = em {
        if em.n_nodes() != inst.n_nodes() {
            return Err(OracleError::MatrixShape { matrix: em.n_nodes(), instance: inst.n_nodes() });
        }
    }
    if let Some(p) = plan {
        if p.n != inst.n() || p.nt != inst.nt {
            return Err(OracleError::Shape { plan_n: p.n, plan_nt: p.nt, n: inst.n(), nt: inst.nt });
        }
    }
    Ok(())
}

/// Checks vehicle capacity, storage and the inventory recursion.
pub fn check_plan(inst: &Instance, plan: &DeliveryPlan) -> Result<(), OracleError> {
    check_shapes(inst, None, Some(plan))?;
    for t in 1..=inst.nt {
        let load: u32 = (1..=inst.n()).map(|i| plan.z(i, t)).sum();
        if load > inst.vehicle.cap_boxes {
            return Err(OracleError::InfeasiblePlan(format!(
                "period {t} loads {load} boxes, capacity {}",
                inst.vehicle.cap_boxes
            )));
        }
    }
    for s in &inst.stations {
        let mut il = i64::from(s.initial_inventory);
        for t in 1..=inst.nt {
            il += i64::from(plan.z(s.index, t));
            if il > i64::from(s.storage_cap) {
                return Err(OracleError::InfeasiblePlan(format!(
                    "station {} holds {il} boxes in period {t}, capacity {}",
                    s.index, s.storage_cap
                )));
            }
            il -= i64::from(inst.demand(s.index, t));
            if il < 0 {
                return Err(OracleError::InfeasiblePlan(format!("station {} runs short in period {t}", s.index)));
            }
        }
    }
    Ok(())
}

/// Legs of period `t` as `(from, to, kilograms carried)`.
fn period_legs(inst: &Instance, plan: &DeliveryPlan, t: usize) -> Vec<(usize, usize, f64)> {
    let stops = plan.stops(t);
    if stops.is_empty() {
        return vec![];
    }
    let mut load: f64 = stops.iter().map(|&i| inst.station(i).box_mass * f64::from(plan.z(i, t))).sum();
    let mut legs = Vec::with_capacity(stops.len() + 1);
    let mut from = 0;
    for &i in &stops {
        legs.push((from, i, inst.vehicle.mass + load));
        load -= inst.station(i).box_mass * f64::from(plan.z(i, t));
        from = i;
    }
    legs.push((from, inst.n() + 1, inst.vehicle.mass));
    legs
}

fn period_energy(inst: &Instance, em: &EnergyMatrix, plan: &DeliveryPlan, t: usize) -> f64 {
    period_legs(inst, plan, t).into_iter().map(|(u, v, m)| em.cost(u, v) * m).sum()
}

/// Energy (J) of the tours a plan induces.
pub fn plan_energy(inst: &Instance, em: &EnergyMatrix, plan: &DeliveryPlan) -> Result<f64, OracleError> {
    check_shapes(inst, Some(em), Some(plan))?;
    check_plan(inst, plan)?;
    Ok((1..=inst.nt).map(|t| period_energy(inst, em, plan, t)).sum())
}

/// Plan value under either objective; distance is one loop per tour.
pub fn plan_objective(
    inst: &Instance,
    em: &EnergyMatrix,
    plan: &DeliveryPlan,
    kind: ObjectiveKind,
) -> Result<f64, OracleError> {
    match kind {
        ObjectiveKind::Energy => plan_energy(inst, em, plan),
        ObjectiveKind::Distance => {
            check_shapes(inst, Some(em), Some(plan))?;
            check_plan(inst, plan)?;
            Ok(inst.loop_length * plan.tour_count() as f64)
        }
    }
}

/// Every formulation variable induced by a feasible plan.
pub fn plan_to_solution(
    inst: &Instance,
    em: &EnergyMatrix,
    plan: &DeliveryPlan,
    kind: ObjectiveKind,
) -> Result<Solution, OracleError> {
    let objective = plan_objective(inst, em, plan, kind)?;
    let mut sol = induced_solution(inst, plan, kind);
    sol.objective_value = objective;
    Ok(sol)
}

/// Solution induced by a plan of the right shape, feasible or not; the
/// objective is left at 0.
pub(crate) fn induced_solution(inst: &Instance, plan: &DeliveryPlan, kind: ObjectiveKind) -> Solution {
    let mut sol = Solution::zeros(inst.n(), inst.nt, kind);
    for s in &inst.stations {
        let mut il = f64::from(s.initial_inventory);
        for t in 1..=inst.nt {
            let z = plan.z(s.index, t);
            il += f64::from(z) - f64::from(inst.demand(s.index, t));
            sol.set_z(s.index, t, z);
            sol.set_il(s.index, t, il);
            sol.set_stop(s.index, t, z > 0);
        }
    }
    for t in 1..=inst.nt {
        let legs = period_legs(inst, plan, t);
        sol.set_tour(t, !legs.is_empty());
        for (u, v, m) in legs {
            sol.set_arc(u, v, t, true);
            sol.set_m_flow(u, v, t, m);
        }
    }
    sol
}

struct Search<'a> {
    inst: &'a Instance,
    em: &'a EnergyMatrix,
    kind: ObjectiveKind,
    plan: DeliveryPlan,
    il: Vec<u32>,
    best: Option<(f64, DeliveryPlan)>,
}

impl Search<'_> {
    fn period_cost(&self, t: usize) -> f64 {
        match self.kind {
            ObjectiveKind::Energy => period_energy(self.inst, self.em, &self.plan, t),
            ObjectiveKind::Distance => {
                if self.plan.stops(t).is_empty() {
                    0.0
                } else {
                    self.inst.loop_length
                }
            }
        }
    }

    /// Assigns station `i` of period `t`; `used` boxes are already loaded.
    fn visit(&mut self, t: usize, i: usize, used: u32, cost: f64) {
        let n = self.inst.n();
        if i > n {
            let cost = cost + self.period_cost(t);
            if t == self.inst.nt {
                self.offer(cost);
            } else {
                self.visit(t + 1, 1, 0, cost);
            }
            return;
        }
        let s = self.inst.station(i);
        let il = self.il[i - 1];
        let d = s.demand[t - 1];
        let lo = d.saturating_sub(il);
        let hi = (s.storage_cap.saturating_sub(il)).min(self.inst.vehicle.cap_boxes - used);
        for z in lo..=hi {
            self.plan.set_z(i, t, z);
            self.il[i - 1] = il + z - d;
            self.visit(t, i + 1, used + z, cost);
        }
        self.plan.set_z(i, t, 0);
        self.il[i - 1] = il;
    }

    fn offer(&mut self, cost: f64) {
        let better = match &self.best {
            None => true,
            Some((b, p)) => {
                let tol = 1e-9 * b.abs().max(1.0);
                cost < b - tol || (cost <= b + tol && self.plan.as_slice() < p.as_slice())
            }
        };
        if better {
            self.best = Some((cost, self.plan.clone()));
        }
    }
}

/// Exhaustive optimum over all delivery plans. Ties go to the
/// lexicographically smallest station-major plan.
pub fn enumerate_optimal(
    inst: &Instance,
    em: &EnergyMatrix,
    kind: ObjectiveKind,
) -> Result<(DeliveryPlan, f64), OracleError> {
    check_shapes(inst, Some(em), None)?;
    if inst.n() > MAX_STATIONS {
        return Err(OracleError::TooLarge(format!("{} stations, limit {MAX_STATIONS}", inst.n())));
    }
    if inst.nt > MAX_PERIODS {
        return Err(OracleError::TooLarge(format!("{} periods, limit {MAX_PERIODS}", inst.nt)));
    }
    if let Some(s) = inst.stations.iter().find(|s| s.storage_cap > MAX_STORAGE) {
        return Err(OracleError::TooLarge(format!(
            "station {} storage {}, limit {MAX_STORAGE}",
            s.index, s.storage_cap
        )));
    }
    if inst.stations.iter().any(|s| s.initial_inventory > s.storage_cap || s.demand.len() != inst.nt) {
        return Err(OracleError::NoFeasiblePlan);
    }
    let mut search = Search {
        inst,
        em,
        kind,
        plan: DeliveryPlan::for_instance(inst),
        il: inst.stations.iter().map(|s| s.initial_inventory).collect(),
        best: None,
    };
    search.visit(1, 1, 0, 0.0);
    search.best.map(|(v, p)| (p, v)).ok_or(OracleError::NoFeasiblePlan)
}
