//! Independent feasibility check of a [`Solution`] and objective recomputation.
//!
//! Works from the raw solution values and the instance only; nothing is read
//! from a built model.

use std::fmt;

use thiserror::Error;

use crate::energy::EnergyMatrix;
use crate::instance::{max_transport_mass, Instance};
use crate::model::ObjectiveKind;
use crate::solution::Solution;

/// Relative tolerance; each check compares `|lhs - rhs|` against
/// `TOLERANCE * max(1, |rhs|)`.
pub const TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    DemandFlow,
    VehicleCap,
    StorageCap,
    TourCoupling,
    VehicleMassReturn,
    StopLink,
    ArcDegree,
    MassArcLink,
    Domain,
}

impl Family {
    pub const ALL: [Family; 9] = [
        Family::DemandFlow,
        Family::VehicleCap,
        Family::StorageCap,
        Family::TourCoupling,
        Family::VehicleMassReturn,
        Family::StopLink,
        Family::ArcDegree,
        Family::MassArcLink,
        Family::Domain,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::DemandFlow => "demand_flow",
            Family::VehicleCap => "vehicle_cap",
            Family::StorageCap => "storage_cap",
            Family::TourCoupling => "tour_coupling",
            Family::VehicleMassReturn => "vehicle_mass_return",
            Family::StopLink => "stop_link",
            Family::ArcDegree => "arc_degree",
            Family::MassArcLink => "mass_arc_link",
            Family::Domain => "domain",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub family: Family,
    /// Station or route node.
    pub i: Option<usize>,
    /// Arc head.
    pub j: Option<usize>,
    pub t: Option<usize>,
    /// `|lhs - rhs|`, unscaled.
    pub magnitude: f64,
}

impl Violation {
    /// `family  i  j  t  magnitude`, `-` for unused indices.
    pub fn tsv(&self) -> String {
        let idx = |v: Option<usize>| v.map_or_else(|| "-".to_string(), |k| k.to_string());
        format!(
            "{}\t{}\t{}\t{}\t{}",
            self.family,
            idx(self.i),
            idx(self.j),
            idx(self.t),
            crate::fmt::format_sig(self.magnitude, 9)
        )
    }
}

pub const TSV_HEADER: &str = "family\ti\tj\tt\tmagnitude";

#[derive(Debug, Error, PartialEq)]
pub enum ValidateError {
    #[error("solution is {sol_n} stations x {sol_nt} periods, instance is {n} x {nt}")]
    DimensionMismatch { sol_n: usize, sol_nt: usize, n: usize, nt: usize },
}

#[derive(Clone, Copy)]
enum Sense {
    Eq,
    Le,
}

struct Checker {
    out: Vec<Violation>,
}

impl Checker {
    /// Records a violation when `lhs (sense) rhs` fails beyond tolerance.
    fn check(
        &mut self,
        family: Family,
        loc: (Option<usize>, Option<usize>, Option<usize>),
        lhs: f64,
        sense: Sense,
        rhs: f64,
    ) {
        let excess = match sense {
            Sense::Eq => (lhs - rhs).abs(),
            Sense::Le => lhs - rhs,
        };
        if !(excess <= TOLERANCE * rhs.abs().max(1.0)) {
            let magnitude = if excess.is_nan() { f64::INFINITY } else { excess };
            self.out.push(Violation { family, i: loc.0, j: loc.1, t: loc.2, magnitude });
        }
    }
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Every violated constraint, grouped by period then family. The degree
/// conditions of a node (one arc in, one arc out) count as one violation.
pub fn check_feasibility(inst: &Instance, sol: &Solution) -> Result<Vec<Violation>, ValidateError> {
    if sol.n() != inst.n() || sol.nt() != inst.nt {
        return Err(ValidateError::DimensionMismatch { sol_n: sol.n(), sol_nt: sol.nt(), n: inst.n(), nt: inst.nt });
    }
    let n = inst.n();
    let sink = n + 1;
    let big_m = max_transport_mass(inst);
    let arcs = sol.arcs();
    let mut c = Checker { out: Vec::new() };

    for t in 1..=inst.nt {
        let y = flag(sol.tour(t));
        let prev_il = |s: &crate::instance::Station| {
            if t == 1 {
                f64::from(s.initial_inventory)
            } else {
                sol.il(s.index, t - 1)
            }
        };

        for s in &inst.stations {
            let i = s.index;
            let z = f64::from(sol.z(i, t));
            c.check(
                Family::DemandFlow,
                (Some(i), None, Some(t)),
                prev_il(s) + z - sol.il(i, t),
                Sense::Eq,
                f64::from(inst.demand(i, t)),
            );
        }

        let load: f64 = (1..=n).map(|i| f64::from(sol.z(i, t))).sum();
        c.check(Family::VehicleCap, (None, None, Some(t)), load, Sense::Le, f64::from(inst.vehicle.cap_boxes) * y);

        for s in &inst.stations {
            let z = f64::from(sol.z(s.index, t));
            c.check(
                Family::StorageCap,
                (Some(s.index), None, Some(t)),
                prev_il(s) + z,
                Sense::Le,
                f64::from(s.storage_cap),
            );
        }

        for s in &inst.stations {
            let i = s.index;
            let inflow: f64 = (0..i).map(|h| sol.m_flow(h, i, t)).sum();
            let outflow: f64 = (i + 1..=sink).map(|j| sol.m_flow(i, j, t)).sum();
            c.check(
                Family::TourCoupling,
                (Some(i), None, Some(t)),
                inflow - outflow,
                Sense::Eq,
                s.box_mass * f64::from(sol.z(i, t)),
            );
        }

        let returned: f64 = (0..sink).map(|i| sol.m_flow(i, sink, t)).sum();
        c.check(Family::VehicleMassReturn, (None, None, Some(t)), returned, Sense::Eq, inst.vehicle.mass * y);

        for s in &inst.stations {
            let i = s.index;
            let x = flag(sol.stop(i, t));
            c.check(
                Family::StopLink,
                (Some(i), None, Some(t)),
                f64::from(sol.z(i, t)),
                Sense::Le,
                f64::from(s.storage_cap) * x,
            );
            c.check(Family::StopLink, (Some(i), None, Some(t)), x, Sense::Le, y);
        }

        for node in 0..=sink {
            let visited = if node == 0 || node == sink { y } else { flag(sol.stop(node, t)) };
            let out_deg: f64 = (node + 1..=sink).map(|j| flag(sol.arc(node, j, t))).sum();
            let in_deg: f64 = (0..node).map(|h| flag(sol.arc(h, node, t))).sum();
            let mut excess = 0.0_f64;
            if node != sink {
                excess = excess.max((out_deg - visited).abs());
            }
            if node != 0 {
                excess = excess.max((in_deg - visited).abs());
            }
            c.check(Family::ArcDegree, (Some(node), None, Some(t)), excess, Sense::Eq, 0.0);
        }

        for (i, j) in arcs.iter() {
            c.check(
                Family::MassArcLink,
                (Some(i), Some(j), Some(t)),
                sol.m_flow(i, j, t),
                Sense::Le,
                big_m * flag(sol.arc(i, j, t)),
            );
        }

        for (i, j) in arcs.iter() {
            c.check(Family::Domain, (Some(i), Some(j), Some(t)), -sol.m_flow(i, j, t), Sense::Le, 0.0);
        }
        for i in 1..=n {
            c.check(Family::Domain, (Some(i), None, Some(t)), -sol.il(i, t), Sense::Le, 0.0);
        }
    }
    Ok(c.out)
}

/// Objective straight from the solution values: `sum C_ij M_ij^t` for energy
/// or `sum D_ij PHI_ij^t` for distance.
pub fn recompute_objective(inst: &Instance, em: &EnergyMatrix, sol: &Solution, kind: ObjectiveKind) -> f64 {
    debug_assert_eq!(em.n_nodes(), inst.n_nodes());
    let arcs = sol.arcs();
    let mut total = 0.0;
    for t in 1..=sol.nt() {
        for (i, j) in arcs.iter() {
            total += match kind {
                ObjectiveKind::Energy => em.cost(i, j) * sol.m_flow(i, j, t),
                ObjectiveKind::Distance => em.dist(i, j) * flag(sol.arc(i, j, t)),
            };
        }
    }
    total
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::energy::energy_matrix;
    use crate::instance::tests::one_station;
    use crate::instance::{generate_instance, PhysicsParams, Station, VehicleParams};
    use crate::oracle::{check_plan, enumerate_optimal, induced_solution, plan_to_solution, DeliveryPlan};

    /// Three stations, one period, a tour stopping at stations 1 and 2.
    pub(crate) fn probe_instance() -> Instance {
        let st = |index, position, box_mass, il0, d| Station {
            index,
            position,
            box_mass,
            storage_cap: 3,
            initial_inventory: il0,
            demand: vec![d],
        };
        Instance {
            stations: vec![st(1, 20.0, 10.0, 1, 2), st(2, 50.0, 20.0, 0, 1), st(3, 80.0, 10.0, 0, 0)],
            vehicle: VehicleParams { mass: 100.0, cap_boxes: 4, v_max: 5.0, accel: 1.0, decel: 1.0 },
            physics: PhysicsParams::default(),
            nt: 1,
            loop_length: 100.0,
        }
    }

    pub(crate) fn probe_base(inst: &Instance) -> Solution {
        let mut plan = DeliveryPlan::for_instance(inst);
        plan.set_z(1, 1, 1);
        plan.set_z(2, 1, 1);
        let em = energy_matrix(inst);
        plan_to_solution(inst, &em, &plan, ObjectiveKind::Energy).unwrap()
    }

    fn families(v: &[Violation]) -> Vec<Family> {
        v.iter().map(|x| x.family).collect()
    }

    #[test]
    fn probe_base_is_feasible() {
        let inst = probe_instance();
        let sol = probe_base(&inst);
        assert_eq!(sol.m_flow(0, 1, 1), 130.0);
        assert_eq!(sol.m_flow(1, 2, 1), 120.0);
        assert_eq!(sol.m_flow(2, 4, 1), 100.0);
        assert_eq!(check_feasibility(&inst, &sol).unwrap(), vec![]);
    }

    #[test]
    fn storage_fault_is_reported_with_location() {
        let inst = one_station(3, 0, vec![2], 4);
        let em = energy_matrix(&inst);
        let (plan, _) = enumerate_optimal(&inst, &em, ObjectiveKind::Energy).unwrap();
        let mut sol = plan_to_solution(&inst, &em, &plan, ObjectiveKind::Energy).unwrap();
        sol.set_z(1, 1, 4);
        sol.set_il(1, 1, 2.0);
        sol.set_m_flow(0, 1, 1, 140.0);
        let v = check_feasibility(&inst, &sol).unwrap();
        let storage: Vec<_> = v.iter().filter(|x| x.family == Family::StorageCap).collect();
        assert_eq!(storage.len(), 1);
        assert_eq!((storage[0].i, storage[0].j, storage[0].t, storage[0].magnitude), (Some(1), None, Some(1), 1.0));
        assert_eq!(storage[0].tsv(), "storage_cap\t1\t-\t1\t1");
    }

    #[test]
    fn mass_without_arc_is_reported() {
        let inst = probe_instance();
        let mut sol = probe_base(&inst);
        sol.set_arc(1, 2, 1, false);
        sol.set_arc(1, 3, 1, true);
        let fam = families(&check_feasibility(&inst, &sol).unwrap());
        assert!(fam.contains(&Family::MassArcLink));
    }

    #[test]
    fn dimension_mismatch() {
        let inst = probe_instance();
        let sol = Solution::zeros(2, 1, ObjectiveKind::Energy);
        assert!(check_feasibility(&inst, &sol).is_err());
    }

    #[test]
    fn recompute_matches_single_station_optimum() {
        let inst = one_station(3, 0, vec![2], 4);
        let em = energy_matrix(&inst);
        let zero = Solution::zeros(1, 1, ObjectiveKind::Energy);
        assert_eq!(recompute_objective(&inst, &em, &zero, ObjectiveKind::Energy), 0.0);
        let (plan, _) = enumerate_optimal(&inst, &em, ObjectiveKind::Energy).unwrap();
        let sol = plan_to_solution(&inst, &em, &plan, ObjectiveKind::Energy).unwrap();
        assert!((recompute_objective(&inst, &em, &sol, ObjectiveKind::Energy) - 3559.325).abs() < 1e-9);
        assert_eq!(recompute_objective(&inst, &em, &sol, ObjectiveKind::Distance), 100.0);
    }

    #[test]
    fn empty_exactly_when_plan_is_feasible() {
        for seed in 0..20 {
            let inst = generate_instance(seed, 2, 2, "uniform").unwrap();
            let a = inst.vehicle.cap_boxes;
            let cells = inst.n() * inst.nt;
            for code in 0..(a + 2).pow(cells as u32) {
                let mut plan = DeliveryPlan::for_instance(&inst);
                let mut rest = code;
                for i in 1..=inst.n() {
                    for t in 1..=inst.nt {
                        plan.set_z(i, t, rest % (a + 2));
                        rest /= a + 2;
                    }
                }
                let sol = induced_solution(&inst, &plan, ObjectiveKind::Energy);
                let clean = check_feasibility(&inst, &sol).unwrap().is_empty();
                assert_eq!(clean, check_plan(&inst, &plan).is_ok(), "seed {seed} plan {:?}", plan.as_slice());
            }
        }
    }
}
