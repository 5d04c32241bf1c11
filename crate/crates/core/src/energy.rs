//! Per-unit-mass energy of a leg between two stops.
//!
//! A leg accelerates at a constant rate, cruises at `v_max` if there is room,
//! then brakes at a constant rate. Power drawn is `m (a(t) + g c_r) v(t)`
//! while accelerating or cruising; braking draws nothing and recovers
//! nothing. Integrating over the profile gives, per kilogram,
//!
//! ```text
//! E(d) = (a_acc + g c_r) x_acc + g c_r x_cruise
//! ```
//!
//! where `x_acc`, `x_cruise` are the distances covered in each phase.

use std::fmt::Write as _;

use thiserror::Error;

use crate::arcs::ArcSet;
use crate::fmt::format_sig;
use crate::instance::{Instance, PhysicsParams, VehicleParams};

#[derive(Debug, Error, PartialEq)]
pub enum EnergyError {
    #[error("leg distance must be non-negative and finite, got {0}")]
    BadDistance(f64),
    #[error("integration step must be positive, got {0}")]
    BadStep(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionProfile {
    pub distance: f64,
    pub accel_dist: f64,
    pub cruise_dist: f64,
    pub decel_dist: f64,
    pub peak_speed: f64,
}

impl MotionProfile {
    /// True when the leg reaches `v_max` (possibly with zero cruise length).
    pub fn is_trapezoidal(&self, veh: &VehicleParams) -> bool {
        self.peak_speed >= veh.v_max
    }

    fn durations(&self, veh: &VehicleParams) -> (f64, f64, f64) {
        let t_acc = self.peak_speed / veh.accel;
        let t_cruise = if self.cruise_dist > 0.0 { self.cruise_dist / self.peak_speed } else { 0.0 };
        let t_dec = self.peak_speed / veh.decel;
        (t_acc, t_cruise, t_dec)
    }
}

/// Shortest distance over which the vehicle can reach `v_max` and stop again.
pub fn full_speed_distance(veh: &VehicleParams) -> f64 {
    veh.v_max * veh.v_max / 2.0 * (1.0 / veh.accel + 1.0 / veh.decel)
}

pub fn leg_profile(d: f64, veh: &VehicleParams) -> Result<MotionProfile, EnergyError> {
    if !(d >= 0.0) || !d.is_finite() {
        return Err(EnergyError::BadDistance(d));
    }
    let v = veh.v_max;
    if d >= full_speed_distance(veh) {
        let accel_dist = v * v / (2.0 * veh.accel);
        let decel_dist = v * v / (2.0 * veh.decel);
        Ok(MotionProfile {
            distance: d,
            accel_dist,
            cruise_dist: (d - accel_dist - decel_dist).max(0.0),
            decel_dist,
            peak_speed: v,
        })
    } else {
        let peak = (2.0 * veh.accel * veh.decel * d / (veh.accel + veh.decel)).sqrt();
        let accel_dist = peak * peak / (2.0 * veh.accel);
        Ok(MotionProfile { distance: d, accel_dist, cruise_dist: 0.0, decel_dist: d - accel_dist, peak_speed: peak })
    }
}

/// Closed-form energy per kilogram of moving mass for a leg of length `d` (J/kg).
pub fn leg_energy_per_mass(d: f64, veh: &VehicleParams, phys: &PhysicsParams) -> Result<f64, EnergyError> {
    let p = leg_profile(d, veh)?;
    let rolling = phys.rolling_accel();
    Ok((veh.accel + rolling) * p.accel_dist + rolling * p.cruise_dist)
}

/// Time-stepped trapezoidal-rule evaluation of the power integral, with the
/// integrand clamped at zero while braking. The grid is uniform in time and
/// does not align with phase changes.
pub fn numeric_leg_energy(d: f64, veh: &VehicleParams, phys: &PhysicsParams, dt: f64) -> Result<f64, EnergyError> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(EnergyError::BadStep(dt));
    }
    let p = leg_profile(d, veh)?;
    if d == 0.0 {
        return Ok(0.0);
    }
    let (t_acc, t_cruise, t_dec) = p.durations(veh);
    let t_brake = t_acc + t_cruise;
    let t_end = t_brake + t_dec;
    let rolling = phys.rolling_accel();

    let power = |t: f64| -> f64 {
        let (accel, speed) = if t < t_acc {
            (veh.accel, veh.accel * t)
        } else if t < t_brake {
            (0.0, p.peak_speed)
        } else {
            (-veh.decel, (p.peak_speed - veh.decel * (t - t_brake)).max(0.0))
        };
        (accel + rolling).max(0.0) * speed
    };

    let steps = (t_end / dt).ceil() as u64;
    let mut total = 0.0;
    let mut t0 = 0.0;
    let mut f0 = power(0.0);
    for k in 1..=steps {
        let t1 = (k as f64 * dt).min(t_end);
        let f1 = power(t1);
        total += 0.5 * (f0 + f1) * (t1 - t0);
        t0 = t1;
        f0 = f1;
    }
    Ok(total)
}

/// Arc distances and per-kilogram energy costs over route nodes `0..=n+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyMatrix {
    arcs: ArcSet,
    cost: Vec<f64>,
    dist: Vec<f64>,
}

impl EnergyMatrix {
    pub fn n_nodes(&self) -> usize {
        self.arcs.n_nodes()
    }

    pub fn arcs(&self) -> ArcSet {
        self.arcs
    }

    /// Energy to move one kilogram from `i` straight to `j` (J/kg).
    pub fn cost(&self, i: usize, j: usize) -> f64 {
        self.cost[self.arcs.index(i, j)]
    }

    /// Route distance from `i` to `j` (m).
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[self.arcs.index(i, j)]
    }

    /// CSV with header `i,j,dist_m,cost_j_per_kg`, 9 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,dist_m,cost_j_per_kg\n");
        for (i, j) in self.arcs.iter() {
            let _ = writeln!(out, "{i},{j},{},{}", format_sig(self.dist(i, j), 9), format_sig(self.cost(i, j), 9));
        }
        out
    }
}

pub fn energy_matrix(inst: &Instance) -> EnergyMatrix {
    let arcs = ArcSet::new(inst.n_nodes());
    let mut cost = vec![0.0; arcs.len()];
    let mut dist = vec![0.0; arcs.len()];
    for (i, j) in arcs.iter() {
        let d = inst.node_position(j) - inst.node_position(i);
        let k = arcs.index(i, j);
        dist[k] = d;
        // Validated instances have strictly increasing positions.
        cost[k] = leg_energy_per_mass(d.max(0.0), &inst.vehicle, &inst.physics).unwrap_or(f64::NAN);
    }
    EnergyMatrix { arcs, cost, dist }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn veh() -> VehicleParams {
        VehicleParams { mass: 100.0, cap_boxes: 4, v_max: 5.0, accel: 1.0, decel: 1.0 }
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn trapezoidal_profile() {
        let p = leg_profile(100.0, &veh()).unwrap();
        assert_eq!((p.accel_dist, p.cruise_dist, p.decel_dist, p.peak_speed), (12.5, 75.0, 12.5, 5.0));
    }

    #[test]
    fn boundary_profile_has_no_cruise() {
        let p = leg_profile(25.0, &veh()).unwrap();
        assert_eq!((p.accel_dist, p.cruise_dist, p.decel_dist, p.peak_speed), (12.5, 0.0, 12.5, 5.0));
        assert!(p.is_trapezoidal(&veh()));
    }

    #[test]
    fn triangular_profile() {
        let p = leg_profile(16.0, &veh()).unwrap();
        assert_eq!(p.peak_speed, 4.0);
        assert_eq!(p.accel_dist, 8.0);
        assert_eq!(p.cruise_dist, 0.0);
        assert!(!p.is_trapezoidal(&veh()));
    }

    #[test]
    fn negative_distance_is_rejected() {
        assert_eq!(leg_profile(-1.0, &veh()), Err(EnergyError::BadDistance(-1.0)));
        assert!(leg_energy_per_mass(f64::NAN, &veh(), &PhysicsParams::default()).is_err());
        assert!(numeric_leg_energy(1.0, &veh(), &PhysicsParams::default(), 0.0).is_err());
    }

    #[test]
    fn closed_form_values() {
        let phys = PhysicsParams::default();
        assert_eq!(leg_energy_per_mass(0.0, &veh(), &phys).unwrap(), 0.0);
        assert!(close(leg_energy_per_mass(100.0, &veh(), &phys).unwrap(), 21.08375, 1e-12));
        assert!(close(leg_energy_per_mass(16.0, &veh(), &phys).unwrap(), 8.7848, 1e-12));
        assert!(close(leg_energy_per_mass(50.0, &veh(), &phys).unwrap(), 16.17875, 1e-12));
    }

    #[test]
    fn numeric_integral_matches_closed_form() {
        let phys = PhysicsParams::default();
        let num = numeric_leg_energy(100.0, &veh(), &phys, 1e-4).unwrap();
        assert!((num - 21.08375).abs() <= 1e-3, "{num}");
        assert_eq!(numeric_leg_energy(0.0, &veh(), &phys, 1e-4).unwrap(), 0.0);
    }

    #[test]
    fn numeric_integral_converges_first_order() {
        // Triangular leg: the switch to braking falls off the time grid.
        let phys = PhysicsParams::default();
        for d in [10.0, 12.3, 37.3, 123.4] {
            let exact = leg_energy_per_mass(d, &veh(), &phys).unwrap();
            let errs: Vec<f64> = [1e-2, 1e-3, 1e-4]
                .iter()
                .map(|&dt| (numeric_leg_energy(d, &veh(), &phys, dt).unwrap() - exact).abs())
                .collect();
            for w in errs.windows(2) {
                assert!(w[1] <= w[0] / 2.0 + 1e-9, "d={d}: {errs:?}");
            }
        }
    }

    #[test]
    fn matrix_for_single_station() {
        let inst = crate::instance::tests::one_station(3, 0, vec![2], 4);
        let em = energy_matrix(&inst);
        assert_eq!(em.n_nodes(), 3);
        assert!(close(em.cost(0, 1), 16.17875, 1e-12));
        assert!(close(em.cost(1, 2), 16.17875, 1e-12));
        assert!(close(em.cost(0, 2), 21.08375, 1e-12));
        let penalty = em.cost(0, 1) + em.cost(1, 2) - em.cost(0, 2);
        assert!(close(penalty, 11.27375, 1e-12));
        assert_eq!(em.dist(0, 2), 100.0);
    }

    #[test]
    fn csv_layout() {
        let inst = crate::instance::tests::one_station(3, 0, vec![2], 4);
        let csv = energy_matrix(&inst).to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "i,j,dist_m,cost_j_per_kg");
        assert_eq!(lines[1], "0,1,50,16.17875");
        assert_eq!(lines[2], "0,2,100,21.08375");
        assert_eq!(lines[3], "1,2,50,16.17875");
    }

    proptest! {
        #[test]
        fn profile_phases_sum_to_distance(d in 0.0..1000.0f64, vmax in 0.5..10.0f64, acc in 0.1..3.0f64, dec in 0.1..3.0f64) {
            let veh = VehicleParams { mass: 1.0, cap_boxes: 1, v_max: vmax, accel: acc, decel: dec };
            let p = leg_profile(d, &veh).unwrap();
            let sum = p.accel_dist + p.cruise_dist + p.decel_dist;
            prop_assert!((sum - d).abs() <= 1e-9 * d.max(1.0));
            prop_assert!(p.peak_speed <= vmax);
            prop_assert!(p.accel_dist >= 0.0 && p.cruise_dist >= 0.0 && p.decel_dist >= 0.0);
            if p.peak_speed < vmax {
                prop_assert_eq!(p.cruise_dist, 0.0);
            }
        }

        #[test]
        fn energy_strictly_increasing(d in 1e-3..1000.0f64, step in 1e-3..50.0f64) {
            let phys = PhysicsParams::default();
            let a = leg_energy_per_mass(d, &veh(), &phys).unwrap();
            let b = leg_energy_per_mass(d + step, &veh(), &phys).unwrap();
            prop_assert!(b > a);
        }

        #[test]
        fn stop_never_saves_energy(x in 0.0..300.0f64, y in 0.0..300.0f64) {
            let phys = PhysicsParams::default();
            let e = |d| leg_energy_per_mass(d, &veh(), &phys).unwrap();
            prop_assert!(e(x + y) <= e(x) + e(y) + 1e-12 * e(x + y).max(1.0));
        }
    }
}
