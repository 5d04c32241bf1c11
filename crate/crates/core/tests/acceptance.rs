//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use massflow::energy::{energy_matrix, full_speed_distance, leg_energy_per_mass, numeric_leg_energy};
use massflow::instance::{
    generate_instance, parse_instance, render_instance, Instance, PhysicsParams, Station, VehicleParams,
};
use massflow::model::{build_model, ObjectiveKind};
use massflow::oracle::{check_plan, enumerate_optimal, plan_energy, plan_objective, plan_to_solution, DeliveryPlan};
use massflow::pipeline::{compare_objectives, solve_instance, Method};
use massflow::solution::Solution;
use massflow::solver::{export_lp, export_mps, import_lp, import_mps, models_match, SolveLimits, SolveStatus};
use massflow::validate::{check_feasibility, Family};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BUNDLED: [&str; 3] = ["single_station", "counterexample_distance_vs_energy", "periodic_demo"];

fn bundled_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../instances").join(format!("{name}.json"))
}

fn bundled(name: &str) -> Instance {
    let text = std::fs::read_to_string(bundled_path(name)).expect("bundled instance readable");
    parse_instance(&text).expect("bundled instance parses")
}

fn default_vehicle() -> VehicleParams {
    VehicleParams { mass: 100.0, cap_boxes: 4, v_max: 5.0, accel: 1.0, decel: 1.0 }
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// Solutions returned by the solver in criteria 3-5, re-checked in 6.
type Collected = Vec<(String, Instance, Solution)>;

fn criterion_1() -> Result<String, String> {
    let veh = default_vehicle();
    let phys = PhysicsParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let d: f64 = rng.random_range(0.0..=500.0);
        let closed = leg_energy_per_mass(d, &veh, &phys).map_err(|e| e.to_string())?;
        let numeric = numeric_leg_energy(d, &veh, &phys, 1e-4).map_err(|e| e.to_string())?;
        let err = rel_err(numeric, closed);
        worst = worst.max(err);
        if err > 1e-3 {
            return Err(format!("d = {d}: closed {closed}, numeric {numeric}, relative error {err:e}"));
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    if elapsed >= 5.0 {
        return Err(format!("took {elapsed:.2} s"));
    }
    Ok(format!("100 distances, worst relative error {worst:.2e}, {elapsed:.2} s"))
}

fn criterion_2() -> Result<String, String> {
    let veh = default_vehicle();
    let phys = PhysicsParams::default();
    let expected = veh.v_max * veh.v_max / 2.0 * (1.0 - phys.g * phys.c_r / veh.decel);
    if rel_err(expected, 11.27375) > 1e-12 {
        return Err(format!("closed-form penalty {expected} differs from 11.27375"));
    }
    let full = full_speed_distance(&veh);
    let c = |d: f64| leg_energy_per_mass(d, &veh, &phys).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0_f64;
    for _ in 0..200 {
        let a: f64 = rng.random_range(full..=400.0);
        let b: f64 = rng.random_range(full..=400.0);
        let penalty = c(a) + c(b) - c(a + b);
        let err = (penalty - expected).abs() / expected;
        worst = worst.max(err);
        if err > 1e-9 {
            return Err(format!("legs {a} + {b}: penalty {penalty}, relative error {err:e}"));
        }
    }
    Ok(format!("penalty {expected} J/kg on 200 trapezoidal splits, worst relative error {worst:.1e}"))
}

fn criterion_3(collected: &mut Collected) -> Result<String, String> {
    let start = Instant::now();
    let limits = SolveLimits::default();
    let mut nodes = 0;
    for seed in 0..100u64 {
        let n = 1 + (seed % 3) as usize;
        let nt = 1 + ((seed / 3) % 2) as usize;
        let profile = if seed % 2 == 0 { "uniform" } else { "periodic" };
        let inst = generate_instance(seed, n, nt, profile).map_err(|e| e.to_string())?;
        if inst.stations.iter().any(|s| s.storage_cap > 3) {
            return Err(format!("seed {seed}: storage above 3"));
        }
        let em = energy_matrix(&inst);
        let (_, oracle) =
            enumerate_optimal(&inst, &em, ObjectiveKind::Energy).map_err(|e| format!("seed {seed}: {e}"))?;
        let out = solve_instance(&inst, ObjectiveKind::Energy, Method::BranchAndBound, &limits)
            .map_err(|e| format!("seed {seed}: {e}"))?;
        if out.status != SolveStatus::Optimal {
            return Err(format!("seed {seed}: status {}", out.status));
        }
        nodes += out.stats.as_ref().map_or(0, |s| s.nodes_explored);
        let sol = out.solution.expect("optimal outcome has a solution");
        if rel_err(sol.objective_value, oracle) > 1e-6 {
            return Err(format!("seed {seed}: branch-and-bound {} vs oracle {oracle}", sol.objective_value));
        }
        collected.push((format!("seed {seed}"), inst, sol));
    }
    let elapsed = start.elapsed().as_secs_f64();
    if elapsed >= 60.0 {
        return Err(format!("took {elapsed:.1} s"));
    }
    Ok(format!("100/100 instances match the oracle, {nodes} nodes total, {elapsed:.2} s"))
}

fn criterion_4(collected: &mut Collected) -> Result<String, String> {
    let inst = bundled("single_station");
    let mut values = Vec::new();
    for method in [Method::BranchAndBound, Method::Oracle] {
        let out =
            solve_instance(&inst, ObjectiveKind::Energy, method, &SolveLimits::default()).map_err(|e| e.to_string())?;
        let sol = out.solution.ok_or_else(|| format!("{method}: no solution ({})", out.status))?;
        if rel_err(sol.objective_value, 3559.325) > 1e-9 {
            return Err(format!("{method}: {} J", sol.objective_value));
        }
        values.push(sol.objective_value);
        if method == Method::BranchAndBound {
            collected.push(("single_station".into(), inst.clone(), sol));
        }
    }
    Ok(format!("bb {} J, oracle {} J", values[0], values[1]))
}

fn criterion_5(collected: &mut Collected) -> Result<String, String> {
    let inst = bundled("counterexample_distance_vs_energy");
    let em = energy_matrix(&inst);

    // The distance-optimal set, by exhaustion over plans.
    let a = inst.vehicle.cap_boxes;
    let cells = inst.n() * inst.nt;
    let mut plans = Vec::new();
    for code in 0..(a + 1).pow(cells as u32) {
        let mut plan = DeliveryPlan::for_instance(&inst);
        let mut rest = code;
        for i in 1..=inst.n() {
            for t in 1..=inst.nt {
                plan.set_z(i, t, rest % (a + 1));
                rest /= a + 1;
            }
        }
        if check_plan(&inst, &plan).is_ok() {
            plans.push(plan);
        }
    }
    let dist = |p: &DeliveryPlan| plan_objective(&inst, &em, p, ObjectiveKind::Distance).unwrap();
    let best_dist = plans.iter().map(dist).fold(f64::INFINITY, f64::min);
    let (_, e_opt) = enumerate_optimal(&inst, &em, ObjectiveKind::Energy).map_err(|e| e.to_string())?;
    let worse = plans
        .iter()
        .filter(|p| dist(p) == best_dist && plan_energy(&inst, &em, p).unwrap() > e_opt * (1.0 + 1e-9))
        .count();
    if worse == 0 {
        return Err("every distance-optimal plan is also energy-optimal".into());
    }

    let limits = SolveLimits::default();
    let report = compare_objectives(&inst, Method::BranchAndBound, &limits).map_err(|e| e.to_string())?;
    if !(report.energy_of_distance_run > report.energy_of_energy_run && report.ratio >= 1.01) {
        return Err(format!(
            "energy(distance run) {} vs energy(energy run) {}, ratio {}",
            report.energy_of_distance_run, report.energy_of_energy_run, report.ratio
        ));
    }
    for (label, run) in [("energy run", &report.energy_run), ("distance run", &report.distance_run)] {
        let sol = run.solution.clone().ok_or_else(|| format!("{label}: no solution"))?;
        collected.push((format!("counterexample {label}"), inst.clone(), sol));
    }

    // The same verdict through the command line.
    let output = Command::new(env!("CARGO_BIN_EXE_massflow"))
        .args(["compare", "--instance"])
        .arg(bundled_path("counterexample_distance_vs_energy"))
        .env("MASSFLOW_LOG", "quiet")
        .output()
        .map_err(|e| e.to_string())?;
    let stdout = String::from_utf8_lossy(&output.stdout);
    let field = |key: &str| -> Option<f64> {
        stdout.lines().find_map(|l| l.strip_prefix(key).and_then(|v| v.strip_prefix('='))).and_then(|v| v.parse().ok())
    };
    let (Some(e_run), Some(d_run), Some(ratio)) =
        (field("energy_of_energy_run"), field("energy_of_distance_run"), field("ratio"))
    else {
        return Err(format!("compare output lacks result fields:\n{stdout}"));
    };
    if !output.status.success() || !(d_run > e_run && ratio >= 1.01) {
        return Err(format!("compare exit {:?}, ratio {ratio}", output.status.code()));
    }
    Ok(format!("{worse} distance-optimal plans cost more energy; compare: {d_run} J vs {e_run} J, ratio {ratio:.4}"))
}

/// Three stations, one period. The base plan delivers one box each to
/// stations 1 and 2.
fn probe_instance() -> Instance {
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
        vehicle: default_vehicle(),
        physics: PhysicsParams::default(),
        nt: 1,
        loop_length: 100.0,
    }
}

fn probes(base: &Solution) -> Vec<(Family, Solution)> {
    let edit = |f: &dyn Fn(&mut Solution)| {
        let mut s = base.clone();
        f(&mut s);
        s
    };
    vec![
        (Family::DemandFlow, edit(&|s| s.set_il(1, 1, 1.0))),
        (
            Family::VehicleCap,
            edit(&|s| {
                s.set_z(1, 1, 2);
                s.set_z(2, 1, 3);
                s.set_il(1, 1, 1.0);
                s.set_il(2, 1, 2.0);
                s.set_m_flow(0, 1, 1, 180.0);
                s.set_m_flow(1, 2, 1, 160.0);
            }),
        ),
        (
            Family::StorageCap,
            edit(&|s| {
                s.set_z(1, 1, 3);
                s.set_il(1, 1, 2.0);
                s.set_m_flow(0, 1, 1, 150.0);
            }),
        ),
        (Family::TourCoupling, edit(&|s| s.set_m_flow(0, 1, 1, 131.0))),
        (
            Family::VehicleMassReturn,
            edit(&|s| {
                s.set_m_flow(0, 1, 1, 131.0);
                s.set_m_flow(1, 2, 1, 121.0);
                s.set_m_flow(2, 4, 1, 101.0);
            }),
        ),
        (Family::StopLink, edit(&|s| s.set_stop(2, 1, false))),
        (Family::ArcDegree, edit(&|s| s.set_stop(3, 1, true))),
        (
            Family::MassArcLink,
            edit(&|s| {
                s.set_m_flow(0, 1, 1, 129.0);
                s.set_m_flow(0, 2, 1, 1.0);
                s.set_m_flow(1, 2, 1, 119.0);
            }),
        ),
        (
            Family::Domain,
            edit(&|s| {
                s.set_m_flow(0, 2, 1, -1.0);
                s.set_m_flow(0, 1, 1, 131.0);
                s.set_m_flow(1, 2, 1, 121.0);
            }),
        ),
    ]
}

fn criterion_6(collected: &Collected) -> Result<String, String> {
    for (label, inst, sol) in collected {
        let v = check_feasibility(inst, sol).map_err(|e| format!("{label}: {e}"))?;
        if !v.is_empty() {
            return Err(format!("{label}: {} violations, first {}", v.len(), v[0].tsv()));
        }
    }

    let inst = probe_instance();
    let em = energy_matrix(&inst);
    let mut plan = DeliveryPlan::for_instance(&inst);
    plan.set_z(1, 1, 1);
    plan.set_z(2, 1, 1);
    let base = plan_to_solution(&inst, &em, &plan, ObjectiveKind::Energy).map_err(|e| e.to_string())?;
    if !check_feasibility(&inst, &base).map_err(|e| e.to_string())?.is_empty() {
        return Err("probe base solution is not feasible".into());
    }
    let mut notes = Vec::new();
    for (family, sol) in probes(&base) {
        let v = check_feasibility(&inst, &sol).map_err(|e| e.to_string())?;
        let own = v.iter().filter(|x| x.family == family).count();
        if own != 1 {
            return Err(format!("{family} probe: {own} violations of its family"));
        }
        let others: Vec<Family> = v.iter().map(|x| x.family).filter(|f| *f != family).collect();
        // A delivery without a stop leaves that station's route arcs without
        // a visit, so the stop probe necessarily also breaks the degree rows.
        let allowed: &[Family] = if family == Family::StopLink { &[Family::ArcDegree] } else { &[] };
        if others != allowed {
            return Err(format!("{family} probe: unexpected co-violations {others:?}"));
        }
        if !others.is_empty() {
            notes.push(format!(
                "{family} also trips {}",
                others.iter().map(|f| f.as_str()).collect::<Vec<_>>().join(",")
            ));
        }
    }
    Ok(format!(
        "{} returned solutions clean; 9/9 probes trip exactly one violation of their family ({})",
        collected.len(),
        notes.join("; ")
    ))
}

fn criterion_7() -> Result<String, String> {
    let mut checked = 0;
    for name in BUNDLED {
        let inst = bundled(name);
        let again = parse_instance(&render_instance(&inst)).map_err(|e| format!("{name}: {e}"))?;
        if again != inst {
            return Err(format!("{name}: instance JSON round trip differs"));
        }
        let em = energy_matrix(&inst);
        for kind in [ObjectiveKind::Energy, ObjectiveKind::Distance] {
            let model = build_model(&inst, &em, kind).map_err(|e| e.to_string())?;

            let mps = export_mps(&model).map_err(|e| format!("{name}: {e}"))?;
            let back = import_mps(&mps).map_err(|e| format!("{name}: {e}"))?;
            // MPS fields hold 12 significant digits: equal after rounding to
            // the field, and exact on a second trip.
            let field = |a: f64, b: f64| massflow::fmt::format_fit(a, 12, 12).parse::<f64>() == Ok(b);
            models_match(&model, &back, field).map_err(|e| format!("{name} {kind} MPS: {e}"))?;
            let back2 = import_mps(&export_mps(&back).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
            models_match(&back, &back2, |a, b| a == b).map_err(|e| format!("{name} {kind} MPS second trip: {e}"))?;

            let lp = export_lp(&model);
            let back = import_lp(&lp).map_err(|e| format!("{name}: {e}"))?;
            models_match(&model, &back, |a, b| a == b).map_err(|e| format!("{name} {kind} LP: {e}"))?;
            checked += 1;
        }
    }
    Ok(format!("{} instances, {checked} models through MPS and LP", BUNDLED.len()))
}

fn report(number: usize, result: std::thread::Result<Result<String, String>>, failed: &mut usize) {
    let (verdict, detail) = match result {
        Ok(Ok(detail)) => ("PASS", detail),
        Ok(Err(detail)) => ("FAIL", detail),
        Err(panic) => {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            ("FAIL", format!("panicked: {msg}"))
        }
    };
    if verdict == "FAIL" {
        *failed += 1;
    }
    println!("acceptance {number}: {verdict} - {detail}");
}

fn main() {
    let mut failed = 0;
    let mut collected: Collected = Vec::new();
    report(1, catch_unwind(criterion_1), &mut failed);
    report(2, catch_unwind(criterion_2), &mut failed);
    report(3, catch_unwind(AssertUnwindSafe(|| criterion_3(&mut collected))), &mut failed);
    report(4, catch_unwind(AssertUnwindSafe(|| criterion_4(&mut collected))), &mut failed);
    report(5, catch_unwind(AssertUnwindSafe(|| criterion_5(&mut collected))), &mut failed);
    report(6, catch_unwind(AssertUnwindSafe(|| criterion_6(&collected))), &mut failed);
    report(7, catch_unwind(criterion_7), &mut failed);
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
