//! Problem instances: line layout, demands, storage, vehicle and physics.
//!
//! Node numbering follows the route: `0` is the supermarket at departure,
//! stations are `1..=n` in route order and `n + 1` is the supermarket on return.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_GRAVITY: f64 = 9.81;
pub const DEFAULT_ROLLING_COEFFICIENT: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicsParams {
    /// Gravitational acceleration (m/s²).
    pub g: f64,
    /// Rolling resistance coefficient (dimensionless).
    pub c_r: f64,
}

impl PhysicsParams {
    /// Rolling resistance per unit mass (N/kg).
    pub fn rolling_accel(&self) -> f64 {
        self.g * self.c_r
    }
}

impl Default for PhysicsParams {
    fn default() -> Self {
        Self { g: DEFAULT_GRAVITY, c_r: DEFAULT_ROLLING_COEFFICIENT }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleParams {
    /// Empty vehicle mass (kg).
    pub mass: f64,
    /// Boxes carried per tour.
    pub cap_boxes: u32,
    /// Maximum speed (m/s).
    pub v_max: f64,
    /// Acceleration magnitude (m/s²).
    pub accel: f64,
    /// Deceleration magnitude (m/s²).
    pub decel: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Station {
    /// Route index, `1..=n`.
    pub index: usize,
    /// Distance from the supermarket along the route (m).
    pub position: f64,
    /// Mass of one box (kg). Each station receives a single box type.
    pub box_mass: f64,
    /// Storage capacity in boxes.
    pub storage_cap: u32,
    /// Boxes on hand before period 1.
    pub initial_inventory: u32,
    /// Boxes consumed in each period, length `nt`.
    pub demand: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub stations: Vec<Station>,
    pub vehicle: VehicleParams,
    pub physics: PhysicsParams,
    /// Number of delivery periods.
    pub nt: usize,
    /// Length of the full route, supermarket back to supermarket (m).
    pub loop_length: f64,
}

impl Instance {
    /// Number of stations `n`.
    pub fn n(&self) -> usize {
        self.stations.len()
    }

    /// Number of route nodes including both depot copies (`n + 2`).
    pub fn n_nodes(&self) -> usize {
        self.stations.len() + 2
    }

    /// Station at route node `i` (`1..=n`).
    pub fn station(&self, i: usize) -> &Station {
        &self.stations[i - 1]
    }

    /// Position of route node `i`; the departure depot sits at 0 and the
    /// return depot at `loop_length`.
    pub fn node_position(&self, i: usize) -> f64 {
        if i == 0 {
            0.0
        } else if i == self.n() + 1 {
            self.loop_length
        } else {
            self.station(i).position
        }
    }

    /// Demand of station `i` in period `t` (both 1-based).
    pub fn demand(&self, i: usize, t: usize) -> u32 {
        self.station(i).demand[t - 1]
    }
}

/// Upper bound on the mass moving along any arc: the empty vehicle plus a
/// full load of the heaviest box type.
pub fn max_transport_mass(inst: &Instance) -> f64 {
    let heaviest = inst.stations.iter().map(|s| s.box_mass).fold(0.0_f64, f64::max);
    inst.vehicle.mass + f64::from(inst.vehicle.cap_boxes) * heaviest
}

// ---------------------------------------------------------------------------
// File format
// ---------------------------------------------------------------------------

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("invalid instance: {0}")]
    Schema(String),
    #[error("demand length mismatch at station {station}: expected {expected} periods, found {found}")]
    DemandLength { station: usize, expected: usize, found: usize },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StationRecord {
    position_m: f64,
    box_mass_kg: f64,
    storage_cap: u32,
    #[serde(default)]
    initial_inventory: u32,
    demand: Vec<u32>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VehicleRecord {
    mass_kg: f64,
    cap_boxes: u32,
    v_max_mps: f64,
    accel_mps2: f64,
    decel_mps2: f64,
}

fn default_g() -> f64 {
    DEFAULT_GRAVITY
}

fn default_c_r() -> f64 {
    DEFAULT_ROLLING_COEFFICIENT
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PhysicsRecord {
    #[serde(default = "default_g")]
    g: f64,
    #[serde(default = "default_c_r")]
    c_r: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceRecord {
    stations: Vec<StationRecord>,
    vehicle: VehicleRecord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    physics: Option<PhysicsRecord>,
    nt: usize,
    loop_length_m: f64,
}

/// Parses an instance from its JSON text form.
///
/// Missing `physics` (or missing fields inside it) fall back to
/// `g = 9.81` and `c_r = 0.01`; a missing `initial_inventory` is 0.
pub fn parse_instance(text: &str) -> Result<Instance, ParseError> {
    let record: InstanceRecord = serde_json::from_str(text).map_err(|e| {
        use serde_json::error::Category;
        match e.classify() {
            Category::Syntax | Category::Eof | Category::Io => {
                ParseError::Syntax { line: e.line(), column: e.column(), message: e.to_string() }
            }
            Category::Data => ParseError::Schema(e.to_string()),
        }
    })?;

    let nt = record.nt;
    let mut stations = Vec::with_capacity(record.stations.len());
    for (k, s) in record.stations.into_iter().enumerate() {
        if s.demand.len() != nt {
            return Err(ParseError::DemandLength { station: k + 1, expected: nt, found: s.demand.len() });
        }
        stations.push(Station {
            index: k + 1,
            position: s.position_m,
            box_mass: s.box_mass_kg,
            storage_cap: s.storage_cap,
            initial_inventory: s.initial_inventory,
            demand: s.demand,
        });
    }
    let physics = record.physics.map(|p| PhysicsParams { g: p.g, c_r: p.c_r }).unwrap_or_default();
    let v = record.vehicle;
    Ok(Instance {
        stations,
        vehicle: VehicleParams {
            mass: v.mass_kg,
            cap_boxes: v.cap_boxes,
            v_max: v.v_max_mps,
            accel: v.accel_mps2,
            decel: v.decel_mps2,
        },
        physics,
        nt,
        loop_length: record.loop_length_m,
    })
}

/// Renders an instance as pretty-printed JSON. The physics block is always
/// written so the file is self-contained.
pub fn render_instance(inst: &Instance) -> String {
    let record = InstanceRecord {
        stations: inst
            .stations
            .iter()
            .map(|s| StationRecord {
                position_m: s.position,
                box_mass_kg: s.box_mass,
                storage_cap: s.storage_cap,
                initial_inventory: s.initial_inventory,
                demand: s.demand.clone(),
            })
            .collect(),
        vehicle: VehicleRecord {
            mass_kg: inst.vehicle.mass,
            cap_boxes: inst.vehicle.cap_boxes,
            v_max_mps: inst.vehicle.v_max,
            accel_mps2: inst.vehicle.accel,
            decel_mps2: inst.vehicle.decel,
        },
        physics: Some(PhysicsRecord { g: inst.physics.g, c_r: inst.physics.c_r }),
        nt: inst.nt,
        loop_length_m: inst.loop_length,
    };
    let mut out = serde_json::to_string_pretty(&record).expect("instance records always serialize");
    out.push('\n');
    out
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub enum InstanceViolation {
    NoStations,
    NoPeriods,
    NonFinite {
        field: String,
    },
    BadPhysics {
        field: &'static str,
        value: f64,
    },
    BadVehicle {
        field: &'static str,
        value: f64,
    },
    /// Braking must dominate rolling resistance or stops would be free.
    DecelTooWeak {
        decel: f64,
        rolling: f64,
    },
    IndexMismatch {
        station: usize,
        index: usize,
    },
    PositionNotIncreasing {
        station: usize,
    },
    LoopTooShort {
        loop_length: f64,
        last_position: f64,
    },
    NonPositiveBoxMass {
        station: usize,
    },
    InventoryExceedsStorage {
        station: usize,
    },
    DemandLength {
        station: usize,
        expected: usize,
        found: usize,
    },
    DemandExceedsStorage {
        station: usize,
        period: usize,
    },
    CapacityInfeasible {
        period: usize,
    },
}

impl InstanceViolation {
    /// False for violations that only mean no delivery plan exists; the
    /// instance is still well formed.
    pub fn is_structural(&self) -> bool {
        !matches!(self, InstanceViolation::DemandExceedsStorage { .. } | InstanceViolation::CapacityInfeasible { .. })
    }
}

impl fmt::Display for InstanceViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use InstanceViolation::*;
        match self {
            NoStations => write!(f, "instance has no stations"),
            NoPeriods => write!(f, "instance has no periods"),
            NonFinite { field } => write!(f, "non-finite value in {field}"),
            BadPhysics { field, value } => write!(f, "physics parameter {field} out of range: {value}"),
            BadVehicle { field, value } => write!(f, "vehicle parameter {field} must be positive: {value}"),
            DecelTooWeak { decel, rolling } => {
                write!(f, "deceleration {decel} must exceed rolling resistance g*c_r = {rolling}")
            }
            IndexMismatch { station, index } => {
                write!(f, "station {station} carries index {index}")
            }
            PositionNotIncreasing { station } => {
                write!(f, "station {station}: positions must be strictly increasing from the depot")
            }
            LoopTooShort { loop_length, last_position } => {
                write!(f, "loop length {loop_length} must exceed last station position {last_position}")
            }
            NonPositiveBoxMass { station } => write!(f, "station {station}: box mass must be positive"),
            InventoryExceedsStorage { station } => {
                write!(f, "station {station}: inventory exceeds storage")
            }
            DemandLength { station, expected, found } => {
                write!(f, "station {station}: demand length mismatch (expected {expected}, found {found})")
            }
            DemandExceedsStorage { station, period } => {
                write!(f, "station {station}: demand at period {period} exceeds storage capacity")
            }
            CapacityInfeasible { period } => write!(f, "capacity infeasible at period {period}"),
        }
    }
}

/// Returns every violated structural rule plus any delivery infeasibility.
///
/// The feasibility part is exact: each box a station must receive is a unit
/// job with a release period (first period it fits in storage) and a deadline
/// (last period before the station runs dry). Earliest-deadline-first over the
/// per-tour capacity decides whether a schedule exists.
pub fn validate_instance(inst: &Instance) -> Vec<InstanceViolation> {
    use InstanceViolation::*;
    let mut out = Vec::new();

    if inst.stations.is_empty() {
        out.push(NoStations);
    }
    if inst.nt == 0 {
        out.push(NoPeriods);
    }

    let p = &inst.physics;
    let v = &inst.vehicle;
    for (field, value) in [
        ("physics.g", p.g),
        ("physics.c_r", p.c_r),
        ("vehicle.mass", v.mass),
        ("vehicle.v_max", v.v_max),
        ("vehicle.accel", v.accel),
        ("vehicle.decel", v.decel),
        ("loop_length", inst.loop_length),
    ] {
        if !value.is_finite() {
            out.push(NonFinite { field: field.to_string() });
        }
    }
    if !(p.g > 0.0) {
        out.push(BadPhysics { field: "g", value: p.g });
    }
    if !(p.c_r > 0.0 && p.c_r < 1.0) {
        out.push(BadPhysics { field: "c_r", value: p.c_r });
    }
    for (field, value) in [
        ("mass", v.mass),
        ("cap_boxes", f64::from(v.cap_boxes)),
        ("v_max", v.v_max),
        ("accel", v.accel),
        ("decel", v.decel),
    ] {
        if !(value > 0.0) {
            out.push(BadVehicle { field, value });
        }
    }
    if v.decel.is_finite() && p.rolling_accel().is_finite() && !(v.decel > p.rolling_accel()) {
        out.push(DecelTooWeak { decel: v.decel, rolling: p.rolling_accel() });
    }

    let mut prev = 0.0;
    for (k, s) in inst.stations.iter().enumerate() {
        let station = k + 1;
        if s.index != station {
            out.push(IndexMismatch { station, index: s.index });
        }
        for (field, value) in [("position", s.position), ("box_mass", s.box_mass)] {
            if !value.is_finite() {
                out.push(NonFinite { field: format!("station {station} {field}") });
            }
        }
        if !(s.position > prev) {
            out.push(PositionNotIncreasing { station });
        }
        prev = s.position;
        if !(s.box_mass > 0.0) {
            out.push(NonPositiveBoxMass { station });
        }
        if s.initial_inventory > s.storage_cap {
            out.push(InventoryExceedsStorage { station });
        }
        if s.demand.len() != inst.nt {
            out.push(DemandLength { station, expected: inst.nt, found: s.demand.len() });
        }
    }
    if let Some(last) = inst.stations.last() {
        if !(inst.loop_length > last.position) {
            out.push(LoopTooShort { loop_length: inst.loop_length, last_position: last.position });
        }
    }

    // Delivery feasibility only makes sense on structurally sound demand data.
    let demand_ok = inst.stations.iter().all(|s| s.demand.len() == inst.nt && s.initial_inventory <= s.storage_cap);
    if demand_ok && inst.nt > 0 {
        let mut per_station_ok = true;
        for s in &inst.stations {
            for (t, &d) in s.demand.iter().enumerate() {
                if d > s.storage_cap {
                    out.push(DemandExceedsStorage { station: s.index, period: t + 1 });
                    per_station_ok = false;
                }
            }
        }
        if per_station_ok {
            for period in capacity_infeasible_periods(inst) {
                out.push(CapacityInfeasible { period });
            }
        }
    }
    out
}

/// Periods in which some required box cannot be delivered in time, assuming
/// `d <= c` holds everywhere.
fn capacity_infeasible_periods(inst: &Instance) -> Vec<usize> {
    let nt = inst.nt;
    // (release, deadline) per required box.
    let mut jobs: Vec<(usize, usize)> = Vec::new();
    for s in &inst.stations {
        let il0 = i64::from(s.initial_inventory);
        let cap = i64::from(s.storage_cap);
        let mut cum = vec![0_i64; nt + 1];
        for t in 1..=nt {
            cum[t] = cum[t - 1] + i64::from(s.demand[t - 1]);
        }
        // Cumulative deliveries Z(t) must satisfy lower(t) <= Z(t) <= upper(t).
        let lower = |t: usize| (cum[t] - il0).max(0);
        let upper = |t: usize| cap - il0 + cum[t - 1];
        let required = lower(nt);
        for k in 1..=required {
            let release = (1..=nt).find(|&t| upper(t) >= k).unwrap_or(nt + 1);
            let deadline = (1..=nt).find(|&t| lower(t) >= k).expect("k <= lower(nt)");
            jobs.push((release, deadline));
        }
    }
    jobs.sort_unstable();

    let cap = inst.vehicle.cap_boxes as usize;
    let mut failed = Vec::new();
    let mut pending: BinaryHeap<Reverse<usize>> = BinaryHeap::new();
    let mut next = 0;
    for t in 1..=nt {
        while next < jobs.len() && jobs[next].0 <= t {
            pending.push(Reverse(jobs[next].1));
            next += 1;
        }
        for _ in 0..cap {
            if pending.pop().is_none() {
                break;
            }
        }
        let mut missed = false;
        while let Some(&Reverse(deadline)) = pending.peek() {
            if deadline > t {
                break;
            }
            pending.pop();
            missed = true;
        }
        if missed {
            failed.push(t);
        }
    }
    failed
}

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DemandProfile {
    Uniform,
    Periodic,
}

impl std::str::FromStr for DemandProfile {
    type Err = GenerateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(Self::Uniform),
            "periodic" => Ok(Self::Periodic),
            other => Err(GenerateError::UnknownProfile(other.to_string())),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GenerateError {
    #[error("unknown demand profile '{0}' (expected uniform or periodic)")]
    UnknownProfile(String),
    #[error("need at least one station and one period")]
    EmptyDimensions,
}

/// Generates a valid random instance; a pure function of its arguments.
///
/// Storage capacities are drawn from `1..=3` so generated instances stay
/// within reach of the exhaustive oracle. The tow-train capacity starts
/// small and is raised until the instance is deliverable.
pub fn generate_instance(seed: u64, n: usize, nt: usize, profile: &str) -> Result<Instance, GenerateError> {
    let profile: DemandProfile = profile.parse()?;
    if n == 0 || nt == 0 {
        return Err(GenerateError::EmptyDimensions);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut position = 0.0;
    let mut stations = Vec::with_capacity(n);
    for k in 0..n {
        position += f64::from(rng.random_range(10_u32..=60));
        let storage_cap: u32 = rng.random_range(1..=3);
        let box_mass = f64::from(rng.random_range(1_u32..=6) * 5);
        let initial_inventory = rng.random_range(0..=storage_cap);
        let demand = match profile {
            DemandProfile::Uniform => (0..nt).map(|_| rng.random_range(0..=storage_cap)).collect(),
            DemandProfile::Periodic => {
                let cycle = rng.random_range(1..=nt.min(3));
                let base: Vec<u32> = (0..cycle).map(|_| rng.random_range(0..=storage_cap)).collect();
                (0..nt).map(|t| base[t % cycle]).collect()
            }
        };
        stations.push(Station { index: k + 1, position, box_mass, storage_cap, initial_inventory, demand });
    }
    let loop_length = position + f64::from(rng.random_range(10_u32..=60));
    let total_cap: u32 = stations.iter().map(|s| s.storage_cap).sum();
    let start_cap = rng.random_range(1..=total_cap);

    let mut inst = Instance {
        stations,
        vehicle: VehicleParams { mass: 100.0, cap_boxes: start_cap, v_max: 5.0, accel: 1.0, decel: 1.0 },
        physics: PhysicsParams::default(),
        nt,
        loop_length,
    };
    // Capacity equal to total storage always admits just-in-time delivery.
    while !validate_instance(&inst).is_empty() && inst.vehicle.cap_boxes < total_cap {
        inst.vehicle.cap_boxes += 1;
    }
    debug_assert!(validate_instance(&inst).is_empty());
    Ok(inst)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn one_station(storage_cap: u32, initial_inventory: u32, demand: Vec<u32>, cap_boxes: u32) -> Instance {
        let nt = demand.len();
        Instance {
            stations: vec![Station {
                index: 1,
                position: 50.0,
                box_mass: 10.0,
                storage_cap,
                initial_inventory,
                demand,
            }],
            vehicle: VehicleParams { mass: 100.0, cap_boxes, v_max: 5.0, accel: 1.0, decel: 1.0 },
            physics: PhysicsParams::default(),
            nt,
            loop_length: 100.0,
        }
    }

    const MINIMAL: &str = r#"{
        "stations": [
            {"position_m": 50, "box_mass_kg": 10, "storage_cap": 3, "demand": [2]}
        ],
        "vehicle": {"mass_kg": 100, "cap_boxes": 4, "v_max_mps": 5, "accel_mps2": 1, "decel_mps2": 1},
        "nt": 1,
        "loop_length_m": 100
    }"#;

    #[test]
    fn parses_minimal_file_with_defaults() {
        let inst = parse_instance(MINIMAL).unwrap();
        assert_eq!(inst.n(), 1);
        assert_eq!(inst.nt, 1);
        assert_eq!(inst.station(1).demand, vec![2]);
        assert_eq!(inst.station(1).initial_inventory, 0);
        assert_eq!(inst.physics, PhysicsParams { g: 9.81, c_r: 0.01 });
        assert!(validate_instance(&inst).is_empty());
    }

    #[test]
    fn demand_length_mismatch_is_rejected() {
        let text = MINIMAL.replace("\"nt\": 1", "\"nt\": 3").replace("[2]", "[2, 1]");
        let err = parse_instance(&text).unwrap_err();
        assert!(matches!(err, ParseError::DemandLength { station: 1, expected: 3, found: 2 }));
        assert!(err.to_string().contains("demand length mismatch"));
    }

    #[test]
    fn syntax_error_reports_position() {
        let err = parse_instance("{\n  \"stations\": [,\n}").unwrap_err();
        match err {
            ParseError::Syntax { line, column, .. } => {
                assert_eq!(line, 2);
                assert!(column > 0);
            }
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_and_missing_keys_are_rejected() {
        let unknown = MINIMAL.replace("\"nt\": 1", "\"nt\": 1, \"speed\": 3");
        assert!(matches!(parse_instance(&unknown), Err(ParseError::Schema(_))));
        let missing = MINIMAL.replace(",\n        \"loop_length_m\": 100", "");
        let err = parse_instance(&missing).unwrap_err();
        assert!(err.to_string().contains("loop_length_m"), "{err}");
        let no_vehicle_field = MINIMAL.replace("\"v_max_mps\": 5, ", "");
        let err = parse_instance(&no_vehicle_field).unwrap_err();
        assert!(err.to_string().contains("v_max_mps"), "{err}");
    }

    #[test]
    fn partial_physics_block_uses_defaults() {
        let text = MINIMAL.replace("\"nt\": 1", "\"physics\": {\"c_r\": 0.02}, \"nt\": 1");
        let inst = parse_instance(&text).unwrap();
        assert_eq!(inst.physics.g, 9.81);
        assert_eq!(inst.physics.c_r, 0.02);
    }

    #[test]
    fn render_parse_round_trip() {
        let inst = generate_instance(7, 4, 3, "periodic").unwrap();
        assert_eq!(parse_instance(&render_instance(&inst)).unwrap(), inst);
    }

    #[test]
    fn inventory_above_storage_is_flagged() {
        let inst = one_station(3, 5, vec![0], 4);
        let v = validate_instance(&inst);
        assert!(v.contains(&InstanceViolation::InventoryExceedsStorage { station: 1 }));
        assert!(v.iter().any(|x| x.to_string().contains("inventory exceeds storage")));
    }

    #[test]
    fn demand_above_storage_is_flagged() {
        // Holds at most one box but consumes two in a single period.
        let inst = one_station(1, 0, vec![2], 10);
        let v = validate_instance(&inst);
        assert_eq!(v, vec![InstanceViolation::DemandExceedsStorage { station: 1, period: 1 }]);
    }

    #[test]
    fn capacity_shortfall_names_the_period() {
        // Two stations each need 2 boxes in period 1, one box per tour.
        let mut inst = one_station(2, 0, vec![2], 1);
        let mut second = inst.stations[0].clone();
        second.index = 2;
        second.position = 70.0;
        inst.stations.push(second);
        let v = validate_instance(&inst);
        assert_eq!(v, vec![InstanceViolation::CapacityInfeasible { period: 1 }]);
        assert_eq!(v[0].to_string(), "capacity infeasible at period 1");

        // Demand spread over time can be pre-delivered.
        let mut spread = one_station(3, 0, vec![1, 1, 1], 1);
        assert!(validate_instance(&spread).is_empty());
        spread.stations[0].demand = vec![0, 0, 3];
        assert!(validate_instance(&spread).is_empty());
        spread.stations[0].storage_cap = 2;
        spread.stations[0].demand = vec![0, 0, 2];
        assert!(validate_instance(&spread).is_empty());
        spread.stations[0].demand = vec![2, 0, 2];
        assert_eq!(validate_instance(&spread), vec![InstanceViolation::CapacityInfeasible { period: 1 }]);
    }

    #[test]
    fn structural_violations() {
        let mut inst = one_station(3, 0, vec![1], 2);
        inst.loop_length = 40.0;
        inst.vehicle.decel = 0.05;
        inst.physics.c_r = 1.5;
        let v = validate_instance(&inst);
        assert!(v.iter().any(|x| matches!(x, InstanceViolation::LoopTooShort { .. })));
        assert!(v.iter().any(|x| matches!(x, InstanceViolation::DecelTooWeak { .. })));
        assert!(v.iter().any(|x| matches!(x, InstanceViolation::BadPhysics { field: "c_r", .. })));
    }

    #[test]
    fn max_transport_mass_examples() {
        let mut inst = one_station(3, 0, vec![1], 4);
        let mut s2 = inst.stations[0].clone();
        s2.index = 2;
        s2.position = 70.0;
        s2.box_mass = 20.0;
        inst.stations.push(s2);
        assert_eq!(max_transport_mass(&inst), 180.0);
        inst.vehicle.cap_boxes = 0;
        assert_eq!(max_transport_mass(&inst), 100.0);
        let single = one_station(3, 0, vec![1], 1);
        assert_eq!(max_transport_mass(&single), 110.0);
    }

    #[test]
    fn generation_is_deterministic() {
        let a = render_instance(&generate_instance(1, 3, 2, "uniform").unwrap());
        let b = render_instance(&generate_instance(1, 3, 2, "uniform").unwrap());
        assert_eq!(a, b);
        let c = generate_instance(2, 3, 2, "uniform").unwrap();
        let a = generate_instance(1, 3, 2, "uniform").unwrap();
        let demands = |i: &Instance| i.stations.iter().map(|s| s.demand.clone()).collect::<Vec<_>>();
        assert_ne!(demands(&a), demands(&c));
    }

    #[test]
    fn periodic_profile_repeats() {
        for seed in 0..50 {
            let inst = generate_instance(seed, 3, 6, "periodic").unwrap();
            for s in &inst.stations {
                let cycle = (1..=3).find(|&c| (0..6).all(|t| s.demand[t] == s.demand[t % c])).unwrap();
                assert!(cycle <= 3);
            }
        }
    }

    #[test]
    fn unknown_profile_is_an_error() {
        assert_eq!(generate_instance(1, 2, 2, "bursty").unwrap_err(), GenerateError::UnknownProfile("bursty".into()));
    }

    #[test]
    fn generated_instances_validate() {
        for seed in 0..1000 {
            let n = 1 + (seed as usize % 5);
            let nt = 1 + (seed as usize / 5 % 4);
            let profile = if seed % 2 == 0 { "uniform" } else { "periodic" };
            let inst = generate_instance(seed, n, nt, profile).unwrap();
            assert!(validate_instance(&inst).is_empty(), "seed {seed}: {:?}", validate_instance(&inst));
        }
    }
}
