//! Structured supplying strategy and its sparse JSON file form.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arcs::ArcSet;
use crate::model::ObjectiveKind;

/// Values of every formulation variable. Stations are `1..=n`, route nodes
/// `0..=n+1`, periods `1..=nt`.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    n: usize,
    nt: usize,
    pub kind: ObjectiveKind,
    z: Vec<u32>,
    il: Vec<f64>,
    m_flow: Vec<f64>,
    stop: Vec<bool>,
    arc: Vec<bool>,
    tour: Vec<bool>,
    /// Objective in J (energy) or m (distance).
    pub objective_value: f64,
}

/// One period's tour as driven.
#[derive(Debug, Clone, PartialEq)]
pub struct TourSummary {
    pub period: usize,
    /// Stations stopped at, in route order.
    pub stops: Vec<usize>,
    pub boxes: u32,
    /// Kilograms leaving the supermarket.
    pub departure_mass: f64,
}

impl Solution {
    pub fn zeros(n: usize, nt: usize, kind: ObjectiveKind) -> Self {
        let arcs = ArcSet::new(n + 2).len();
        Self {
            n,
            nt,
            kind,
            z: vec![0; n * nt],
            il: vec![0.0; n * nt],
            m_flow: vec![0.0; arcs * nt],
            stop: vec![false; n * nt],
            arc: vec![false; arcs * nt],
            tour: vec![false; nt],
            objective_value: 0.0,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn arcs(&self) -> ArcSet {
        ArcSet::new(self.n + 2)
    }

    fn station_slot(&self, i: usize, t: usize) -> usize {
        assert!((1..=self.n).contains(&i) && (1..=self.nt).contains(&t), "station {i}, period {t} out of range");
        (t - 1) * self.n + (i - 1)
    }

    fn arc_slot(&self, i: usize, j: usize, t: usize) -> usize {
        assert!((1..=self.nt).contains(&t), "period {t} out of range");
        let arcs = self.arcs();
        (t - 1) * arcs.len() + arcs.index(i, j)
    }

    pub fn z(&self, i: usize, t: usize) -> u32 {
        self.z[self.station_slot(i, t)]
    }

    pub fn set_z(&mut self, i: usize, t: usize, v: u32) {
        let k = self.station_slot(i, t);
        self.z[k] = v;
    }

    pub fn il(&self, i: usize, t: usize) -> f64 {
        self.il[self.station_slot(i, t)]
    }

    pub fn set_il(&mut self, i: usize, t: usize, v: f64) {
        let k = self.station_slot(i, t);
        self.il[k] = v;
    }

    pub fn m_flow(&self, i: usize, j: usize, t: usize) -> f64 {
        self.m_flow[self.arc_slot(i, j, t)]
    }

    pub fn set_m_flow(&mut self, i: usize, j: usize, t: usize, v: f64) {
        let k = self.arc_slot(i, j, t);
        self.m_flow[k] = v;
    }

    pub fn stop(&self, i: usize, t: usize) -> bool {
        self.stop[self.station_slot(i, t)]
    }

    pub fn set_stop(&mut self, i: usize, t: usize, v: bool) {
        let k = self.station_slot(i, t);
        self.stop[k] = v;
    }

    pub fn arc(&self, i: usize, j: usize, t: usize) -> bool {
        self.arc[self.arc_slot(i, j, t)]
    }

    pub fn set_arc(&mut self, i: usize, j: usize, t: usize, v: bool) {
        let k = self.arc_slot(i, j, t);
        self.arc[k] = v;
    }

    pub fn tour(&self, t: usize) -> bool {
        self.tour[t - 1]
    }

    pub fn set_tour(&mut self, t: usize, v: bool) {
        self.tour[t - 1] = v;
    }

    pub fn tour_count(&self) -> usize {
        self.tour.iter().filter(|&&y| y).count()
    }

    /// Summaries of the periods in which a tour runs.
    pub fn tours(&self) -> Vec<TourSummary> {
        (1..=self.nt)
            .filter(|&t| self.tour(t))
            .map(|t| TourSummary {
                period: t,
                stops: (1..=self.n).filter(|&i| self.stop(i, t)).collect(),
                boxes: (1..=self.n).map(|i| self.z(i, t)).sum(),
                departure_mass: (1..=self.n + 1).map(|j| self.m_flow(0, j, t)).sum(),
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        let mut file = SolutionFile {
            n: self.n,
            nt: self.nt,
            objective: self.kind,
            objective_value: self.objective_value,
            z: vec![],
            il: vec![],
            m_flow: vec![],
            stop: vec![],
            arc: vec![],
            tour: vec![],
        };
        for t in 1..=self.nt {
            for i in 1..=self.n {
                if self.z(i, t) != 0 {
                    file.z.push(StationEntry { i, t, value: f64::from(self.z(i, t)) });
                }
                if self.il(i, t) != 0.0 {
                    file.il.push(StationEntry { i, t, value: self.il(i, t) });
                }
                if self.stop(i, t) {
                    file.stop.push(StationFlag { i, t });
                }
            }
            for (i, j) in self.arcs().iter() {
                if self.m_flow(i, j, t) != 0.0 {
                    file.m_flow.push(ArcEntry { i, j, t, value: self.m_flow(i, j, t) });
                }
                if self.arc(i, j, t) {
                    file.arc.push(ArcFlag { i, j, t });
                }
            }
            if self.tour(t) {
                file.tour.push(PeriodFlag { t });
            }
        }
        let mut out = serde_json::to_string_pretty(&file).expect("solution records always serialize");
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> Result<Self, SolutionFileError> {
        let file: SolutionFile = serde_json::from_str(text)?;
        let mut sol = Solution::zeros(file.n, file.nt, file.objective);
        sol.objective_value = file.objective_value;
        let n = file.n;
        let nt = file.nt;
        let station_ok = |i: usize, t: usize| (1..=n).contains(&i) && (1..=nt).contains(&t);
        let arc_ok = |i: usize, j: usize, t: usize| i < j && j <= n + 1 && (1..=nt).contains(&t);
        for e in file.z {
            if !station_ok(e.i, e.t) {
                return Err(SolutionFileError::Index(format!("z[{}][{}]", e.i, e.t)));
            }
            if e.value < 0.0 || e.value.fract() != 0.0 {
                return Err(SolutionFileError::NotIntegral(format!("z[{}][{}] = {}", e.i, e.t, e.value)));
            }
            sol.set_z(e.i, e.t, e.value as u32);
        }
        for e in file.il {
            if !station_ok(e.i, e.t) {
                return Err(SolutionFileError::Index(format!("il[{}][{}]", e.i, e.t)));
            }
            sol.set_il(e.i, e.t, e.value);
        }
        for e in file.m_flow {
            if !arc_ok(e.i, e.j, e.t) {
                return Err(SolutionFileError::Index(format!("m_flow[{}][{}][{}]", e.i, e.j, e.t)));
            }
            sol.set_m_flow(e.i, e.j, e.t, e.value);
        }
        for e in file.stop {
            if !station_ok(e.i, e.t) {
                return Err(SolutionFileError::Index(format!("stop[{}][{}]", e.i, e.t)));
            }
            sol.set_stop(e.i, e.t, true);
        }
        for e in file.arc {
            if !arc_ok(e.i, e.j, e.t) {
                return Err(SolutionFileError::Index(format!("arc[{}][{}][{}]", e.i, e.j, e.t)));
            }
            sol.set_arc(e.i, e.j, e.t, true);
        }
        for e in file.tour {
            if !(1..=nt).contains(&e.t) {
                return Err(SolutionFileError::Index(format!("tour[{}]", e.t)));
            }
            sol.set_tour(e.t, true);
        }
        Ok(sol)
    }
}

#[derive(Debug, Error)]
pub enum SolutionFileError {
    #[error("malformed solution file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("index out of range: {0}")]
    Index(String),
    #[error("box count must be a non-negative integer: {0}")]
    NotIntegral(String),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolutionFile {
    n: usize,
    nt: usize,
    objective: ObjectiveKind,
    objective_value: f64,
    #[serde(default)]
    z: Vec<StationEntry>,
    #[serde(default)]
    il: Vec<StationEntry>,
    #[serde(default)]
    m_flow: Vec<ArcEntry>,
    #[serde(default)]
    stop: Vec<StationFlag>,
    #[serde(default)]
    arc: Vec<ArcFlag>,
    #[serde(default)]
    tour: Vec<PeriodFlag>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StationEntry {
    i: usize,
    t: usize,
    value: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArcEntry {
    i: usize,
    j: usize,
    t: usize,
    value: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StationFlag {
    i: usize,
    t: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArcFlag {
    i: usize,
    j: usize,
    t: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PeriodFlag {
    t: usize,
}
