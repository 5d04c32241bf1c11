//! Bounded-variable primal simplex over a dense basis inverse.
//!
//! Every row `a x (<=|=|>=) b` gets a slack `s` with `a x + s = b`; the slack
//! bounds encode the relation. Nonbasic columns sit at a bound. Phase 1
//! minimizes the sum of bound violations of the basic variables, so any
//! starting basis works, including a parent node's basis after branching
//! has tightened bounds. Pricing is Dantzig's rule, switching to Bland's
//! rule after a run of degenerate pivots.

use thiserror::Error;

use crate::model::{MilpModel, Relation};

#[derive(Debug, Clone, PartialEq)]
pub struct LpOptions {
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub pivot_tol: f64,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub bland_after: usize,
    pub refactor_every: usize,
    pub max_iterations: Option<usize>,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self {
            feasibility_tol: 1e-7,
            optimality_tol: 1e-9,
            pivot_tol: 1e-9,
            bland_after: 1000,
            refactor_every: 50,
            max_iterations: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColStatus {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic with no finite bound, held at zero.
    Free,
}

/// Status of every structural column followed by every row slack.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Basis {
    pub status: Vec<ColStatus>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    /// Structural column values.
    pub x: Vec<f64>,
    pub basis: Basis,
    pub iterations: usize,
}

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
    #[error("simplex iteration limit {0} reached")]
    IterationLimit(usize),
    #[error("bound arrays have {found} entries, model has {expected} columns")]
    BoundLength { expected: usize, found: usize },
}

/// Column-wise copy of a model's constraint matrix, reusable across many
/// solves that differ only in column bounds.
#[derive(Debug, Clone)]
pub struct LpData {
    m: usize,
    n: usize,
    cols: Vec<Vec<(usize, f64)>>,
    rhs: Vec<f64>,
    cost: Vec<f64>,
    slack_lo: Vec<f64>,
    slack_hi: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl LpData {
    pub fn new(model: &MilpModel) -> Self {
        let m = model.n_constraints();
        let n = model.n_vars();
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n + m];
        let mut slack_lo = Vec::with_capacity(m);
        let mut slack_hi = Vec::with_capacity(m);
        for (r, c) in model.constraints.iter().enumerate() {
            for &(j, a) in &c.terms {
                if a != 0.0 {
                    match cols[j].last_mut() {
                        Some(last) if last.0 == r => last.1 += a,
                        _ => cols[j].push((r, a)),
                    }
                }
            }
            cols[n + r].push((r, 1.0));
            let (lo, hi) = match c.relation {
                Relation::Le => (0.0, f64::INFINITY),
                Relation::Ge => (f64::NEG_INFINITY, 0.0),
                Relation::Eq => (0.0, 0.0),
            };
            slack_lo.push(lo);
            slack_hi.push(hi);
        }
        let mut cost = model.objective.clone();
        cost.resize(n + m, 0.0);
        Self {
            m,
            n,
            cols,
            rhs: model.constraints.iter().map(|c| c.rhs).collect(),
            cost,
            slack_lo,
            slack_hi,
            lower: model.variables.iter().map(|v| v.lower).collect(),
            upper: model.variables.iter().map(|v| v.upper).collect(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.m
    }

    pub fn n_cols(&self) -> usize {
        self.n
    }

    /// Solves with the model's own bounds.
    pub fn solve(&self, warm: Option<&Basis>, opts: &LpOptions) -> Result<LpSolution, LpError> {
        self.solve_with_bounds(&self.lower, &self.upper, warm, opts)
    }

    pub fn solve_with_bounds(
        &self,
        lower: &[f64],
        upper: &[f64],
        warm: Option<&Basis>,
        opts: &LpOptions,
    ) -> Result<LpSolution, LpError> {
        for b in [lower, upper] {
            if b.len() != self.n {
                return Err(LpError::BoundLength { expected: self.n, found: b.len() });
            }
        }
        let mut lo = lower.to_vec();
        lo.extend_from_slice(&self.slack_lo);
        let mut hi = upper.to_vec();
        hi.extend_from_slice(&self.slack_hi);

        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                objective: f64::NAN,
                x: vec![f64::NAN; self.n],
                basis: warm.cloned().unwrap_or_else(|| self.slack_basis(&lo, &hi)),
                iterations: 0,
            });
        }
        let mut run = Run::start(self, lo, hi, warm, opts)?;
        let status = run.iterate()?;
        let objective = (0..self.n).map(|j| self.cost[j] * run.x[j]).sum();
        Ok(LpSolution {
            status,
            objective,
            x: run.x[..self.n].to_vec(),
            basis: Basis { status: run.status },
            iterations: run.iterations,
        })
    }

    fn slack_basis(&self, lo: &[f64], hi: &[f64]) -> Basis {
        let mut status: Vec<ColStatus> = (0..self.n).map(|j| nonbasic_status(lo[j], hi[j])).collect();
        status.extend(std::iter::repeat_n(ColStatus::Basic, self.m));
        Basis { status }
    }
}

/// Solves the LP relaxation of `model` (integrality dropped).
pub fn solve_lp(model: &MilpModel, warm: Option<&Basis>, opts: &LpOptions) -> Result<LpSolution, LpError> {
    LpData::new(model).solve(warm, opts)
}

fn nonbasic_status(lo: f64, hi: f64) -> ColStatus {
    if lo.is_finite() {
        ColStatus::AtLower
    } else if hi.is_finite() {
        ColStatus::AtUpper
    } else {
        ColStatus::Free
    }
}

struct Run<'a> {
    data: &'a LpData,
    opts: &'a LpOptions,
    lo: Vec<f64>,
    hi: Vec<f64>,
    status: Vec<ColStatus>,
    x: Vec<f64>,
    /// Basic column in each basis position.
    head: Vec<usize>,
    /// Row-major `m x m` inverse of the basis matrix.
    binv: Vec<f64>,
    iterations: usize,
    since_refactor: usize,
    degenerate_run: usize,
}

#[derive(Clone, Copy)]
struct Breakpoint {
    pos: usize,
    exact: f64,
    rate: f64,
    leave_to: ColStatus,
}

impl<'a> Run<'a> {
    fn start(
        data: &'a LpData,
        lo: Vec<f64>,
        hi: Vec<f64>,
        warm: Option<&Basis>,
        opts: &'a LpOptions,
    ) -> Result<Self, LpError> {
        let total = data.n + data.m;
        let usable_warm = warm.filter(|b| {
            b.status.len() == total && b.status.iter().filter(|&&s| s == ColStatus::Basic).count() == data.m
        });
        let status = match usable_warm {
            Some(b) => b.status.clone(),
            None => data.slack_basis(&lo, &hi).status,
        };
        let mut run = Run {
            data,
            opts,
            lo,
            hi,
            status,
            x: vec![0.0; total],
            head: Vec::new(),
            binv: Vec::new(),
            iterations: 0,
            since_refactor: 0,
            degenerate_run: 0,
        };
        run.place_nonbasics();
        if run.refactor().is_err() {
            if usable_warm.is_none() {
                return Err(LpError::NumericalBreakdown("slack basis is singular".into()));
            }
            run.status = data.slack_basis(&run.lo, &run.hi).status;
            run.place_nonbasics();
            run.refactor()?;
        }
        Ok(run)
    }

    fn m(&self) -> usize {
        self.data.m
    }

    /// Moves every nonbasic column onto a bound it actually has.
    fn place_nonbasics(&mut self) {
        for j in 0..self.status.len() {
            let (lo, hi) = (self.lo[j], self.hi[j]);
            let s = match self.status[j] {
                ColStatus::Basic => continue,
                ColStatus::AtLower if lo.is_finite() => ColStatus::AtLower,
                ColStatus::AtUpper if hi.is_finite() => ColStatus::AtUpper,
                _ => nonbasic_status(lo, hi),
            };
            self.status[j] = s;
            self.x[j] = match s {
                ColStatus::AtLower => lo,
                ColStatus::AtUpper => hi,
                _ => 0.0,
            };
        }
    }

    /// Rebuilds the basis inverse from scratch and recomputes basic values.
    fn refactor(&mut self) -> Result<(), LpError> {
        let m = self.m();
        self.head = (0..self.status.len()).filter(|&j| self.status[j] == ColStatus::Basic).collect();
        if self.head.len() != m {
            return Err(LpError::NumericalBreakdown(format!("basis has {} columns for {m} rows", self.head.len())));
        }
        // Gauss-Jordan on [B | I] with partial pivoting.
        let mut a = vec![0.0; m * m];
        for (k, &j) in self.head.iter().enumerate() {
            for &(r, v) in &self.data.cols[j] {
                a[r * m + k] = v;
            }
        }
        let mut inv = vec![0.0; m * m];
        for r in 0..m {
            inv[r * m + r] = 1.0;
        }
        for c in 0..m {
            let (p, best) =
                (c..m)
                    .map(|r| (r, a[r * m + c].abs()))
                    .fold((c, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
            if best < 1e-11 {
                return Err(LpError::NumericalBreakdown("singular basis".into()));
            }
            if p != c {
                for k in 0..m {
                    a.swap(p * m + k, c * m + k);
                    inv.swap(p * m + k, c * m + k);
                }
            }
            let d = a[c * m + c];
            for k in 0..m {
                a[c * m + k] /= d;
                inv[c * m + k] /= d;
            }
            for r in 0..m {
                if r == c {
                    continue;
                }
                let f = a[r * m + c];
                if f != 0.0 {
                    for k in 0..m {
                        a[r * m + k] -= f * a[c * m + k];
                        inv[r * m + k] -= f * inv[c * m + k];
                    }
                }
            }
        }
        // Row c of `inv` now belongs to basis position c because B's column
        // c was reduced to the unit vector e_c.
        self.binv = inv;
        self.since_refactor = 0;
        self.recompute_basics();
        Ok(())
    }

    fn recompute_basics(&mut self) {
        let m = self.m();
        let mut resid = self.data.rhs.clone();
        for j in 0..self.status.len() {
            if self.status[j] != ColStatus::Basic && self.x[j] != 0.0 {
                for &(r, v) in &self.data.cols[j] {
                    resid[r] -= v * self.x[j];
                }
            }
        }
        for k in 0..m {
            let row = &self.binv[k * m..(k + 1) * m];
            self.x[self.head[k]] = row.iter().zip(&resid).map(|(a, b)| a * b).sum();
        }
    }

    fn tol(&self, bound: f64) -> f64 {
        self.opts.feasibility_tol * bound.abs().max(1.0)
    }

    fn below(&self, j: usize) -> bool {
        self.x[j] < self.lo[j] - self.tol(self.lo[j])
    }

    fn above(&self, j: usize) -> bool {
        self.x[j] > self.hi[j] + self.tol(self.hi[j])
    }

    fn iteration_cap(&self) -> usize {
        self.opts.max_iterations.unwrap_or_else(|| 50_000.max(50 * (self.data.m + self.data.n)))
    }

    fn iterate(&mut self) -> Result<LpStatus, LpError> {
        let m = self.m();
        let total = self.status.len();
        let cost_scale = self.data.cost.iter().fold(1.0_f64, |a, c| a.max(c.abs()));
        loop {
            if self.iterations >= self.iteration_cap() {
                return Err(LpError::IterationLimit(self.iterations));
            }
            if self.since_refactor >= self.opts.refactor_every {
                self.refactor()?;
            }

            let phase1 = self.head.iter().any(|&j| self.below(j) || self.above(j));
            let basic_cost: Vec<f64> = self
                .head
                .iter()
                .map(|&j| {
                    if !phase1 {
                        self.data.cost[j]
                    } else if self.below(j) {
                        -1.0
                    } else if self.above(j) {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect();
            let mut y = vec![0.0; m];
            for (k, &cb) in basic_cost.iter().enumerate() {
                if cb != 0.0 {
                    for (yr, b) in y.iter_mut().zip(&self.binv[k * m..(k + 1) * m]) {
                        *yr += cb * b;
                    }
                }
            }
            let dtol = self.opts.optimality_tol * if phase1 { 1.0 } else { cost_scale };
            let bland = self.degenerate_run >= self.opts.bland_after;

            let mut entering: Option<(usize, f64)> = None;
            for j in 0..total {
                let s = self.status[j];
                if s == ColStatus::Basic || self.lo[j] == self.hi[j] {
                    continue;
                }
                let c = if phase1 { 0.0 } else { self.data.cost[j] };
                let d = c - self.data.cols[j].iter().map(|&(r, v)| y[r] * v).sum::<f64>();
                let eligible = match s {
                    ColStatus::AtLower => d < -dtol,
                    ColStatus::AtUpper => d > dtol,
                    ColStatus::Free => d.abs() > dtol,
                    ColStatus::Basic => false,
                };
                if !eligible {
                    continue;
                }
                if bland {
                    entering = Some((j, d));
                    break;
                }
                if entering.is_none_or(|(_, best)| d.abs() > best.abs()) {
                    entering = Some((j, d));
                }
            }

            let Some((q, dq)) = entering else {
                if self.since_refactor > 0 {
                    // Confirm on fresh factors before declaring termination.
                    self.refactor()?;
                    continue;
                }
                return Ok(if phase1 { LpStatus::Infeasible } else { LpStatus::Optimal });
            };

            self.iterations += 1;
            let dir = if dq < 0.0 { 1.0 } else { -1.0 };
            let alpha = self.ftran(q);
            let flip_span = self.hi[q] - self.lo[q];
            let leave = self.ratio_test(&alpha, dir, bland);

            let step = match leave {
                Some(bp) if !(flip_span <= bp.exact) => bp.exact,
                _ if flip_span.is_finite() => flip_span,
                _ => {
                    if phase1 {
                        return Err(LpError::NumericalBreakdown("phase 1 ray without breakpoint".into()));
                    }
                    return Ok(LpStatus::Unbounded);
                }
            };

            for k in 0..m {
                let r = -dir * alpha[k];
                if r != 0.0 {
                    self.x[self.head[k]] += r * step;
                }
            }
            match leave {
                Some(bp) if !(flip_span <= bp.exact) => {
                    self.x[q] += dir * step;
                    let out = self.head[bp.pos];
                    self.x[out] = if bp.leave_to == ColStatus::AtLower { self.lo[out] } else { self.hi[out] };
                    self.status[out] = bp.leave_to;
                    self.status[q] = ColStatus::Basic;
                    self.head[bp.pos] = q;
                    self.pivot(bp.pos, &alpha);
                }
                _ => {
                    let to = if dir > 0.0 { ColStatus::AtUpper } else { ColStatus::AtLower };
                    self.x[q] = if to == ColStatus::AtUpper { self.hi[q] } else { self.lo[q] };
                    self.status[q] = to;
                }
            }
            if step * dq.abs() <= 1e-12 {
                self.degenerate_run += 1;
            } else {
                self.degenerate_run = 0;
            }
        }
    }

    fn ftran(&self, q: usize) -> Vec<f64> {
        let m = self.m();
        let mut alpha = vec![0.0; m];
        for &(r, v) in &self.data.cols[q] {
            for (k, a) in alpha.iter_mut().enumerate() {
                *a += self.binv[k * m + r] * v;
            }
        }
        alpha
    }

    /// Harris two-pass ratio test; under Bland's rule, the exact minimum
    /// ratio with ties going to the lowest column index.
    fn ratio_test(&self, alpha: &[f64], dir: f64, bland: bool) -> Option<Breakpoint> {
        let mut points: Vec<(Breakpoint, f64)> = Vec::new();
        for (k, &a) in alpha.iter().enumerate() {
            let rate = -dir * a;
            if rate.abs() <= self.opts.pivot_tol {
                continue;
            }
            let j = self.head[k];
            let (v, lo, hi) = (self.x[j], self.lo[j], self.hi[j]);
            let target = if rate < 0.0 {
                if self.above(j) {
                    Some((v - hi, self.tol(hi), ColStatus::AtUpper))
                } else if self.below(j) || !lo.is_finite() {
                    None
                } else {
                    Some((v - lo, self.tol(lo), ColStatus::AtLower))
                }
            } else if self.below(j) {
                Some((lo - v, self.tol(lo), ColStatus::AtLower))
            } else if self.above(j) || !hi.is_finite() {
                None
            } else {
                Some((hi - v, self.tol(hi), ColStatus::AtUpper))
            };
            if let Some((gap, tol, leave_to)) = target {
                let exact = gap.max(0.0) / rate.abs();
                let relaxed = (gap.max(0.0) + tol) / rate.abs();
                points.push((Breakpoint { pos: k, exact, rate, leave_to }, relaxed));
            }
        }
        if points.is_empty() {
            return None;
        }
        if bland {
            let min = points.iter().map(|p| p.0.exact).fold(f64::INFINITY, f64::min);
            return points.iter().filter(|p| p.0.exact <= min + 1e-12).min_by_key(|p| self.head[p.0.pos]).map(|p| p.0);
        }
        let limit = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        points.iter().filter(|p| p.0.exact <= limit).fold(None::<Breakpoint>, |best, p| match best {
            Some(b) if b.rate.abs() >= p.0.rate.abs() => Some(b),
            _ => Some(p.0),
        })
    }

    fn pivot(&mut self, p: usize, alpha: &[f64]) {
        let m = self.m();
        let ap = alpha[p];
        for c in 0..m {
            self.binv[p * m + c] /= ap;
        }
        for k in 0..m {
            if k == p || alpha[k] == 0.0 {
                continue;
            }
            let f = alpha[k];
            for c in 0..m {
                let v = self.binv[p * m + c];
                if v != 0.0 {
                    self.binv[k * m + c] -= f * v;
                }
            }
        }
        self.since_refactor += 1;
    }
}
