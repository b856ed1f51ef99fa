//! Revised primal simplex over sparse columns with a dense basis inverse.
//!
//! Rows are sign-normalized so that `b >= 0`, which makes the all-artificial
//! basis feasible for phase 1. After phase 1 the basic artificials are
//! pivoted out where possible; the rest sit on redundant rows and stay at
//! zero. Artificials never re-enter.
//!
//! Entering columns follow Dantzig's rule. Ties in the ratio test are broken
//! lexicographically on the rows of `B^-1 B_0`, where `B_0` is the basis the
//! current phase started from, so degenerate pivots cannot cycle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{BasicVar, Basis, LlpColumn, LlpError};

const PIVOT_TOL: f64 = 1e-9;
const PRIMAL_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 64;
const RATIO_TIE: f64 = 1e-11;
const DRIVE_OUT_PIVOT: f64 = 1e-5;
/// Scale of the random shift applied to basic values in phase 2.
const PERTURBATION: f64 = 1e-6;
/// Budget of dual pivots per row when repairing a warm basis.
const REPAIR_PIVOTS_PER_ROW: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum RunStatus {
    Optimal,
    Unbounded,
}

pub(crate) struct Simplex<'a> {
    columns: &'a [LlpColumn],
    row_sign: Vec<f64>,
    /// Working right-hand side; differs from `b_orig` while perturbed.
    b: Vec<f64>,
    b_orig: Vec<f64>,
    rng: ChaCha8Rng,
    k: usize,
    basis: Vec<BasicVar>,
    /// Row-major `k x k` inverse of the basis matrix.
    binv: Vec<f64>,
    /// `B^-1 B_0`, row-major, for the lexicographic ratio test.
    lex_t: Vec<f64>,
    b0: Vec<BasicVar>,
    xb: Vec<f64>,
    basic_pos: Vec<Option<usize>>,
    art_basic: Vec<bool>,
    since_refactor: usize,
    pub(crate) iterations: usize,
    iteration_limit: usize,
}

impl<'a> Simplex<'a> {
    /// Sets up the tableau from the nonsingular part of `warm`, completed
    /// with artificials, or from the artificial basis. The start need not be
    /// feasible; [`Simplex::phase1`] takes care of that.
    pub(crate) fn new(columns: &'a [LlpColumn], rhs: &[f64], warm: Option<&Basis>) -> Result<Self, LlpError> {
        let k = rhs.len();
        let row_sign: Vec<f64> = rhs.iter().map(|&v| if v < 0.0 { -1.0 } else { 1.0 }).collect();
        let b: Vec<f64> = rhs.iter().zip(&row_sign).map(|(v, s)| v * s).collect();
        let n = columns.len();
        let mut s = Simplex {
            columns,
            row_sign,
            b_orig: b.clone(),
            b,
            rng: ChaCha8Rng::seed_from_u64(0x5eed),
            k,
            basis: (0..k).map(BasicVar::Artificial).collect(),
            binv: identity(k),
            lex_t: identity(k),
            b0: (0..k).map(BasicVar::Artificial).collect(),
            xb: Vec::new(),
            basic_pos: vec![None; n],
            art_basic: vec![true; k],
            since_refactor: 0,
            iterations: 0,
            iteration_limit: 200_000 + 200 * (n + k),
        };
        s.xb = s.b.clone();
        if let Some(warm) = warm {
            let candidates: Vec<BasicVar> = warm
                .vars
                .iter()
                .copied()
                .filter(|v| match *v {
                    BasicVar::Column(j) => j < n,
                    BasicVar::Artificial(r) => r < k,
                })
                .collect();
            s.basis = s.crash(&candidates);
            s.sync_positions();
            if s.refactor().is_err() {
                s.reset_to_artificial();
            }
        }
        Ok(s)
    }

    fn reset_to_artificial(&mut self) {
        self.basis = (0..self.k).map(BasicVar::Artificial).collect();
        self.sync_positions();
        self.binv = identity(self.k);
        self.xb = self.b.clone();
        self.since_refactor = 0;
    }

    /// Basic variables that must end at zero: artificials and columns
    /// removed from the program.
    fn held(&self, i: usize, active: &[bool]) -> bool {
        match self.basis[i] {
            BasicVar::Artificial(_) => true,
            BasicVar::Column(j) => !active[j],
        }
    }

    /// Distance of basic position `i` from its feasible set.
    fn violation(&self, i: usize, active: &[bool]) -> f64 {
        let x = self.xb[i];
        if self.held(i, active) {
            if x.abs() > PRIMAL_TOL {
                x.abs()
            } else {
                0.0
            }
        } else if x < -PRIMAL_TOL {
            -x
        } else {
            0.0
        }
    }

    fn sync_positions(&mut self) {
        self.basic_pos.iter_mut().for_each(|p| *p = None);
        self.art_basic.iter_mut().for_each(|a| *a = false);
        for (i, v) in self.basis.iter().enumerate() {
            match *v {
                BasicVar::Column(j) => self.basic_pos[j] = Some(i),
                BasicVar::Artificial(r) => self.art_basic[r] = true,
            }
        }
    }

    /// Greedily keeps linearly independent candidates and completes the
    /// basis with artificials on the uncovered rows.
    fn crash(&self, candidates: &[BasicVar]) -> Vec<BasicVar> {
        let k = self.k;
        let mut reduced: Vec<(usize, Vec<f64>)> = Vec::with_capacity(k);
        let mut row_used = vec![false; k];
        let mut chosen = Vec::with_capacity(k);
        let mut seen_cols = std::collections::BTreeSet::new();
        for &var in candidates {
            if !seen_cols.insert(var) {
                continue;
            }
            let mut v = vec![0.0; k];
            match var {
                BasicVar::Column(j) => {
                    for &(r, a) in &self.columns[j].entries {
                        v[r] += a * self.row_sign[r];
                    }
                }
                BasicVar::Artificial(r) => v[r] = 1.0,
            }
            for (p, u) in &reduced {
                let f = v[*p];
                if f != 0.0 {
                    for (vi, ui) in v.iter_mut().zip(u) {
                        *vi -= f * ui;
                    }
                }
            }
            let mut best = None;
            let mut best_abs = 1e-7;
            for r in 0..k {
                if !row_used[r] && v[r].abs() > best_abs {
                    best_abs = v[r].abs();
                    best = Some(r);
                }
            }
            if let Some(p) = best {
                let piv = v[p];
                v.iter_mut().for_each(|x| *x /= piv);
                row_used[p] = true;
                reduced.push((p, v));
                chosen.push(var);
            }
            if chosen.len() == k {
                break;
            }
        }
        for r in 0..k {
            if !row_used[r] {
                chosen.push(BasicVar::Artificial(r));
            }
        }
        chosen
    }

    fn column_dense(&self, var: BasicVar) -> Vec<f64> {
        let mut v = vec![0.0; self.k];
        match var {
            BasicVar::Column(j) => {
                for &(r, a) in &self.columns[j].entries {
                    v[r] += a * self.row_sign[r];
                }
            }
            BasicVar::Artificial(r) => v[r] = 1.0,
        }
        v
    }

    /// Recomputes the inverse from scratch by Gauss-Jordan elimination with
    /// partial pivoting, then the basic solution.
    fn refactor(&mut self) -> Result<(), LlpError> {
        let k = self.k;
        let mut m = vec![0.0; k * k];
        for (c, &var) in self.basis.iter().enumerate() {
            let col = self.column_dense(var);
            for r in 0..k {
                m[r * k + c] = col[r];
            }
        }
        let mut inv = identity(k);
        for c in 0..k {
            let mut piv = c;
            let mut piv_abs = m[c * k + c].abs();
            for r in c + 1..k {
                if m[r * k + c].abs() > piv_abs {
                    piv = r;
                    piv_abs = m[r * k + c].abs();
                }
            }
            if piv_abs < 1e-11 {
                return Err(LlpError::Numerical("singular basis matrix".into()));
            }
            if piv != c {
                for j in 0..k {
                    m.swap(c * k + j, piv * k + j);
                    inv.swap(c * k + j, piv * k + j);
                }
            }
            let d = m[c * k + c];
            for j in 0..k {
                m[c * k + j] /= d;
                inv[c * k + j] /= d;
            }
            for r in 0..k {
                if r == c {
                    continue;
                }
                let f = m[r * k + c];
                if f == 0.0 {
                    continue;
                }
                for j in 0..k {
                    m[r * k + j] -= f * m[c * k + j];
                    inv[r * k + j] -= f * inv[c * k + j];
                }
            }
        }
        // Rows of `inv` now index basis positions.
        self.binv = inv;
        let mut t = vec![0.0; k * k];
        for (c, &var) in self.b0.iter().enumerate() {
            let col = self.column_dense(var);
            for (r, &a) in col.iter().enumerate() {
                if a != 0.0 {
                    for i in 0..k {
                        t[i * k + c] += self.binv[i * k + r] * a;
                    }
                }
            }
        }
        self.lex_t = t;
        self.xb = self.mul_binv(&self.b);
        for x in &mut self.xb {
            if *x < 0.0 && *x > -PRIMAL_TOL {
                *x = 0.0;
            }
        }
        self.since_refactor = 0;
        Ok(())
    }

    fn mul_binv(&self, v: &[f64]) -> Vec<f64> {
        let k = self.k;
        (0..k)
            .map(|i| {
                let row = &self.binv[i * k..(i + 1) * k];
                row.iter().zip(v).map(|(a, b)| a * b).sum()
            })
            .collect()
    }

    fn ftran(&self, var: BasicVar) -> Vec<f64> {
        let k = self.k;
        let mut w = vec![0.0; k];
        match var {
            BasicVar::Column(j) => {
                for &(r, a) in &self.columns[j].entries {
                    let a = a * self.row_sign[r];
                    for (i, wi) in w.iter_mut().enumerate() {
                        *wi += self.binv[i * k + r] * a;
                    }
                }
            }
            BasicVar::Artificial(r) => {
                for (i, wi) in w.iter_mut().enumerate() {
                    *wi = self.binv[i * k + r];
                }
            }
        }
        w
    }

    /// Row duals (internal sign convention) for basic costs `cb`.
    fn duals_internal(&self, cb: &[f64]) -> Vec<f64> {
        let k = self.k;
        let mut y = vec![0.0; k];
        for (i, &c) in cb.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let row = &self.binv[i * k..(i + 1) * k];
            for (yj, a) in y.iter_mut().zip(row) {
                *yj += c * a;
            }
        }
        y
    }

    fn dot_internal(&self, y: &[f64], j: usize) -> f64 {
        self.columns[j]
            .entries
            .iter()
            .map(|&(r, a)| y[r] * a * self.row_sign[r])
            .sum()
    }

    fn basic_costs(&self, cost: &dyn Fn(BasicVar) -> f64) -> Vec<f64> {
        self.basis.iter().map(|&v| cost(v)).collect()
    }

    /// Primal simplex iterations. `cost` gives objective coefficients
    /// (maximization); entering candidates are active nonbasic columns.
    /// With `hold_artificials`, basic artificials are kept at zero.
    fn iterate(
        &mut self,
        cost: &dyn Fn(BasicVar) -> f64,
        active: &[bool],
        hold_artificials: bool,
        stop_at_zero_artificials: bool,
    ) -> Result<RunStatus, LlpError> {
        loop {
            if stop_at_zero_artificials && self.artificial_sum() <= PRIMAL_TOL {
                return Ok(RunStatus::Optimal);
            }
            if self.iterations >= self.iteration_limit {
                return Err(LlpError::Numerical("simplex iteration limit reached".into()));
            }
            let cb = self.basic_costs(cost);
            let y = self.duals_internal(&cb);
            let mut entering: Option<(usize, f64)> = None;
            for j in 0..self.columns.len() {
                if !active[j] || self.basic_pos[j].is_some() {
                    continue;
                }
                let d = cost(BasicVar::Column(j)) - self.dot_internal(&y, j);
                if d > DUAL_TOL && entering.is_none_or(|(_, best)| d > best) {
                    entering = Some((j, d));
                }
            }
            let Some((q, _)) = entering else {
                return Ok(RunStatus::Optimal);
            };
            let w = self.ftran(BasicVar::Column(q));
            let Some((r, theta)) = self.ratio_test(&w, hold_artificials, active) else {
                return Ok(RunStatus::Unbounded);
            };
            self.pivot(r, q, &w, theta)?;
        }
    }

    /// Leaving row for entering direction `w`: minimum ratio, held
    /// artificials first, remaining ties by the lexicographically smallest
    /// row of `B^-1 B_0 / w_i`.
    fn ratio_test(&self, w: &[f64], hold_artificials: bool, active: &[bool]) -> Option<(usize, f64)> {
        let k = self.k;
        let mut min_ratio = f64::INFINITY;
        for i in 0..k {
            let held = match self.basis[i] {
                BasicVar::Artificial(_) => hold_artificials,
                BasicVar::Column(j) => !active[j],
            };
            if held && w[i].abs() > PIVOT_TOL {
                return Some((i, 0.0));
            }
            if w[i] > PIVOT_TOL {
                min_ratio = min_ratio.min(self.xb[i].max(0.0) / w[i]);
            }
        }
        if min_ratio == f64::INFINITY {
            return None;
        }
        let mut leave: Option<usize> = None;
        for i in 0..k {
            if w[i] <= PIVOT_TOL || self.xb[i].max(0.0) / w[i] > min_ratio + RATIO_TIE {
                continue;
            }
            let better = match leave {
                None => true,
                Some(l) => {
                    let (ri, rl) = (&self.lex_t[i * k..(i + 1) * k], &self.lex_t[l * k..(l + 1) * k]);
                    let ord = ri
                        .iter()
                        .zip(rl)
                        .map(|(a, b)| (a / w[i]).total_cmp(&(b / w[l])))
                        .find(|o| o.is_ne())
                        .unwrap_or(std::cmp::Ordering::Equal);
                    ord.is_lt()
                }
            };
            if better {
                leave = Some(i);
            }
        }
        leave.map(|i| (i, self.xb[i].max(0.0) / w[i]))
    }

    /// Starts a phase: later ratio-test ties are broken relative to the
    /// current basis.
    fn reset_lex(&mut self) {
        self.b0 = self.basis.clone();
        self.lex_t = identity(self.k);
    }

    /// Replaces held basic variables at zero by active columns through
    /// degenerate pivots where the row allows it.
    fn drive_out_held(&mut self, active: &[bool]) -> Result<(), LlpError> {
        for i in 0..self.k {
            if !self.held(i, active) || self.xb[i].abs() > PRIMAL_TOL {
                continue;
            }
            let row = &self.binv[i * self.k..(i + 1) * self.k];
            let mut best: Option<(usize, f64)> = None;
            for j in 0..self.columns.len() {
                if !active[j] || self.basic_pos[j].is_some() {
                    continue;
                }
                let v: f64 = self.columns[j]
                    .entries
                    .iter()
                    .map(|&(r, a)| row[r] * a * self.row_sign[r])
                    .sum();
                if v.abs() > DRIVE_OUT_PIVOT && best.is_none_or(|(_, b)| v.abs() > b) {
                    best = Some((j, v.abs()));
                }
            }
            if let Some((j, _)) = best {
                let w = self.ftran(BasicVar::Column(j));
                self.pivot(i, j, &w, 0.0)?;
            }
        }
        Ok(())
    }

    fn pivot(&mut self, r: usize, q: usize, w: &[f64], theta: f64) -> Result<(), LlpError> {
        let k = self.k;
        for i in 0..k {
            if i != r {
                self.xb[i] -= theta * w[i];
                if self.xb[i] < 0.0 && self.xb[i] > -PRIMAL_TOL {
                    self.xb[i] = 0.0;
                }
            }
        }
        self.xb[r] = theta;
        let wr = w[r];
        for m in [&mut self.binv, &mut self.lex_t] {
            for j in 0..k {
                m[r * k + j] /= wr;
            }
            for i in 0..k {
                if i == r || w[i] == 0.0 {
                    continue;
                }
                let f = w[i];
                for j in 0..k {
                    m[i * k + j] -= f * m[r * k + j];
                }
            }
        }
        match self.basis[r] {
            BasicVar::Column(j) => self.basic_pos[j] = None,
            BasicVar::Artificial(a) => self.art_basic[a] = false,
        }
        self.basis[r] = BasicVar::Column(q);
        self.basic_pos[q] = Some(r);
        self.iterations += 1;
        self.since_refactor += 1;
        if self.since_refactor >= REFACTOR_EVERY {
            self.refactor()?;
        }
        Ok(())
    }

    fn artificial_sum(&self) -> f64 {
        self.basis
            .iter()
            .zip(&self.xb)
            .filter(|(v, _)| matches!(v, BasicVar::Artificial(_)))
            .map(|(_, x)| *x)
            .sum()
    }

    /// Drives the artificial variables to zero. Returns false when the
    /// system has no nonnegative solution.
    ///
    /// A warm basis that is infeasible for the current right-hand side is
    /// first repaired by dual simplex pivots under `repair_costs`; phase 1
    /// restarts from the artificial basis only when that fails.
    pub(crate) fn phase1(&mut self, active: &[bool], repair_costs: Option<&[f64]>) -> Result<bool, LlpError> {
        if (0..self.k).any(|i| self.violation(i, active) > 0.0) {
            let repaired = match repair_costs {
                Some(costs) => {
                    let cost = |v: BasicVar| match v {
                        BasicVar::Column(j) => costs[j],
                        BasicVar::Artificial(_) => 0.0,
                    };
                    let limit = self.iterations + REPAIR_PIVOTS_PER_ROW * self.k;
                    matches!(self.dual_pivots(&cost, active, limit), Ok(true))
                }
                None => false,
            };
            if !repaired {
                self.reset_to_artificial();
            }
        }
        if self.artificial_sum() > PRIMAL_TOL {
            let cost = |v: BasicVar| match v {
                BasicVar::Artificial(_) => -1.0,
                BasicVar::Column(_) => 0.0,
            };
            self.reset_lex();
            self.iterate(&cost, active, false, true)?;
            self.refactor()?;
            if self.artificial_sum() > 1e-7 {
                return Ok(false);
            }
        }
        self.drive_out_held(active)?;
        Ok(true)
    }

    /// Maximizes `costs` over the active columns from the current feasible basis.
    pub(crate) fn phase2(&mut self, costs: &[f64], active: &[bool]) -> Result<RunStatus, LlpError> {
        let cost = |v: BasicVar| match v {
            BasicVar::Column(j) => costs[j],
            BasicVar::Artificial(_) => 0.0,
        };
        self.reset_lex();
        self.perturb(active);
        let status = self.iterate(&cost, active, true, false);
        self.b.clone_from(&self.b_orig);
        self.refactor()?;
        if status? == RunStatus::Unbounded {
            return Ok(RunStatus::Unbounded);
        }
        if !self.dual_pivots(&cost, active, self.iteration_limit)? {
            return Err(LlpError::Numerical("dual simplex found no entering column".into()));
        }
        Ok(RunStatus::Optimal)
    }

    /// Dual simplex pivots until no basic variable violates its bounds.
    /// Returns false when a violated row has no entering column or the
    /// iteration count reaches `limit`.
    fn dual_pivots(&mut self, cost: &dyn Fn(BasicVar) -> f64, active: &[bool], limit: usize) -> Result<bool, LlpError> {
        let k = self.k;
        loop {
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..k {
                let v = self.violation(i, active);
                if v > 0.0 && leave.is_none_or(|(_, b)| v > b) {
                    leave = Some((i, v));
                }
            }
            let Some((r, _)) = leave else {
                return Ok(true);
            };
            if self.iterations >= limit {
                return Ok(false);
            }
            let xr = self.xb[r];
            let y = self.duals_internal(&self.basic_costs(cost));
            let row = &self.binv[r * k..(r + 1) * k];
            let mut entering: Option<(usize, f64, f64)> = None;
            for j in 0..self.columns.len() {
                if !active[j] || self.basic_pos[j].is_some() {
                    continue;
                }
                let alpha: f64 = self.columns[j]
                    .entries
                    .iter()
                    .map(|&(i, a)| row[i] * a * self.row_sign[i])
                    .sum();
                // the entering value xr / alpha must be positive
                if alpha.abs() <= PIVOT_TOL || alpha * xr <= 0.0 {
                    continue;
                }
                let d = (cost(BasicVar::Column(j)) - self.dot_internal(&y, j)).min(0.0);
                let ratio = -d / alpha.abs();
                let better =
                    entering.is_none_or(|(_, br, ba)| ratio < br - 1e-12 || (ratio <= br + 1e-12 && alpha.abs() > ba));
                if better {
                    entering = Some((j, ratio, alpha.abs()));
                }
            }
            let Some((q, _, _)) = entering else {
                return Ok(false);
            };
            let w = self.ftran(BasicVar::Column(q));
            let theta = xr / w[r];
            self.pivot(r, q, &w, theta)?;
        }
    }

    /// Shifts every basic column up by a small random amount, moving the
    /// right-hand side with it, so that ratio-test ties become rare.
    fn perturb(&mut self, active: &[bool]) {
        let k = self.k;
        let mut b = vec![0.0; k];
        for i in 0..k {
            if !self.held(i, active) {
                self.xb[i] += PERTURBATION * (1.0 + self.rng.gen::<f64>());
            }
            let col = self.column_dense(self.basis[i]);
            for (br, a) in b.iter_mut().zip(col) {
                *br += a * self.xb[i];
            }
        }
        self.b = b;
    }

    /// Duals `y` in the caller's row signs, with `y . A_B = c_B`.
    pub(crate) fn duals(&self, costs: &[f64]) -> Vec<f64> {
        let cb: Vec<f64> = self
            .basis
            .iter()
            .map(|v| match *v {
                BasicVar::Column(j) => costs[j],
                BasicVar::Artificial(_) => 0.0,
            })
            .collect();
        self.duals_internal(&cb)
            .into_iter()
            .zip(&self.row_sign)
            .map(|(y, s)| y * s)
            .collect()
    }

    pub(crate) fn primal(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.columns.len()];
        for (v, &val) in self.basis.iter().zip(&self.xb) {
            if let BasicVar::Column(j) = *v {
                x[j] = val.max(0.0);
            }
        }
        x
    }

    pub(crate) fn basis(&self) -> Basis {
        Basis {
            vars: self.basis.clone(),
        }
    }

    pub(crate) fn is_basic(&self, j: usize) -> bool {
        self.basic_pos[j].is_some()
    }
}

fn identity(k: usize) -> Vec<f64> {
    let mut m = vec![0.0; k * k];
    for i in 0..k {
        m[i * k + i] = 1.0;
    }
    m
}
