//! Branch-and-bound for 0/1 programs with a lexicographic objective.
//!
//! Every node relaxation is a full [`lex_solve`](crate::llp::lex_solve_with)
//! so that pruning compares lexicographic bounds. Nodes are explored
//! best-first by bound, deeper nodes first on ties. Variables fixed to 0 are
//! removed from the node program; variables fixed to 1 are substituted into
//! the right-hand side, which also removes the columns they conflict with.
//! Incumbents come from integral relaxations and from dives that fix the
//! largest fractional variable to 1.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::lex::{LexValue, DEFAULT_EPS};
use crate::llp::{lex_solve_with, Basis, LexSolveOptions, LlpError, LlpProblem};

const INTEGRALITY_TOL: f64 = 1e-6;
const ZERO_RHS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IllpError {
    #[error("no integral feasible solution")]
    Infeasible,
    #[error("node limit of {0} reached")]
    NodeLimit(usize),
    #[error(transparent)]
    Lp(#[from] LlpError),
}

/// How the `x <= 1` bounds of the binary variables are enforced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpperBounds {
    /// The equality rows already imply `x <= 1` (set partitioning).
    Implied,
    /// Add a row `x_j + s_j = 1` per variable.
    Explicit,
}

/// A lexicographic program whose original variables are all binary.
#[derive(Debug, Clone)]
pub struct IllpProblem {
    llp: LlpProblem,
    binaries: usize,
    nonnegative_rows: Vec<bool>,
}

impl IllpProblem {
    pub fn new(llp: LlpProblem, bounds: UpperBounds) -> Self {
        let binaries = llp.num_columns();
        let llp = match bounds {
            UpperBounds::Implied => llp,
            UpperBounds::Explicit => {
                let k = llp.rows();
                let mut rhs = llp.rhs().to_vec();
                rhs.extend(std::iter::repeat_n(1.0, binaries));
                let mut out = LlpProblem::new(llp.levels(), rhs);
                for (j, col) in llp.columns().iter().enumerate() {
                    let mut entries = col.entries.clone();
                    entries.push((k + j, 1.0));
                    out.push_column(entries, col.costs.clone())
                        .expect("consistent dimensions");
                }
                for j in 0..binaries {
                    out.push_column(vec![(k + j, 1.0)], vec![0.0; llp.levels()])
                        .expect("consistent dimensions");
                }
                out
            }
        };
        let mut nonnegative_rows = vec![true; llp.rows()];
        for col in llp.columns() {
            for &(r, a) in &col.entries {
                if a < 0.0 {
                    nonnegative_rows[r] = false;
                }
            }
        }
        IllpProblem {
            llp,
            binaries,
            nonnegative_rows,
        }
    }

    pub fn llp(&self) -> &LlpProblem {
        &self.llp
    }

    pub fn binaries(&self) -> usize {
        self.binaries
    }
}

#[derive(Debug, Clone)]
pub struct IllpOptions {
    pub eps: f64,
    pub node_limit: Option<usize>,
    /// Dive for incumbents at the root and after every this many expanded
    /// nodes; `None` disables diving.
    pub dive_every: Option<usize>,
    /// All objective coefficients are integers, so node bounds may be
    /// rounded down at their first fractional entry.
    pub integral_objective: bool,
}

impl Default for IllpOptions {
    fn default() -> Self {
        IllpOptions {
            eps: DEFAULT_EPS,
            node_limit: None,
            dive_every: Some(50),
            integral_objective: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IllpSolution {
    pub value: LexValue,
    /// 0/1 values of the binary variables.
    pub solution: Vec<f64>,
    pub nodes: usize,
    pub root_bound: LexValue,
    /// Incumbent values in the order they were found.
    pub incumbent_trace: Vec<LexValue>,
}

/// A subproblem: variables fixed to 0 or 1 and the relaxation bound.
#[derive(Debug, Clone)]
pub struct BnbNode {
    pub fixed_zero: Vec<usize>,
    pub fixed_one: Vec<usize>,
    pub bound: LexValue,
    /// `bound` rounded to the comparison grid; orders the queue.
    key: Vec<f64>,
    depth: usize,
    seq: usize,
    primal: Vec<f64>,
    basis: Basis,
}

struct Queued(BnbNode);

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        cmp_keys(&self.0.key, &other.0.key)
            .then(self.0.depth.cmp(&other.0.depth))
            .then(other.0.seq.cmp(&self.0.seq))
    }
}

pub fn illp_solve(p: &IllpProblem, incumbent_hint: Option<&[f64]>) -> Result<IllpSolution, IllpError> {
    illp_solve_with(p, incumbent_hint, &IllpOptions::default())
}

pub fn illp_solve_with(
    p: &IllpProblem,
    incumbent_hint: Option<&[f64]>,
    opts: &IllpOptions,
) -> Result<IllpSolution, IllpError> {
    let llp = &p.llp;
    let mut search = Search {
        p,
        opts,
        incumbent: None,
        trace: Vec::new(),
        seq: 0,
        nodes: 0,
    };
    if let Some(hint) = incumbent_hint {
        if let Some(x) = complete_hint(p, hint) {
            search.offer(llp.objective(&x), x);
        }
    }

    let root = match search.node(Vec::new(), Vec::new(), 0, None)? {
        Some(node) => node,
        None => return Err(IllpError::Infeasible),
    };
    let root_bound = root.bound.clone();
    if opts.dive_every.is_some() {
        search.dive(&root)?;
    }
    let mut heap = BinaryHeap::new();
    heap.push(Queued(root));
    let mut popped = 0usize;

    while let Some(Queued(node)) = heap.pop() {
        if search.prunes(&node.bound) {
            continue;
        }
        popped += 1;
        if opts.dive_every.is_some_and(|every| popped.is_multiple_of(every.max(1))) {
            search.dive(&node)?;
            if search.prunes(&node.bound) {
                continue;
            }
        }
        match branching_variable(&node.primal[..p.binaries]) {
            None => {
                let x = search.rounded(&node)?;
                search.offer(llp.objective(&x), x);
            }
            Some(j) => {
                for one in [true, false] {
                    let (mut zero, mut ones) = (node.fixed_zero.clone(), node.fixed_one.clone());
                    if one {
                        ones.push(j);
                    } else {
                        zero.push(j);
                    }
                    if let Some(child) = search.node(zero, ones, node.depth + 1, Some(&node.basis))? {
                        if !search.prunes(&child.bound) {
                            heap.push(Queued(child));
                        }
                    }
                }
            }
        }
    }

    match search.incumbent {
        Some((value, x)) => Ok(IllpSolution {
            value,
            solution: x[..p.binaries].to_vec(),
            nodes: search.nodes,
            root_bound,
            incumbent_trace: search.trace,
        }),
        None => Err(IllpError::Infeasible),
    }
}

struct Search<'a> {
    p: &'a IllpProblem,
    opts: &'a IllpOptions,
    incumbent: Option<(LexValue, Vec<f64>)>,
    trace: Vec<LexValue>,
    seq: usize,
    nodes: usize,
}

impl Search<'_> {
    fn node(
        &mut self,
        fixed_zero: Vec<usize>,
        fixed_one: Vec<usize>,
        depth: usize,
        warm: Option<&Basis>,
    ) -> Result<Option<BnbNode>, IllpError> {
        if let Some(limit) = self.opts.node_limit {
            if self.nodes >= limit {
                return Err(IllpError::NodeLimit(limit));
            }
        }
        self.nodes += 1;
        solve_node(self.p, fixed_zero, fixed_one, depth, &mut self.seq, warm, self.opts.eps)
    }

    /// Whether no integral point under `bound` can beat the incumbent.
    fn prunes(&self, bound: &LexValue) -> bool {
        let Some((inc, _)) = &self.incumbent else {
            return false;
        };
        let eps = self.opts.eps;
        if !self.opts.integral_objective {
            return !(bound - inc).is_positive(eps);
        }
        // an integral point below the bound cannot exceed its first
        // fractional entry rounded down; past that entry it is unconstrained
        let b = bound.to_finite().expect("node bounds are finite");
        let c = inc.to_finite().expect("incumbent values are finite");
        for (&bl, &cl) in b.iter().zip(&c) {
            let fractional = (bl - bl.round()).abs() > eps;
            let top = if fractional { bl.floor() } else { bl.round() };
            if top < cl - eps {
                return true;
            }
            if top > cl + eps || fractional {
                return false;
            }
        }
        true
    }

    fn offer(&mut self, v: LexValue, x: Vec<f64>) {
        let improves = self
            .incumbent
            .as_ref()
            .is_none_or(|(inc, _)| (&v - inc).is_positive(self.opts.eps));
        if improves {
            self.trace.push(v.clone());
            self.incumbent = Some((v, x));
        }
    }

    fn rounded(&self, node: &BnbNode) -> Result<Vec<f64>, IllpError> {
        let x: Vec<f64> = node.primal.iter().map(|v| v.round()).collect();
        if self.p.llp.residual(&x) > 1e-6 {
            return Err(LlpError::Numerical("rounded relaxation violates constraints".into()).into());
        }
        Ok(x)
    }

    /// Fixes the largest fractional variable to one until the relaxation is
    /// integral or infeasible, offering any integral point found.
    fn dive(&mut self, start: &BnbNode) -> Result<(), IllpError> {
        let mut node = start.clone();
        loop {
            if self.prunes(&node.bound) {
                return Ok(());
            }
            let binaries = &node.primal[..self.p.binaries];
            let pick = binaries
                .iter()
                .enumerate()
                .filter(|(_, &v)| (v - v.round()).abs() > INTEGRALITY_TOL)
                .fold(None, |best: Option<(usize, f64)>, (j, &v)| match best {
                    Some((_, b)) if b >= v => best,
                    _ => Some((j, v)),
                });
            let Some((j, _)) = pick else {
                let x = self.rounded(&node)?;
                self.offer(self.p.llp.objective(&x), x);
                return Ok(());
            };
            let mut ones = node.fixed_one.clone();
            ones.push(j);
            match self.node(node.fixed_zero.clone(), ones, node.depth + 1, Some(&node.basis))? {
                Some(child) => node = child,
                None => return Ok(()),
            }
        }
    }
}

fn cmp_keys(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Most fractional variable, lowest index on ties.
fn branching_variable(x: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (j, &v) in x.iter().enumerate() {
        let frac = (v - v.floor()).min(v.ceil() - v);
        if frac > INTEGRALITY_TOL && best.is_none_or(|(_, f)| frac > f + 1e-12) {
            best = Some((j, frac));
        }
    }
    best.map(|(j, _)| j)
}

fn solve_node(
    p: &IllpProblem,
    fixed_zero: Vec<usize>,
    fixed_one: Vec<usize>,
    depth: usize,
    seq: &mut usize,
    warm: Option<&Basis>,
    eps: f64,
) -> Result<Option<BnbNode>, IllpError> {
    let llp = &p.llp;
    let mut active = vec![true; llp.num_columns()];
    let mut rhs = llp.rhs().to_vec();
    let mut offset = vec![0.0; llp.levels()];
    for &j in &fixed_zero {
        active[j] = false;
    }
    for &j in &fixed_one {
        active[j] = false;
        let col = llp.column(j);
        for &(r, a) in &col.entries {
            rhs[r] -= a;
        }
        for (o, c) in offset.iter_mut().zip(&col.costs) {
            *o += c;
        }
    }
    // On a row with nonnegative coefficients, a zero right-hand side forces
    // every column touching it to zero and a negative one is infeasible.
    if !fixed_one.is_empty() {
        for r in 0..llp.rows() {
            if !p.nonnegative_rows[r] || rhs[r] > ZERO_RHS {
                continue;
            }
            if rhs[r] < -ZERO_RHS {
                return Ok(None);
            }
            rhs[r] = 0.0;
        }
        for (j, col) in llp.columns().iter().enumerate() {
            if active[j]
                && col
                    .entries
                    .iter()
                    .any(|&(r, a)| a > 0.0 && p.nonnegative_rows[r] && rhs[r] == 0.0)
            {
                active[j] = false;
            }
        }
    }
    let opts = LexSolveOptions {
        eps,
        warm_start: warm,
        active: Some(&active),
        rhs: Some(&rhs),
        record_levels: false,
    };
    let sol = match lex_solve_with(llp, &opts) {
        Ok(s) => s,
        Err(LlpError::Infeasible) => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let mut primal = sol.primal;
    for &j in &fixed_one {
        primal[j] = 1.0;
    }
    let bound = &sol.value + &LexValue::from_finite(&offset);
    let key = bound
        .to_finite()
        .expect("node bounds are finite")
        .iter()
        .map(|v| (v / eps).round())
        .collect();
    *seq += 1;
    Ok(Some(BnbNode {
        fixed_zero,
        fixed_one,
        bound,
        key,
        depth,
        seq: *seq,
        primal,
        basis: sol.basis,
    }))
}

/// Extends a hint on the binary variables with slack values and checks it.
fn complete_hint(p: &IllpProblem, hint: &[f64]) -> Option<Vec<f64>> {
    if hint.len() != p.binaries || hint.iter().any(|&v| v != 0.0 && v != 1.0) {
        return None;
    }
    let mut x = hint.to_vec();
    x.extend(hint.iter().take(p.llp.num_columns() - p.binaries).map(|v| 1.0 - v));
    (p.llp.residual(&x) <= 1e-9).then_some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense(a: &[Vec<f64>], b: &[f64], c: &[Vec<f64>]) -> LlpProblem {
        LlpProblem::from_dense(a, b, c).unwrap()
    }

    /// Lex-max over all 0/1 vectors.
    fn brute_force(p: &LlpProblem) -> Option<LexValue> {
        let n = p.num_columns();
        let mut best: Option<LexValue> = None;
        for mask in 0u32..(1 << n) {
            let x: Vec<f64> = (0..n).map(|j| ((mask >> j) & 1) as f64).collect();
            if p.residual(&x) < 1e-9 {
                let v = p.objective(&x);
                if best.as_ref().is_none_or(|b| v.lex_cmp(b).is_gt()) {
                    best = Some(v);
                }
            }
        }
        best
    }

    #[test]
    fn integral_relaxation() {
        let p = dense(&[vec![1.0, 1.0]], &[1.0], &[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let s = illp_solve(&IllpProblem::new(p, UpperBounds::Implied), None).unwrap();
        assert_eq!(s.value, LexValue::from_finite(&[1.0, 0.0]));
        assert_eq!(s.solution, vec![1.0, 0.0]);
    }

    #[test]
    fn tie_broken_at_second_level() {
        let p = dense(&[vec![1.0, 1.0]], &[1.0], &[vec![1.0, 1.0], vec![0.0, 1.0]]);
        let s = illp_solve(&IllpProblem::new(p, UpperBounds::Implied), None).unwrap();
        assert_eq!(s.value, LexValue::from_finite(&[1.0, 1.0]));
        assert_eq!(s.solution, vec![0.0, 1.0]);
    }

    /// Three pilots, five pairings, six hand-picked schedules.
    fn pbs_master() -> LlpProblem {
        // rows 0..3 pilots, rows 3..8 pairings
        let schedules: [(usize, &[usize], f64); 6] = [
            (0, &[0, 1], 9.0),
            (0, &[2], 9.0),
            (1, &[2, 3], 4.0),
            (1, &[0, 1], 5.0),
            (2, &[4], 1.0),
            (2, &[3, 4], 2.0),
        ];
        let mut p = LlpProblem::new(3, vec![1.0; 8]);
        for (pilot, pairings, score) in schedules {
            let mut entries = vec![(pilot, 1.0)];
            entries.extend(pairings.iter().map(|&q| (3 + q, 1.0)));
            let mut costs = vec![0.0; 3];
            costs[pilot] = score;
            p.push_column(entries, costs).unwrap();
        }
        p
    }

    #[test]
    fn small_master_matches_enumeration() {
        let p = pbs_master();
        let oracle = brute_force(&p).unwrap();
        let s = illp_solve(&IllpProblem::new(p, UpperBounds::Implied), None).unwrap();
        assert_eq!(s.value, oracle);
        // pilot 1 gives up {0, 1} for {2}, which frees {0, 1} for pilot 2
        assert_eq!(s.value, LexValue::from_finite(&[9.0, 5.0, 2.0]));
    }

    #[test]
    fn infeasible_reports_status() {
        let p = dense(&[vec![1.0, 1.0]], &[3.0], &[vec![1.0, 1.0]]);
        let r = illp_solve(&IllpProblem::new(p, UpperBounds::Explicit), None);
        assert!(matches!(r, Err(IllpError::Infeasible)));
    }

    #[test]
    fn random_binary_programs_match_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut checked = 0;
        while checked < 80 {
            let n = rng.gen_range(2..=9);
            let k = rng.gen_range(1..=3);
            let m = rng.gen_range(1..=3);
            let a: Vec<Vec<f64>> = (0..k)
                .map(|_| (0..n).map(|_| rng.gen_range(0..=2) as f64).collect())
                .collect();
            let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(0..=1) as f64).collect();
            let b: Vec<f64> = a.iter().map(|r| r.iter().zip(&x0).map(|(p, q)| p * q).sum()).collect();
            let c: Vec<Vec<f64>> = (0..m)
                .map(|_| (0..n).map(|_| rng.gen_range(-3..=3) as f64).collect())
                .collect();
            let p = dense(&a, &b, &c);
            let oracle = brute_force(&p).unwrap();
            let ip = IllpProblem::new(p.clone(), UpperBounds::Explicit);
            for (dive_every, integral_objective) in [(Some(50), false), (None, false), (Some(1), true), (None, true)] {
                let opts = IllpOptions {
                    dive_every,
                    integral_objective,
                    ..IllpOptions::default()
                };
                let s = illp_solve_with(&ip, None, &opts).unwrap();
                assert_eq!(s.value, oracle);
                // root sandwich and monotone incumbents
                assert!(!(&s.value - &s.root_bound).is_positive(1e-6));
                for w in s.incumbent_trace.windows(2) {
                    assert!(w[1].lex_cmp(&w[0]).is_gt());
                }
            }
            checked += 1;
        }
    }

    #[test]
    fn weighted_single_objective_agrees_on_assignment_masters() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..40 {
            let m = rng.gen_range(2..=3);
            let q = rng.gen_range(2..=4);
            let mut p = LlpProblem::new(m, vec![1.0; m + q]);
            // a feasible partition first, then random extra schedules
            let owner: Vec<usize> = (0..q).map(|i| if i < m { i } else { rng.gen_range(0..m) }).collect();
            let mut cols: Vec<(usize, Vec<usize>)> = (0..m)
                .map(|i| (i, (0..q).filter(|&x| owner[x] == i).collect()))
                .collect();
            for _ in 0..rng.gen_range(2..=6) {
                let pairings: Vec<usize> = (0..q).filter(|_| rng.gen_bool(0.4)).collect();
                cols.push((rng.gen_range(0..m), pairings));
            }
            for (pilot, pairings) in &cols {
                let mut entries = vec![(*pilot, 1.0)];
                entries.extend(pairings.iter().map(|&x| (m + x, 1.0)));
                let mut costs = vec![0.0; m];
                costs[*pilot] = rng.gen_range(0..=9) as f64;
                p.push_column(entries, costs).unwrap();
            }
            let lex = illp_solve(&IllpProblem::new(p.clone(), UpperBounds::Implied), None).unwrap();
            // one column per pilot and scores in [0, 9]: weights 10^(m-1-l)
            let n = p.num_columns();
            let mut best: Option<(f64, LexValue)> = None;
            for mask in 0u32..(1 << n) {
                let x: Vec<f64> = (0..n).map(|j| ((mask >> j) & 1) as f64).collect();
                if p.residual(&x) < 1e-9 {
                    let v = p.objective(&x);
                    let w: f64 = (0..m)
                        .map(|l| v[l].finite().unwrap() * 10f64.powi((m - 1 - l) as i32))
                        .sum();
                    if best.as_ref().is_none_or(|(bw, _)| w > *bw) {
                        best = Some((w, v));
                    }
                }
            }
            assert_eq!(best.unwrap().1, lex.value);
        }
    }

    #[test]
    fn hint_becomes_incumbent() {
        let p = pbs_master();
        let hint = [1.0, 0.0, 1.0, 0.0, 1.0, 0.0];
        let s = illp_solve(&IllpProblem::new(p, UpperBounds::Implied), Some(&hint)).unwrap();
        assert_eq!(s.incumbent_trace[0], LexValue::from_finite(&[9.0, 4.0, 1.0]));
        assert_eq!(s.value, LexValue::from_finite(&[9.0, 5.0, 2.0]));
    }
}
