//! Linear lexicographic programming: `lexmax Cx s.t. Ax = b, x >= 0`.
//!
//! [`lex_solve`] runs one single-objective LP per level. After level `l`
//! the columns whose level-`l` reduced cost is not zero are dropped, and the
//! next level starts from the previous basis. The final basis is primal-dual
//! feasible for the whole lexicographic program, and the per-level duals
//! collected on the way give every column's lexicographic reduced cost.

mod simplex;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lex::{LexValue, DEFAULT_EPS};
use simplex::{RunStatus, Simplex};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LlpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("the program is infeasible")]
    Infeasible,
    #[error("the program is unbounded at level {level}")]
    Unbounded { level: usize },
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// One column of `A` (sparse) together with its column of `C`.
#[derive(Debug, Clone, PartialEq)]
pub struct LlpColumn {
    pub entries: Vec<(usize, f64)>,
    pub costs: Vec<f64>,
}

/// A lexicographic LP in standard equality form, stored column-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct LlpProblem {
    rows: usize,
    levels: usize,
    rhs: Vec<f64>,
    columns: Vec<LlpColumn>,
}

impl LlpProblem {
    pub fn new(levels: usize, rhs: Vec<f64>) -> Self {
        LlpProblem {
            rows: rhs.len(),
            levels,
            rhs,
            columns: Vec::new(),
        }
    }

    /// Builds a problem from dense `A` (`k x n`), `b` and `C` (`m x n`).
    pub fn from_dense(a: &[Vec<f64>], b: &[f64], c: &[Vec<f64>]) -> Result<Self, LlpError> {
        let k = b.len();
        if a.len() != k {
            return Err(LlpError::Dimension(format!("A has {} rows, b has {k}", a.len())));
        }
        let n = c.first().map_or(0, Vec::len);
        if a.iter().any(|row| row.len() != n) || c.iter().any(|row| row.len() != n) {
            return Err(LlpError::Dimension("ragged A or C".into()));
        }
        let mut p = LlpProblem::new(c.len(), b.to_vec());
        for j in 0..n {
            let entries = (0..k).filter(|&r| a[r][j] != 0.0).map(|r| (r, a[r][j])).collect();
            let costs = c.iter().map(|row| row[j]).collect();
            p.push_column(entries, costs)?;
        }
        Ok(p)
    }

    pub fn push_column(&mut self, entries: Vec<(usize, f64)>, costs: Vec<f64>) -> Result<usize, LlpError> {
        if costs.len() != self.levels {
            return Err(LlpError::Dimension(format!(
                "column has {} costs, problem has {} levels",
                costs.len(),
                self.levels
            )));
        }
        if let Some(&(r, _)) = entries.iter().find(|(r, _)| *r >= self.rows) {
            return Err(LlpError::Dimension(format!("row index {r} out of range")));
        }
        self.columns.push(LlpColumn { entries, costs });
        Ok(self.columns.len() - 1)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn num_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn columns(&self) -> &[LlpColumn] {
        &self.columns
    }

    pub fn column(&self, j: usize) -> &LlpColumn {
        &self.columns[j]
    }

    /// `C x` as a lexicographic value.
    pub fn objective(&self, x: &[f64]) -> LexValue {
        let mut v = vec![0.0; self.levels];
        for (col, &xj) in self.columns.iter().zip(x) {
            if xj != 0.0 {
                for (vl, c) in v.iter_mut().zip(&col.costs) {
                    *vl += c * xj;
                }
            }
        }
        LexValue::from_finite(&v)
    }

    /// Maximum violation of `Ax = b` by `x`.
    pub fn residual(&self, x: &[f64]) -> f64 {
        let mut ax = vec![0.0; self.rows];
        for (col, &xj) in self.columns.iter().zip(x) {
            for &(r, a) in &col.entries {
                ax[r] += a * xj;
            }
        }
        ax.iter().zip(&self.rhs).map(|(l, r)| (l - r).abs()).fold(0.0, f64::max)
    }
}

/// A basic variable: a problem column or the artificial of a row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BasicVar {
    Column(usize),
    Artificial(usize),
}

/// The basic variables, one per row. Artificials appear only for rows the
/// active columns cannot span and always sit at zero in an optimal basis.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Basis {
    pub vars: Vec<BasicVar>,
}

impl Basis {
    pub fn columns(&self) -> impl Iterator<Item = usize> + '_ {
        self.vars.iter().filter_map(|v| match *v {
            BasicVar::Column(j) => Some(j),
            BasicVar::Artificial(_) => None,
        })
    }

    pub fn contains_column(&self, j: usize) -> bool {
        self.vars.contains(&BasicVar::Column(j))
    }
}

/// Per-level dual rows `c^l_{B(l)} A_{B(l)}^{-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualBundle {
    pub rows: Vec<Vec<f64>>,
}

impl DualBundle {
    pub fn levels(&self) -> usize {
        self.rows.len()
    }

    /// Level-`l` reduced cost `c_l - y^l . a` of a column.
    pub fn reduced_cost_entries(&self, costs: &[f64], entries: &[(usize, f64)]) -> Vec<f64> {
        self.rows
            .iter()
            .zip(costs)
            .map(|(y, c)| c - entries.iter().map(|&(r, a)| y[r] * a).sum::<f64>())
            .collect()
    }
}

/// Lexicographic reduced cost of a column with respect to `duals`.
pub fn reduced_cost(duals: &DualBundle, costs: &[f64], entries: &[(usize, f64)]) -> Result<LexValue, LlpError> {
    if costs.len() != duals.levels() {
        return Err(LlpError::Dimension(format!(
            "column has {} costs, duals have {} levels",
            costs.len(),
            duals.levels()
        )));
    }
    let rows = duals.rows.first().map_or(0, Vec::len);
    if entries.iter().any(|&(r, _)| r >= rows) {
        return Err(LlpError::Dimension("column row index out of range".into()));
    }
    Ok(LexValue::from_finite(&duals.reduced_cost_entries(costs, entries)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Result of a single-objective solve.
#[derive(Debug, Clone, PartialEq)]
pub struct LpBackendResult {
    pub status: LpStatus,
    pub basis: Basis,
    pub objective: f64,
    pub duals: Vec<f64>,
    pub primal: Vec<f64>,
}

/// Maximizes `costs . x` subject to the constraints of `problem`.
pub fn lp_solve(costs: &[f64], problem: &LlpProblem, warm_start: Option<&Basis>) -> Result<LpBackendResult, LlpError> {
    if costs.len() != problem.num_columns() {
        return Err(LlpError::Dimension("cost vector length".into()));
    }
    let active = vec![true; problem.num_columns()];
    let mut s = Simplex::new(&problem.columns, &problem.rhs, warm_start)?;
    if !s.phase1(&active, Some(costs))? {
        return Ok(LpBackendResult {
            status: LpStatus::Infeasible,
            basis: s.basis(),
            objective: f64::NAN,
            duals: Vec::new(),
            primal: Vec::new(),
        });
    }
    let status = match s.phase2(costs, &active)? {
        RunStatus::Optimal => LpStatus::Optimal,
        RunStatus::Unbounded => LpStatus::Unbounded,
    };
    let primal = s.primal();
    let objective = primal.iter().zip(costs).map(|(x, c)| x * c).sum();
    Ok(LpBackendResult {
        status,
        basis: s.basis(),
        objective,
        duals: s.duals(costs),
        primal,
    })
}

/// Options for [`lex_solve_with`].
#[derive(Debug, Clone)]
pub struct LexSolveOptions<'a> {
    /// Tolerance of the zero test that builds the next level's support.
    pub eps: f64,
    pub warm_start: Option<&'a Basis>,
    /// Columns allowed in the solve; the others are removed from the program.
    pub active: Option<&'a [bool]>,
    /// Replacement right-hand side.
    pub rhs: Option<&'a [f64]>,
    /// Keep the support sets and per-level bases in the result.
    pub record_levels: bool,
}

impl Default for LexSolveOptions<'_> {
    fn default() -> Self {
        LexSolveOptions {
            eps: DEFAULT_EPS,
            warm_start: None,
            active: None,
            rhs: None,
            record_levels: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LexSolution {
    pub value: LexValue,
    pub basis: Basis,
    pub duals: DualBundle,
    pub primal: Vec<f64>,
    /// `S^(1..=m+1)` when recorded.
    pub supports: Vec<Vec<usize>>,
    /// `B^(1..=m)` when recorded.
    pub level_bases: Vec<Basis>,
    pub simplex_iterations: usize,
}

pub fn lex_solve(p: &LlpProblem) -> Result<LexSolution, LlpError> {
    lex_solve_with(p, &LexSolveOptions::default())
}

pub fn lex_solve_with(p: &LlpProblem, opts: &LexSolveOptions<'_>) -> Result<LexSolution, LlpError> {
    let n = p.num_columns();
    let rhs = opts.rhs.unwrap_or(&p.rhs);
    if rhs.len() != p.rows {
        return Err(LlpError::Dimension("right-hand side length".into()));
    }
    let mut active: Vec<bool> = match opts.active {
        Some(a) if a.len() == n => a.to_vec(),
        Some(_) => return Err(LlpError::Dimension("active mask length".into())),
        None => vec![true; n],
    };
    let mut s = Simplex::new(&p.columns, rhs, opts.warm_start)?;
    let first_costs: Vec<f64> = p
        .columns
        .iter()
        .map(|c| c.costs.first().copied().unwrap_or(0.0))
        .collect();
    if !s.phase1(&active, Some(&first_costs))? {
        return Err(LlpError::Infeasible);
    }
    let mut supports = Vec::new();
    let mut level_bases = Vec::new();
    if opts.record_levels {
        supports.push((0..n).filter(|&j| active[j]).collect());
    }
    let mut dual_rows = Vec::with_capacity(p.levels);
    let mut level_costs = vec![0.0; n];
    for l in 0..p.levels {
        for (c, col) in level_costs.iter_mut().zip(&p.columns) {
            *c = col.costs[l];
        }
        if s.phase2(&level_costs, &active)? == RunStatus::Unbounded {
            return Err(LlpError::Unbounded { level: l });
        }
        let y = s.duals(&level_costs);
        for j in 0..n {
            if !active[j] || s.is_basic(j) {
                continue;
            }
            let col = &p.columns[j];
            let c = col.costs[l];
            let yd: f64 = col.entries.iter().map(|&(r, a)| y[r] * a).sum();
            if (c - yd).abs() > opts.eps * c.abs().max(1.0) {
                active[j] = false;
            }
        }
        if opts.record_levels {
            level_bases.push(s.basis());
            supports.push((0..n).filter(|&j| active[j]).collect());
        }
        dual_rows.push(y);
    }
    let primal = s.primal();
    Ok(LexSolution {
        value: p.objective(&primal),
        basis: s.basis(),
        duals: DualBundle { rows: dual_rows },
        primal,
        supports,
        level_bases,
        simplex_iterations: s.iterations,
    })
}

/// Whether every column's reduced cost is lexicographically non-positive
/// (the primal-dual feasibility certificate of a lexicographic basis).
pub fn is_dual_feasible(p: &LlpProblem, duals: &DualBundle, eps: f64) -> bool {
    p.columns
        .iter()
        .all(|col| !LexValue::from_finite(&duals.reduced_cost_entries(&col.costs, &col.entries)).is_positive(eps))
}

/// Column indices of `basis` as a set.
pub fn basis_columns(basis: &Basis) -> BTreeSet<usize> {
    basis.columns().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::oracle_llp;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense(a: &[&[f64]], b: &[f64], c: &[&[f64]]) -> LlpProblem {
        let a: Vec<Vec<f64>> = a.iter().map(|r| r.to_vec()).collect();
        let c: Vec<Vec<f64>> = c.iter().map(|r| r.to_vec()).collect();
        LlpProblem::from_dense(&a, b, &c).unwrap()
    }

    #[test]
    fn lp_one_constraint() {
        let p = dense(&[&[1.0, 1.0]], &[1.0], &[&[1.0, 0.0]]);
        let r = lp_solve(&[1.0, 0.0], &p, None).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.objective - 1.0).abs() < 1e-12);
        assert_eq!(r.basis.vars, vec![BasicVar::Column(0)]);
        assert!((r.duals[0] - 1.0).abs() < 1e-12);
        let d = DualBundle {
            rows: vec![r.duals.clone()],
        };
        let rc = reduced_cost(&d, &[0.0], &[(0, 1.0)]).unwrap();
        assert!(rc.approx_eq(&LexValue::from_finite(&[-1.0]), 1e-12));
    }

    #[test]
    fn lp_zero_objective() {
        let p = dense(&[&[1.0]], &[1.0], &[&[0.0]]);
        let r = lp_solve(&[0.0], &p, None).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert_eq!(r.objective, 0.0);
        assert!((r.primal[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lp_unbounded_ray() {
        let p = dense(&[&[1.0, -1.0]], &[1.0], &[&[1.0, 0.0]]);
        let r = lp_solve(&[1.0, 0.0], &p, None).unwrap();
        assert_eq!(r.status, LpStatus::Unbounded);
        // Ray check: direction (1, 1) keeps Ax = b and improves the objective.
        let dir = [1.0, 1.0];
        assert_eq!(dir[0] - dir[1], 0.0);
        assert!(dir[0] > 0.0);
    }

    #[test]
    fn lp_infeasible() {
        let p = dense(&[&[1.0, 1.0]], &[-1.0], &[&[1.0, 0.0]]);
        let r = lp_solve(&[1.0, 0.0], &p, None).unwrap();
        assert_eq!(r.status, LpStatus::Infeasible);
    }

    #[test]
    fn lex_first_level_decides() {
        let p = dense(&[&[1.0, 1.0]], &[1.0], &[&[1.0, 0.0], &[0.0, 1.0]]);
        let s = lex_solve_with(
            &p,
            &LexSolveOptions {
                record_levels: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(s.value.approx_eq(&LexValue::from_finite(&[1.0, 0.0]), 1e-12));
        assert_eq!(s.supports[1], vec![0]);
        assert!((s.primal[0] - 1.0).abs() < 1e-12 && s.primal[1].abs() < 1e-12);
    }

    #[test]
    fn lex_tie_then_refine() {
        let p = dense(&[&[1.0, 1.0]], &[1.0], &[&[1.0, 1.0], &[0.0, 1.0]]);
        let s = lex_solve_with(
            &p,
            &LexSolveOptions {
                record_levels: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(s.value.approx_eq(&LexValue::from_finite(&[1.0, 1.0]), 1e-12));
        assert_eq!(s.supports[1], vec![0, 1]);
        assert_eq!(s.basis.vars, vec![BasicVar::Column(1)]);
        // c_1 - C_B A_B^{-1} a_1 = (1, 0) - (1, 1) * 1 = (0, -1)
        let rc = reduced_cost(&s.duals, &p.column(0).costs, &p.column(0).entries).unwrap();
        assert!(rc.approx_eq(&LexValue::from_finite(&[0.0, -1.0]), 1e-12));
        let basic = reduced_cost(&s.duals, &p.column(1).costs, &p.column(1).entries).unwrap();
        assert!(basic.approx_eq(&LexValue::zeros(2), 1e-12));
    }

    #[test]
    fn lowered_copy_of_basic_column() {
        let delta = 2.5;
        let p = dense(
            &[&[1.0, 1.0, 1.0]],
            &[1.0],
            &[&[1.0, 1.0, 1.0], &[0.0, 1.0, 1.0 - delta]],
        );
        let s = lex_solve(&p).unwrap();
        let rc = reduced_cost(&s.duals, &p.column(2).costs, &p.column(2).entries).unwrap();
        assert!(rc.approx_eq(&LexValue::from_finite(&[0.0, -delta]), 1e-12));
    }

    #[test]
    fn dimension_errors() {
        let d = DualBundle { rows: vec![vec![1.0]] };
        assert!(matches!(
            reduced_cost(&d, &[1.0, 2.0], &[]),
            Err(LlpError::Dimension(_))
        ));
        assert!(matches!(
            reduced_cost(&d, &[1.0], &[(3, 1.0)]),
            Err(LlpError::Dimension(_))
        ));
    }

    #[test]
    fn redundant_rows_are_tolerated() {
        // Second row duplicates the first.
        let p = dense(
            &[&[1.0, 1.0, 0.0], &[1.0, 1.0, 0.0], &[0.0, 1.0, 1.0]],
            &[1.0, 1.0, 1.0],
            &[&[2.0, 1.0, 1.0]],
        );
        let s = lex_solve(&p).unwrap();
        assert!(s.value.approx_eq(&LexValue::from_finite(&[3.0]), 1e-9));
        assert!(p.residual(&s.primal) < 1e-9);
        assert!(is_dual_feasible(&p, &s.duals, 1e-6));
    }

    pub(crate) fn random_problem(rng: &mut ChaCha8Rng) -> LlpProblem {
        loop {
            let k = rng.gen_range(1..=4);
            let n = rng.gen_range(k..=8);
            let m = rng.gen_range(1..=3);
            let mut a = vec![vec![0.0; n]; k];
            // A sum row keeps the feasible region bounded.
            for v in a[0].iter_mut() {
                *v = rng.gen_range(1..=3) as f64;
            }
            for row in a.iter_mut().skip(1) {
                for v in row.iter_mut() {
                    *v = rng.gen_range(-2..=3) as f64;
                }
            }
            let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(0..=2) as f64).collect();
            let b: Vec<f64> = a
                .iter()
                .map(|row| row.iter().zip(&x0).map(|(p, q)| p * q).sum())
                .collect();
            let c: Vec<Vec<f64>> = (0..m)
                .map(|_| (0..n).map(|_| rng.gen_range(-2..=2) as f64).collect())
                .collect();
            if rank(&a) == k {
                return LlpProblem::from_dense(&a, &b, &c).unwrap();
            }
        }
    }

    fn rank(a: &[Vec<f64>]) -> usize {
        let mut m: Vec<Vec<f64>> = a.to_vec();
        let rows = m.len();
        let cols = m.first().map_or(0, Vec::len);
        let mut r = 0;
        for c in 0..cols {
            let Some(p) = (r..rows).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())) else {
                break;
            };
            if m[p][c].abs() < 1e-9 {
                continue;
            }
            m.swap(r, p);
            for i in 0..rows {
                if i != r {
                    let f = m[i][c] / m[r][c];
                    for j in 0..cols {
                        m[i][j] -= f * m[r][j];
                    }
                }
            }
            r += 1;
            if r == rows {
                break;
            }
        }
        r
    }

    #[test]
    fn random_problems_match_vertex_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..150 {
            let p = random_problem(&mut rng);
            let s = lex_solve_with(
                &p,
                &LexSolveOptions {
                    record_levels: true,
                    ..Default::default()
                },
            )
            .unwrap();
            let oracle = oracle_llp(&p).unwrap().expect("bounded feasible instance");
            assert!(s.value.approx_eq(&oracle, 1e-6), "{} vs {}", s.value, oracle);
            assert!(is_dual_feasible(&p, &s.duals, 1e-6));
            assert!(p.residual(&s.primal) < 1e-7);
            // B^(l) ⊆ S^(l+1) ⊆ S^(l)
            for l in 0..p.levels() {
                let cur: BTreeSet<usize> = s.supports[l].iter().copied().collect();
                let next: BTreeSet<usize> = s.supports[l + 1].iter().copied().collect();
                assert!(next.is_subset(&cur));
                assert!(basis_columns(&s.level_bases[l]).is_subset(&next));
            }
        }
    }

    #[test]
    fn weighted_objective_agrees_on_small_integer_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..60 {
            let p = random_problem(&mut rng);
            let lex = lex_solve(&p).unwrap();
            // Vertex values are multiples of 1/det with |det| small, so a
            // large base separates levels.
            let big = 1e4_f64;
            let m = p.levels();
            let weighted: Vec<f64> = p
                .columns()
                .iter()
                .map(|col| (0..m).map(|l| col.costs[l] * big.powi((m - 1 - l) as i32)).sum())
                .collect();
            let r = lp_solve(&weighted, &p, None).unwrap();
            assert_eq!(r.status, LpStatus::Optimal);
            let v = p.objective(&r.primal);
            assert!(v.approx_eq(&lex.value, 1e-6), "{} vs {}", v, lex.value);
        }
    }
}
