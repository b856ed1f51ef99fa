//! Exact lexicographic column generation for the bidding problem.
//!
//! 1. Lex-solve the restricted master over the pooled schedules.
//! 2. Price: add schedules with lexicographically positive reduced cost;
//!    repeat until none exists. The last relaxation value is `u`.
//! 3. Solve the integer master on the pool; its value is a lower bound `l`.
//! 4. Add every schedule whose reduced cost is `>=_lex l - u`. Only those can
//!    appear in an optimal solution.
//! 5. Solve the integer master again. Its value is optimal.
//!
//! Pricing runs one label-setting search per pilot, except that a shared
//! search on the pairing duals can answer for the junior pilots at once.

use std::collections::BTreeSet;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::illp::{illp_solve_with, IllpError, IllpOptions, IllpProblem, IllpSolution, UpperBounds};
use crate::lex::{LexValue, DEFAULT_EPS};
use crate::llp::{lex_solve_with, reduced_cost, Basis, DualBundle, LexSolveOptions, LlpError, LlpProblem};
use crate::pbs::PbsResource;
use crate::pbs::{build_dag, schedule_of_path, Instance, InstanceError, PbsSpace};
use crate::rclpp::{
    compute_bounds, solve_above_threshold, solve_lex_longest, solve_n_best, solve_n_best_above, Dag, FoundPath,
    SearchOptions, SearchStats,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ColgenError {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("master problem: {0}")]
    Lp(#[from] LlpError),
    #[error("integer master: {0}")]
    Illp(#[from] IllpError),
    #[error("solution check failed: {0}")]
    Validation(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColgenParams {
    /// Columns added per pilot and round; `None` picks 10 up to 80 pilots, else 16.
    pub columns_per_iter: Option<usize>,
    /// Size of the shared candidate list; `None` means the number of pilots.
    pub k: Option<usize>,
    pub eps: f64,
    pub reduction: bool,
    pub use_bounds: bool,
    /// Run the self-checks and record them in [`RunResult::audit`].
    pub audit: bool,
    pub timings: bool,
    pub node_limit: Option<usize>,
}

impl Default for ColgenParams {
    fn default() -> Self {
        ColgenParams {
            columns_per_iter: None,
            k: None,
            eps: DEFAULT_EPS,
            reduction: true,
            use_bounds: true,
            audit: false,
            timings: false,
            node_limit: None,
        }
    }
}

impl ColgenParams {
    pub fn columns_per_iter(&self, pilots: usize) -> usize {
        self.columns_per_iter.unwrap_or(if pilots <= 80 { 10 } else { 16 })
    }

    pub fn k(&self, pilots: usize) -> usize {
        self.k.unwrap_or(pilots).max(1)
    }

    fn search(&self) -> SearchOptions {
        SearchOptions {
            use_bounds: self.use_bounds,
            tolerance: self.eps,
            ..SearchOptions::default()
        }
    }
}

/// A schedule assigned to a pilot: one master column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Column {
    pub pilot: usize,
    /// Ascending pairing indices.
    pub pairings: Vec<usize>,
    pub score: i64,
}

impl Column {
    pub fn new(inst: &Instance, pilot: usize, mut pairings: Vec<usize>) -> Self {
        pairings.sort_unstable();
        let score = inst.score(pilot, &pairings);
        Column { pilot, pairings, score }
    }

    /// Constraint entries: the pilot row, then one row per pairing.
    pub fn entries(&self, pilots: usize) -> Vec<(usize, f64)> {
        std::iter::once((self.pilot, 1.0))
            .chain(self.pairings.iter().map(|&p| (pilots + p, 1.0)))
            .collect()
    }

    pub fn costs(&self, pilots: usize) -> Vec<f64> {
        let mut c = vec![0.0; pilots];
        c[self.pilot] = self.score as f64;
        c
    }
}

/// The pooled columns and the master program built from them.
#[derive(Debug, Clone)]
pub struct RestrictedMaster {
    pilots: usize,
    columns: Vec<Column>,
    seen: BTreeSet<(usize, Vec<usize>)>,
    llp: LlpProblem,
}

impl RestrictedMaster {
    pub fn new(inst: &Instance) -> Self {
        let (m, n) = (inst.num_pilots(), inst.num_pairings());
        let mut master = RestrictedMaster {
            pilots: m,
            columns: Vec::new(),
            seen: BTreeSet::new(),
            llp: LlpProblem::new(m, vec![1.0; m + n]),
        };
        for (i, s) in inst.initial_partition.iter().enumerate() {
            master.add(Column::new(inst, i, s.clone()));
        }
        master
    }

    /// Adds a column unless the pilot already has this schedule.
    pub fn add(&mut self, col: Column) -> bool {
        if !self.seen.insert((col.pilot, col.pairings.clone())) {
            return false;
        }
        self.llp
            .push_column(col.entries(self.pilots), col.costs(self.pilots))
            .expect("column fits the master");
        self.columns.push(col);
        true
    }

    pub fn contains(&self, col: &Column) -> bool {
        self.seen.contains(&(col.pilot, col.pairings.clone()))
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn llp(&self) -> &LlpProblem {
        &self.llp
    }

    /// Column count per pilot.
    pub fn pool_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.pilots];
        for c in &self.columns {
            sizes[c.pilot] += 1;
        }
        sizes
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub master_seconds: f64,
    pub pricing_seconds: f64,
    pub integer_seconds: f64,
    pub gap_seconds: f64,
    pub total_seconds: f64,
}

/// Work counters of a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub iterations: usize,
    pub generated_columns: usize,
    pub duplicate_columns: usize,
    pub gap_columns: usize,
    pub pool_size: usize,
    pub saved_paths: u64,
    pub cuts_by_lb: u64,
    pub reduction_search: SearchStats,
    pub pricing_search: SearchStats,
    pub gap_search: SearchStats,
    pub reduction_rounds: usize,
    /// Mean over pricing rounds of the share of pilots answered by the shared search.
    pub avg_eliminated_pct: f64,
    pub simplex_iterations: usize,
    pub first_bnb_nodes: usize,
    pub final_bnb_nodes: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

/// Outcome of one pricing round.
#[derive(Debug, Clone, Default)]
pub struct PricingRound {
    /// New candidate columns, pilot by pilot.
    pub columns: Vec<Column>,
    /// One-based index of the first level on which the shared candidates
    /// differ; `None` when the shared search did not run.
    pub i_star: Option<usize>,
    /// Pilots answered from the shared candidates.
    pub eliminated: usize,
    /// Pilots answered from the shared candidates whose best candidate did not
    /// match a direct search (audit only).
    pub shared_mismatches: Vec<usize>,
    pub shared_checks: usize,
    /// Candidate columns whose search cost differs from the reduced cost.
    pub sign_mismatches: usize,
}

/// Results of the self-checks of an audited run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AuditReport {
    pub shared_checks: usize,
    pub shared_mismatches: usize,
    pub sign_checks: usize,
    pub sign_mismatches: usize,
    /// A final direct pricing pass found no lex-positive column.
    pub exit_verified: bool,
    /// `l <= value <= u`.
    pub sandwich: bool,
    /// Whether each round grew the pool (all but the last).
    pub pool_growth: bool,
    pub i_stars: Vec<Option<usize>>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    /// Pairing indices per pilot.
    pub schedules: Vec<Vec<usize>>,
    pub value: Vec<i64>,
    /// Value of the final relaxation.
    pub upper_bound: LexValue,
    /// Value of the first integer solve.
    pub lower_bound: Vec<i64>,
    pub stats: RunStats,
    pub audit: Option<AuditReport>,
}

struct Clock(Option<Instant>);

impl Clock {
    fn start(on: bool) -> Self {
        Clock(on.then(Instant::now))
    }

    fn add_to(&self, slot: &mut f64) {
        if let Some(t) = self.0 {
            *slot += t.elapsed().as_secs_f64();
        }
    }
}

pub fn run(inst: &Instance, params: &ColgenParams) -> Result<RunResult, ColgenError> {
    let total = Clock::start(params.timings);
    let (m, eps) = (inst.num_pilots(), params.eps);
    let dag = build_dag(inst);
    let mut master = RestrictedMaster::new(inst);
    let mut stats = RunStats::default();
    let mut timings = Timings::default();
    let mut audit = params.audit.then(|| AuditReport {
        pool_growth: true,
        ..AuditReport::default()
    });
    let mut eliminated_pct_sum = 0.0;
    let mut warm: Option<Basis> = None;

    let relaxation = loop {
        stats.iterations += 1;
        let clock = Clock::start(params.timings);
        let lp = lex_solve_with(
            master.llp(),
            &LexSolveOptions {
                eps,
                warm_start: warm.as_ref(),
                ..LexSolveOptions::default()
            },
        )?;
        clock.add_to(&mut timings.master_seconds);
        stats.simplex_iterations += lp.simplex_iterations;
        warm = Some(lp.basis.clone());

        let clock = Clock::start(params.timings);
        let round = price_all_pilots(inst, &dag, &lp.duals, params, &mut stats)?;
        clock.add_to(&mut timings.pricing_seconds);
        if round.i_star.is_some() {
            stats.reduction_rounds += 1;
        }
        eliminated_pct_sum += 100.0 * round.eliminated as f64 / m as f64;
        if let Some(a) = audit.as_mut() {
            a.shared_checks += round.shared_checks;
            a.shared_mismatches += round.shared_mismatches.len();
            a.sign_checks += round.columns.len();
            a.sign_mismatches += round.sign_mismatches;
            a.i_stars.push(round.i_star);
        }
        let candidates = round.columns.len();
        let mut added = 0;
        for col in round.columns {
            if master.add(col) {
                added += 1;
            } else {
                stats.duplicate_columns += 1;
            }
        }
        stats.generated_columns += added;
        if added == 0 {
            if let Some(a) = audit.as_mut() {
                // duplicates with positive reduced cost would mean a bad basis
                a.pool_growth &= candidates == 0;
            }
            break lp;
        }
    };
    stats.avg_eliminated_pct = eliminated_pct_sum / stats.iterations as f64;
    let u = relaxation.value.clone();

    if let Some(a) = audit.as_mut() {
        a.exit_verified = verify_no_positive_column(inst, &dag, &relaxation.duals, params)?;
    }

    let clock = Clock::start(params.timings);
    let illp_opts = IllpOptions {
        eps,
        node_limit: params.node_limit,
        integral_objective: true,
        ..IllpOptions::default()
    };
    let mut hint = vec![0.0; master.columns().len()];
    hint[..m].fill(1.0);
    let first = solve_integer(&master, &hint, &illp_opts)?;
    clock.add_to(&mut timings.integer_seconds);
    stats.first_bnb_nodes = first.nodes;
    let lower = integral(&first.value)?;

    let clock = Clock::start(params.timings);
    let threshold = &first.value - &u;
    let before = master.columns().len();
    for i in 0..m {
        let space = PbsSpace::for_pilot(inst, i, &relaxation.duals)?.with_tolerance(eps);
        let bounds = compute_bounds(&dag, &space);
        let (paths, st) = solve_above_threshold(&dag, &space, &bounds, &threshold, &params.search());
        stats.gap_search += st;
        for p in paths {
            master.add(Column::new(inst, i, schedule_of_path(inst, &p.vertices)));
        }
    }
    stats.gap_columns = master.columns().len() - before;
    clock.add_to(&mut timings.gap_seconds);

    let clock = Clock::start(params.timings);
    let mut hint = first.solution.clone();
    hint.resize(master.columns().len(), 0.0);
    let last = if stats.gap_columns == 0 {
        first.clone()
    } else {
        solve_integer(&master, &hint, &illp_opts)?
    };
    clock.add_to(&mut timings.integer_seconds);
    stats.final_bnb_nodes = if stats.gap_columns == 0 { 0 } else { last.nodes };

    let value = integral(&last.value)?;
    let mut schedules = vec![Vec::new(); m];
    let mut assigned = vec![false; m];
    for (j, &x) in last.solution.iter().enumerate() {
        if x > 0.5 {
            let col = &master.columns()[j];
            if std::mem::replace(&mut assigned[col.pilot], true) {
                return Err(ColgenError::Validation(format!(
                    "pilot {} has two schedules",
                    col.pilot
                )));
            }
            schedules[col.pilot] = col.pairings.clone();
        }
    }
    if !inst.is_partition(&schedules) {
        return Err(ColgenError::Validation(
            "schedules do not partition the pairings".into(),
        ));
    }
    if inst.score_vector(&schedules) != value {
        return Err(ColgenError::Validation(
            "score vector does not match the recomputed scores".into(),
        ));
    }
    let final_value = LexValue::from_finite(&value.iter().map(|&v| v as f64).collect::<Vec<_>>());
    let sandwich = first.value.lex_cmp_eps(&final_value, eps).is_le() && final_value.lex_cmp_eps(&u, eps).is_le();
    if !sandwich {
        return Err(ColgenError::Validation(format!(
            "value {final_value} outside [{}, {u}]",
            first.value
        )));
    }
    if let Some(a) = audit.as_mut() {
        a.sandwich = sandwich;
    }

    stats.pool_size = master.columns().len();
    stats.saved_paths =
        stats.reduction_search.saved_paths + stats.pricing_search.saved_paths + stats.gap_search.saved_paths;
    stats.cuts_by_lb =
        stats.reduction_search.cuts_by_lb + stats.pricing_search.cuts_by_lb + stats.gap_search.cuts_by_lb;
    total.add_to(&mut timings.total_seconds);
    if params.timings {
        stats.timings = Some(timings);
    }
    Ok(RunResult {
        schedules,
        value,
        upper_bound: u,
        lower_bound: lower,
        stats,
        audit,
    })
}

fn solve_integer(master: &RestrictedMaster, hint: &[f64], opts: &IllpOptions) -> Result<IllpSolution, ColgenError> {
    let problem = IllpProblem::new(master.llp().clone(), UpperBounds::Implied);
    Ok(illp_solve_with(&problem, Some(hint), opts)?)
}

fn integral(v: &LexValue) -> Result<Vec<i64>, ColgenError> {
    let finite = v
        .to_finite()
        .ok_or_else(|| ColgenError::Validation(format!("integer value {v} is not finite")))?;
    finite
        .iter()
        .map(|&x| {
            let r = x.round();
            if (x - r).abs() < 1e-6 {
                Ok(r as i64)
            } else {
                Err(ColgenError::Validation(format!(
                    "integer value {v} has a fractional score"
                )))
            }
        })
        .collect()
}

fn column_reduced_cost(inst: &Instance, duals: &DualBundle, col: &Column) -> LexValue {
    let m = inst.num_pilots();
    reduced_cost(duals, &col.costs(m), &col.entries(m)).expect("dual bundle matches the master")
}

/// Lex-positive schedules for every pilot under `duals`.
///
/// With the reduction trick, one search over the pairing duals of all but
/// the last level yields `K` candidates. If they first differ on level
/// `i* < m`, pilots `i* + 1..=m` take their columns from these candidates;
/// the others are priced directly.
pub fn price_all_pilots(
    inst: &Instance,
    dag: &Dag,
    duals: &DualBundle,
    params: &ColgenParams,
    stats: &mut RunStats,
) -> Result<PricingRound, ColgenError> {
    let (m, eps) = (inst.num_pilots(), params.eps);
    let n_cols = params.columns_per_iter(m).max(1);
    let search = params.search();
    let zero = LexValue::zeros(m);
    let mut round = PricingRound::default();

    let mut shared: Option<(usize, Vec<Vec<usize>>)> = None;
    if params.reduction && m >= 2 {
        let space = PbsSpace::for_reduction(inst, duals)?.with_tolerance(eps);
        let bounds = compute_bounds(dag, &space);
        let (list, st) = solve_n_best(dag, &space, &bounds, params.k(m), &search);
        stats.reduction_search += st;
        let i_star = first_differing_level(&list, eps).map_or(m + 1, |r| r + 1);
        round.i_star = Some(i_star);
        if i_star < m {
            let schedules = list.iter().map(|p| schedule_of_path(inst, &p.vertices)).collect();
            shared = Some((i_star, schedules));
        }
    }

    for i in 0..m {
        let served = shared.as_ref().filter(|(i_star, _)| i + 1 > *i_star);
        if let Some((_, schedules)) = served {
            round.eliminated += 1;
            let mut cands: Vec<(LexValue, Column)> = schedules
                .iter()
                .map(|s| {
                    let col = Column::new(inst, i, s.clone());
                    (column_reduced_cost(inst, duals, &col), col)
                })
                .collect();
            cands.sort_by(|a, b| b.0.lex_cmp_eps(&a.0, eps));
            if params.audit {
                round.shared_checks += 1;
                let space = PbsSpace::for_pilot(inst, i, duals)?.with_tolerance(eps);
                let bounds = compute_bounds(dag, &space);
                let (direct, _) = solve_lex_longest(dag, &space, &bounds, &search);
                let agree = match (direct, cands.first()) {
                    (Some(d), Some((best, _))) => d.cost.lex_cmp_eps(best, eps).is_eq(),
                    (None, None) => true,
                    _ => false,
                };
                if !agree {
                    round.shared_mismatches.push(i);
                }
            }
            round.columns.extend(
                cands
                    .into_iter()
                    .filter(|(c, _)| c.is_positive(eps))
                    .take(n_cols)
                    .map(|(_, col)| col),
            );
        } else {
            let space = PbsSpace::for_pilot(inst, i, duals)?.with_tolerance(eps);
            let bounds = compute_bounds(dag, &space);
            let (paths, st) = solve_n_best_above(dag, &space, &bounds, n_cols, &zero, &search);
            stats.pricing_search += st;
            for p in paths {
                round.columns.push(path_column(
                    inst,
                    duals,
                    i,
                    &p,
                    params.audit,
                    &mut round.sign_mismatches,
                ));
            }
        }
    }
    Ok(round)
}

fn path_column(
    inst: &Instance,
    duals: &DualBundle,
    pilot: usize,
    p: &FoundPath<PbsResource>,
    audit: bool,
    mismatches: &mut usize,
) -> Column {
    let col = Column::new(inst, pilot, schedule_of_path(inst, &p.vertices));
    if audit && !column_reduced_cost(inst, duals, &col).approx_eq(&p.cost, 1e-7) {
        *mismatches += 1;
    }
    col
}

/// Zero-based first level on which two candidates differ by more than `eps`.
fn first_differing_level<R>(list: &[FoundPath<R>], eps: f64) -> Option<usize> {
    let first = list.first()?;
    (0..first.cost.len()).find(|&r| {
        let vals = list.iter().map(|p| p.cost[r].finite().expect("finite path cost"));
        let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        hi - lo > eps
    })
}

/// A direct pricing pass for every pilot finds nothing lex-positive.
pub fn verify_no_positive_column(
    inst: &Instance,
    dag: &Dag,
    duals: &DualBundle,
    params: &ColgenParams,
) -> Result<bool, ColgenError> {
    let search = SearchOptions {
        tolerance: params.eps,
        ..SearchOptions::default()
    };
    for i in 0..inst.num_pilots() {
        let space = PbsSpace::for_pilot(inst, i, duals)?.with_tolerance(params.eps);
        let bounds = compute_bounds(dag, &space);
        let (best, _) = solve_lex_longest(dag, &space, &bounds, &search);
        if best.is_some_and(|p| p.cost.is_positive(params.eps)) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::oracle_pbs;
    use crate::pbs::tests::{instance, pairing};
    use crate::pbs::{generate, GeneratorOptions};

    fn audited() -> ColgenParams {
        ColgenParams {
            audit: true,
            ..ColgenParams::default()
        }
    }

    fn check(inst: &Instance, params: &ColgenParams) -> RunResult {
        let res = run(inst, params).unwrap();
        let oracle = oracle_pbs(inst).unwrap().unwrap();
        assert_eq!(res.value, oracle.value);
        let a = res.audit.as_ref().unwrap();
        assert!(a.exit_verified && a.sandwich && a.pool_growth);
        assert_eq!(a.shared_mismatches, 0);
        assert_eq!(a.sign_mismatches, 0);
        res
    }

    #[test]
    fn initial_partition_already_optimal() {
        // one pilot, two compatible pairings: the only schedule using both
        let inst = instance(
            vec![pairing("a", 0, 2, 5.0), pairing("b", 4, 2, 5.0)],
            vec![vec![3, 4]],
            vec![vec![0, 1]],
        );
        let res = check(&inst, &audited());
        assert_eq!(res.value, vec![7]);
        assert_eq!(res.lower_bound, vec![7]);
        assert_eq!(res.schedules, vec![vec![0, 1]]);
    }

    #[test]
    fn level_two_decides() {
        // both assignments give pilot 0 a score of 5; pilot 1 prefers b
        let inst = instance(
            vec![pairing("a", 0, 3, 5.0), pairing("b", 1, 3, 5.0)],
            vec![vec![5, 5], vec![9, 2]],
            vec![vec![1], vec![0]],
        );
        let res = check(&inst, &audited());
        assert_eq!(res.value, vec![5, 9]);
    }

    #[test]
    fn small_random_instances_match_oracle() {
        for seed in 0..25u64 {
            let m = 2 + (seed % 3) as usize;
            let n = m + 2 + (seed % 5) as usize;
            let opts = GeneratorOptions {
                max_score: if seed % 2 == 0 { 100 } else { 3 },
                ..GeneratorOptions::default()
            };
            let inst = generate(seed, m, n, 30, &opts).unwrap();
            let on = check(&inst, &audited());
            let off = run(
                &inst,
                &ColgenParams {
                    reduction: false,
                    ..audited()
                },
            )
            .unwrap();
            assert_eq!(on.value, off.value);
            let nob = run(
                &inst,
                &ColgenParams {
                    use_bounds: false,
                    ..ColgenParams::default()
                },
            )
            .unwrap();
            assert_eq!(on.value, nob.value);
        }
    }

    #[test]
    fn shared_candidates_answer_junior_pilots() {
        let mut matched = 0;
        for seed in 0..40u64 {
            let inst = generate(seed, 4, 9, 30, &GeneratorOptions::default()).unwrap();
            let res = check(&inst, &audited());
            let a = res.audit.unwrap();
            matched += a.shared_checks;
        }
        assert!(matched > 0, "the shared search never served a pilot");
    }

    #[test]
    fn gap_threshold_examples() {
        let t = LexValue::from_finite(&[0.0, -2.0]);
        let excluded = LexValue::from_finite(&[0.0, -3.0]);
        let kept = LexValue::from_finite(&[0.0, -1.0]);
        assert!(excluded.lex_cmp(&t).is_lt());
        assert!(kept.lex_cmp(&t).is_ge());
    }

    #[test]
    fn first_differing_level_rules() {
        let path = |c: &[f64]| FoundPath {
            arcs: vec![],
            vertices: vec![],
            resource: (),
            cost: LexValue::from_finite(c),
        };
        let same = vec![path(&[1.0, 2.0]), path(&[1.0, 2.0])];
        assert_eq!(first_differing_level(&same, 1e-6), None);
        let third = vec![path(&[1.0, 2.0, 3.0]), path(&[1.0, 2.0, 5.0])];
        assert_eq!(first_differing_level(&third, 1e-6), Some(2));
    }
}
