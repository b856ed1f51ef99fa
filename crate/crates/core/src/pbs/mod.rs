//! Preferential bidding: pairings, schedule legality and per-pilot graphs.
//!
//! Times are minutes from the start of the month. A day starts at midnight,
//! and a pairing occupies every calendar day its closed interval
//! `[start, end]` touches.

mod generate;
mod resource;

pub use generate::{generate, GenerateError, GeneratorOptions};
pub use resource::{path_cost, sign_convention_check, PbsResource, PbsSpace};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rclpp::Dag;

pub const MINUTES_PER_DAY: i64 = 1440;
pub const MIN_SPAN_DAYS: u32 = 2;
pub const MAX_SPAN_DAYS: u32 = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InstanceError {
    #[error("instance has no pilots")]
    NoPilots,
    #[error("{0} pairings cannot cover {1} pilots with nonempty schedules")]
    TooFewPairings(usize, usize),
    #[error("pairing {id}: {reason}")]
    BadPairing { id: String, reason: String },
    #[error("score matrix must be {0} x {1}")]
    ScoreShape(usize, usize),
    #[error("initial partition: {0}")]
    BadPartition(String),
    #[error("duplicate id {0}")]
    DuplicateId(String),
    #[error("dual bundle has {got} entries per level, expected {expected}")]
    DualShape { got: usize, expected: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pairing {
    pub id: String,
    pub start: i64,
    pub end: i64,
    pub flight_hours: f64,
    /// Kept for the weekly working-hours rule, which is not enforced.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub working_hours: Option<f64>,
}

impl Pairing {
    pub fn first_day(&self) -> i64 {
        self.start.div_euclid(MINUTES_PER_DAY)
    }

    pub fn last_day(&self) -> i64 {
        self.end.div_euclid(MINUTES_PER_DAY)
    }

    pub fn days_on(&self) -> u32 {
        (self.last_day() - self.first_day() + 1) as u32
    }
}

/// Legality limits of a monthly schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Rules {
    pub max_days_on: u32,
    pub min_off_block: u32,
    pub max_flight_hours: f64,
    /// Minimum minutes between the end of a pairing and the start of the next.
    pub min_rest_minutes: i64,
}

impl Default for Rules {
    fn default() -> Self {
        Rules {
            max_days_on: 17,
            min_off_block: 7,
            max_flight_hours: 85.0,
            min_rest_minutes: 0,
        }
    }
}

pub(crate) const HOURS_SLACK: f64 = 1e-9;

impl Rules {
    pub fn within_limits(&self, days_on: u32, hours: f64) -> bool {
        days_on <= self.max_days_on && hours <= self.max_flight_hours + HOURS_SLACK
    }

    /// Whether `q` can be flown after `p` by the same pilot.
    pub fn follows(&self, p: &Pairing, q: &Pairing) -> bool {
        p.end + self.min_rest_minutes < q.start
    }

    pub fn overlap(&self, p: &Pairing, q: &Pairing) -> bool {
        !self.follows(p, q) && !self.follows(q, p)
    }
}

/// A validated problem: pilots in seniority order (index 0 most senior).
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub month_days: u32,
    pub pilots: Vec<String>,
    pub pairings: Vec<Pairing>,
    /// `scores[i][p]`: integer score of pairing `p` for pilot `i`.
    pub scores: Vec<Vec<i64>>,
    /// One nonempty feasible schedule per pilot, covering every pairing once.
    pub initial_partition: Vec<Vec<usize>>,
    pub rules: Rules,
}

impl Instance {
    pub fn new(
        month_days: u32,
        pilots: Vec<String>,
        pairings: Vec<Pairing>,
        scores: Vec<Vec<i64>>,
        initial_partition: Vec<Vec<usize>>,
        rules: Rules,
    ) -> Result<Self, InstanceError> {
        let inst = Instance {
            month_days,
            pilots,
            pairings,
            scores,
            initial_partition: initial_partition
                .into_iter()
                .map(|mut s| {
                    s.sort_unstable();
                    s
                })
                .collect(),
            rules,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn num_pilots(&self) -> usize {
        self.pilots.len()
    }

    pub fn num_pairings(&self) -> usize {
        self.pairings.len()
    }

    fn validate(&self) -> Result<(), InstanceError> {
        let (m, n) = (self.num_pilots(), self.num_pairings());
        if m == 0 {
            return Err(InstanceError::NoPilots);
        }
        if n < m {
            return Err(InstanceError::TooFewPairings(n, m));
        }
        let mut seen = std::collections::BTreeSet::new();
        for id in self.pilots.iter().chain(self.pairings.iter().map(|p| &p.id)) {
            if !seen.insert(id.as_str()) {
                return Err(InstanceError::DuplicateId(id.clone()));
            }
        }
        let horizon = self.month_days as i64 * MINUTES_PER_DAY;
        for p in &self.pairings {
            let bad = |reason: &str| InstanceError::BadPairing {
                id: p.id.clone(),
                reason: reason.to_string(),
            };
            if p.start >= p.end {
                return Err(bad("start must precede end"));
            }
            if p.start < 0 || p.end >= horizon {
                return Err(bad("must lie within the month"));
            }
            if !(MIN_SPAN_DAYS..=MAX_SPAN_DAYS).contains(&p.days_on()) {
                return Err(bad("must span 2 to 8 calendar days"));
            }
            if !(p.flight_hours.is_finite() && p.flight_hours >= 0.0) {
                return Err(bad("flight hours must be a nonnegative number"));
            }
        }
        if self.scores.len() != m || self.scores.iter().any(|r| r.len() != n) {
            return Err(InstanceError::ScoreShape(m, n));
        }
        if self.initial_partition.len() != m {
            return Err(InstanceError::BadPartition(format!("expected {m} schedules")));
        }
        let mut covered = vec![false; n];
        for (i, s) in self.initial_partition.iter().enumerate() {
            if s.is_empty() {
                return Err(InstanceError::BadPartition(format!(
                    "pilot {} has no pairing",
                    self.pilots[i]
                )));
            }
            for &p in s {
                if p >= n {
                    return Err(InstanceError::BadPartition(format!("pairing index {p} out of range")));
                }
                if std::mem::replace(&mut covered[p], true) {
                    return Err(InstanceError::BadPartition(format!(
                        "pairing {} assigned twice",
                        self.pairings[p].id
                    )));
                }
            }
            if !is_feasible(self, s) {
                return Err(InstanceError::BadPartition(format!(
                    "schedule of pilot {} is infeasible",
                    self.pilots[i]
                )));
            }
        }
        if let Some(p) = covered.iter().position(|c| !c) {
            return Err(InstanceError::BadPartition(format!(
                "pairing {} is not assigned",
                self.pairings[p].id
            )));
        }
        Ok(())
    }

    /// `c_is`: the sum of the pilot's scores over the schedule.
    pub fn score(&self, pilot: usize, pairings: &[usize]) -> i64 {
        pairings.iter().map(|&p| self.scores[pilot][p]).sum()
    }

    /// Score vector of an assignment of one schedule per pilot.
    pub fn score_vector(&self, schedules: &[Vec<usize>]) -> Vec<i64> {
        schedules.iter().enumerate().map(|(i, s)| self.score(i, s)).collect()
    }

    /// Whether the schedules are feasible and partition the pairings.
    pub fn is_partition(&self, schedules: &[Vec<usize>]) -> bool {
        if schedules.len() != self.num_pilots() {
            return false;
        }
        let mut covered = vec![false; self.num_pairings()];
        for s in schedules {
            for &p in s {
                if p >= covered.len() || std::mem::replace(&mut covered[p], true) {
                    return false;
                }
            }
            if s.is_empty() || !is_feasible(self, s) {
                return false;
            }
        }
        covered.iter().all(|&c| c)
    }
}

/// Legality of a set of pairings as one pilot's monthly schedule.
pub fn is_feasible(inst: &Instance, pairings: &[usize]) -> bool {
    let mut ps: Vec<&Pairing> = pairings.iter().map(|&p| &inst.pairings[p]).collect();
    ps.sort_by_key(|p| (p.start, p.end));
    let rules = &inst.rules;
    if ps.windows(2).any(|w| !rules.follows(w[0], w[1])) {
        return false;
    }
    let days: u32 = ps.iter().map(|p| p.days_on()).sum();
    let hours: f64 = ps.iter().map(|p| p.flight_hours).sum();
    if !rules.within_limits(days, hours) {
        return false;
    }
    let mut off = vec![true; inst.month_days as usize];
    for p in &ps {
        for d in p.first_day()..=p.last_day() {
            off[d as usize] = false;
        }
    }
    let mut run = 0;
    for o in off {
        run = if o { run + 1 } else { 0 };
        if run >= rules.min_off_block {
            return true;
        }
    }
    false
}

/// A pilot's graph: vertices are the pairings, then `o`, then `d`.
pub fn build_dag(inst: &Instance) -> Dag {
    let n = inst.num_pairings();
    let (o, d) = (n, n + 1);
    let mut arcs: Vec<(usize, usize)> = (0..n).map(|p| (o, p)).collect();
    for p in 0..n {
        for q in 0..n {
            if inst.rules.follows(&inst.pairings[p], &inst.pairings[q]) {
                arcs.push((p, q));
            }
        }
        arcs.push((p, d));
    }
    Dag::new(n + 2, o, d, arcs).expect("time order makes the pairing graph acyclic")
}

/// Pairings of a source-sink path, in time order.
pub fn schedule_of_path(inst: &Instance, vertices: &[usize]) -> Vec<usize> {
    let n = inst.num_pairings();
    vertices.iter().copied().filter(|&v| v < n).collect()
}
