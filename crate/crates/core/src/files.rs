//! JSON instance and solution files.
//!
//! Times are minutes from the start of the month. Scores are sparse: a
//! missing `(pilot, pairing)` entry scores zero.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::colgen::{RunResult, RunStats};
use crate::pbs::{Instance, InstanceError, Pairing, Rules};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FileError {
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported schema_version {0} (expected {SCHEMA_VERSION})")]
    SchemaVersion(u32),
    #[error("unknown pilot id {0:?}")]
    UnknownPilot(String),
    #[error("unknown pairing id {0:?}")]
    UnknownPairing(String),
    #[error("duplicate score entry for pilot {pilot:?} and pairing {pairing:?}")]
    DuplicateScore { pilot: String, pairing: String },
    #[error("pilot {0:?} appears twice in initial_partition")]
    DuplicateSchedule(String),
    #[error("invalid solution: {0}")]
    Solution(String),
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

impl From<serde_json::Error> for FileError {
    fn from(e: serde_json::Error) -> Self {
        let message = e.to_string();
        // serde_json appends the position to its message
        let message = match message.rfind(" at line ") {
            Some(i) => message[..i].to_string(),
            None => message,
        };
        FileError::Parse {
            line: e.line(),
            column: e.column(),
            message,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreEntry {
    pub pilot: String,
    pub pairing: String,
    pub score: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleEntry {
    pub pilot: String,
    pub pairings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub schema_version: u32,
    pub month_days: u32,
    /// Pilot ids, most senior first.
    pub pilots: Vec<String>,
    pub pairings: Vec<Pairing>,
    pub scores: Vec<ScoreEntry>,
    pub initial_partition: Vec<ScheduleEntry>,
    #[serde(default)]
    pub rules: Rules,
}

impl InstanceFile {
    pub fn parse(text: &str) -> Result<Self, FileError> {
        let file: InstanceFile = serde_json::from_str(text)?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(FileError::SchemaVersion(file.schema_version));
        }
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("instance files serialize");
        s.push('\n');
        s
    }

    pub fn from_instance(inst: &Instance) -> Self {
        let mut scores = Vec::new();
        for (i, row) in inst.scores.iter().enumerate() {
            for (p, &g) in row.iter().enumerate() {
                if g != 0 {
                    scores.push(ScoreEntry {
                        pilot: inst.pilots[i].clone(),
                        pairing: inst.pairings[p].id.clone(),
                        score: g,
                    });
                }
            }
        }
        InstanceFile {
            schema_version: SCHEMA_VERSION,
            month_days: inst.month_days,
            pilots: inst.pilots.clone(),
            pairings: inst.pairings.clone(),
            scores,
            initial_partition: inst
                .initial_partition
                .iter()
                .enumerate()
                .map(|(i, s)| ScheduleEntry {
                    pilot: inst.pilots[i].clone(),
                    pairings: s.iter().map(|&p| inst.pairings[p].id.clone()).collect(),
                })
                .collect(),
            rules: inst.rules,
        }
    }

    /// Resolves ids and validates the instance.
    pub fn to_instance(&self) -> Result<Instance, FileError> {
        let pilot_index = index_of(&self.pilots, |s| s.as_str())?;
        let pairing_index = index_of(&self.pairings, |p| p.id.as_str())?;
        let pilot = |id: &str| {
            pilot_index
                .get(id)
                .copied()
                .ok_or_else(|| FileError::UnknownPilot(id.into()))
        };
        let pairing = |id: &str| {
            pairing_index
                .get(id)
                .copied()
                .ok_or_else(|| FileError::UnknownPairing(id.into()))
        };

        let mut scores = vec![vec![0; self.pairings.len()]; self.pilots.len()];
        let mut seen = BTreeMap::new();
        for e in &self.scores {
            let (i, p) = (pilot(&e.pilot)?, pairing(&e.pairing)?);
            if seen.insert((i, p), ()).is_some() {
                return Err(FileError::DuplicateScore {
                    pilot: e.pilot.clone(),
                    pairing: e.pairing.clone(),
                });
            }
            scores[i][p] = e.score;
        }

        let mut partition: Vec<Option<Vec<usize>>> = vec![None; self.pilots.len()];
        for s in &self.initial_partition {
            let i = pilot(&s.pilot)?;
            if partition[i].is_some() {
                return Err(FileError::DuplicateSchedule(s.pilot.clone()));
            }
            partition[i] = Some(s.pairings.iter().map(|id| pairing(id)).collect::<Result<_, _>>()?);
        }
        let partition = partition.into_iter().map(Option::unwrap_or_default).collect();
        Ok(Instance::new(
            self.month_days,
            self.pilots.clone(),
            self.pairings.clone(),
            scores,
            partition,
            self.rules,
        )?)
    }
}

fn index_of<T>(items: &[T], id: impl Fn(&T) -> &str) -> Result<HashMap<&str, usize>, FileError> {
    let mut map = HashMap::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        if map.insert(id(item), i).is_some() {
            return Err(InstanceError::DuplicateId(id(item).to_string()).into());
        }
    }
    Ok(map)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleOut {
    pub pilot: String,
    pub pairings: Vec<String>,
    pub score: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionFile {
    pub schema_version: u32,
    pub status: String,
    /// Score vector of the schedules, most senior pilot first.
    pub value: Vec<i64>,
    /// Value of the final linear relaxation.
    pub upper_bound: Vec<f64>,
    /// Value of the first integer solve.
    pub lower_bound: Vec<i64>,
    pub schedules: Vec<ScheduleOut>,
    pub stats: RunStats,
}

impl SolutionFile {
    pub fn parse(text: &str) -> Result<Self, FileError> {
        let file: SolutionFile = serde_json::from_str(text)?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(FileError::SchemaVersion(file.schema_version));
        }
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("solution files serialize");
        s.push('\n');
        s
    }

    pub fn from_result(inst: &Instance, res: &RunResult) -> Self {
        SolutionFile {
            schema_version: SCHEMA_VERSION,
            status: "optimal".into(),
            value: res.value.clone(),
            upper_bound: res.upper_bound.to_finite().unwrap_or_default(),
            lower_bound: res.lower_bound.clone(),
            schedules: res
                .schedules
                .iter()
                .enumerate()
                .map(|(i, s)| ScheduleOut {
                    pilot: inst.pilots[i].clone(),
                    pairings: s.iter().map(|&p| inst.pairings[p].id.clone()).collect(),
                    score: inst.score(i, s),
                })
                .collect(),
            stats: res.stats.clone(),
        }
    }

    /// Checks the schedules against `inst`: one per pilot in order, legal,
    /// together a partition, with the recorded scores and value.
    pub fn validate(&self, inst: &Instance) -> Result<(), FileError> {
        let bad = |msg: String| Err(FileError::Solution(msg));
        if self.schedules.len() != inst.num_pilots() {
            return bad(format!(
                "{} schedules for {} pilots",
                self.schedules.len(),
                inst.num_pilots()
            ));
        }
        let index = index_of(&inst.pairings, |p| p.id.as_str())?;
        let mut schedules = Vec::with_capacity(self.schedules.len());
        for (i, s) in self.schedules.iter().enumerate() {
            if s.pilot != inst.pilots[i] {
                return bad(format!(
                    "schedule {i} belongs to {:?}, expected {:?}",
                    s.pilot, inst.pilots[i]
                ));
            }
            let mut ps = s
                .pairings
                .iter()
                .map(|id| {
                    index
                        .get(id.as_str())
                        .copied()
                        .ok_or_else(|| FileError::UnknownPairing(id.clone()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            ps.sort_unstable();
            if inst.score(i, &ps) != s.score {
                return bad(format!(
                    "pilot {:?} scores {}, recorded {}",
                    s.pilot,
                    inst.score(i, &ps),
                    s.score
                ));
            }
            schedules.push(ps);
        }
        if !inst.is_partition(&schedules) {
            return bad("schedules are not a partition of the pairings into legal schedules".into());
        }
        if inst.score_vector(&schedules) != self.value {
            return bad("value differs from the recomputed score vector".into());
        }
        Ok(())
    }
}
