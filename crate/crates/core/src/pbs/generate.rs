use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::{is_feasible, Instance, InstanceError, Pairing, Rules, MAX_SPAN_DAYS, MINUTES_PER_DAY, MIN_SPAN_DAYS};

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorOptions {
    /// Scores are drawn uniformly from `0..=max_score`.
    pub max_score: i64,
    pub rules: Rules,
    /// Attempts at packing one pilot's schedule.
    pub max_attempts: usize,
}

impl Default for GeneratorOptions {
    fn default() -> Self {
        GeneratorOptions {
            max_score: 100,
            rules: Rules::default(),
            max_attempts: 500,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenerateError {
    #[error("need at least one pairing per pilot ({pairings} pairings, {pilots} pilots)")]
    TooFewPairings { pairings: usize, pilots: usize },
    #[error("could not pack {per_pilot} pairings into one legal {month_days}-day schedule; try fewer pairings")]
    Packing { per_pilot: usize, month_days: u32 },
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

/// A random instance that is feasible by construction.
///
/// The pairings are dealt to pilots first: each pilot receives a legal
/// schedule of `n/m` or `n/m + 1` pairings, which becomes the initial
/// partition. Scores are drawn afterwards. The same arguments always give
/// the same instance.
pub fn generate(
    seed: u64,
    pilots: usize,
    pairings: usize,
    month_days: u32,
    opts: &GeneratorOptions,
) -> Result<Instance, GenerateError> {
    if pilots == 0 || pairings < pilots {
        return Err(GenerateError::TooFewPairings { pairings, pilots });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut all: Vec<(Pairing, usize)> = Vec::with_capacity(pairings);
    for i in 0..pilots {
        let k = pairings / pilots + usize::from(i < pairings % pilots);
        let schedule = pack(&mut rng, k, month_days, opts).ok_or(GenerateError::Packing {
            per_pilot: k,
            month_days,
        })?;
        all.extend(schedule.into_iter().map(|p| (p, i)));
    }
    all.sort_by_key(|(p, i)| (p.start, p.end, *i));
    let width = pairings.to_string().len();
    let mut partition = vec![Vec::new(); pilots];
    let mut list = Vec::with_capacity(pairings);
    for (idx, (mut p, i)) in all.into_iter().enumerate() {
        p.id = format!("R{:0width$}", idx + 1);
        partition[i].push(idx);
        list.push(p);
    }
    let pw = pilots.to_string().len();
    let names = (1..=pilots).map(|i| format!("P{i:0pw$}")).collect();
    let scores = (0..pilots)
        .map(|_| (0..pairings).map(|_| rng.gen_range(0..=opts.max_score)).collect())
        .collect();
    Ok(Instance::new(month_days, names, list, scores, partition, opts.rules)?)
}

fn pack(rng: &mut ChaCha8Rng, k: usize, month_days: u32, opts: &GeneratorOptions) -> Option<Vec<Pairing>> {
    let rules = &opts.rules;
    let month = month_days as i64;
    for _ in 0..opts.max_attempts {
        let spans = sample_spans(rng, k, rules.max_days_on as i64)?;
        let total: i64 = spans.iter().sum();
        let free = month - total - rules.min_off_block as i64;
        if free < 0 {
            continue;
        }
        // one break of at least the required length, the rest spread at random
        let mut gaps = vec![0i64; k + 1];
        gaps[rng.gen_range(0..=k)] += rules.min_off_block as i64;
        for _ in 0..free {
            gaps[rng.gen_range(0..=k)] += 1;
        }
        let mut hours: Vec<f64> = spans
            .iter()
            .map(|&s| s as f64 * rng.gen_range(4..=14) as f64 / 2.0)
            .collect();
        let sum: f64 = hours.iter().sum();
        if sum > rules.max_flight_hours {
            let f = rules.max_flight_hours / sum;
            for h in &mut hours {
                *h = (*h * f * 2.0).floor() / 2.0;
            }
        }
        let mut day = gaps[0];
        let mut out = Vec::with_capacity(k);
        for j in 0..k {
            let last = day + spans[j] - 1;
            out.push(Pairing {
                id: String::new(),
                start: day * MINUTES_PER_DAY + rng.gen_range(60..=144) * 5,
                end: last * MINUTES_PER_DAY + rng.gen_range(144..=264) * 5,
                flight_hours: hours[j],
                working_hours: None,
            });
            day = last + 1 + gaps[j + 1];
        }
        out.shuffle(rng);
        if legal(&out, month_days, rules) {
            return Some(out);
        }
    }
    None
}

/// Spans of 2 to 8 days with a total within `budget`, in random order.
fn sample_spans(rng: &mut ChaCha8Rng, k: usize, budget: i64) -> Option<Vec<i64>> {
    let (lo, hi) = (MIN_SPAN_DAYS as i64, MAX_SPAN_DAYS as i64);
    let mut left = budget - lo * k as i64;
    if left < 0 {
        return None;
    }
    let mut spans: Vec<i64> = (0..k)
        .map(|_| {
            let extra = rng.gen_range(0..=left.min(hi - lo));
            left -= extra;
            lo + extra
        })
        .collect();
    spans.shuffle(rng);
    Some(spans)
}

fn legal(ps: &[Pairing], month_days: u32, rules: &Rules) -> bool {
    let inst = Instance {
        month_days,
        pilots: Vec::new(),
        pairings: ps.to_vec(),
        scores: Vec::new(),
        initial_partition: Vec::new(),
        rules: *rules,
    };
    let all: Vec<usize> = (0..ps.len()).collect();
    is_feasible(&inst, &all)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pbs::build_dag;

    #[test]
    fn deterministic_per_seed() {
        let opts = GeneratorOptions::default();
        let a = generate(1, 2, 4, 30, &opts).unwrap();
        let b = generate(1, 2, 4, 30, &opts).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate(2, 2, 4, 30, &opts).unwrap());
    }

    #[test]
    fn partitions_are_valid() {
        let opts = GeneratorOptions::default();
        for seed in 0..100 {
            let m = 1 + (seed as usize % 5);
            let n = m + seed as usize % (3 * m + 1);
            let inst = generate(seed, m, n, 30, &opts).unwrap();
            assert!(inst.is_partition(&inst.initial_partition));
            assert!(inst.scores.iter().flatten().all(|&g| (0..=100).contains(&g)));
        }
    }

    #[test]
    fn table_scale() {
        let inst = generate(7, 17, 69, 30, &GeneratorOptions::default()).unwrap();
        assert_eq!((inst.num_pilots(), inst.num_pairings()), (17, 69));
        assert_eq!(build_dag(&inst).num_vertices(), 71);
    }

    #[test]
    fn packing_failure_is_reported() {
        let err = generate(1, 1, 9, 30, &GeneratorOptions::default()).unwrap_err();
        assert!(matches!(err, GenerateError::Packing { per_pilot: 9, .. }));
        assert!(err.to_string().contains("fewer pairings"));
    }
}
