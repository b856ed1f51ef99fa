use std::cmp::Ordering;

use super::{Instance, InstanceError, Rules};
use crate::lex::{cmp_slices_eps, LexValue};
use crate::llp::DualBundle;
use crate::rclpp::{Arc, ResourceSpace};

/// Days on, seven-days-off flag, flight hours and accumulated cost.
#[derive(Debug, Clone, PartialEq)]
pub struct PbsResource {
    pub days_on: u32,
    pub off_block: bool,
    pub hours: f64,
    pub cost: Vec<f64>,
}

impl PbsResource {
    pub fn zero(levels: usize) -> Self {
        PbsResource {
            days_on: 0,
            off_block: false,
            hours: 0.0,
            cost: vec![0.0; levels],
        }
    }
}

/// The resource space of a pairing graph under fixed per-vertex costs.
///
/// Vertex `v` contributes `vertex_cost(v)` when it is the head of an arc.
/// The sink is a pairing of length zero starting at the end of the month.
#[derive(Debug, Clone)]
pub struct PbsSpace {
    rules: Rules,
    tolerance: f64,
    levels: usize,
    sink: usize,
    first_day: Vec<i64>,
    last_day: Vec<i64>,
    days_on: Vec<u32>,
    hours: Vec<f64>,
    costs: Vec<f64>,
}

impl PbsSpace {
    /// `vertex_costs` has one vector per vertex: pairings, then `o`, then `d`.
    pub fn with_costs(inst: &Instance, levels: usize, vertex_costs: Vec<f64>) -> Self {
        let n = inst.num_pairings();
        assert_eq!(vertex_costs.len(), (n + 2) * levels);
        let mut first_day: Vec<i64> = inst.pairings.iter().map(|p| p.first_day()).collect();
        let mut last_day: Vec<i64> = inst.pairings.iter().map(|p| p.last_day()).collect();
        let mut days_on: Vec<u32> = inst.pairings.iter().map(|p| p.days_on()).collect();
        let mut hours: Vec<f64> = inst.pairings.iter().map(|p| p.flight_hours).collect();
        // o ends the day before the month, d starts the day after it
        first_day.extend([-1, inst.month_days as i64]);
        last_day.extend([-1, inst.month_days as i64]);
        days_on.extend([0, 0]);
        hours.extend([0.0, 0.0]);
        PbsSpace {
            rules: inst.rules,
            tolerance: 0.0,
            levels,
            sink: n + 1,
            first_day,
            last_day,
            days_on,
            hours,
            costs: vertex_costs,
        }
    }

    /// Pricing for pilot `i`: path cost is the reduced cost of the schedule.
    pub fn for_pilot(inst: &Instance, pilot: usize, duals: &DualBundle) -> Result<Self, InstanceError> {
        let (m, n) = (inst.num_pilots(), inst.num_pairings());
        check_duals(inst, duals)?;
        let mut costs = vec![0.0; (n + 2) * m];
        for (l, y) in duals.rows.iter().enumerate() {
            for p in 0..n {
                costs[p * m + l] = -y[m + p];
            }
            costs[(n + 1) * m + l] = -y[pilot];
        }
        for p in 0..n {
            costs[p * m + pilot] += inst.scores[pilot][p] as f64;
        }
        Ok(Self::with_costs(inst, m, costs))
    }

    /// The shared problem: maximize minus the pairing duals of levels `0..m-1`.
    pub fn for_reduction(inst: &Instance, duals: &DualBundle) -> Result<Self, InstanceError> {
        let (m, n) = (inst.num_pilots(), inst.num_pairings());
        check_duals(inst, duals)?;
        let k = m - 1;
        let mut costs = vec![0.0; (n + 2) * k];
        for (l, y) in duals.rows.iter().take(k).enumerate() {
            for p in 0..n {
                costs[p * k + l] = -y[m + p];
            }
        }
        Ok(Self::with_costs(inst, k, costs))
    }

    /// Makes the bounds valid for searches that treat cost entries within
    /// `tolerance` as equal.
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn vertex_cost(&self, v: usize) -> &[f64] {
        &self.costs[v * self.levels..(v + 1) * self.levels]
    }

    fn source(&self) -> usize {
        self.sink - 1
    }

    /// Shared arc step; `need_flag` marks the arc that must close a break.
    fn step(&self, a: Arc, r: &PbsResource, need_flag: bool) -> Option<PbsResource> {
        let gap = self.first_day[a.head] - self.last_day[a.tail] - 1;
        let off_block = r.off_block || gap >= self.rules.min_off_block as i64;
        if need_flag && !off_block {
            return None;
        }
        let days_on = r.days_on + self.days_on[a.head];
        let hours = r.hours + self.hours[a.head];
        if !self.rules.within_limits(days_on, hours) {
            return None;
        }
        let cost = r
            .cost
            .iter()
            .zip(self.vertex_cost(a.head))
            .map(|(x, y)| x + y)
            .collect();
        Some(PbsResource {
            days_on,
            off_block,
            hours,
            cost,
        })
    }
}

fn check_duals(inst: &Instance, duals: &DualBundle) -> Result<(), InstanceError> {
    let expected = inst.num_pilots() + inst.num_pairings();
    if duals.rows.len() != inst.num_pilots() {
        return Err(InstanceError::DualShape {
            got: duals.rows.len(),
            expected: inst.num_pilots(),
        });
    }
    match duals.rows.iter().find(|r| r.len() != expected) {
        Some(r) => Err(InstanceError::DualShape { got: r.len(), expected }),
        None => Ok(()),
    }
}

impl ResourceSpace for PbsSpace {
    type Resource = PbsResource;

    fn levels(&self) -> usize {
        self.levels
    }

    fn source_resource(&self) -> PbsResource {
        PbsResource::zero(self.levels)
    }

    fn sink_resource(&self) -> PbsResource {
        PbsResource::zero(self.levels)
    }

    fn extend(&self, a: Arc, r: &PbsResource) -> Option<PbsResource> {
        self.step(a, r, a.head == self.sink)
    }

    fn extend_backward(&self, a: Arc, r: &PbsResource) -> Option<PbsResource> {
        self.step(a, r, a.tail == self.source())
    }

    fn merge(&self, f: &PbsResource, b: &PbsResource) -> Option<PbsResource> {
        if !(f.off_block || b.off_block) {
            return None;
        }
        let days_on = f.days_on + b.days_on;
        let hours = f.hours + b.hours;
        if !self.rules.within_limits(days_on, hours) {
            return None;
        }
        Some(PbsResource {
            days_on,
            off_block: true,
            hours,
            cost: f.cost.iter().zip(&b.cost).map(|(x, y)| x + y).collect(),
        })
    }

    fn cost(&self, r: &PbsResource) -> LexValue {
        LexValue::from_finite(&r.cost)
    }

    fn leq(&self, a: &PbsResource, b: &PbsResource) -> bool {
        a.days_on <= b.days_on
            && a.off_block >= b.off_block
            && a.hours <= b.hours
            && cmp_slices_eps(&a.cost, &b.cost, 0.0) != Ordering::Less
    }

    fn meet(&self, a: &PbsResource, b: &PbsResource) -> PbsResource {
        // Lex-max of the costs. Under a tolerance, entries are maxed
        // componentwise up to the first clear difference, so that a near-tie
        // on one level cannot hide a larger value on the next.
        let margin = 2.0 * self.tolerance;
        let mut cost = Vec::with_capacity(a.cost.len());
        let mut winner = None;
        for (x, y) in a.cost.iter().zip(&b.cost) {
            match winner {
                Some(a_wins) => cost.push(if a_wins { *x } else { *y }),
                None => {
                    cost.push(x.max(*y));
                    if (x - y).abs() > margin {
                        winner = Some(x > y);
                    }
                }
            }
        }
        PbsResource {
            days_on: a.days_on.min(b.days_on),
            off_block: a.off_block || b.off_block,
            hours: a.hours.min(b.hours),
            cost,
        }
    }
}

/// Resource of the source-sink path through `pairings` (any order), or
/// `None` if the path does not exist or is infeasible.
pub fn path_cost(space: &PbsSpace, inst: &Instance, pairings: &[usize]) -> Option<PbsResource> {
    let mut ps = pairings.to_vec();
    ps.sort_by_key(|&p| (inst.pairings[p].start, inst.pairings[p].end));
    let n = inst.num_pairings();
    let mut r = space.source_resource();
    let mut tail = n;
    for &p in &ps {
        if tail != n && !inst.rules.follows(&inst.pairings[tail], &inst.pairings[p]) {
            return None;
        }
        r = space.extend(Arc { id: 0, tail, head: p }, &r)?;
        tail = p;
    }
    if tail == n {
        return None;
    }
    space.extend(
        Arc {
            id: 0,
            tail,
            head: n + 1,
        },
        &r,
    )
}

/// Cost of the path encoding schedule `pairings` in pilot `pilot`'s pricing
/// space. Matches the reduced cost of the column `(pilot, pairings)`.
pub fn sign_convention_check(
    inst: &Instance,
    pilot: usize,
    pairings: &[usize],
    duals: &DualBundle,
) -> Result<Option<LexValue>, InstanceError> {
    let space = PbsSpace::for_pilot(inst, pilot, duals)?;
    Ok(path_cost(&space, inst, pairings).map(|r| space.cost(&r)))
}
