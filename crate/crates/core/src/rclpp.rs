//! Lexicographic resource-constrained longest paths on acyclic graphs.
//!
//! A [`ResourceSpace`] describes how resources grow along arcs (forward from
//! the source and backward from the sink), how a forward and a backward
//! resource are merged, and the cost of a resource. `None` stands for the
//! top element: an infeasible resource, whose cost is `(-inf, ..., -inf)`.
//!
//! [`compute_bounds`] solves the backward meet recursion once per graph and
//! cost setting. The label-setting search then enumerates feasible partial
//! paths, discarding those whose merged bound cannot beat the current
//! incumbent. Three searches share the engine: a single optimum, the `N`
//! best paths, and every path at or above a threshold.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lex::LexValue;

pub type ArcId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Arc {
    pub id: ArcId,
    pub tail: usize,
    pub head: usize,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DagError {
    #[error("arc ({0}, {1}) references a missing vertex")]
    BadArc(usize, usize),
    #[error("the graph has a cycle")]
    Cycle,
}

/// A directed acyclic graph with a source `o` and a sink `d`.
#[derive(Debug, Clone)]
pub struct Dag {
    vertices: usize,
    source: usize,
    sink: usize,
    arcs: Vec<(usize, usize)>,
    out: Vec<Vec<ArcId>>,
    topo: Vec<usize>,
    topo_pos: Vec<usize>,
}

impl Dag {
    pub fn new(vertices: usize, source: usize, sink: usize, arcs: Vec<(usize, usize)>) -> Result<Self, DagError> {
        if source >= vertices || sink >= vertices {
            return Err(DagError::BadArc(source, sink));
        }
        let mut out = vec![Vec::new(); vertices];
        let mut indeg = vec![0usize; vertices];
        for (id, &(t, h)) in arcs.iter().enumerate() {
            if t >= vertices || h >= vertices {
                return Err(DagError::BadArc(t, h));
            }
            out[t].push(id);
            indeg[h] += 1;
        }
        // Kahn's algorithm, smallest vertex first for a canonical order.
        let mut ready: BinaryHeap<Reverse<usize>> = (0..vertices).filter(|&v| indeg[v] == 0).map(Reverse).collect();
        let mut topo = Vec::with_capacity(vertices);
        while let Some(Reverse(v)) = ready.pop() {
            topo.push(v);
            for &a in &out[v] {
                let h = arcs[a].1;
                indeg[h] -= 1;
                if indeg[h] == 0 {
                    ready.push(Reverse(h));
                }
            }
        }
        if topo.len() != vertices {
            return Err(DagError::Cycle);
        }
        let mut topo_pos = vec![0; vertices];
        for (i, &v) in topo.iter().enumerate() {
            topo_pos[v] = i;
        }
        Ok(Dag {
            vertices,
            source,
            sink,
            arcs,
            out,
            topo,
            topo_pos,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices
    }

    pub fn num_arcs(&self) -> usize {
        self.arcs.len()
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    pub fn arc(&self, id: ArcId) -> Arc {
        let (tail, head) = self.arcs[id];
        Arc { id, tail, head }
    }

    pub fn arcs(&self) -> impl Iterator<Item = Arc> + '_ {
        (0..self.arcs.len()).map(|id| self.arc(id))
    }

    pub fn out_arcs(&self, v: usize) -> impl Iterator<Item = Arc> + '_ {
        self.out[v].iter().map(|&id| self.arc(id))
    }

    pub fn topological_order(&self) -> &[usize] {
        &self.topo
    }

    pub fn topological_position(&self, v: usize) -> usize {
        self.topo_pos[v]
    }

    /// Vertices lying on some source-sink walk.
    pub fn useful_vertices(&self) -> Vec<bool> {
        let mut from_source = vec![false; self.vertices];
        from_source[self.source] = true;
        for &v in &self.topo {
            if from_source[v] {
                for a in self.out_arcs(v) {
                    from_source[a.head] = true;
                }
            }
        }
        let mut to_sink = vec![false; self.vertices];
        to_sink[self.sink] = true;
        for &v in self.topo.iter().rev() {
            if self.out_arcs(v).any(|a| to_sink[a.head]) {
                to_sink[v] = true;
            }
        }
        from_source.iter().zip(&to_sink).map(|(a, b)| *a && *b).collect()
    }
}

/// Resources, their extension maps and costs. `None` is the top element.
pub trait ResourceSpace {
    type Resource: Clone;

    /// Length of cost vectors.
    fn levels(&self) -> usize;
    /// Resource of the path reduced to the source.
    fn source_resource(&self) -> Self::Resource;
    /// Backward resource of the path reduced to the sink.
    fn sink_resource(&self) -> Self::Resource;
    /// Forward extension `f_a`.
    fn extend(&self, arc: Arc, r: &Self::Resource) -> Option<Self::Resource>;
    /// Backward extension `g_a`.
    fn extend_backward(&self, arc: Arc, r: &Self::Resource) -> Option<Self::Resource>;
    /// Merge `h` of a forward and a backward resource.
    fn merge(&self, forward: &Self::Resource, backward: &Self::Resource) -> Option<Self::Resource>;
    /// Cost `c` of a non-top resource.
    fn cost(&self, r: &Self::Resource) -> LexValue;
    /// The partial order on non-top resources.
    fn leq(&self, a: &Self::Resource, b: &Self::Resource) -> bool;
    /// Greatest lower bound of two non-top resources.
    fn meet(&self, a: &Self::Resource, b: &Self::Resource) -> Self::Resource;

    /// Cost of a possibly-top resource.
    fn cost_of(&self, r: Option<&Self::Resource>) -> LexValue {
        match r {
            Some(r) => self.cost(r),
            None => LexValue::neg_inf(self.levels()),
        }
    }
}

/// Per-vertex lower bounds `b_v` on the backward resources of `v`-sink paths.
#[derive(Debug, Clone)]
pub struct BoundTable<R> {
    pub bounds: Vec<Option<R>>,
}

impl<R> BoundTable<R> {
    pub fn get(&self, v: usize) -> Option<&R> {
        self.bounds[v].as_ref()
    }
}

/// Solves `b_d = r'_d`, `b_v = meet over (v, w) of g_(v,w)(b_w)` in reverse
/// topological order. Vertices without a feasible path to the sink get top.
pub fn compute_bounds<S: ResourceSpace>(dag: &Dag, space: &S) -> BoundTable<S::Resource> {
    let mut bounds: Vec<Option<S::Resource>> = vec![None; dag.num_vertices()];
    for &v in dag.topological_order().iter().rev() {
        if v == dag.sink() {
            bounds[v] = Some(space.sink_resource());
            continue;
        }
        let mut acc: Option<S::Resource> = None;
        for a in dag.out_arcs(v) {
            let Some(bw) = &bounds[a.head] else { continue };
            let Some(g) = space.extend_backward(a, bw) else {
                continue;
            };
            acc = Some(match acc {
                None => g,
                Some(cur) => space.meet(&cur, &g),
            });
        }
        bounds[v] = acc;
    }
    BoundTable { bounds }
}

/// Switches of the label-setting search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    /// Discard partial paths by their merged bound (and stop early on keys).
    pub use_bounds: bool,
    /// Extract the partial path with the largest key instead of FIFO.
    pub key_priority: bool,
    /// Extend along arcs whose head is latest in topological order first.
    pub topological_arcs: bool,
    /// Resource dominance between partial paths; honored by the
    /// single-optimum search only.
    pub dominance: bool,
    /// Finite cost entries within this distance compare equal.
    pub tolerance: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            use_bounds: true,
            key_priority: true,
            topological_arcs: true,
            dominance: false,
            tolerance: 0.0,
        }
    }
}

/// Work counters of one or more searches.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStats {
    pub saved_paths: u64,
    pub cuts_by_lb: u64,
    pub dominated: u64,
    pub extracted: u64,
}

impl std::ops::AddAssign for SearchStats {
    fn add_assign(&mut self, o: SearchStats) {
        self.saved_paths += o.saved_paths;
        self.cuts_by_lb += o.cuts_by_lb;
        self.dominated += o.dominated;
        self.extracted += o.extracted;
    }
}

/// A feasible source-sink path.
#[derive(Debug, Clone, PartialEq)]
pub struct FoundPath<R> {
    pub arcs: Vec<ArcId>,
    /// Vertices from source to sink.
    pub vertices: Vec<usize>,
    pub resource: R,
    pub cost: LexValue,
}

pub fn solve_lex_longest<S: ResourceSpace>(
    dag: &Dag,
    space: &S,
    bounds: &BoundTable<S::Resource>,
    opts: &SearchOptions,
) -> (Option<FoundPath<S::Resource>>, SearchStats) {
    let (mut paths, stats) = Engine::new(dag, space, bounds, opts, Mode::Best).run();
    (paths.pop(), stats)
}

/// The `n` paths of largest cost (all of them if fewer exist), sorted by
/// decreasing cost. At the cutoff, earlier-found paths are kept.
pub fn solve_n_best<S: ResourceSpace>(
    dag: &Dag,
    space: &S,
    bounds: &BoundTable<S::Resource>,
    n: usize,
    opts: &SearchOptions,
) -> (Vec<FoundPath<S::Resource>>, SearchStats) {
    assert!(n >= 1, "n-best search needs n >= 1");
    Engine::new(dag, space, bounds, opts, Mode::NBest(n, None)).run()
}

/// Like [`solve_n_best`], restricted to paths with cost `>_lex floor`.
pub fn solve_n_best_above<S: ResourceSpace>(
    dag: &Dag,
    space: &S,
    bounds: &BoundTable<S::Resource>,
    n: usize,
    floor: &LexValue,
    opts: &SearchOptions,
) -> (Vec<FoundPath<S::Resource>>, SearchStats) {
    assert!(n >= 1, "n-best search needs n >= 1");
    Engine::new(dag, space, bounds, opts, Mode::NBest(n, Some(floor.clone()))).run()
}

/// Every feasible path with cost `>=_lex threshold`, sorted by decreasing cost.
pub fn solve_above_threshold<S: ResourceSpace>(
    dag: &Dag,
    space: &S,
    bounds: &BoundTable<S::Resource>,
    threshold: &LexValue,
    opts: &SearchOptions,
) -> (Vec<FoundPath<S::Resource>>, SearchStats) {
    Engine::new(dag, space, bounds, opts, Mode::Threshold(threshold.clone())).run()
}

enum Mode {
    Best,
    NBest(usize, Option<LexValue>),
    Threshold(LexValue),
}

const NO_PARENT: u32 = u32::MAX;

struct LabelNode {
    vertex: u32,
    parent: u32,
    arc: u32,
}

struct Keyed {
    key: LexValue,
    seq: u64,
    label: u32,
}

impl PartialEq for Keyed {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Keyed {}
impl PartialOrd for Keyed {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Keyed {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.lex_cmp(&other.key).then(other.seq.cmp(&self.seq))
    }
}

struct Solution<R> {
    label: u32,
    resource: R,
    cost: LexValue,
    found: u64,
}

struct Engine<'a, S: ResourceSpace> {
    dag: &'a Dag,
    space: &'a S,
    bounds: &'a BoundTable<S::Resource>,
    opts: SearchOptions,
    mode: Mode,
    labels: Vec<LabelNode>,
    /// Resources of labels waiting for extension.
    pending: Vec<Option<S::Resource>>,
    heap: BinaryHeap<Keyed>,
    fifo: VecDeque<(u32, LexValue)>,
    /// Live labels per vertex, kept only with dominance.
    lists: Vec<Vec<u32>>,
    seq: u64,
    found: u64,
    solutions: Vec<Solution<S::Resource>>,
    best_cost: LexValue,
    smallest_cost: LexValue,
    stats: SearchStats,
}

impl<'a, S: ResourceSpace> Engine<'a, S> {
    fn new(dag: &'a Dag, space: &'a S, bounds: &'a BoundTable<S::Resource>, opts: &SearchOptions, mode: Mode) -> Self {
        let m = space.levels();
        let mut opts = *opts;
        if !matches!(mode, Mode::Best) {
            opts.dominance = false;
        }
        Engine {
            dag,
            space,
            bounds,
            opts,
            mode,
            labels: Vec::new(),
            pending: Vec::new(),
            heap: BinaryHeap::new(),
            fifo: VecDeque::new(),
            lists: if opts.dominance {
                vec![Vec::new(); dag.num_vertices()]
            } else {
                Vec::new()
            },
            seq: 0,
            found: 0,
            solutions: Vec::new(),
            best_cost: LexValue::neg_inf(m),
            smallest_cost: LexValue::pos_inf(m),
            stats: SearchStats::default(),
        }
    }

    fn gt(&self, a: &LexValue, b: &LexValue) -> bool {
        a.lex_cmp_eps(b, self.opts.tolerance) == Ordering::Greater
    }

    fn ge(&self, a: &LexValue, b: &LexValue) -> bool {
        a.lex_cmp_eps(b, self.opts.tolerance) != Ordering::Less
    }

    fn key(&self, r: &S::Resource, v: usize) -> LexValue {
        let merged = self.bounds.get(v).and_then(|b| self.space.merge(r, b));
        self.space.cost_of(merged.as_ref())
    }

    /// Whether a partial path with this key may still lead to a kept path.
    fn key_passes(&self, key: &LexValue) -> bool {
        match &self.mode {
            Mode::Best => self.gt(key, &self.best_cost),
            Mode::NBest(n, floor) => {
                (self.solutions.len() < *n || self.gt(key, &self.smallest_cost))
                    && floor.as_ref().is_none_or(|f| self.gt(key, f))
            }
            Mode::Threshold(t) => self.ge(key, t),
        }
    }

    fn push_label(&mut self, vertex: usize, parent: u32, arc: u32, r: S::Resource, key: LexValue) -> u32 {
        let id = self.labels.len() as u32;
        self.labels.push(LabelNode {
            vertex: vertex as u32,
            parent,
            arc,
        });
        self.pending.push(Some(r));
        self.seq += 1;
        if self.opts.key_priority {
            self.heap.push(Keyed {
                key,
                seq: self.seq,
                label: id,
            });
        } else {
            self.fifo.push_back((id, key));
        }
        if self.opts.dominance {
            self.lists[vertex].push(id);
        }
        id
    }

    fn pop(&mut self) -> Option<(u32, LexValue)> {
        if self.opts.key_priority {
            self.heap.pop().map(|k| (k.label, k.key))
        } else {
            self.fifo.pop_front()
        }
    }

    fn run(mut self) -> (Vec<FoundPath<S::Resource>>, SearchStats) {
        let o = self.dag.source();
        let d = self.dag.sink();
        let r_o = self.space.source_resource();
        let key_o = self.key(&r_o, o);
        if self.opts.use_bounds && key_o.is_all_neg_inf() {
            return (Vec::new(), self.stats);
        }
        if o == d {
            return (Vec::new(), self.stats);
        }
        self.push_label(o, NO_PARENT, NO_PARENT, r_o, key_o);

        let mut arcs: Vec<Arc> = Vec::new();
        while let Some((pid, key)) = self.pop() {
            let Some(r_p) = self.pending[pid as usize].take() else {
                continue; // removed by dominance
            };
            if self.opts.use_bounds && !self.key_passes(&key) {
                // Keys leave the heap in decreasing order, so with exact
                // comparisons nothing left can pass either.
                if self.opts.key_priority && self.opts.tolerance == 0.0 {
                    break;
                }
                continue;
            }
            self.stats.extracted += 1;
            let u = self.labels[pid as usize].vertex as usize;
            arcs.clear();
            arcs.extend(self.dag.out_arcs(u));
            if self.opts.topological_arcs {
                arcs.sort_by_key(|a| Reverse(self.dag.topological_position(a.head)));
            }
            for &a in &arcs {
                let Some(r_q) = self.space.extend(a, &r_p) else {
                    continue;
                };
                let w = a.head;
                if w == d {
                    self.reach_sink(pid, a, r_q);
                    continue;
                }
                let key_q = self.key(&r_q, w);
                if self.opts.use_bounds && !self.key_passes(&key_q) {
                    self.stats.cuts_by_lb += 1;
                    continue;
                }
                if self.opts.dominance && !self.dominance_filter(w, &r_q) {
                    self.stats.dominated += 1;
                    continue;
                }
                self.push_label(w, pid, a.id as u32, r_q, key_q);
                self.stats.saved_paths += 1;
            }
        }
        self.finish()
    }

    /// Drops labels at `w` dominated by `r`; false if `r` itself is dominated.
    fn dominance_filter(&mut self, w: usize, r: &S::Resource) -> bool {
        let list = std::mem::take(&mut self.lists[w]);
        let mut kept = Vec::with_capacity(list.len() + 1);
        let mut dominated = false;
        for &id in &list {
            let Some(other) = &self.pending[id as usize] else {
                continue;
            };
            if !dominated && self.space.leq(other, r) {
                dominated = true;
            }
            kept.push(id);
        }
        if !dominated {
            kept.retain(|&id| {
                let other = self.pending[id as usize].as_ref().expect("live label");
                if self.space.leq(r, other) {
                    self.pending[id as usize] = None;
                    false
                } else {
                    true
                }
            });
        }
        self.lists[w] = kept;
        !dominated
    }

    fn reach_sink(&mut self, parent: u32, a: Arc, r: S::Resource) {
        let cost = self.space.cost(&r);
        if !self.key_passes(&cost) {
            return;
        }
        let id = self.labels.len() as u32;
        self.labels.push(LabelNode {
            vertex: a.head as u32,
            parent,
            arc: a.id as u32,
        });
        self.pending.push(None);
        self.found += 1;
        let sol = Solution {
            label: id,
            resource: r,
            cost: cost.clone(),
            found: self.found,
        };
        match self.mode {
            Mode::Best => {
                self.best_cost = cost;
                self.solutions.clear();
                self.solutions.push(sol);
            }
            Mode::NBest(n, _) => {
                if self.solutions.len() < n {
                    if self.solutions.is_empty()
                        || cost.lex_cmp_eps(&self.smallest_cost, self.opts.tolerance) == Ordering::Less
                    {
                        self.smallest_cost = cost;
                    }
                    self.solutions.push(sol);
                } else {
                    // evict the latest-found path among those at the smallest cost
                    let tol = self.opts.tolerance;
                    let victim = self
                        .solutions
                        .iter()
                        .enumerate()
                        .filter(|(_, s)| s.cost.lex_cmp_eps(&self.smallest_cost, tol) == Ordering::Equal)
                        .max_by_key(|(_, s)| s.found)
                        .map(|(i, _)| i)
                        .expect("smallest cost is attained");
                    self.solutions.swap_remove(victim);
                    self.solutions.push(sol);
                    let mut smallest = &self.solutions[0].cost;
                    for s in &self.solutions[1..] {
                        if s.cost.lex_cmp_eps(smallest, tol) == Ordering::Less {
                            smallest = &s.cost;
                        }
                    }
                    self.smallest_cost = smallest.clone();
                }
            }
            Mode::Threshold(_) => self.solutions.push(sol),
        }
    }

    fn finish(self) -> (Vec<FoundPath<S::Resource>>, SearchStats) {
        let mut sols = self.solutions;
        sols.sort_by(|a, b| b.cost.lex_cmp(&a.cost).then(a.found.cmp(&b.found)));
        let paths = sols
            .into_iter()
            .map(|s| {
                let mut arcs = Vec::new();
                let mut vertices = Vec::new();
                let mut cur = s.label;
                while cur != NO_PARENT {
                    let l = &self.labels[cur as usize];
                    vertices.push(l.vertex as usize);
                    if l.arc != NO_PARENT {
                        arcs.push(l.arc as usize);
                    }
                    cur = l.parent;
                }
                arcs.reverse();
                vertices.reverse();
                FoundPath {
                    arcs,
                    vertices,
                    resource: s.resource,
                    cost: s.cost,
                }
            })
            .collect();
        (paths, self.stats)
    }
}
