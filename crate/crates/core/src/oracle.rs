//! Brute-force reference solvers for tests and for `--check-oracle`.

use thiserror::Error;

use crate::lex::LexValue;
use crate::llp::LlpProblem;
use crate::pbs::{is_feasible, Instance};
use crate::rclpp::{ArcId, Dag, ResourceSpace};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("instance too large for exhaustive search: {0}")]
    Guard(String),
}

/// Lex-max of `Cx` over the basic feasible solutions of `Ax = b, x >= 0`.
/// Returns `None` when no basic feasible solution exists.
pub fn oracle_llp(p: &LlpProblem) -> Result<Option<LexValue>, OracleError> {
    let (n, k) = (p.num_columns(), p.rows());
    if n > 10 || k > 5 {
        return Err(OracleError::Guard(format!("n = {n}, k = {k} (limits 10, 5)")));
    }
    let mut best: Option<LexValue> = None;
    let mut subset: Vec<usize> = (0..k).collect();
    if k > n {
        return Ok(None);
    }
    loop {
        if let Some(x) = basic_solution(p, &subset) {
            let v = p.objective(&x);
            if best.as_ref().is_none_or(|b| v.lex_cmp_eps(b, 1e-9).is_gt()) {
                best = Some(v);
            }
        }
        // next k-subset in lexicographic order
        let mut i = k;
        loop {
            if i == 0 {
                return Ok(best);
            }
            i -= 1;
            if subset[i] < n - k + i {
                subset[i] += 1;
                for j in i + 1..k {
                    subset[j] = subset[j - 1] + 1;
                }
                break;
            }
        }
    }
}

fn basic_solution(p: &LlpProblem, cols: &[usize]) -> Option<Vec<f64>> {
    let k = p.rows();
    let mut m = vec![vec![0.0; k + 1]; k];
    for (c, &j) in cols.iter().enumerate() {
        for &(r, a) in &p.column(j).entries {
            m[r][c] += a;
        }
    }
    for (r, row) in m.iter_mut().enumerate() {
        row[k] = p.rhs()[r];
    }
    for c in 0..k {
        let piv = (c..k).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs()))?;
        if m[piv][c].abs() < 1e-9 {
            return None;
        }
        m.swap(c, piv);
        for r in 0..k {
            if r != c {
                let f = m[r][c] / m[c][c];
                for j in c..=k {
                    m[r][j] -= f * m[c][j];
                }
            }
        }
    }
    let mut x = vec![0.0; p.num_columns()];
    for (c, &j) in cols.iter().enumerate() {
        let v = m[c][k] / m[c][c];
        if v < -1e-9 {
            return None;
        }
        x[j] = v.max(0.0);
    }
    Some(x)
}

/// A feasible source-sink path found by enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct OraclePath {
    pub arcs: Vec<ArcId>,
    pub cost: LexValue,
}

/// Every feasible source-sink path, by depth-first enumeration of all paths
/// and forward extension. Refuses graphs with more than 2^14 paths.
pub fn oracle_paths<S: ResourceSpace>(dag: &Dag, space: &S) -> Result<Vec<OraclePath>, OracleError> {
    let mut count = vec![0u64; dag.num_vertices()];
    for &v in dag.topological_order().iter().rev() {
        count[v] = if v == dag.sink() {
            1
        } else {
            dag.out_arcs(v)
                .map(|a| count[a.head])
                .fold(0u64, |s, c| s.saturating_add(c))
        };
    }
    let total = count[dag.source()];
    if total > 1 << 14 {
        return Err(OracleError::Guard(format!("{total} source-sink paths (limit 16384)")));
    }
    let mut out = Vec::new();
    let mut arcs = Vec::new();
    walk(dag, space, dag.source(), space.source_resource(), &mut arcs, &mut out);
    Ok(out)
}

fn walk<S: ResourceSpace>(
    dag: &Dag,
    space: &S,
    v: usize,
    r: S::Resource,
    arcs: &mut Vec<ArcId>,
    out: &mut Vec<OraclePath>,
) {
    if v == dag.sink() {
        if !arcs.is_empty() {
            out.push(OraclePath {
                arcs: arcs.clone(),
                cost: space.cost(&r),
            });
        }
        return;
    }
    for a in dag.out_arcs(v) {
        if let Some(next) = space.extend(a, &r) {
            arcs.push(a.id);
            walk(dag, space, a.head, next, arcs, out);
            arcs.pop();
        }
    }
}

/// A lexicographically optimal assignment found by exhaustive search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PbsOptimum {
    pub value: Vec<i64>,
    /// Pairing indices per pilot, ascending.
    pub assignment: Vec<Vec<usize>>,
}

/// Scores of the remaining pilots and the first of their schedules.
type Partial = (Vec<i64>, usize);

/// Lex-max score vector over all partitions of the pairings into one
/// nonempty feasible schedule per pilot, by dynamic programming over
/// (pilot, uncovered pairings). `None` when no partition exists.
pub fn oracle_pbs(inst: &Instance) -> Result<Option<PbsOptimum>, OracleError> {
    let (m, n) = (inst.num_pilots(), inst.num_pairings());
    if n > 12 || m > 4 {
        return Err(OracleError::Guard(format!("{n} pairings, {m} pilots (limits 12, 4)")));
    }
    let full = (1usize << n) - 1;
    let members = |mask: usize| -> Vec<usize> { (0..n).filter(|&p| mask >> p & 1 == 1).collect() };
    let feasible: Vec<bool> = (0..=full).map(|s| s != 0 && is_feasible(inst, &members(s))).collect();

    // best[i][mask]: optimal (scores of pilots i.., first schedule) covering exactly mask
    let mut best: Vec<Vec<Option<Partial>>> = vec![vec![None; full + 1]; m + 1];
    best[m][0] = Some((Vec::new(), 0));
    for i in (0..m).rev() {
        for mask in 1..=full {
            let mut cur: Option<Partial> = None;
            let mut sub = mask;
            while sub != 0 {
                if feasible[sub] {
                    if let Some((rest, _)) = &best[i + 1][mask & !sub] {
                        let mut v = Vec::with_capacity(m - i);
                        v.push(members(sub).iter().map(|&p| inst.scores[i][p]).sum());
                        v.extend_from_slice(rest);
                        if cur.as_ref().is_none_or(|(c, _)| v > *c) {
                            cur = Some((v, sub));
                        }
                    }
                }
                sub = (sub - 1) & mask;
            }
            best[i][mask] = cur;
        }
    }
    let Some((value, _)) = best[0][full].clone() else {
        return Ok(None);
    };
    let mut assignment = Vec::with_capacity(m);
    let mut mask = full;
    for row in best.iter().take(m) {
        let (_, sub) = row[mask].as_ref().expect("optimal chain");
        assignment.push(members(*sub));
        mask &= !sub;
    }
    Ok(Some(PbsOptimum { value, assignment }))
}
