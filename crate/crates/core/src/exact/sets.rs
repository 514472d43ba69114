//! Branch-and-bound over configuration sets.
//!
//! The best durations for a configuration sequence depend only on which
//! configurations it contains; the order only decides whether the sequence
//! is valid. A node forbids some configurations and solves the duration LP
//! over the rest. If the configurations with positive duration can be
//! arranged into a valid sequence the node is solved. Otherwise some small
//! subset of them cannot be arranged, every valid set misses at least one
//! of its members, and the node branches on forbidding each.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use super::lp::{LinearProgram, LpOutcome, Relation};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Job masks, speeds and precedence of every configuration.
pub(crate) struct Columns<'a, S> {
    pub masks: &'a [u64],
    /// `speeds[k][p - 1]`, zero for non-members.
    pub speeds: &'a [Vec<S>],
    /// Predecessor mask of each job (0-based).
    pub preds: &'a [u64],
    pub ideal: &'a [S],
}

/// Whether `items` (distinct configuration indices) can be arranged so that
/// every job's configurations are consecutive and every job starts after
/// its predecessors have left. Predecessors absent from `items` are
/// ignored. Returns an arrangement (positions into `items`).
pub(crate) fn arrange<S>(cols: &Columns<'_, S>, items: &[usize]) -> Option<Vec<usize>> {
    let n = items.len();
    assert!(n < 64, "arrangement of {n} configurations");
    let masks: Vec<u64> = items.iter().map(|&k| cols.masks[k]).collect();
    let covered = masks.iter().fold(0, |a, &b| a | b);
    struct St<'s> {
        masks: &'s [u64],
        preds: &'s [u64],
        covered: u64,
        failed: HashSet<(u64, usize)>,
        order: Vec<usize>,
    }
    fn go(st: &mut St<'_>, placed: u64, seen: u64, last: Option<usize>) -> bool {
        let n = st.masks.len();
        if placed.count_ones() as usize == n {
            return true;
        }
        let key = (placed, last.unwrap_or(n));
        if st.failed.contains(&key) {
            return false;
        }
        let running = last.map_or(0, |i| st.masks[i]);
        for j in 0..n {
            if placed >> j & 1 == 1 {
                continue;
            }
            let mj = st.masks[j];
            let rest = (0..n)
                .filter(|&i| i != j && placed >> i & 1 == 0)
                .fold(0u64, |a, i| a | st.masks[i]);
            let ended = running & !mj;
            if ended & rest != 0 || mj & seen & !running != 0 {
                continue;
            }
            let mut new = mj & !running;
            let mut ok = true;
            while new != 0 {
                let q = new.trailing_zeros() as usize;
                if st.preds[q] & st.covered & !(seen & !mj) != 0 {
                    ok = false;
                    break;
                }
                new &= new - 1;
            }
            if !ok {
                continue;
            }
            st.order.push(j);
            if go(st, placed | 1 << j, seen | mj, Some(j)) {
                return true;
            }
            st.order.pop();
        }
        st.failed.insert(key);
        false
    }
    let mut st = St {
        masks: &masks,
        preds: cols.preds,
        covered,
        failed: HashSet::new(),
        order: Vec::with_capacity(n),
    };
    go(&mut st, 0, 0, None).then_some(st.order)
}

/// Shrinks a non-arrangeable set to a minimal non-arrangeable subset.
fn conflict<S>(cols: &Columns<'_, S>, items: &[usize]) -> Vec<usize> {
    let mut keep: Vec<usize> = items.to_vec();
    let mut i = 0;
    while i < keep.len() {
        let mut trial = keep.clone();
        trial.remove(i);
        if arrange(cols, &trial).is_none() {
            keep = trial;
        } else {
            i += 1;
        }
    }
    keep
}

/// Column LP over the allowed configurations: `(value, support, durations)`.
fn column_lp<S: Scalar>(
    cols: &Columns<'_, S>,
    allowed: &[usize],
) -> Result<Option<(S, Vec<usize>, Vec<S>)>> {
    let m = cols.ideal.len();
    let mut lp = LinearProgram::new(vec![S::one(); allowed.len()]);
    for p in 0..m {
        let row = allowed.iter().map(|&k| cols.speeds[k][p]).collect();
        lp.add_row(row, Relation::Eq, cols.ideal[p]);
    }
    let LpOutcome::Optimal { x, value } = lp.solve()? else {
        return Ok(None);
    };
    let tol = S::completion_tol() * S::one().max(value);
    let (support, durations) = allowed
        .iter()
        .zip(&x)
        .filter(|(_, &t)| t > tol)
        .map(|(&k, &t)| (k, t))
        .unzip();
    Ok(Some((value, support, durations)))
}

struct Node<S> {
    bound: S,
    forbidden: Vec<u64>,
    support: Vec<usize>,
    durations: Vec<S>,
}

impl<S: Scalar> PartialEq for Node<S> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<S: Scalar> Eq for Node<S> {}
impl<S: Scalar> PartialOrd for Node<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<S: Scalar> Ord for Node<S> {
    // BinaryHeap is a max-heap: smaller bounds first, then smaller keys.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .partial_cmp(&self.bound)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.forbidden.cmp(&self.forbidden))
    }
}

pub(crate) struct SetSearchOutcome<S> {
    /// Configurations with positive duration, in a valid order.
    pub sequence: Vec<usize>,
    pub durations: Vec<S>,
    pub nodes: u64,
}

type Best<S> = Option<(S, Vec<usize>, Vec<S>)>;

/// Best-first search. `incumbent` is a valid configuration set with its
/// durations, if one is known. Returns `None` once more than `node_limit`
/// LPs have been solved.
pub(crate) fn search<S: Scalar>(
    cols: &Columns<'_, S>,
    incumbent: Best<S>,
    node_limit: Option<u64>,
) -> Result<Option<SetSearchOutcome<S>>> {
    let n_cfg = cols.masks.len();
    let words = n_cfg.div_ceil(64);
    let allowed_of = |forbidden: &[u64]| -> Vec<usize> {
        (1..n_cfg)
            .filter(|&k| forbidden[k / 64] >> (k % 64) & 1 == 0)
            .collect()
    };
    let beats = |best: &Best<S>, v: S| match best {
        None => true,
        Some((b, _, _)) => v < *b - S::completion_tol() * b.max(S::one()),
    };

    let mut best = incumbent;
    let mut heap = BinaryHeap::new();
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    let mut nodes = 0u64;
    let root = vec![0u64; words];
    seen.insert(root.clone());
    nodes += 1;
    if let Some((bound, support, durations)) = column_lp(cols, &allowed_of(&root))? {
        heap.push(Node { bound, forbidden: root, support, durations });
    }

    while let Some(node) = heap.pop() {
        if node_limit.is_some_and(|limit| nodes > limit) {
            return Ok(None);
        }
        if !beats(&best, node.bound) {
            break;
        }
        if arrange(cols, &node.support).is_some() {
            best = Some((node.bound, node.support, node.durations));
            continue;
        }
        for k in conflict(cols, &node.support) {
            let mut child = node.forbidden.clone();
            child[k / 64] |= 1 << (k % 64);
            if !seen.insert(child.clone()) {
                continue;
            }
            nodes += 1;
            if let Some((bound, support, durations)) = column_lp(cols, &allowed_of(&child))? {
                if beats(&best, bound) {
                    heap.push(Node { bound, forbidden: child, support, durations });
                }
            }
        }
    }

    let (_, set, durations) =
        best.ok_or_else(|| Error::Validation("no feasible configuration set".into()))?;
    let order = arrange(cols, &set)
        .ok_or_else(|| Error::Validation("best configuration set has no valid order".into()))?;
    Ok(Some(SetSearchOutcome {
        sequence: order.iter().map(|&i| set[i]).collect(),
        durations: order.iter().map(|&i| durations[i]).collect(),
        nodes,
    }))
}
