//! Exact minimum makespan for small instances.
//!
//! Configuration changes only happen when a job starts or ends, so an
//! optimal schedule is a sequence of configurations in which every job
//! occupies one contiguous run. For a fixed sequence the best durations
//! solve a small linear program (each job must accumulate its ideal work).
//! The durations depend only on which configurations appear, so two
//! searches are offered: a depth-first walk over sequences that prunes
//! prefixes by an LP bound and a packing bound, and a best-first search
//! over configuration sets (see [`Strategy`]).

pub mod lp;
mod sets;

use std::cell::RefCell;
use std::collections::{HashMap, HashSet};

use crate::busmodel::{materialize_speed_table, SpeedTable};
use crate::configspace::{enumerate_configurations, ConfigSpace, Configuration, DEFAULT_CONFIG_CAP};
use crate::error::{Error, Result};
use crate::greedy::greedy_schedule;
use crate::instance::{Flavor, Instance};
use crate::scalar::Scalar;
use crate::schedule::{Schedule, Step};

use lp::{LinearProgram, LpOutcome, Relation};

/// Default guard on the number of jobs for exhaustive search.
pub const DEFAULT_MAX_JOBS: usize = 8;

/// Largest job count accepted by [`brute_force_no_interference`].
pub const BRUTE_FORCE_MAX_JOBS: usize = 12;

/// Ordered configuration indices (into a [`ConfigSpace`]), all non-zero.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConfigSequence(pub Vec<usize>);

impl ConfigSequence {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn configs<'a>(&'a self, space: &'a ConfigSpace) -> impl Iterator<Item = &'a Configuration> {
        self.0.iter().map(|&k| space.config(k))
    }
}

/// Node budget of the set search under [`Strategy::Auto`].
pub const AUTO_SET_NODE_LIMIT: u64 = 20_000;

/// How the optimal configuration sequence is searched for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Strategy {
    /// Sequence search without precedence; otherwise set search, switching
    /// to sequence search after [`AUTO_SET_NODE_LIMIT`] nodes.
    #[default]
    Auto,
    /// Best-first branch-and-bound over configuration sets.
    ConfigSets,
    /// Depth-first search over configuration sequences with LP and packing
    /// bounds.
    Sequences,
}

#[derive(Clone, Debug)]
pub struct ExactOptions {
    pub strategy: Strategy,
    pub max_jobs: usize,
    /// Longest sequence considered by [`Strategy::Sequences`]; `None`
    /// means `m`, which always
    /// suffices because an optimal basic solution of the duration LP has
    /// at most `m` positive durations.
    pub max_len: Option<usize>,
    pub config_cap: usize,
    /// Start from the greedy schedule's sequence (F2 instances only).
    pub seed_with_greedy: bool,
}

impl Default for ExactOptions {
    fn default() -> Self {
        Self {
            strategy: Strategy::default(),
            max_jobs: DEFAULT_MAX_JOBS,
            max_len: None,
            config_cap: DEFAULT_CONFIG_CAP,
            seed_with_greedy: true,
        }
    }
}

/// Optimal durations of a fixed sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceSolution<S = f64> {
    pub durations: Vec<S>,
    pub makespan: S,
}

#[derive(Clone, Debug)]
pub struct ExactResult<S = f64> {
    pub schedule: Schedule<S>,
    pub sequence: ConfigSequence,
    pub durations: Vec<S>,
    /// Search nodes whose LP was solved.
    pub nodes: u64,
    /// Complete sequences whose duration LP was solved (sequence search).
    pub leaves: u64,
}

/// Precomputed masks and dense speeds for the search.
struct Context<S> {
    m: usize,
    cores: usize,
    all: u64,
    masks: Vec<u64>,
    // speeds[k][p - 1], zero for non-members
    speeds: Vec<Vec<S>>,
    preds: Vec<u64>,
    ideal: Vec<S>,
    // longest chain of successor work after each job
    tail: Vec<S>,
    // Without precedence a reversed sequence is valid and equally long, so
    // only sequences with no more time before this job than after it are
    // searched.
    mirror: Option<usize>,
    max_len: usize,
    // best no-contention makespan of each job subset
    packing: RefCell<HashMap<u64, S>>,
    // same for all jobs, keyed by the jobs each job has already overlapped
    // and the bits of each job's length
    separated: RefCell<HashMap<(Vec<u64>, Vec<u64>), S>>,
}

impl<S: Scalar> Context<S> {
    fn new(inst: &Instance<S>, space: &ConfigSpace, table: &SpeedTable<S>, max_len: usize) -> Result<Self> {
        let m = inst.num_jobs();
        if m > 64 {
            return Err(Error::Capacity {
                what: "job count for sequence search",
                actual: m,
                limit: 64,
                advice: "use the greedy scheduler or export the MILP",
            });
        }
        let dag = inst.dag();
        let masks: Vec<u64> = space.configs().iter().map(Configuration::mask).collect();
        let mut speeds = Vec::with_capacity(space.len());
        for config in space.configs() {
            let mut row = vec![S::zero(); m];
            if !config.is_empty() {
                let v = table.get(config).ok_or_else(|| Error::Coverage {
                    job: config.jobs()[0],
                    config: config.jobs().to_vec(),
                })?;
                for (&p, &vp) in config.jobs().iter().zip(v) {
                    row[p - 1] = vp;
                }
            }
            speeds.push(row);
        }
        let preds = (1..=m)
            .map(|q| dag.preds(q).iter().fold(0u64, |acc, &p| acc | 1 << (p - 1)))
            .collect();
        let ideal = inst.ideal_times();
        let mut tail = vec![S::zero(); m];
        for &p in dag.topological_order().iter().rev() {
            tail[p - 1] = dag
                .succs(p)
                .iter()
                .map(|&q| ideal[q - 1] + tail[q - 1])
                .fold(S::zero(), S::max);
        }
        let mirror = dag.edges().is_empty().then(|| {
            (0..m)
                .max_by(|&a, &b| ideal[a].partial_cmp(&ideal[b]).unwrap().then(b.cmp(&a)))
                .expect("at least one job")
        });
        Ok(Self {
            m,
            cores: inst.cores(),
            all: if m == 64 { u64::MAX } else { (1u64 << m) - 1 },
            masks,
            speeds,
            preds,
            ideal,
            tail,
            mirror,
            max_len,
            packing: RefCell::new(HashMap::new()),
            separated: RefCell::new(HashMap::new()),
        })
    }

    /// Applies configuration `k` after a prefix with the given state.
    /// Returns the new `(started, finished)` masks, or `None` if `k` is not
    /// a legal continuation.
    fn step(&self, started: u64, finished: u64, running: u64, k: usize) -> Option<(u64, u64)> {
        let km = self.masks[k];
        if km == 0 || km == running || km & finished != 0 {
            return None;
        }
        let ended = running & !km;
        let done = finished | ended;
        let mut new = km & !running;
        while new != 0 {
            let q = new.trailing_zeros() as usize;
            if self.preds[q] & !done != 0 {
                return None;
            }
            new &= new - 1;
        }
        Some((started | km, done))
    }

    /// Sequences that start `unstarted` more jobs need at least this many more configurations.
    fn fits(&self, len: usize, started: u64) -> bool {
        let unstarted = (self.all & !started).count_ones() as usize;
        len + unstarted.div_ceil(self.cores) <= self.max_len
    }

    fn durations(&self, seq: &[usize]) -> Result<Option<SequenceSolution<S>>> {
        let n = seq.len();
        let mut lp = LinearProgram::new(vec![S::one(); n]);
        for p in 0..self.m {
            let coeffs: Vec<S> = seq.iter().map(|&k| self.speeds[k][p]).collect();
            lp.add_row(coeffs, Relation::Eq, self.ideal[p]);
        }
        let out = lp.solve().map_err(|e| match e {
            Error::Degeneracy(msg) => Error::Degeneracy(format!("{msg} (sequence {seq:?})")),
            other => other,
        })?;
        let LpOutcome::Optimal { x, value } = out else {
            return Ok(None);
        };
        for p in 0..self.m {
            let done: S = seq
                .iter()
                .zip(&x)
                .map(|(&k, &t)| self.speeds[k][p] * t)
                .sum();
            let tol = S::lit(1e-8).max(S::completion_tol()) * self.ideal[p];
            if (done - self.ideal[p]).abs() > tol {
                return Err(Error::Degeneracy(format!(
                    "residual {} for job {} exceeds tolerance (sequence {seq:?})",
                    (done - self.ideal[p]).abs(),
                    p + 1
                )));
            }
        }
        Ok(Some(SequenceSolution {
            durations: x,
            makespan: value,
        }))
    }

    /// Lower bound on the makespan of any completion of a prefix that used
    /// the configurations `used` and left the jobs in `closed` finished.
    ///
    /// Every completion uses `used` plus configurations free of finished
    /// jobs, so the duration LP over all of those columns bounds it from
    /// below. `F`, the time after the prefix, must also cover each
    /// unfinished job's remaining work plus its longest successor chain.
    /// Makespan of the jobs in `mask` on `cores` machines at full speed.
    /// Speeds never exceed 1, so jobs that have not started yet need at
    /// least this long after the prefix.
    fn packing(&self, mask: u64) -> Result<S> {
        if let Some(&v) = self.packing.borrow().get(&mask) {
            return Ok(v);
        }
        let lengths: Vec<S> = (0..self.m)
            .filter(|&p| mask >> p & 1 == 1)
            .map(|p| self.ideal[p])
            .collect();
        let v = if lengths.len() <= BRUTE_FORCE_MAX_JOBS {
            brute_force_no_interference(&lengths, self.cores)?
        } else {
            let total: S = lengths.iter().copied().sum();
            let longest = lengths.iter().copied().fold(S::zero(), S::max);
            longest.max(total / S::from_usize(self.cores).unwrap())
        };
        self.packing.borrow_mut().insert(mask, v);
        Ok(v)
    }

    /// Makespan of all jobs with the given occupation `lengths` on `cores`
    /// machines when each job must avoid the cores of the jobs in
    /// `conflicts[p]`. Jobs that overlap in time never share a core, so every
    /// schedule needs at least this long.
    fn separated_packing(&self, conflicts: Vec<u64>, lengths: Vec<S>) -> Result<S> {
        if self.m > BRUTE_FORCE_MAX_JOBS {
            return self.packing(self.all);
        }
        let key = (conflicts, lengths.iter().map(|l| l.to_f64_lossy().to_bits()).collect());
        if let Some(&v) = self.separated.borrow().get(&key) {
            return Ok(v);
        }
        let (conflicts, _) = &key;
        let mut jobs: Vec<usize> = (0..self.m).collect();
        jobs.sort_by(|&a, &b| lengths[b].partial_cmp(&lengths[a]).unwrap().then(a.cmp(&b)));
        struct St<'s, S> {
            jobs: &'s [usize],
            ideal: &'s [S],
            conflicts: &'s [u64],
            loads: Vec<S>,
            members: Vec<u64>,
            best: Option<S>,
        }
        fn go<S: Scalar>(st: &mut St<'_, S>, i: usize) {
            if i == st.jobs.len() {
                let mk = st.loads.iter().copied().fold(S::zero(), S::max);
                if st.best.is_none_or(|b| mk < b) {
                    st.best = Some(mk);
                }
                return;
            }
            let p = st.jobs[i];
            for c in 0..st.loads.len() {
                if st.members[c] & st.conflicts[p] != 0 {
                    continue;
                }
                let before = st.loads[c];
                let load = before + st.ideal[p];
                if st.best.is_some_and(|b| load >= b) {
                    continue;
                }
                let empty = st.members[c] == 0;
                st.loads[c] = load;
                st.members[c] |= 1 << p;
                go(st, i + 1);
                st.members[c] &= !(1 << p);
                st.loads[c] = before;
                // empty cores are interchangeable
                if empty {
                    break;
                }
            }
        }
        let mut st = St {
            jobs: &jobs,
            ideal: &lengths,
            conflicts,
            loads: vec![S::zero(); self.cores],
            members: vec![0; self.cores],
            best: None,
        };
        go(&mut st, 0);
        let v = match st.best {
            Some(v) => v,
            None => self.packing(self.all)?,
        };
        self.separated.borrow_mut().insert(key, v);
        Ok(v)
    }

    /// Packing lower bound on every completion of a prefix.
    fn packing_bound(&self, used: &[usize], closed: u64) -> Result<S> {
        // A finished job occupied its core for at least its work divided by
        // its best speed.
        let mut conflicts = vec![0u64; self.m];
        let mut fastest = vec![S::zero(); self.m];
        for &k in used {
            let km = self.masks[k];
            let mut rest = km;
            while rest != 0 {
                let p = rest.trailing_zeros() as usize;
                conflicts[p] |= km & !(1 << p);
                fastest[p] = fastest[p].max(self.speeds[k][p]);
                rest &= rest - 1;
            }
        }
        let lengths = (0..self.m)
            .map(|p| {
                if closed >> p & 1 == 1 && fastest[p] > S::zero() {
                    self.ideal[p] / fastest[p]
                } else {
                    self.ideal[p]
                }
            })
            .collect();
        self.separated_packing(conflicts, lengths)
    }

    /// LP lower bound on every completion of a prefix: used configurations
    /// keep their place, the rest of the schedule may use any configuration
    /// free of finished jobs.
    /// `before` holds the configurations that preceded the mirror job once it
    /// has started.
    fn bound(
        &self,
        used: &[usize],
        before: &[u64],
        closed: u64,
        started: u64,
    ) -> Result<Option<S>> {
        let future: Vec<usize> = (1..self.masks.len())
            .filter(|&k| self.masks[k] & closed == 0)
            .collect();
        let (nu, nf) = (used.len(), future.len());
        // columns: used configurations, future configurations, F
        let f = nu + nf;
        let mut obj = vec![S::one(); f + 1];
        for o in &mut obj[nu..f] {
            *o = S::zero();
        }
        let mut lp = LinearProgram::new(obj);
        for p in 0..self.m {
            let mut row: Vec<S> = used.iter().chain(&future).map(|&k| self.speeds[k][p]).collect();
            row.push(S::zero());
            if closed >> p & 1 == 0 && self.tail[p] > S::zero() {
                let mut tail_row: Vec<S> = used.iter().map(|&k| self.speeds[k][p]).collect();
                tail_row.resize(f, S::zero());
                tail_row.push(S::one());
                lp.add_row(tail_row, Relation::Ge, self.ideal[p] + self.tail[p]);
            }
            lp.add_row(row, Relation::Eq, self.ideal[p]);
        }
        let mut link = vec![S::zero(); f + 1];
        for l in &mut link[nu..f] {
            *l = S::one();
        }
        link[f] = -S::one();
        lp.add_row(link, Relation::Eq, S::zero());
        if let Some(j) = self.mirror {
            let jm = 1u64 << j;
            let mut row = vec![S::zero(); f + 1];
            for (r, &k) in row.iter_mut().zip(used) {
                if self.masks[k] & jm == 0 {
                    *r = if started & jm == 0 || has_bit(before, k) {
                        S::one()
                    } else {
                        -S::one()
                    };
                }
            }
            for (r, &k) in row[nu..f].iter_mut().zip(&future) {
                if self.masks[k] & jm == 0 {
                    *r = -S::one();
                }
            }
            lp.add_row(row, Relation::Le, S::zero());
        }
        let unstarted = self.all & !started;
        if unstarted != 0 {
            let mut row = vec![S::zero(); f + 1];
            row[f] = S::one();
            lp.add_row(row, Relation::Ge, self.packing(unstarted)?);
        }
        let LpOutcome::Optimal { value, .. } = lp.solve()? else {
            return Ok(None);
        };
        Ok(Some(value))
    }
}

fn speed_table_for<S: Scalar>(inst: &Instance<S>, space: &ConfigSpace) -> Result<SpeedTable<S>> {
    match (inst.flavor(), inst.speed_table()) {
        (_, Some(table)) => Ok(table.clone()),
        (Flavor::F2, None) => materialize_speed_table(inst, space),
        (Flavor::F1, None) => Err(Error::InvalidArgument("F1 instance without speed table".into())),
    }
}

fn guard(m: usize, max_jobs: usize) -> Result<()> {
    if m > max_jobs {
        return Err(Error::Capacity {
            what: "job count for exact search",
            actual: m,
            limit: max_jobs,
            advice: "use the greedy scheduler or export the MILP for an external solver",
        });
    }
    Ok(())
}

/// Depth-first iterator over canonical configuration sequences.
pub struct SequenceIter<'a, S> {
    ctx: Context<S>,
    _space: &'a ConfigSpace,
    // per depth: (next candidate, started, finished)
    stack: Vec<(usize, u64, u64)>,
    seq: Vec<usize>,
}

impl<S: Scalar> Iterator for SequenceIter<'_, S> {
    type Item = ConfigSequence;

    fn next(&mut self) -> Option<ConfigSequence> {
        let n_cfg = self.ctx.masks.len();
        loop {
            let depth = self.stack.len().checked_sub(1)?;
            let (cursor, started, finished) = self.stack[depth];
            let running = self.seq.last().map_or(0, |&k| self.ctx.masks[k]);
            let mut k = cursor;
            let mut found = None;
            if self.seq.len() < self.ctx.max_len {
                while k < n_cfg {
                    let cand = k;
                    k += 1;
                    if let Some(state) = self.ctx.step(started, finished, running, cand) {
                        if self.ctx.fits(self.seq.len() + 1, state.0) {
                            found = Some((cand, state));
                            break;
                        }
                    }
                }
            }
            self.stack[depth].0 = k;
            match found {
                Some((cand, (s2, f2))) => {
                    self.seq.push(cand);
                    self.stack.push((1, s2, f2));
                    if s2 == self.ctx.all {
                        return Some(ConfigSequence(self.seq.clone()));
                    }
                }
                None => {
                    self.stack.pop();
                    if depth > 0 {
                        self.seq.pop();
                    }
                }
            }
        }
    }
}

/// Enumerates every canonical configuration sequence of at most `max_len`
/// configurations: no empty or repeated adjacent configuration, contiguous
/// job runs, every job present, and each job starting strictly after all of
/// its predecessors have left.
pub fn enumerate_sequences<'a, S: Scalar>(
    inst: &Instance<S>,
    space: &'a ConfigSpace,
    max_len: usize,
) -> Result<SequenceIter<'a, S>> {
    enumerate_sequences_guarded(inst, space, max_len, DEFAULT_MAX_JOBS)
}

pub fn enumerate_sequences_guarded<'a, S: Scalar>(
    inst: &Instance<S>,
    space: &'a ConfigSpace,
    max_len: usize,
    max_jobs: usize,
) -> Result<SequenceIter<'a, S>> {
    guard(inst.num_jobs(), max_jobs)?;
    // Speeds are irrelevant for enumeration; an all-ones table keeps Context simple.
    let mut ones = SpeedTable::new();
    for c in space.configs().iter().filter(|c| !c.is_empty()) {
        ones.insert(c.clone(), vec![S::one(); c.len()]);
    }
    let ctx = Context::new(inst, space, &ones, max_len)?;
    Ok(SequenceIter {
        ctx,
        _space: space,
        stack: vec![(1, 0, 0)],
        seq: Vec::new(),
    })
}

/// Minimizes total duration of a fixed sequence subject to every job
/// accumulating exactly its ideal work. `Ok(None)` when infeasible.
pub fn min_durations<S: Scalar>(
    seq: &ConfigSequence,
    space: &ConfigSpace,
    speeds: &SpeedTable<S>,
    ideal: &[S],
) -> Result<Option<SequenceSolution<S>>> {
    let m = ideal.len();
    let mut lp = LinearProgram::new(vec![S::one(); seq.len()]);
    let mut rows = Vec::with_capacity(m);
    for p in 1..=m {
        let mut coeffs = Vec::with_capacity(seq.len());
        for config in seq.configs(space) {
            let v = speeds.speed(p, config).ok_or_else(|| Error::Coverage {
                job: p,
                config: config.jobs().to_vec(),
            })?;
            coeffs.push(v);
        }
        rows.push(coeffs.clone());
        lp.add_row(coeffs, Relation::Eq, ideal[p - 1]);
    }
    let out = lp.solve().map_err(|e| match e {
        Error::Degeneracy(msg) => Error::Degeneracy(format!("{msg} (sequence {:?})", seq.0)),
        other => other,
    })?;
    let LpOutcome::Optimal { x, value } = out else {
        return Ok(None);
    };
    for (p, coeffs) in rows.iter().enumerate() {
        let done: S = coeffs.iter().zip(&x).map(|(&v, &t)| v * t).sum();
        let tol = S::lit(1e-8).max(S::completion_tol()) * ideal[p];
        if (done - ideal[p]).abs() > tol {
            return Err(Error::Degeneracy(format!(
                "residual for job {} exceeds tolerance (sequence {:?})",
                p + 1,
                seq.0
            )));
        }
    }
    Ok(Some(SequenceSolution {
        durations: x,
        makespan: value,
    }))
}

/// Optimal schedule with default options.
pub fn exact_makespan<S: Scalar>(inst: &Instance<S>) -> Result<Schedule<S>> {
    exact_solve(inst, &ExactOptions::default()).map(|r| r.schedule)
}

struct Search<'c, S> {
    ctx: &'c Context<S>,
    best: Option<(S, Vec<usize>, Vec<S>)>,
    nodes: u64,
    leaves: u64,
    // candidate order: larger configurations first
    order: Vec<usize>,
    // (configurations used, last configuration) already expanded
    seen: HashSet<(Vec<u64>, usize, Vec<u64>)>,
    // configuration sets whose duration LP was solved
    solved: HashSet<Vec<u64>>,
}

fn with_bit(set: &[u64], k: usize) -> Vec<u64> {
    let mut out = set.to_vec();
    out[k / 64] |= 1 << (k % 64);
    out
}

fn has_bit(set: &[u64], k: usize) -> bool {
    set[k / 64] >> (k % 64) & 1 == 1
}

impl<S: Scalar> Search<'_, S> {
    fn eps(&self) -> S {
        let scale = self.best.as_ref().map_or(S::one(), |b| b.0.max(S::one()));
        S::completion_tol() * scale
    }

    fn beats(&self, value: S) -> bool {
        match &self.best {
            None => true,
            Some((v, _, _)) => value < *v - self.eps(),
        }
    }

    fn offer(&mut self, seq: &[usize]) -> Result<()> {
        self.leaves += 1;
        if let Some(sol) = self.ctx.durations(seq)? {
            if self.beats(sol.makespan) {
                self.best = Some((sol.makespan, seq.to_vec(), sol.durations));
            }
        }
        Ok(())
    }

    fn dfs(
        &mut self,
        seq: &mut Vec<usize>,
        used: &[u64],
        before: &[u64],
        started: u64,
        finished: u64,
    ) -> Result<()> {
        if seq.len() >= self.ctx.max_len {
            return Ok(());
        }
        let running = seq.last().map_or(0, |&k| self.ctx.masks[k]);
        let mut children = Vec::new();
        for idx in 0..self.order.len() {
            let k = self.order[idx];
            let Some((s2, f2)) = self.ctx.step(started, finished, running, k) else {
                continue;
            };
            if !self.ctx.fits(seq.len() + 1, s2) {
                continue;
            }
            let used2 = with_bit(used, k);
            let before2 = match self.ctx.mirror {
                Some(j) if started >> j & 1 == 0 && s2 >> j & 1 == 1 => used.to_vec(),
                _ => before.to_vec(),
            };
            if !self.seen.insert((used2.clone(), k, before2.clone())) {
                continue;
            }
            let distinct: Vec<usize> =
                (0..self.ctx.masks.len()).filter(|&j| has_bit(&used2, j)).collect();
            // the duration LP only depends on which configurations appear
            if s2 == self.ctx.all && self.solved.insert(used2.clone()) {
                self.offer(&distinct)?;
            }
            if seq.len() + 1 < self.ctx.max_len {
                self.nodes += 1;
                let closed = f2 | (running & !self.ctx.masks[k]);
                let packing = self.ctx.packing_bound(&distinct, closed)?;
                if !self.beats(packing) {
                    continue;
                }
                if let Some(lp) = self.ctx.bound(&distinct, &before2, closed, s2)? {
                    children.push((packing.max(lp), lp, k, used2, before2, s2, f2));
                }
            }
        }
        // most promising first; stable, so ties keep candidate order
        children.sort_by(|a, b| (a.0, a.1).partial_cmp(&(b.0, b.1)).unwrap());
        for (lb, _, k, used2, before2, s2, f2) in children {
            if !self.beats(lb) {
                break;
            }
            seq.push(k);
            self.dfs(seq, &used2, &before2, s2, f2)?;
            seq.pop();
        }
        Ok(())
    }
}

/// Runs the exact search.
pub fn exact_solve<S: Scalar>(inst: &Instance<S>, opts: &ExactOptions) -> Result<ExactResult<S>> {
    let m = inst.num_jobs();
    guard(m, opts.max_jobs)?;
    let space = enumerate_configurations(inst, opts.config_cap)?;
    let table = speed_table_for(inst, &space)?;
    let max_len = opts.max_len.unwrap_or(m);
    let ctx = Context::new(inst, &space, &table, max_len)?;

    // Incumbents: jobs one at a time in topological order, a best core
    // partition without precedence, then greedy.
    let mut incumbents: Vec<Vec<usize>> = vec![inst
        .dag()
        .topological_order()
        .iter()
        .map(|&p| space.index_of(&Configuration::new([p])).expect("singleton"))
        .collect()];
    if inst.dag().edges().is_empty() && m <= BRUTE_FORCE_MAX_JOBS {
        incumbents.push(partition_incumbent(&space, &inst.ideal_times(), inst.cores()));
    }
    if opts.seed_with_greedy && inst.flavor() == Flavor::F2 {
        let greedy = greedy_schedule(inst)?;
        incumbents.push(
            greedy
                .steps
                .iter()
                .map(|s| space.index_of(&s.jobs).expect("greedy configurations are feasible"))
                .collect(),
        );
    }

    let run_sequences = || -> Result<(Vec<usize>, Vec<S>, u64, u64)> {
        let mut order: Vec<usize> = (1..space.len()).collect();
        order.sort_by(|&a, &b| space.config(b).len().cmp(&space.config(a).len()).then(a.cmp(&b)));
        let mut search = Search {
            ctx: &ctx,
            best: None,
            nodes: 0,
            leaves: 0,
            order,
            seen: HashSet::new(),
            solved: HashSet::new(),
        };
        for seq in &incumbents {
            if seq.len() <= max_len {
                search.offer(seq)?;
            }
        }
        let mut seq = Vec::with_capacity(max_len);
        let empty = vec![0u64; space.len().div_ceil(64)];
        search.dfs(&mut seq, &empty, &empty, 0, 0)?;
        let (_, best_seq, durations) = search
            .best
            .take()
            .ok_or_else(|| Error::Validation("no feasible configuration sequence".into()))?;
        let (best_seq, durations) = order_configurations(&ctx, &best_seq, &durations)
            .ok_or_else(|| Error::Validation("optimal configuration set has no valid order".into()))?;
        Ok((best_seq, durations, search.nodes, search.leaves))
    };
    let run_sets = |node_limit: Option<u64>| -> Result<Option<(Vec<usize>, Vec<S>, u64, u64)>> {
        let mut incumbent = None;
        for seq in &incumbents {
            if let Some(sol) = ctx.durations(seq)? {
                if incumbent.as_ref().is_none_or(|(v, _, _)| sol.makespan < *v) {
                    incumbent = Some((sol.makespan, seq.clone(), sol.durations));
                }
            }
        }
        let cols = sets::Columns {
            masks: &ctx.masks,
            speeds: &ctx.speeds,
            preds: &ctx.preds,
            ideal: &ctx.ideal,
        };
        Ok(sets::search(&cols, incumbent, node_limit)?
            .map(|out| (out.sequence, out.durations, out.nodes, 0)))
    };

    let (best_seq, durations, nodes, leaves) = match opts.strategy {
        Strategy::Sequences => run_sequences()?,
        Strategy::ConfigSets => run_sets(None)?.expect("no node limit"),
        Strategy::Auto if inst.dag().edges().is_empty() => run_sequences()?,
        Strategy::Auto => match run_sets(Some(AUTO_SET_NODE_LIMIT))? {
            Some(found) => found,
            None => run_sequences()?,
        },
    };

    let schedule = schedule_from_sequence(&space, &best_seq, &durations, inst.cores())?;
    Ok(ExactResult {
        schedule,
        sequence: ConfigSequence(best_seq),
        durations,
        nodes,
        leaves,
    })
}

/// Configurations of the timeline in which every core runs its share of a
/// best partition of the ideal times back to back, longest job first.
/// Valid only without precedence.
fn partition_incumbent<S: Scalar>(space: &ConfigSpace, ideal: &[S], cores: usize) -> Vec<usize> {
    let m = ideal.len();
    let mut jobs: Vec<usize> = (0..m).collect();
    jobs.sort_by(|&a, &b| ideal[b].partial_cmp(&ideal[a]).unwrap().then(a.cmp(&b)));
    struct St<'s, S> {
        jobs: &'s [usize],
        ideal: &'s [S],
        loads: Vec<S>,
        core_of: Vec<usize>,
        best: Option<(S, Vec<usize>)>,
    }
    fn go<S: Scalar>(st: &mut St<'_, S>, i: usize) {
        if i == st.jobs.len() {
            let mk = st.loads.iter().copied().fold(S::zero(), S::max);
            if st.best.as_ref().is_none_or(|(b, _)| mk < *b) {
                st.best = Some((mk, st.core_of.clone()));
            }
            return;
        }
        let p = st.jobs[i];
        for c in 0..st.loads.len() {
            let before = st.loads[c];
            if st.loads[..c].contains(&before) {
                continue;
            }
            let load = before + st.ideal[p];
            if st.best.as_ref().is_some_and(|(b, _)| load >= *b) {
                continue;
            }
            st.loads[c] = load;
            st.core_of[p] = c;
            go(st, i + 1);
            st.loads[c] = before;
        }
    }
    let mut st = St {
        jobs: &jobs,
        ideal,
        loads: vec![S::zero(); cores],
        core_of: vec![0; m],
        best: None,
    };
    go(&mut st, 0);
    let core_of = st.best.map(|(_, a)| a).unwrap_or_default();

    let mut start = vec![S::zero(); m];
    let mut loads = vec![S::zero(); cores];
    for &p in &jobs {
        start[p] = loads[core_of[p]];
        loads[core_of[p]] = start[p] + ideal[p];
    }
    let mut ends: Vec<S> = (0..m).map(|p| start[p] + ideal[p]).collect();
    ends.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ends.dedup();
    let mut seq: Vec<usize> = Vec::new();
    let mut from = S::zero();
    for &to in &ends {
        let running = (0..m).filter(|&p| start[p] <= from && start[p] + ideal[p] >= to);
        let k = space
            .index_of(&Configuration::new(running.map(|p| p + 1)))
            .expect("at most one job per core");
        if seq.last() != Some(&k) && k != 0 {
            seq.push(k);
        }
        from = to;
    }
    seq
}

/// Arranges the configurations with positive duration into a valid
/// sequence (contiguous job runs, precedence between runs).
fn order_configurations<S: Scalar>(
    ctx: &Context<S>,
    configs: &[usize],
    durations: &[S],
) -> Option<(Vec<usize>, Vec<S>)> {
    let total: S = durations.iter().copied().sum();
    let tol = S::completion_tol() * S::one().max(total);
    let items: Vec<(usize, S)> = configs
        .iter()
        .zip(durations)
        .filter(|(_, &d)| d > tol)
        .map(|(&k, &d)| (k, d))
        .collect();
    fn place<S: Scalar>(
        ctx: &Context<S>,
        items: &[(usize, S)],
        left: u64,
        started: u64,
        finished: u64,
        seq: &mut Vec<usize>,
    ) -> bool {
        if left == 0 {
            return started == ctx.all;
        }
        let running = seq.last().map_or(0, |&i| ctx.masks[items[i].0]);
        for i in 0..items.len() {
            if left >> i & 1 == 0 {
                continue;
            }
            let Some((s2, f2)) = ctx.step(started, finished, running, items[i].0) else {
                continue;
            };
            // a job that leaves now may not occur in a configuration still to come
            let ended = f2 & !finished;
            let rest = left & !(1 << i);
            if (0..items.len()).any(|j| rest >> j & 1 == 1 && ctx.masks[items[j].0] & ended != 0) {
                continue;
            }
            seq.push(i);
            if place(ctx, items, rest, s2, f2, seq) {
                return true;
            }
            seq.pop();
        }
        false
    }
    let mut order = Vec::with_capacity(items.len());
    if !place(ctx, &items, (1u64 << items.len()) - 1, 0, 0, &mut order) {
        return None;
    }
    Some((
        order.iter().map(|&i| items[i].0).collect(),
        order.iter().map(|&i| items[i].1).collect(),
    ))
}

/// Drops zero-length configurations, merges equal neighbours and assigns cores.
pub fn schedule_from_sequence<S: Scalar>(
    space: &ConfigSpace,
    seq: &[usize],
    durations: &[S],
    cores: usize,
) -> Result<Schedule<S>> {
    let total: S = durations.iter().copied().sum();
    let tol = S::completion_tol() * S::one().max(total);
    let mut steps: Vec<Step<S>> = Vec::new();
    for (&k, &d) in seq.iter().zip(durations) {
        if d <= tol {
            continue;
        }
        match steps.last_mut() {
            Some(last) if last.jobs == *space.config(k) => last.duration = last.duration + d,
            _ => steps.push(Step {
                jobs: space.config(k).clone(),
                duration: d,
            }),
        }
    }
    Schedule::from_steps(steps, cores)
}

/// Optimal makespan for independent jobs that never slow each other:
/// exhaustive assignment of jobs to `cores` identical machines.
pub fn brute_force_no_interference<S: Scalar>(lengths: &[S], cores: usize) -> Result<S> {
    if lengths.len() > BRUTE_FORCE_MAX_JOBS {
        return Err(Error::Capacity {
            what: "job count for brute-force partition",
            actual: lengths.len(),
            limit: BRUTE_FORCE_MAX_JOBS,
            advice: "use the exact sequence search",
        });
    }
    if cores < 1 {
        return Err(Error::InvalidArgument("cores must be at least 1".into()));
    }
    fn go<S: Scalar>(lengths: &[S], i: usize, loads: &mut Vec<S>, best: &mut S) {
        if i == lengths.len() {
            let mk = loads.iter().copied().fold(S::zero(), S::max);
            if mk < *best {
                *best = mk;
            }
            return;
        }
        for c in 0..loads.len() {
            // cores with equal load are interchangeable
            if loads[..c].contains(&loads[c]) {
                continue;
            }
            let before = loads[c];
            loads[c] = before + lengths[i];
            if loads[c] < *best {
                go(lengths, i + 1, loads, best);
            }
            loads[c] = before;
        }
    }
    let mut loads = vec![S::zero(); cores];
    let mut best = lengths.iter().copied().sum::<S>() + S::one();
    go(lengths, 0, &mut loads, &mut best);
    Ok(best.min(lengths.iter().copied().sum()))
}
