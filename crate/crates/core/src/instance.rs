//! Jobs, precedence orders and problem instances.
//!
//! Job ids are 1-based throughout the crate (`1..=m`); vectors indexed by
//! job use `id - 1`.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::ops::RangeInclusive;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::busmodel::SpeedTable;
use crate::configspace::DEFAULT_CONFIG_CAP;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Version tag written into instance files.
pub const INSTANCE_FILE_VERSION: u32 = 1;

/// 1-based job identifier.
pub type JobId = usize;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Job<S = f64> {
    pub id: JobId,
    /// Processing time when running alone.
    pub ideal_time: S,
    /// Percentage of the data bus consumed when running alone.
    pub bus_demand: S,
}

/// Which problem flavor an instance carries data for.
///
/// `F1` instances come with an explicit speed table; `F2` instances derive
/// speeds from bus demands.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Flavor {
    F1,
    F2,
}

/// Partial order over jobs `1..=m`, stored as its edge set plus the
/// transitive closure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrecedenceDag {
    m: usize,
    edges: BTreeSet<(JobId, JobId)>,
    preds: Vec<Vec<JobId>>,
    succs: Vec<Vec<JobId>>,
    // reach[p-1][q-1]: p precedes q transitively
    reach: Vec<Vec<bool>>,
    topo: Vec<JobId>,
}

impl PrecedenceDag {
    /// Builds a DAG over `m` jobs, rejecting bad endpoints, self-loops and cycles.
    pub fn new(m: usize, edges: impl IntoIterator<Item = (JobId, JobId)>) -> Result<Self> {
        let edges: BTreeSet<_> = edges.into_iter().collect();
        let mut preds = vec![Vec::new(); m];
        let mut succs = vec![Vec::new(); m];
        for &(p, q) in &edges {
            if p == 0 || q == 0 || p > m || q > m {
                return Err(Error::Validation(format!(
                    "edge ({p}, {q}) references a job outside 1..={m}"
                )));
            }
            if p == q {
                return Err(Error::Validation(format!("self-loop on job {p}")));
            }
            preds[q - 1].push(p);
            succs[p - 1].push(q);
        }

        // Kahn's algorithm, smallest id first for a stable order.
        let mut indeg: Vec<usize> = preds.iter().map(Vec::len).collect();
        let mut ready: BTreeSet<JobId> = (1..=m).filter(|&p| indeg[p - 1] == 0).collect();
        let mut topo = Vec::with_capacity(m);
        while let Some(p) = ready.pop_first() {
            topo.push(p);
            for &q in &succs[p - 1] {
                indeg[q - 1] -= 1;
                if indeg[q - 1] == 0 {
                    ready.insert(q);
                }
            }
        }
        if topo.len() != m {
            let stuck: Vec<_> = (1..=m).filter(|&p| indeg[p - 1] > 0).collect();
            return Err(Error::Validation(format!(
                "precedence edges contain a cycle through jobs {stuck:?}"
            )));
        }

        let mut reach = vec![vec![false; m]; m];
        for &p in topo.iter().rev() {
            for &q in &succs[p - 1] {
                reach[p - 1][q - 1] = true;
                for r in 0..m {
                    if reach[q - 1][r] {
                        reach[p - 1][r] = true;
                    }
                }
            }
        }

        Ok(Self {
            m,
            edges,
            preds,
            succs,
            reach,
            topo,
        })
    }

    /// The trivial order: no dependencies.
    pub fn empty(m: usize) -> Self {
        Self::new(m, []).expect("empty order is acyclic")
    }

    pub fn num_jobs(&self) -> usize {
        self.m
    }

    pub fn edges(&self) -> &BTreeSet<(JobId, JobId)> {
        &self.edges
    }

    /// Direct predecessors of `p`.
    pub fn preds(&self, p: JobId) -> &[JobId] {
        &self.preds[p - 1]
    }

    /// Direct successors of `p`.
    pub fn succs(&self, p: JobId) -> &[JobId] {
        &self.succs[p - 1]
    }

    /// `true` if `p` precedes `q` in the transitive closure.
    pub fn precedes(&self, p: JobId, q: JobId) -> bool {
        self.reach[p - 1][q - 1]
    }

    pub fn comparable(&self, p: JobId, q: JobId) -> bool {
        self.precedes(p, q) || self.precedes(q, p)
    }

    pub fn topological_order(&self) -> &[JobId] {
        &self.topo
    }
}

/// Shape of a generated partial order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderKind {
    Trivial,
    Random,
    Bitree,
    OneToManyToOne,
}

impl OrderKind {
    pub const ALL: [OrderKind; 4] = [
        OrderKind::Trivial,
        OrderKind::Random,
        OrderKind::Bitree,
        OrderKind::OneToManyToOne,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OrderKind::Trivial => "trivial",
            OrderKind::Random => "random",
            OrderKind::Bitree => "bitree",
            OrderKind::OneToManyToOne => "one_to_many_to_one",
        }
    }
}

impl fmt::Display for OrderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OrderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "trivial" | "none" => Ok(OrderKind::Trivial),
            "random" => Ok(OrderKind::Random),
            "bitree" | "binary_tree" => Ok(OrderKind::Bitree),
            "one_to_many_to_one" => Ok(OrderKind::OneToManyToOne),
            other => Err(Error::InvalidArgument(format!("unknown order kind `{other}`"))),
        }
    }
}

/// Generates a partial order of the given kind over `m` jobs.
///
/// Randomness comes from ChaCha8 seeded with `seed`, so the result is the
/// same on every platform.
pub fn gen_partial_order(kind: OrderKind, m: usize, seed: u64) -> Result<PrecedenceDag> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    partial_order_with(kind, m, &mut rng)
}

fn partial_order_with(kind: OrderKind, m: usize, rng: &mut ChaCha8Rng) -> Result<PrecedenceDag> {
    if m < 1 {
        return Err(Error::InvalidArgument("job count must be at least 1".into()));
    }
    let edges: Vec<(JobId, JobId)> = match kind {
        OrderKind::Trivial => Vec::new(),
        OrderKind::Random => {
            // p1 runs after p2 (p1 > p2) with probability 1/2; stored as p2 -> p1.
            let mut edges = Vec::new();
            for p1 in 2..=m {
                for p2 in 1..p1 {
                    if rng.gen_bool(0.5) {
                        edges.push((p2, p1));
                    }
                }
            }
            edges
        }
        OrderKind::Bitree => (2..=m).map(|i| (i / 2, i)).collect(),
        OrderKind::OneToManyToOne => {
            if m < 3 {
                return Err(Error::InvalidArgument(format!(
                    "one_to_many_to_one needs at least 3 jobs, got {m}"
                )));
            }
            (2..m).flat_map(|mid| [(1, mid), (mid, m)]).collect()
        }
    };
    PrecedenceDag::new(m, edges)
}

/// A scheduling problem: jobs, cores and precedence, plus speed data.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance<S = f64> {
    jobs: Vec<Job<S>>,
    cores: usize,
    dag: PrecedenceDag,
    flavor: Flavor,
    speed_table: Option<SpeedTable<S>>,
}

impl<S: Scalar> Instance<S> {
    pub fn new(
        jobs: Vec<Job<S>>,
        cores: usize,
        dag: PrecedenceDag,
        flavor: Flavor,
        speed_table: Option<SpeedTable<S>>,
    ) -> Result<Self> {
        if cores < 1 {
            return Err(Error::Validation("cores must be at least 1".into()));
        }
        if jobs.is_empty() {
            return Err(Error::Validation("instance has no jobs".into()));
        }
        for (i, job) in jobs.iter().enumerate() {
            if job.id != i + 1 {
                return Err(Error::Validation(format!(
                    "jobs must be listed with ids 1..=m in order; position {} has id {}",
                    i + 1,
                    job.id
                )));
            }
            if !(job.ideal_time > S::zero()) || !job.ideal_time.is_finite() {
                return Err(Error::Validation(format!(
                    "job {}: ideal_time must be positive, got {}",
                    job.id, job.ideal_time
                )));
            }
            if !(job.bus_demand >= S::zero() && job.bus_demand <= S::hundred()) {
                return Err(Error::Validation(format!(
                    "job {}: bus_demand must lie in [0, 100], got {}",
                    job.id, job.bus_demand
                )));
            }
        }
        if dag.num_jobs() != jobs.len() {
            return Err(Error::Validation(format!(
                "precedence order covers {} jobs but instance has {}",
                dag.num_jobs(),
                jobs.len()
            )));
        }
        let inst = Self {
            jobs,
            cores,
            dag,
            flavor,
            speed_table,
        };
        match (&inst.speed_table, flavor) {
            (None, Flavor::F1) => {
                return Err(Error::Validation("F1 instance requires a speed_table".into()))
            }
            (Some(table), _) => table.check_covers(&inst, DEFAULT_CONFIG_CAP)?,
            (None, Flavor::F2) => {}
        }
        Ok(inst)
    }

    pub fn num_jobs(&self) -> usize {
        self.jobs.len()
    }

    pub fn jobs(&self) -> &[Job<S>] {
        &self.jobs
    }

    pub fn job(&self, id: JobId) -> &Job<S> {
        &self.jobs[id - 1]
    }

    pub fn cores(&self) -> usize {
        self.cores
    }

    pub fn dag(&self) -> &PrecedenceDag {
        &self.dag
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn speed_table(&self) -> Option<&SpeedTable<S>> {
        self.speed_table.as_ref()
    }

    pub fn ideal_times(&self) -> Vec<S> {
        self.jobs.iter().map(|j| j.ideal_time).collect()
    }

    /// Bus demands indexed by `id - 1`.
    pub fn demands(&self) -> Vec<S> {
        self.jobs.iter().map(|j| j.bus_demand).collect()
    }

    /// Same instance with an attached speed table (flavor unchanged).
    pub fn with_speed_table(mut self, table: SpeedTable<S>) -> Result<Self> {
        table.check_covers(&self, DEFAULT_CONFIG_CAP)?;
        self.speed_table = Some(table);
        Ok(self)
    }

    /// Same jobs and order on a different number of cores; drops any speed table.
    pub fn with_cores(&self, cores: usize) -> Result<Self> {
        Self::new(self.jobs.clone(), cores, self.dag.clone(), Flavor::F2, None)
    }

    pub fn to_file(&self) -> InstanceFile<S> {
        InstanceFile {
            version: INSTANCE_FILE_VERSION,
            m: self.jobs.len(),
            cores: self.cores,
            flavor: self.flavor,
            jobs: self.jobs.clone(),
            edges: self.dag.edges().iter().map(|&(p, q)| [p, q]).collect(),
            speed_table: self.speed_table.clone(),
        }
    }

    pub fn from_file(file: InstanceFile<S>) -> Result<Self> {
        if file.version != INSTANCE_FILE_VERSION {
            return Err(Error::Validation(format!(
                "unsupported instance file version {}",
                file.version
            )));
        }
        if file.m != file.jobs.len() {
            return Err(Error::Validation(format!(
                "m = {} but {} jobs listed",
                file.m,
                file.jobs.len()
            )));
        }
        let dag = PrecedenceDag::new(file.m, file.edges.iter().map(|e| (e[0], e[1])))?;
        Self::new(file.jobs, file.cores, dag, file.flavor, file.speed_table)
    }
}

/// On-disk layout of an instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar", deny_unknown_fields)]
pub struct InstanceFile<S = f64> {
    pub version: u32,
    pub m: usize,
    pub cores: usize,
    pub flavor: Flavor,
    pub jobs: Vec<Job<S>>,
    pub edges: Vec<[JobId; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed_table: Option<SpeedTable<S>>,
}

pub fn instance_to_json<S: Scalar>(inst: &Instance<S>) -> String {
    serde_json::to_string_pretty(&inst.to_file()).expect("instance serializes")
}

pub fn instance_from_json<S: Scalar>(text: &str) -> Result<Instance<S>> {
    let file: InstanceFile<S> =
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    Instance::from_file(file)
}

pub fn save_instance<S: Scalar>(inst: &Instance<S>, path: impl AsRef<Path>) -> Result<()> {
    let mut text = instance_to_json(inst);
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn load_instance<S: Scalar>(path: impl AsRef<Path>) -> Result<Instance<S>> {
    let text = fs::read_to_string(path)?;
    instance_from_json(&text)
}

/// Draws a reproducible F2 instance.
///
/// The precedence order is exactly `gen_partial_order(kind, m, seed)`; ideal
/// times and bus demands are then drawn uniformly from the same ChaCha8
/// stream, job by job.
pub fn gen_instance<S: Scalar>(
    m: usize,
    cores: usize,
    kind: OrderKind,
    seed: u64,
    time_range: RangeInclusive<f64>,
    demand_range: RangeInclusive<f64>,
) -> Result<Instance<S>> {
    if cores < 1 {
        return Err(Error::InvalidArgument("cores must be at least 1".into()));
    }
    let (tlo, thi) = (*time_range.start(), *time_range.end());
    let (dlo, dhi) = (*demand_range.start(), *demand_range.end());
    if !(tlo <= thi) || !(tlo > 0.0) || !thi.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "time range [{tlo}, {thi}] must be non-empty and positive"
        )));
    }
    if !(dlo <= dhi) || dlo < 0.0 || dhi > 100.0 {
        return Err(Error::InvalidArgument(format!(
            "demand range [{dlo}, {dhi}] must be a non-empty part of [0, 100]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dag = partial_order_with(kind, m, &mut rng)?;
    let jobs = (1..=m)
        .map(|id| {
            let ideal_time = rng.gen_range(tlo..=thi);
            let bus_demand = rng.gen_range(dlo..=dhi);
            Job {
                id,
                ideal_time: S::lit(ideal_time),
                bus_demand: S::lit(bus_demand),
            }
        })
        .collect();
    Instance::new(jobs, cores, dag, Flavor::F2, None)
}

/// Convenience constructor for F2 instances from `(ideal_time, bus_demand)` pairs.
pub fn f2_instance<S: Scalar>(
    jobs: &[(f64, f64)],
    cores: usize,
    edges: &[(JobId, JobId)],
) -> Result<Instance<S>> {
    let dag = PrecedenceDag::new(jobs.len(), edges.iter().copied())?;
    let jobs = jobs
        .iter()
        .enumerate()
        .map(|(i, &(s, b))| Job {
            id: i + 1,
            ideal_time: S::lit(s),
            bus_demand: S::lit(b),
        })
        .collect();
    Instance::new(jobs, cores, dag, Flavor::F2, None)
}
