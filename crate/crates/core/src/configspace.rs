//! Configurations: sets of jobs that may run at the same time.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Instance, JobId, PrecedenceDag};
use crate::scalar::Scalar;

/// Default cap on the number of enumerated configurations.
pub const DEFAULT_CONFIG_CAP: usize = 1 << 20;

/// A sorted set of job ids. The empty set is the zero configuration.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Configuration(Vec<JobId>);

impl Configuration {
    pub fn new(jobs: impl IntoIterator<Item = JobId>) -> Self {
        let mut v: Vec<JobId> = jobs.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Self(v)
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn jobs(&self) -> &[JobId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, job: JobId) -> bool {
        self.0.binary_search(&job).is_ok()
    }

    /// Position of `job` inside the sorted member list.
    pub fn position(&self, job: JobId) -> Option<usize> {
        self.0.binary_search(&job).ok()
    }

    /// Bitmask with bit `id - 1` set per member. Ids must be at most 64.
    pub fn mask(&self) -> u64 {
        self.0.iter().fold(0u64, |acc, &p| {
            assert!((1..=64).contains(&p), "job id {p} does not fit a 64-bit mask");
            acc | 1 << (p - 1)
        })
    }

    pub fn is_antichain(&self, dag: &PrecedenceDag) -> bool {
        self.0
            .iter()
            .enumerate()
            .all(|(i, &p)| self.0[i + 1..].iter().all(|&q| !dag.comparable(p, q)))
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{p}")?;
        }
        f.write_str("}")
    }
}

impl From<Vec<JobId>> for Configuration {
    fn from(v: Vec<JobId>) -> Self {
        Self::new(v)
    }
}

/// All feasible configurations of an instance, with index 0 the zero
/// configuration, plus the induced precedence between configurations.
#[derive(Clone, Debug)]
pub struct ConfigSpace {
    num_jobs: usize,
    configs: Vec<Configuration>,
    index: HashMap<Configuration, usize>,
    precedence: Vec<Vec<bool>>,
}

impl ConfigSpace {
    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn num_jobs(&self) -> usize {
        self.num_jobs
    }

    pub fn configs(&self) -> &[Configuration] {
        &self.configs
    }

    pub fn config(&self, k: usize) -> &Configuration {
        &self.configs[k]
    }

    pub fn index_of(&self, config: &Configuration) -> Option<usize> {
        self.index.get(config).copied()
    }

    /// `q_pk`: job `p` is a member of configuration `k`.
    pub fn membership(&self, p: JobId, k: usize) -> bool {
        self.configs[k].contains(p)
    }

    /// `a_ij`: configuration `i` must run after configuration `j`.
    pub fn precedence(&self, i: usize, j: usize) -> bool {
        self.precedence[i][j]
    }

    pub fn precedence_matrix(&self) -> &[Vec<bool>] {
        &self.precedence
    }
}

/// Enumerates every antichain of the precedence order with at most `cores`
/// members, ordered by cardinality and then lexicographically.
pub fn enumerate_configurations<S: Scalar>(inst: &Instance<S>, cap: usize) -> Result<ConfigSpace> {
    enumerate_for_dag(inst.dag(), inst.cores(), cap)
}

pub fn enumerate_for_dag(dag: &PrecedenceDag, cores: usize, cap: usize) -> Result<ConfigSpace> {
    let m = dag.num_jobs();
    let mut configs = vec![Configuration::empty()];
    let mut current = Vec::with_capacity(cores);
    for size in 1..=cores.min(m) {
        extend_antichains(dag, 1, size, &mut current, &mut configs, cap)?;
    }
    let index = configs
        .iter()
        .enumerate()
        .map(|(k, c)| (c.clone(), k))
        .collect();
    let mut space = ConfigSpace {
        num_jobs: m,
        configs,
        index,
        precedence: Vec::new(),
    };
    space.precedence = config_precedence(&space, dag);
    Ok(space)
}

fn extend_antichains(
    dag: &PrecedenceDag,
    from: JobId,
    size: usize,
    current: &mut Vec<JobId>,
    out: &mut Vec<Configuration>,
    cap: usize,
) -> Result<()> {
    if current.len() == size {
        if out.len() >= cap {
            return Err(Error::Capacity {
                what: "configuration count",
                actual: out.len() + 1,
                limit: cap,
                advice: "use the F2 greedy scheduler or a coarser model",
            });
        }
        out.push(Configuration(current.clone()));
        return Ok(());
    }
    let m = dag.num_jobs();
    let still_needed = size - current.len();
    for p in from..=m {
        if m - p + 1 < still_needed {
            break;
        }
        if current.iter().any(|&q| dag.comparable(p, q)) {
            continue;
        }
        current.push(p);
        extend_antichains(dag, p + 1, size, current, out, cap)?;
        current.pop();
    }
    Ok(())
}

/// `a[i][j]` is set when some job of configuration `i` transitively
/// succeeds some job of configuration `j`. The zero configuration is
/// unrelated to everything.
pub fn config_precedence(space: &ConfigSpace, dag: &PrecedenceDag) -> Vec<Vec<bool>> {
    let n = space.configs.len();
    let mut a = vec![vec![false; n]; n];
    for (i, ci) in space.configs.iter().enumerate() {
        for (j, cj) in space.configs.iter().enumerate() {
            a[i][j] = ci
                .jobs()
                .iter()
                .any(|&p| cj.jobs().iter().any(|&q| dag.precedes(q, p)));
        }
    }
    a
}
