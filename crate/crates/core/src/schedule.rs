//! Schedules as configuration sequences, and core assignment for them.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::configspace::Configuration;
use crate::error::{Error, Result};
use crate::instance::{Instance, JobId};
use crate::scalar::Scalar;

/// One configuration held for `duration` time units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Step<S = f64> {
    pub jobs: Configuration,
    pub duration: S,
}

/// Where and when a job runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Assignment<S = f64> {
    pub job: JobId,
    /// 1-based core index.
    pub core: usize,
    pub start: S,
    pub finish: S,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Schedule<S = f64> {
    pub makespan: S,
    pub steps: Vec<Step<S>>,
    /// Sorted by job id.
    pub assignments: Vec<Assignment<S>>,
}

impl<S: Scalar> Schedule<S> {
    /// Builds a schedule from an ordered configuration sequence, assigning
    /// cores with [`assign_cores`].
    pub fn from_steps(steps: Vec<Step<S>>, cores: usize) -> Result<Self> {
        let assignments = assign_cores(&steps, cores)?;
        let makespan = steps.iter().map(|s| s.duration).sum();
        Ok(Self {
            makespan,
            steps,
            assignments,
        })
    }

    pub fn assignment(&self, job: JobId) -> Option<&Assignment<S>> {
        self.assignments
            .binary_search_by_key(&job, |a| a.job)
            .ok()
            .map(|i| &self.assignments[i])
    }

    /// Assignments per core, each sorted by start time.
    pub fn core_queues(&self) -> BTreeMap<usize, Vec<&Assignment<S>>> {
        let mut queues: BTreeMap<usize, Vec<&Assignment<S>>> = BTreeMap::new();
        for a in &self.assignments {
            queues.entry(a.core).or_default().push(a);
        }
        for q in queues.values_mut() {
            q.sort_by(|a, b| a.start.partial_cmp(&b.start).unwrap().then(a.job.cmp(&b.job)));
        }
        queues
    }

    /// Checks every structural invariant of a schedule for `inst`:
    /// configurations are feasible, jobs run contiguously and exactly once,
    /// cores never overlap, precedence holds and the makespan is consistent.
    pub fn validate(&self, inst: &Instance<S>) -> Result<()> {
        let m = inst.num_jobs();
        let c = inst.cores();
        let dag = inst.dag();
        let tol = S::completion_tol() * S::one().max(self.makespan.abs());
        let bad = |msg: String| Err(Error::Validation(msg));

        let mut seen_done = BTreeSet::new();
        let mut prev = Configuration::empty();
        for (i, step) in self.steps.iter().enumerate() {
            if !(step.duration >= S::zero()) {
                return bad(format!("step {i} has negative duration {}", step.duration));
            }
            if step.jobs.len() > c {
                return bad(format!("step {i} runs {} jobs on {c} cores", step.jobs.len()));
            }
            if !step.jobs.is_antichain(dag) {
                return bad(format!("step {i} runs ordered jobs together: {}", step.jobs));
            }
            for &p in step.jobs.jobs() {
                if p == 0 || p > m {
                    return bad(format!("step {i} references unknown job {p}"));
                }
                if seen_done.contains(&p) {
                    return bad(format!("job {p} runs in non-contiguous steps"));
                }
            }
            for &p in prev.jobs() {
                if !step.jobs.contains(p) {
                    seen_done.insert(p);
                }
            }
            prev = step.jobs.clone();
        }

        if self.assignments.len() != m {
            return bad(format!("{} assignments for {m} jobs", self.assignments.len()));
        }
        for (i, a) in self.assignments.iter().enumerate() {
            if a.job != i + 1 {
                return bad(format!("assignment list must be sorted by job id; found {}", a.job));
            }
            if a.core < 1 || a.core > c {
                return bad(format!("job {} on core {} outside 1..={c}", a.job, a.core));
            }
            if !(a.start >= S::zero()) || !(a.finish > a.start) {
                return bad(format!(
                    "job {} has interval [{}, {})",
                    a.job, a.start, a.finish
                ));
            }
        }
        for (core, queue) in self.core_queues() {
            for w in queue.windows(2) {
                if w[0].finish > w[1].start + tol {
                    return bad(format!(
                        "jobs {} and {} overlap on core {core}",
                        w[0].job, w[1].job
                    ));
                }
            }
        }
        for &(p, q) in dag.edges() {
            let (fp, uq) = (self.assignments[p - 1].finish, self.assignments[q - 1].start);
            if fp > uq + tol {
                return bad(format!("job {q} starts at {uq} before predecessor {p} ends at {fp}"));
            }
        }
        let last = self
            .assignments
            .iter()
            .map(|a| a.finish)
            .fold(S::zero(), S::max);
        let total: S = self.steps.iter().map(|s| s.duration).sum();
        if (last - self.makespan).abs() > tol || (total - self.makespan).abs() > tol {
            return bad(format!(
                "makespan {} disagrees with last finish {last} / total duration {total}",
                self.makespan
            ));
        }
        Ok(())
    }
}

/// Assigns cores and start/finish times to the jobs of an ordered
/// configuration sequence.
///
/// Jobs present in consecutive steps keep their core; jobs that leave free
/// their core and finish at the elapsed time; arriving jobs take the lowest
/// free core and start at the elapsed time.
pub fn assign_cores<S: Scalar>(steps: &[Step<S>], cores: usize) -> Result<Vec<Assignment<S>>> {
    let mut free: BTreeSet<usize> = (1..=cores).collect();
    let mut running: BTreeMap<JobId, (usize, S)> = BTreeMap::new();
    let mut done: BTreeMap<JobId, Assignment<S>> = BTreeMap::new();
    let mut elapsed = S::zero();
    let empty = Configuration::empty();
    let mut prev = &empty;

    for (i, step) in steps.iter().enumerate() {
        let cur = &step.jobs;
        if cur.len() > cores {
            return Err(Error::Contract(format!(
                "step {i} holds {} jobs but only {cores} cores exist",
                cur.len()
            )));
        }
        for &p in prev.jobs().iter().filter(|&&p| !cur.contains(p)) {
            let (core, start) = running.remove(&p).expect("running job");
            free.insert(core);
            done.insert(
                p,
                Assignment {
                    job: p,
                    core,
                    start,
                    finish: elapsed,
                },
            );
        }
        for &p in cur.jobs().iter().filter(|&&p| !prev.contains(p)) {
            if done.contains_key(&p) {
                return Err(Error::Contract(format!(
                    "job {p} reappears in step {i} after it left; runs must be contiguous"
                )));
            }
            let core = free.pop_first().expect("free core exists");
            running.insert(p, (core, elapsed));
        }
        elapsed = elapsed + step.duration;
        prev = cur;
    }
    for (p, (core, start)) in running {
        done.insert(
            p,
            Assignment {
                job: p,
                core,
                start,
                finish: elapsed,
            },
        );
    }
    Ok(done.into_values().collect())
}

pub fn schedule_to_json<S: Scalar>(s: &Schedule<S>) -> String {
    serde_json::to_string_pretty(s).expect("schedule serializes")
}

pub fn schedule_from_json<S: Scalar>(text: &str) -> Result<Schedule<S>> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

pub fn save_schedule<S: Scalar>(s: &Schedule<S>, path: impl AsRef<Path>) -> Result<()> {
    let mut text = schedule_to_json(s);
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn load_schedule<S: Scalar>(path: impl AsRef<Path>) -> Result<Schedule<S>> {
    schedule_from_json(&fs::read_to_string(path)?)
}
