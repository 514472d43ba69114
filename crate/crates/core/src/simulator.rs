//! Discrete-event replay of a schedule against a ground-truth speed model.
//!
//! Every core executes its queue in planned order. Planned idle time becomes
//! a fixed-length filler entry. A job may start once its core is free and
//! every job planned to finish no later than its planned start has actually
//! finished. Between events the running set is fixed, so progress is
//! integrated exactly.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::busmodel::{speeds_f2_vec, water_fill, CoRunOracle, SpeedTable};
use crate::configspace::Configuration;
use crate::error::{Error, Result};
use crate::instance::{Flavor, Instance, JobId};
use crate::scalar::Scalar;
use crate::schedule::Schedule;

#[derive(Clone, Debug, PartialEq)]
pub enum SpeedSource<S = f64> {
    /// Solo bus demands, indexed by `id - 1`.
    Demands(Vec<S>),
    Table(SpeedTable<S>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    /// Factor drawn from `[1 - δ, 1 + δ]`.
    Symmetric,
    /// Factor drawn from `[1 - δ, 1]`.
    Slowdown,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Noise<S = f64> {
    pub amplitude: S,
    pub seed: u64,
    pub mode: NoiseMode,
}

/// Job lengths plus the speeds jobs really run at.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruthModel<S = f64> {
    pub ideal_times: Vec<S>,
    pub source: SpeedSource<S>,
    pub noise: Option<Noise<S>>,
}

impl<S: Scalar> GroundTruthModel<S> {
    /// The planning model of `inst`: its speed table when present, its bus
    /// demands otherwise.
    pub fn from_instance(inst: &Instance<S>) -> Self {
        let source = match (inst.flavor(), inst.speed_table()) {
            (Flavor::F1, Some(t)) => SpeedSource::Table(t.clone()),
            _ => SpeedSource::Demands(inst.demands()),
        };
        Self {
            ideal_times: inst.ideal_times(),
            source,
            noise: None,
        }
    }

    pub fn with_noise(mut self, amplitude: S, seed: u64, mode: NoiseMode) -> Result<Self> {
        if !(amplitude >= S::zero() && amplitude < S::one()) {
            return Err(Error::InvalidArgument(format!(
                "noise amplitude {amplitude} outside [0, 1)"
            )));
        }
        self.noise = Some(Noise { amplitude, seed, mode });
        Ok(self)
    }

    fn factor(&self, job: JobId, config: &Configuration) -> S {
        let Some(noise) = self.noise else {
            return S::one();
        };
        if noise.amplitude == S::zero() {
            return S::one();
        }
        let mut h = mix(noise.seed ^ 0x6a09_e667_f3bc_c909);
        h = mix(h ^ job as u64);
        for &q in config.jobs() {
            h = mix(h.wrapping_add(q as u64));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(h);
        let d = noise.amplitude.to_f64_lossy();
        let hi = match noise.mode {
            NoiseMode::Symmetric => 1.0 + d,
            NoiseMode::Slowdown => 1.0,
        };
        S::lit(rng.gen_range(1.0 - d..=hi))
    }

    /// Speeds of the members of `config`, aligned with `config.jobs()`.
    pub fn speeds(&self, config: &Configuration) -> Result<Vec<S>> {
        let nominal = match &self.source {
            SpeedSource::Demands(b) => speeds_f2_vec(config, b)?,
            SpeedSource::Table(t) => t
                .get(config)
                .ok_or_else(|| Error::Coverage {
                    job: config.jobs().first().copied().unwrap_or(0),
                    config: config.jobs().to_vec(),
                })?
                .to_vec(),
        };
        Ok(config
            .jobs()
            .iter()
            .zip(nominal)
            .map(|(&p, v)| (v * self.factor(p, config)).min(S::one()).max(S::min_positive_value()))
            .collect())
    }
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct JobRun<S = f64> {
    pub job: JobId,
    pub core: usize,
    pub start: S,
    pub finish: S,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct SimulationReport<S = f64> {
    pub planned_makespan: S,
    pub measured_makespan: S,
    /// `100 · (planned − measured) / measured`
    pub deviation_pct: S,
    /// Sorted by job id.
    pub jobs: Vec<JobRun<S>>,
}

enum Entry<S> {
    Idle(S),
    Job { job: JobId, planned_start: S },
}

enum Running<S> {
    Idle { until: S },
    Job { job: JobId, left: S },
}

/// Replays `sched` under `truth`.
pub fn simulate<S: Scalar>(sched: &Schedule<S>, truth: &GroundTruthModel<S>) -> Result<SimulationReport<S>> {
    let m = truth.ideal_times.len();
    if sched.assignments.len() != m {
        return Err(Error::InvalidArgument(format!(
            "schedule covers {} jobs, model has {m}",
            sched.assignments.len()
        )));
    }
    let tol = S::completion_tol() * S::one().max(sched.makespan.abs());

    let mut queues: Vec<Vec<Entry<S>>> = Vec::new();
    for (core, list) in sched.core_queues() {
        if core == 0 {
            return Err(Error::InvalidArgument("cores are numbered from 1".into()));
        }
        if queues.len() < core {
            queues.resize_with(core, Vec::new);
        }
        let mut at = S::zero();
        for a in list {
            if a.job == 0 || a.job > m {
                return Err(Error::InvalidArgument(format!("unknown job {}", a.job)));
            }
            if a.start > at + tol {
                queues[core - 1].push(Entry::Idle(a.start - at));
            } else if a.start + tol < at {
                return Err(Error::InvalidArgument(format!(
                    "job {} overlaps its predecessor on core {core}",
                    a.job
                )));
            }
            queues[core - 1].push(Entry::Job {
                job: a.job,
                planned_start: a.start,
            });
            at = a.finish;
        }
    }
    let planned_finish: Vec<S> = sched.assignments.iter().map(|a| a.finish).collect();

    let cores = queues.len();
    let mut next = vec![0usize; cores];
    let mut slot: Vec<Option<Running<S>>> = (0..cores).map(|_| None).collect();
    let mut started: Vec<Option<(usize, S)>> = vec![None; m];
    let mut finished: Vec<Option<S>> = vec![None; m];
    let mut now = S::zero();

    loop {
        for core in 0..cores {
            while slot[core].is_none() && next[core] < queues[core].len() {
                match queues[core][next[core]] {
                    Entry::Idle(d) => slot[core] = Some(Running::Idle { until: now + d }),
                    Entry::Job { job, planned_start } => {
                        let ready = (0..m).all(|q| {
                            q + 1 == job
                                || planned_finish[q] > planned_start + tol
                                || finished[q].is_some()
                        });
                        if !ready {
                            break;
                        }
                        started[job - 1] = Some((core + 1, now));
                        slot[core] = Some(Running::Job {
                            job,
                            left: truth.ideal_times[job - 1],
                        });
                    }
                }
                next[core] += 1;
            }
        }
        if slot.iter().all(Option::is_none) {
            if next.iter().zip(&queues).all(|(&i, q)| i == q.len()) {
                break;
            }
            return Err(Error::Contract(
                "replay stalled: queued jobs wait on jobs that never run".into(),
            ));
        }

        let config = Configuration::new(slot.iter().filter_map(|s| match s {
            Some(Running::Job { job, .. }) => Some(*job),
            _ => None,
        }));
        let speeds: BTreeMap<JobId, S> = if config.is_empty() {
            BTreeMap::new()
        } else {
            config.jobs().iter().copied().zip(truth.speeds(&config)?).collect()
        };
        let dt = slot
            .iter()
            .flatten()
            .map(|r| match *r {
                Running::Idle { until } => until - now,
                Running::Job { job, left } => left / speeds[&job],
            })
            .fold(S::infinity(), S::min)
            .max(S::zero());
        now = now + dt;
        for s in slot.iter_mut() {
            let done = match s {
                Some(Running::Idle { until }) => *until <= now,
                Some(Running::Job { job, left }) => {
                    let v = speeds[job];
                    let rest = if *left / v <= dt { S::zero() } else { *left - v * dt };
                    *left = rest;
                    let s_p = truth.ideal_times[*job - 1];
                    if rest <= S::completion_tol() * S::one().max(s_p) {
                        finished[*job - 1] = Some(now);
                        true
                    } else {
                        false
                    }
                }
                None => false,
            };
            if done {
                *s = None;
            }
        }
    }

    let jobs: Vec<JobRun<S>> = (0..m)
        .map(|i| {
            let (core, start) = started[i].expect("every job started");
            JobRun {
                job: i + 1,
                core,
                start,
                finish: finished[i].expect("every job finished"),
            }
        })
        .collect();
    let measured = jobs.iter().map(|j| j.finish).fold(S::zero(), S::max);
    let planned = sched.makespan;
    Ok(SimulationReport {
        planned_makespan: planned,
        measured_makespan: measured,
        deviation_pct: S::hundred() * (planned - measured) / measured,
        jobs,
    })
}

/// Co-run oracle backed by the bus-sharing model in steady state: every
/// entry of the multiset runs next to all other entries for its whole
/// duration.
#[derive(Clone, Debug)]
pub struct F2CoRunOracle<S = f64> {
    ideal_times: Vec<S>,
    demands: Vec<S>,
    probe: Option<(JobId, S, S)>,
}

impl<S: Scalar> F2CoRunOracle<S> {
    pub fn new(ideal_times: Vec<S>, demands: Vec<S>) -> Self {
        Self {
            ideal_times,
            demands,
            probe: None,
        }
    }

    pub fn from_instance(inst: &Instance<S>) -> Self {
        Self::new(inst.ideal_times(), inst.demands())
    }

    /// Registers an extra job `id` (outside the instance) with the given
    /// length and demand.
    pub fn with_probe(mut self, id: JobId, ideal_time: S, demand: S) -> Self {
        self.probe = Some((id, ideal_time, demand));
        self
    }

    fn lookup(&self, p: JobId) -> Option<(S, S)> {
        match self.probe {
            Some((id, s, b)) if id == p => Some((s, b)),
            _ => p
                .checked_sub(1)
                .and_then(|i| Some((*self.ideal_times.get(i)?, *self.demands.get(i)?))),
        }
    }
}

impl<S: Scalar> CoRunOracle<S> for F2CoRunOracle<S> {
    fn corun(&self, jobs: &[JobId]) -> std::result::Result<Vec<S>, String> {
        let known: Vec<(S, S)> = jobs
            .iter()
            .map(|&p| self.lookup(p).ok_or_else(|| format!("unknown job {p}")))
            .collect::<std::result::Result<_, _>>()?;
        let demands: Vec<S> = known.iter().map(|&(_, b)| b).collect();
        let shares = water_fill(&demands);
        Ok(known
            .iter()
            .zip(shares)
            .map(|(&(s, b), z)| if b > S::zero() { s * b / z } else { s })
            .collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HistogramBin {
    pub lo: usize,
    pub hi: usize,
    pub count: usize,
    pub pct: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Histogram {
    /// Consecutive 1%-wide bins from `[0, 1)` up to the bin holding the
    /// largest value.
    pub bins: Vec<HistogramBin>,
    pub max_abs: f64,
    pub total: usize,
}

impl Histogram {
    pub fn count(&self, lo: usize) -> usize {
        self.bins.get(lo).map_or(0, |b| b.count)
    }
}

/// Histogram of `|x|` over 1%-wide bins.
pub fn histogram<S: Scalar>(values: &[S]) -> Result<Histogram> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("histogram of no values".into()));
    }
    let abs: Vec<f64> = values.iter().map(|v| v.to_f64_lossy().abs()).collect();
    if abs.iter().any(|a| !a.is_finite()) {
        return Err(Error::InvalidArgument("non-finite deviation".into()));
    }
    let max_abs = abs.iter().copied().fold(0.0, f64::max);
    let mut counts = vec![0usize; max_abs.floor() as usize + 1];
    for a in &abs {
        counts[a.floor() as usize] += 1;
    }
    let total = abs.len();
    let bins = counts
        .into_iter()
        .enumerate()
        .map(|(lo, count)| HistogramBin {
            lo,
            hi: lo + 1,
            count,
            pct: 100.0 * count as f64 / total as f64,
        })
        .collect();
    Ok(Histogram { bins, max_abs, total })
}

/// Histogram of the makespan deviations of `reports`.
pub fn deviation_stats<S: Scalar>(reports: &[SimulationReport<S>]) -> Result<Histogram> {
    let devs: Vec<S> = reports.iter().map(|r| r.deviation_pct).collect();
    histogram(&devs)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoxStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Linear-interpolation quantile of sorted data (`h = (n − 1)·q`).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn box_stats<S: Scalar>(values: &[S]) -> Result<BoxStats> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("box plot of no values".into()));
    }
    let mut v: Vec<f64> = values.iter().map(|x| x.to_f64_lossy()).collect();
    if v.iter().any(|x| x.is_nan()) {
        return Err(Error::InvalidArgument("NaN in box plot input".into()));
    }
    v.sort_by(f64::total_cmp);
    Ok(BoxStats {
        min: v[0],
        q1: quantile(&v, 0.25),
        median: quantile(&v, 0.5),
        q3: quantile(&v, 0.75),
        max: v[v.len() - 1],
    })
}

/// Measured makespans of the greedy and exact schedules of one instance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RatioSample<S = f64> {
    pub m: usize,
    pub greedy: S,
    pub exact: S,
}

impl<S: Scalar> RatioSample<S> {
    pub fn ratio(&self) -> S {
        self.greedy / self.exact
    }
}

/// Box-plot of `greedy / exact` per job count.
pub fn ratio_box_plot<S: Scalar>(samples: &[RatioSample<S>]) -> Result<BTreeMap<usize, BoxStats>> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no ratio samples".into()));
    }
    let mut by_m: BTreeMap<usize, Vec<S>> = BTreeMap::new();
    for s in samples {
        by_m.entry(s.m).or_default().push(s.ratio());
    }
    by_m.into_iter()
        .map(|(m, r)| Ok((m, box_stats(&r)?)))
        .collect()
}
