//! Data-bus sharing model: bus allocation inside a configuration, the
//! resulting job speeds, speed tables, and bandwidth estimation from co-run
//! measurements.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::configspace::{enumerate_configurations, ConfigSpace, Configuration};
use crate::error::{Error, Result};
use crate::instance::{Instance, JobId};
use crate::scalar::{approx_eq, Scalar};

/// Bus percentage granted to each job of a configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct Allocation<S = f64> {
    pub shares: BTreeMap<JobId, S>,
}

impl<S: Scalar> Allocation<S> {
    pub fn share(&self, job: JobId) -> Option<S> {
        self.shares.get(&job).copied()
    }

    pub fn total(&self) -> S {
        self.shares.values().copied().sum()
    }
}

/// Splits the bus between claimants with demands `demands`, visiting them
/// in `scan` order when looking for a claimant below the equal share.
///
/// Each round computes `free / remaining`; the first claimant in scan order
/// whose demand is strictly below that share is granted its full demand.
/// When none is, every remaining claimant receives the equal share.
pub(crate) fn water_fill_scan<S: Scalar>(demands: &[S], scan: &[usize]) -> Vec<S> {
    let mut z = vec![S::zero(); demands.len()];
    let mut pending: Vec<usize> = scan.to_vec();
    let mut free = S::hundred();
    while !pending.is_empty() {
        let percent = free / S::from_usize(pending.len()).unwrap();
        match pending.iter().position(|&i| demands[i] < percent) {
            Some(pos) => {
                let i = pending.remove(pos);
                z[i] = demands[i];
                free = free - demands[i];
            }
            None => {
                for &i in &pending {
                    z[i] = percent;
                }
                pending.clear();
            }
        }
    }
    z
}

/// Bus allocation for a list of claimants (duplicates allowed), scanning in
/// ascending demand and then ascending position.
pub fn water_fill<S: Scalar>(demands: &[S]) -> Vec<S> {
    let mut scan: Vec<usize> = (0..demands.len()).collect();
    scan.sort_by(|&a, &b| demands[a].partial_cmp(&demands[b]).unwrap().then(a.cmp(&b)));
    water_fill_scan(demands, &scan)
}

fn member_demands<S: Scalar>(config: &Configuration, demands: &[S]) -> Result<Vec<S>> {
    config
        .jobs()
        .iter()
        .map(|&p| {
            p.checked_sub(1)
                .and_then(|i| demands.get(i))
                .copied()
                .ok_or_else(|| Error::InvalidArgument(format!("no bus demand for job {p}")))
        })
        .collect()
}

/// Allocates the bus among the members of `config`.
///
/// `demands[id - 1]` is the solo bus demand of job `id`.
pub fn allocate_bus<S: Scalar>(config: &Configuration, demands: &[S]) -> Result<Allocation<S>> {
    if config.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot allocate the bus to the zero configuration".into(),
        ));
    }
    let b = member_demands(config, demands)?;
    let z = water_fill(&b);
    Ok(Allocation {
        shares: config.jobs().iter().copied().zip(z).collect(),
    })
}

/// Speed of a job given its granted share; zero-demand jobs run at full speed.
#[inline]
pub fn speed_from_share<S: Scalar>(share: S, demand: S) -> S {
    if demand > S::zero() {
        share / demand
    } else {
        S::one()
    }
}

/// Speeds of the members of `config`, aligned with `config.jobs()`.
pub fn speeds_f2_vec<S: Scalar>(config: &Configuration, demands: &[S]) -> Result<Vec<S>> {
    if config.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot compute speeds for the zero configuration".into(),
        ));
    }
    let b = member_demands(config, demands)?;
    let z = water_fill(&b);
    Ok(z.into_iter()
        .zip(&b)
        .map(|(z, &b)| speed_from_share(z, b))
        .collect())
}

/// Speeds `v_p = z_p / b_p` of the members of `config`.
pub fn speeds_f2<S: Scalar>(config: &Configuration, demands: &[S]) -> Result<BTreeMap<JobId, S>> {
    let v = speeds_f2_vec(config, demands)?;
    Ok(config.jobs().iter().copied().zip(v).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct SpeedEntry<S = f64> {
    pub config: Configuration,
    pub speeds: Vec<S>,
}

/// Per-configuration job speeds, keyed by the configuration's job set.
///
/// Speeds are stored aligned with the sorted member list; the speed of a
/// job outside a configuration is 0.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(
    bound = "S: Scalar",
    from = "Vec<SpeedEntry<S>>",
    into = "Vec<SpeedEntry<S>>"
)]
pub struct SpeedTable<S = f64> {
    entries: BTreeMap<Configuration, Vec<S>>,
}

impl<S: Scalar> From<Vec<SpeedEntry<S>>> for SpeedTable<S> {
    fn from(v: Vec<SpeedEntry<S>>) -> Self {
        Self {
            entries: v.into_iter().map(|e| (e.config, e.speeds)).collect(),
        }
    }
}

impl<S: Scalar> From<SpeedTable<S>> for Vec<SpeedEntry<S>> {
    fn from(t: SpeedTable<S>) -> Self {
        t.entries
            .into_iter()
            .map(|(config, speeds)| SpeedEntry { config, speeds })
            .collect()
    }
}

impl<S: Scalar> SpeedTable<S> {
    pub fn new() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, config: Configuration, speeds: Vec<S>) {
        assert_eq!(config.len(), speeds.len(), "one speed per member");
        self.entries.insert(config, speeds);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Member speeds of `config`, aligned with `config.jobs()`.
    pub fn get(&self, config: &Configuration) -> Option<&[S]> {
        self.entries.get(config).map(Vec::as_slice)
    }

    /// `v_pk`; `Some(0)` when `job` is not a member, `None` when the
    /// configuration is not in the table.
    pub fn speed(&self, job: JobId, config: &Configuration) -> Option<S> {
        let speeds = self.entries.get(config)?;
        Some(config.position(job).map_or(S::zero(), |i| speeds[i]))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Configuration, &[S])> {
        self.entries.iter().map(|(c, v)| (c, v.as_slice()))
    }

    /// Checks that the table prices exactly the feasible configurations of
    /// `inst`, with speeds in (0, 1] and singleton speed 1.
    pub fn check_covers(&self, inst: &Instance<S>, cap: usize) -> Result<()> {
        let space = enumerate_configurations(inst, cap)?;
        for (config, speeds) in &self.entries {
            if space.index_of(config).is_none() || config.is_empty() {
                return Err(Error::Validation(format!(
                    "speed_table lists {config}, which is not a feasible configuration"
                )));
            }
            if speeds.len() != config.len() {
                return Err(Error::Validation(format!(
                    "speed_table entry {config} has {} speeds for {} jobs",
                    speeds.len(),
                    config.len()
                )));
            }
            for &v in speeds {
                if !(v > S::zero() && v <= S::one()) {
                    return Err(Error::Validation(format!(
                        "speed_table entry {config} has speed {v} outside (0, 1]"
                    )));
                }
            }
            if config.len() == 1 && !approx_eq(speeds[0], S::one(), S::completion_tol()) {
                return Err(Error::Validation(format!(
                    "singleton {config} must run at speed 1, got {}",
                    speeds[0]
                )));
            }
        }
        if let Some(missing) = space
            .configs()
            .iter()
            .skip(1)
            .find(|c| !self.entries.contains_key(c))
        {
            return Err(Error::Validation(format!(
                "speed_table does not cover configuration {missing}"
            )));
        }
        Ok(())
    }
}

/// Speed table of an F2 instance over every non-empty configuration of `space`.
pub fn materialize_speed_table<S: Scalar>(
    inst: &Instance<S>,
    space: &ConfigSpace,
) -> Result<SpeedTable<S>> {
    let demands = inst.demands();
    let mut table = SpeedTable::new();
    for config in space.configs().iter().filter(|c| !c.is_empty()) {
        table.insert(config.clone(), speeds_f2_vec(config, &demands)?);
    }
    Ok(table)
}

/// Something that can run a multiset of jobs together and report, for each
/// entry, the time that job needs to finish while the whole multiset keeps
/// running alongside it.
pub trait CoRunOracle<S> {
    fn corun(&self, jobs: &[JobId]) -> std::result::Result<Vec<S>, String>;
}

impl<S, F> CoRunOracle<S> for F
where
    F: Fn(&[JobId]) -> std::result::Result<Vec<S>, String>,
{
    fn corun(&self, jobs: &[JobId]) -> std::result::Result<Vec<S>, String> {
        self(jobs)
    }
}

/// Companion job used for jobs that do not slow down next to their own copies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Probe<S = f64> {
    /// The job with the highest estimated demand among those already
    /// estimated from self co-runs.
    Heaviest,
    /// A calibration job known to the oracle, with known bus demand.
    Job { id: JobId, demand: S },
}

fn run<S: Scalar, O: CoRunOracle<S>>(oracle: &O, jobs: &[JobId]) -> Result<Vec<S>> {
    let times = oracle.corun(jobs).map_err(|message| Error::Oracle {
        jobs: jobs.to_vec(),
        message,
    })?;
    if times.len() != jobs.len() {
        return Err(Error::Oracle {
            jobs: jobs.to_vec(),
            message: format!("expected {} completion times, got {}", jobs.len(), times.len()),
        });
    }
    if times.iter().any(|t| !(*t > S::zero()) || !t.is_finite()) {
        return Err(Error::Oracle {
            jobs: jobs.to_vec(),
            message: "non-positive completion time".into(),
        });
    }
    Ok(times)
}

/// Estimates the bus demand of each job in `jobs` from co-run timings.
///
/// A job run in `cores` simultaneous copies that slows to speed `s*` gets
/// `100 / (s* · cores)`. A job that does not slow down is co-run with
/// `cores - 1` copies of the probe job `g`; if anything slows down the
/// estimate is `100 - (cores - 1) · b_g · v_g`, otherwise 0.
pub fn estimate_bandwidth<S: Scalar, O: CoRunOracle<S>>(
    oracle: &O,
    jobs: &[JobId],
    cores: usize,
    probe: Probe<S>,
) -> Result<BTreeMap<JobId, S>> {
    if cores < 2 {
        return Err(Error::InvalidArgument(
            "bandwidth estimation needs at least 2 cores".into(),
        ));
    }
    let c = S::from_usize(cores).unwrap();
    let slowed = |speed: S| speed < S::one() - S::completion_tol();

    let mut solo = BTreeMap::new();
    for &p in jobs {
        solo.insert(p, run(oracle, &[p])?[0]);
    }

    let mut estimates = BTreeMap::new();
    let mut unresolved = Vec::new();
    for &p in jobs {
        let copies = vec![p; cores];
        let times = run(oracle, &copies)?;
        let t_corun = times.into_iter().fold(S::zero(), S::max);
        let speed = solo[&p] / t_corun;
        if slowed(speed) {
            estimates.insert(p, S::hundred() / (speed * c));
        } else {
            unresolved.push(p);
        }
    }
    if unresolved.is_empty() {
        return Ok(estimates);
    }

    let (g, demand_g) = match probe {
        Probe::Job { id, demand } => (id, demand),
        Probe::Heaviest => {
            let heaviest = estimates
                .iter()
                .fold(None, |best: Option<(JobId, S)>, (&p, &b)| match best {
                    Some((_, bb)) if bb >= b => best,
                    _ => Some((p, b)),
                });
            match heaviest {
                Some(found) => found,
                None => {
                    return Err(Error::InvalidArgument(
                        "no job slows down next to its own copies; supply a probe job".into(),
                    ))
                }
            }
        }
    };
    let solo_g = match solo.get(&g) {
        Some(&t) => t,
        None => run(oracle, &[g])?[0],
    };

    for p in unresolved {
        let mut mix = Vec::with_capacity(cores);
        mix.push(p);
        mix.extend(std::iter::repeat_n(g, cores - 1));
        let times = run(oracle, &mix)?;
        let v_p = solo[&p] / times[0];
        let v_g = times[1..]
            .iter()
            .map(|&t| solo_g / t)
            .fold(S::one(), S::min);
        let estimate = if !slowed(v_p) && !slowed(v_g) {
            S::zero()
        } else {
            let rest = S::from_usize(cores - 1).unwrap() * demand_g * v_g;
            (S::hundred() - rest).max(S::zero()).min(S::hundred())
        };
        estimates.insert(p, estimate);
    }
    Ok(estimates)
}
