//! Greedy list scheduler for bus-demand (F2) instances.
//!
//! At each step the scheduler keeps the unfinished jobs of the previous
//! configuration, then fills the remaining bus with the admissible job whose
//! demand is closest to the free percentage, then fills any idle cores with
//! the lowest-demand admissible jobs. The configuration runs until its first
//! job completes.

use std::collections::BTreeSet;

use crate::busmodel::speeds_f2_vec;
use crate::configspace::Configuration;
use crate::error::{Error, Result};
use crate::instance::{Flavor, Instance, JobId};
use crate::scalar::Scalar;
use crate::schedule::{Schedule, Step};

pub use crate::schedule::assign_cores;

/// Bookkeeping for one greedy iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct GreedyStep<S = f64> {
    pub config: Configuration,
    pub duration: S,
    /// Speeds aligned with `config.jobs()`.
    pub speeds: Vec<S>,
    /// Jobs carried over from the previous configuration.
    pub carried: Vec<JobId>,
    /// Free bus percentage after selection (reservation by demand).
    pub free_percent: S,
    pub free_cores: usize,
    /// Admissible jobs left unselected when the configuration was closed.
    pub admissible_left: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GreedyRun<S = f64> {
    pub schedule: Schedule<S>,
    pub trace: Vec<GreedyStep<S>>,
}

/// Runs the greedy scheduler and returns the schedule.
pub fn greedy_schedule<S: Scalar>(inst: &Instance<S>) -> Result<Schedule<S>> {
    greedy_run(inst).map(|r| r.schedule)
}

/// Runs the greedy scheduler, keeping the per-step trace.
pub fn greedy_run<S: Scalar>(inst: &Instance<S>) -> Result<GreedyRun<S>> {
    if inst.flavor() != Flavor::F2 {
        return Err(Error::InvalidArgument(
            "greedy scheduling needs bus demands (F2 instance)".into(),
        ));
    }
    let m = inst.num_jobs();
    let cores = inst.cores();
    let dag = inst.dag();
    let demands = inst.demands();
    let b = |p: JobId| demands[p - 1];

    let mut left = inst.ideal_times();
    let mut not_started: BTreeSet<JobId> = (1..=m).collect();
    let mut completed = vec![false; m];
    let mut carry: Vec<JobId> = Vec::new();
    let mut trace = Vec::new();

    loop {
        let mut chosen = carry.clone();
        let mut free_percent = S::hundred();
        for &p in &carry {
            free_percent = free_percent - b(p);
        }
        let mut free_cores = cores - carry.len();

        let admissible: Vec<JobId> = not_started
            .iter()
            .copied()
            .filter(|&p| dag.preds(p).iter().all(|&q| completed[q - 1]))
            .collect();
        let mut pool: BTreeSet<JobId> = admissible.into_iter().collect();

        // Bus-filling phase: closest demand to the free percentage.
        while free_percent > S::zero() && free_cores > 0 {
            let pick = pool
                .iter()
                .copied()
                .filter(|&p| b(p) > S::zero())
                .min_by(|&p, &q| {
                    let dp = (free_percent - b(p)).abs();
                    let dq = (free_percent - b(q)).abs();
                    dp.partial_cmp(&dq).unwrap().then(p.cmp(&q))
                });
            let Some(p) = pick else { break };
            free_percent = free_percent - b(p);
            free_cores -= 1;
            pool.remove(&p);
            chosen.push(p);
        }
        // Core-filling phase: lowest demand first.
        while free_cores > 0 {
            let pick = pool.iter().copied().min_by(|&p, &q| {
                b(p).partial_cmp(&b(q)).unwrap().then(p.cmp(&q))
            });
            let Some(p) = pick else { break };
            free_cores -= 1;
            pool.remove(&p);
            chosen.push(p);
        }

        if chosen.is_empty() {
            break;
        }
        for p in &chosen {
            not_started.remove(p);
        }

        let config = Configuration::new(chosen);
        let speeds = speeds_f2_vec(&config, &demands)?;
        let duration = config
            .jobs()
            .iter()
            .zip(&speeds)
            .map(|(&p, &v)| left[p - 1] / v)
            .fold(S::infinity(), S::min);

        let mut next = Vec::new();
        for (&p, &v) in config.jobs().iter().zip(&speeds) {
            let rest = left[p - 1] - duration * v;
            if rest <= S::completion_tol() {
                left[p - 1] = S::zero();
                completed[p - 1] = true;
            } else {
                left[p - 1] = rest;
                next.push(p);
            }
        }

        trace.push(GreedyStep {
            config,
            duration,
            speeds,
            carried: carry,
            free_percent,
            free_cores,
            admissible_left: pool.len(),
        });
        carry = next;
    }

    let steps = trace
        .iter()
        .map(|t| Step {
            jobs: t.config.clone(),
            duration: t.duration,
        })
        .collect();
    let schedule = Schedule::from_steps(steps, cores)?;
    Ok(GreedyRun { schedule, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::f2_instance;

    #[test]
    fn two_job_worked_example() {
        let inst = f2_instance::<f64>(&[(10.0, 60.0), (2.0, 60.0)], 2, &[]).unwrap();
        let s = greedy_schedule(&inst).unwrap();
        assert_eq!(s.steps.len(), 2);
        assert_eq!(s.steps[0].jobs, Configuration::new([1, 2]));
        assert!((s.steps[0].duration - 2.4).abs() < 1e-12);
        assert_eq!(s.steps[1].jobs, Configuration::new([1]));
        assert!((s.steps[1].duration - 8.0).abs() < 1e-12);
        assert!((s.makespan - 10.4).abs() < 1e-12);
        s.validate(&inst).unwrap();
    }

    #[test]
    fn single_job_runs_ideal() {
        let inst = f2_instance::<f64>(&[(7.0, 95.0)], 3, &[]).unwrap();
        assert_eq!(greedy_schedule(&inst).unwrap().makespan, 7.0);
    }

    #[test]
    fn chain_is_sequential() {
        let inst =
            f2_instance::<f64>(&[(1.0, 90.0), (2.0, 10.0), (3.0, 50.0)], 3, &[(1, 2), (2, 3)])
                .unwrap();
        let s = greedy_schedule(&inst).unwrap();
        assert_eq!(s.makespan, 6.0);
        assert!(s.steps.iter().all(|st| st.jobs.len() == 1));
        s.validate(&inst).unwrap();
    }

    #[test]
    fn closest_demand_wins_bus_phase() {
        // free = 100: job 2 (b = 95) is closest, then free = 5 -> job 3 (b = 10).
        let inst = f2_instance::<f64>(&[(1.0, 40.0), (1.0, 95.0), (1.0, 10.0)], 2, &[]).unwrap();
        let run = greedy_run(&inst).unwrap();
        assert_eq!(run.trace[0].config, Configuration::new([2, 3]));
    }

    #[test]
    fn zero_demand_jobs_fill_leftover_cores() {
        let inst = f2_instance::<f64>(&[(1.0, 0.0), (2.0, 100.0)], 2, &[]).unwrap();
        let run = greedy_run(&inst).unwrap();
        assert_eq!(run.trace[0].config, Configuration::new([1, 2]));
        assert_eq!(run.schedule.makespan, 2.0);
    }

    #[test]
    fn f1_instance_rejected() {
        use crate::busmodel::materialize_speed_table;
        use crate::configspace::{enumerate_configurations, DEFAULT_CONFIG_CAP};
        let f2 = f2_instance::<f64>(&[(1.0, 50.0), (2.0, 60.0)], 2, &[]).unwrap();
        let space = enumerate_configurations(&f2, DEFAULT_CONFIG_CAP).unwrap();
        let table = materialize_speed_table(&f2, &space).unwrap();
        let f1 = Instance::new(
            f2.jobs().to_vec(),
            2,
            f2.dag().clone(),
            Flavor::F1,
            Some(table),
        )
        .unwrap();
        assert!(matches!(greedy_schedule(&f1), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn carried_jobs_reserve_their_demand() {
        let inst = f2_instance::<f64>(
            &[(10.0, 70.0), (1.0, 20.0), (5.0, 30.0), (5.0, 25.0)],
            2,
            &[],
        )
        .unwrap();
        let run = greedy_run(&inst).unwrap();
        // First step: 70 closest to 100, then 30 closest to 30.
        assert_eq!(run.trace[0].config, Configuration::new([1, 3]));
        assert_eq!(run.trace[1].carried.len(), 1);
        run.schedule.validate(&inst).unwrap();
    }
}
