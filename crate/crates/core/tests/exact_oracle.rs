//! The exact search against exhaustive enumeration and other oracles.

use bussched::exact::{min_durations, Strategy};
use bussched::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn gen(m: usize, c: usize, kind: OrderKind, seed: u64) -> Option<Instance64> {
    gen_instance(m, c, kind, seed, 1.0..=100.0, 0.0..=100.0).ok()
}

/// Minimum over every canonical sequence of at most `max_len` configurations.
fn exhaustive(inst: &Instance64, max_len: usize) -> f64 {
    let space = enumerate_configurations(inst, DEFAULT_CONFIG_CAP).unwrap();
    let table = materialize_speed_table(inst, &space).unwrap();
    let ideal = inst.ideal_times();
    let mut best = f64::INFINITY;
    for seq in enumerate_sequences(inst, &space, max_len).unwrap() {
        if let Some(sol) = min_durations(&seq, &space, &table, &ideal).unwrap() {
            // residual self-check of the sequence LP
            for p in 1..=inst.num_jobs() {
                let done: f64 = seq
                    .configs(&space)
                    .zip(&sol.durations)
                    .map(|(k, &t)| table.speed(p, k).unwrap() * t)
                    .sum();
                assert!((done - ideal[p - 1]).abs() <= 1e-8 * ideal[p - 1]);
            }
            best = best.min(sol.makespan);
        }
    }
    best
}

fn opts(strategy: Strategy, seed_with_greedy: bool) -> ExactOptions {
    ExactOptions {
        strategy,
        seed_with_greedy,
        ..Default::default()
    }
}

#[test]
fn exact_matches_exhaustive_enumeration() {
    let mut checked = 0;
    for m in 1..=4 {
        for c in 2..=3 {
            for kind in OrderKind::ALL {
                for seed in 0..12 {
                    let Some(inst) = gen(m, c, kind, seed) else { continue };
                    let best = exhaustive(&inst, 2 * m);
                    for strategy in [Strategy::Auto, Strategy::Sequences, Strategy::ConfigSets] {
                        for g in [true, false] {
                            let r = exact_solve(&inst, &opts(strategy, g)).unwrap();
                            r.schedule.validate(&inst).unwrap();
                            let got = r.schedule.makespan;
                            assert!(
                                (got - best).abs() <= 1e-9 * best,
                                "{kind} m={m} c={c} seed={seed} {strategy:?}: {got} vs {best}"
                            );
                        }
                    }
                    checked += 1;
                }
            }
        }
    }
    assert!(checked > 300);
}

#[test]
fn exact_matches_exhaustive_enumeration_five_jobs() {
    for c in 2..=3 {
        for kind in OrderKind::ALL {
            for seed in 0..3 {
                let inst = gen(5, c, kind, seed).unwrap();
                let best = exhaustive(&inst, 10);
                let got = exact_makespan(&inst).unwrap().makespan;
                assert!((got - best).abs() <= 1e-9 * best, "{kind} c={c} seed={seed}");
            }
        }
    }
}

#[test]
fn longer_sequences_never_help() {
    for m in 1..=4 {
        for c in 2..=3 {
            for kind in OrderKind::ALL {
                for seed in 0..6 {
                    let Some(inst) = gen(m, c, kind, seed) else { continue };
                    let short = exhaustive(&inst, 2 * m);
                    if m <= 3 {
                        let long = exhaustive(&inst, 2 * m + 4);
                        assert!((short - long).abs() <= 1e-9 * short);
                    }
                    let long = exact_solve(
                        &inst,
                        &ExactOptions {
                            strategy: Strategy::Sequences,
                            max_len: Some(2 * m + 4),
                            ..Default::default()
                        },
                    )
                    .unwrap();
                    assert!((long.schedule.makespan - short).abs() <= 1e-9 * short);
                }
            }
        }
    }
}

#[test]
fn greedy_never_beats_exact() {
    for m in [4, 6] {
        for c in 2..=3 {
            for kind in OrderKind::ALL {
                for seed in 0..6 {
                    let inst = gen(m, c, kind, seed).unwrap();
                    let g = greedy_schedule(&inst).unwrap().makespan;
                    let e = exact_makespan(&inst).unwrap().makespan;
                    assert!(g >= e - 1e-9, "{kind} m={m} c={c} seed={seed}: {g} < {e}");
                }
            }
        }
    }
}

/// Every assignment of jobs to cores, no pruning.
fn all_assignments(lengths: &[f64], cores: usize) -> f64 {
    let m = lengths.len();
    let mut best = f64::INFINITY;
    let mut code = vec![0usize; m];
    loop {
        let mut loads = vec![0.0; cores];
        for (p, &k) in code.iter().enumerate() {
            loads[k] += lengths[p];
        }
        best = best.min(loads.iter().copied().fold(0.0, f64::max));
        let mut i = 0;
        while i < m && code[i] == cores - 1 {
            code[i] = 0;
            i += 1;
        }
        if i == m {
            return best;
        }
        code[i] += 1;
    }
}

#[test]
fn no_interference_reduces_to_partition() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..40 {
        let m = rng.gen_range(1..=7);
        let c = rng.gen_range(2..=3);
        // demands with any c of them summing to at most 100
        let cap = 100.0 / c as f64;
        let jobs: Vec<(f64, f64)> = (0..m)
            .map(|_| (rng.gen_range(1.0..=100.0), rng.gen_range(0.0..=cap)))
            .collect();
        let inst: Instance64 = f2_instance(&jobs, c, &[]).unwrap();
        let lengths: Vec<f64> = jobs.iter().map(|j| j.0).collect();
        let want = all_assignments(&lengths, c);
        let brute = brute_force_no_interference(&lengths, c).unwrap();
        assert_eq!(brute, want);
        let got = exact_makespan(&inst).unwrap().makespan;
        assert!((got - want).abs() <= 1e-9 * want, "{got} vs {want}");
    }
}

