//! Experiment grids, the greedy/exact comparison and runtime benchmarks.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use bussched::milp::build_milp;
use bussched::simulator::{histogram, ratio_box_plot, RatioSample};
use bussched::*;
use clap::ValueEnum;
use serde::Serialize;

use crate::{ground_truth, CliError, CliResult, GridArgs, NoiseArgs};

/// Schema version written as the first line of every CSV report.
pub const CSV_SCHEMA_VERSION: u32 = 1;

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// m in {4, 6, 7, 8, 10}, c in {2, 3, 4}, all orders, 16 seeds.
    Paper,
    /// m in {4, 5}, c in {2, 3}, all orders, 2 seeds.
    Small,
}

pub struct Grid {
    pub jobs: Vec<usize>,
    pub cores: Vec<usize>,
    pub orders: Vec<OrderKind>,
    pub seeds: u64,
    pub max_exact_jobs: usize,
}

impl Grid {
    pub fn from_args(a: &GridArgs) -> CliResult<Self> {
        let (jobs, cores, orders, seeds) = match (a.preset, &a.jobs) {
            (Some(Preset::Paper), _) => (vec![4, 6, 7, 8, 10], vec![2, 3, 4], OrderKind::ALL.to_vec(), 16),
            (Some(Preset::Small), _) => (vec![4, 5], vec![2, 3], OrderKind::ALL.to_vec(), 2),
            (None, Some(jobs)) => (
                jobs.clone(),
                a.core_counts.clone().unwrap_or_else(|| vec![2]),
                a.orders.clone().unwrap_or_else(|| OrderKind::ALL.to_vec()),
                1,
            ),
            (None, None) => {
                return Err(CliError::Usage(
                    "choose a grid with --preset or --jobs".into(),
                ))
            }
        };
        if jobs.is_empty() || cores.is_empty() || orders.is_empty() {
            return Err(CliError::Usage("empty experiment grid".into()));
        }
        Ok(Self {
            jobs,
            cores,
            orders,
            seeds: a.seeds.unwrap_or(seeds),
            max_exact_jobs: a.max_exact_jobs,
        })
    }

    /// Every instance of the grid, ordered by (m, cores, order, seed).
    fn instances(&self) -> CliResult<Vec<(OrderKind, u64, Instance64)>> {
        let mut out = Vec::new();
        for &m in &self.jobs {
            for &c in &self.cores {
                for &kind in &self.orders {
                    for seed in 0..self.seeds {
                        let inst = gen_instance(m, c, kind, seed, 1.0..=100.0, 0.0..=100.0)?;
                        out.push((kind, seed, inst));
                    }
                }
            }
        }
        Ok(out)
    }
}

fn write_csv<W: Write, R: Serialize>(mut w: W, name: &str, rows: &[R]) -> CliResult<()> {
    writeln!(w, "#schema=bussched.{name}.v{CSV_SCHEMA_VERSION}")?;
    let mut csv = csv::Writer::from_writer(w);
    for row in rows {
        csv.serialize(row)?;
    }
    csv.flush()?;
    Ok(())
}

fn write_csv_file<R: Serialize>(dir: &Path, name: &str, rows: &[R]) -> CliResult<()> {
    write_csv(File::create(dir.join(format!("{name}.csv")))?, name, rows)
}

#[derive(Serialize)]
struct SampleRow {
    m: usize,
    cores: usize,
    order: &'static str,
    seed: u64,
    greedy_planned: f64,
    greedy_measured: f64,
    greedy_deviation_pct: f64,
    exact_planned: Option<f64>,
    exact_measured: Option<f64>,
    exact_deviation_pct: Option<f64>,
    ratio: Option<f64>,
}

#[derive(Serialize)]
struct BoxRow {
    m: usize,
    count: usize,
    min: f64,
    q1: f64,
    median: f64,
    q3: f64,
    max: f64,
}

#[derive(Serialize)]
struct HistogramRow {
    lo_pct: usize,
    hi_pct: usize,
    greedy_count: usize,
    greedy_pct: f64,
    exact_count: usize,
    exact_pct: f64,
}

#[derive(Serialize)]
struct RuntimeRow {
    m: usize,
    cores: usize,
    instances: usize,
    greedy_mean_s: f64,
    greedy_max_s: f64,
    exact_solved: usize,
    exact_mean_s: Option<f64>,
    exact_max_s: Option<f64>,
}

#[derive(Default)]
struct Times {
    greedy: Vec<f64>,
    exact: Vec<f64>,
}

fn mean_max(v: &[f64]) -> Option<(f64, f64)> {
    (!v.is_empty()).then(|| {
        (
            v.iter().sum::<f64>() / v.len() as f64,
            v.iter().copied().fold(0.0, f64::max),
        )
    })
}

/// Runs greedy and exact on every grid instance, replays both schedules
/// under one ground truth per instance and writes `samples.csv`,
/// `ratio_boxplot.csv`, `deviation_histogram.csv` and `runtime.csv`.
pub fn compare(grid: &Grid, noise: &NoiseArgs, dir: &Path) -> CliResult<()> {
    let mut samples = Vec::new();
    let mut ratios = Vec::new();
    let mut greedy_devs = Vec::new();
    let mut exact_devs = Vec::new();
    let mut times: BTreeMap<(usize, usize), Times> = BTreeMap::new();

    for (i, (kind, seed, inst)) in grid.instances()?.into_iter().enumerate() {
        let (m, c) = (inst.num_jobs(), inst.cores());
        // instance index offsets the noise seed
        let truth = ground_truth(&inst, noise, noise.noise_seed.wrapping_add(i as u64))?;
        let slot = times.entry((m, c)).or_default();

        let t = Instant::now();
        let greedy = greedy_schedule(&inst)?;
        slot.greedy.push(t.elapsed().as_secs_f64());
        let g = simulate(&greedy, &truth)?;
        greedy_devs.push(g.deviation_pct);

        let mut row = SampleRow {
            m,
            cores: c,
            order: kind.name(),
            seed,
            greedy_planned: greedy.makespan,
            greedy_measured: g.measured_makespan,
            greedy_deviation_pct: g.deviation_pct,
            exact_planned: None,
            exact_measured: None,
            exact_deviation_pct: None,
            ratio: None,
        };
        if m <= grid.max_exact_jobs {
            let t = Instant::now();
            let opts = ExactOptions {
                max_jobs: grid.max_exact_jobs,
                ..Default::default()
            };
            let exact = exact_solve(&inst, &opts)?.schedule;
            slot.exact.push(t.elapsed().as_secs_f64());
            let e = simulate(&exact, &truth)?;
            exact_devs.push(e.deviation_pct);
            row.exact_planned = Some(exact.makespan);
            row.exact_measured = Some(e.measured_makespan);
            row.exact_deviation_pct = Some(e.deviation_pct);
            row.ratio = Some(g.measured_makespan / e.measured_makespan);
            ratios.push(RatioSample {
                m,
                greedy: g.measured_makespan,
                exact: e.measured_makespan,
            });
        }
        samples.push(row);
    }

    write_csv_file(dir, "samples", &samples)?;

    let mut boxes = Vec::new();
    if !ratios.is_empty() {
        for (m, b) in ratio_box_plot(&ratios)? {
            boxes.push(BoxRow {
                m,
                count: ratios.iter().filter(|r| r.m == m).count(),
                min: b.min,
                q1: b.q1,
                median: b.median,
                q3: b.q3,
                max: b.max,
            });
        }
    }
    write_csv_file(dir, "ratio_boxplot", &boxes)?;

    let gh = histogram(&greedy_devs)?;
    let eh = (!exact_devs.is_empty()).then(|| histogram(&exact_devs)).transpose()?;
    let bins = gh.bins.len().max(eh.as_ref().map_or(0, |h| h.bins.len()));
    let hist: Vec<HistogramRow> = (0..bins)
        .map(|lo| {
            let ge = gh.bins.get(lo);
            let ee = eh.as_ref().and_then(|h| h.bins.get(lo));
            HistogramRow {
                lo_pct: lo,
                hi_pct: lo + 1,
                greedy_count: ge.map_or(0, |b| b.count),
                greedy_pct: ge.map_or(0.0, |b| b.pct),
                exact_count: ee.map_or(0, |b| b.count),
                exact_pct: ee.map_or(0.0, |b| b.pct),
            }
        })
        .collect();
    write_csv_file(dir, "deviation_histogram", &hist)?;

    let runtime: Vec<RuntimeRow> = times
        .iter()
        .map(|(&(m, cores), t)| {
            let (gm, gx) = mean_max(&t.greedy).unwrap_or_default();
            let e = mean_max(&t.exact);
            RuntimeRow {
                m,
                cores,
                instances: t.greedy.len(),
                greedy_mean_s: gm,
                greedy_max_s: gx,
                exact_solved: t.exact.len(),
                exact_mean_s: e.map(|x| x.0),
                exact_max_s: e.map(|x| x.1),
            }
        })
        .collect();
    write_csv_file(dir, "runtime", &runtime)
}

#[derive(Serialize)]
struct BenchRow {
    m: usize,
    cores: usize,
    order: &'static str,
    seed: u64,
    configurations: usize,
    milp_variables: usize,
    milp_constraints: usize,
    greedy_s: f64,
    exact_s: Option<f64>,
    exact_nodes: Option<u64>,
}

/// Per-instance model sizes and solver runtimes.
pub fn bench<W: Write>(grid: &Grid, out: W) -> CliResult<()> {
    let mut rows = Vec::new();
    for (kind, seed, inst) in grid.instances()? {
        let space = enumerate_configurations(&inst, DEFAULT_CONFIG_CAP)?;
        let model = build_milp(&inst, &space)?;
        let t = Instant::now();
        greedy_schedule(&inst)?;
        let greedy_s = t.elapsed().as_secs_f64();
        let (mut exact_s, mut exact_nodes) = (None, None);
        if inst.num_jobs() <= grid.max_exact_jobs {
            let t = Instant::now();
            let opts = ExactOptions {
                max_jobs: grid.max_exact_jobs,
                ..Default::default()
            };
            let r = exact_solve(&inst, &opts)?;
            exact_s = Some(t.elapsed().as_secs_f64());
            exact_nodes = Some(r.nodes);
        }
        rows.push(BenchRow {
            m: inst.num_jobs(),
            cores: inst.cores(),
            order: kind.name(),
            seed,
            configurations: space.len(),
            milp_variables: model.variables.len(),
            milp_constraints: model.constraints.len(),
            greedy_s,
            exact_s,
            exact_nodes,
        });
    }
    write_csv(out, "bench", &rows)
}
