//! Event-point MILP for explicit speed tables.
//!
//! Event point `n` runs exactly one configuration `k` (`d_n_k = 1`) for
//! `t_n_k` time units; `y_p_n` marks the event point at which job `p`
//! starts. Point 0 is pinned to the zero configuration. The model is
//! exported in CPLEX LP text format together with a JSON sidecar that maps
//! variable names back to event points and job sets.
//!
//! Variable naming: `t_<n>_<k>`, `d_<n>_<k>` (configuration index `k` into
//! the enumerated space) and `y_<p>_<n>` (1-based job `p`).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::busmodel::{materialize_speed_table, SpeedTable};
use crate::configspace::{ConfigSpace, Configuration};
use crate::error::{Error, Result};
use crate::exact::lp::Relation;
use crate::instance::{Flavor, Instance, JobId};
use crate::scalar::Scalar;
use crate::schedule::{Schedule, Step};

pub const DEFAULT_VAR_CAP: usize = 4_000_000;
pub const DEFAULT_ROW_CAP: usize = 8_000_000;

/// How the configuration precedence constraints are written.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PrecedenceForm {
    /// `d_{n1,k2} + d_{n2,k1} <= 1` for every `n2 <= n1` whenever `k1`
    /// must run after `k2`.
    Pairwise,
    /// The big-M form
    /// `a·d_{n1,k2}·(n1+1) <= a·(d_{n2,k1} + (1 - d_{n2,k1})·e)·n2`
    /// over all `n1, n2`, including `n2 = 0`. It forbids every
    /// predecessor configuration outright and is kept for comparison only.
    Literal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarRole {
    Duration { n: usize, k: usize },
    Chosen { n: usize, k: usize },
    Start { p: JobId, n: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variable<S> {
    pub name: String,
    pub kind: VarKind,
    pub role: VarRole,
    pub lower: S,
    pub upper: Option<S>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint<S> {
    pub name: String,
    pub terms: Vec<(usize, S)>,
    pub relation: Relation,
    pub rhs: S,
}

#[derive(Clone, Debug)]
pub struct MilpOptions {
    pub precedence: PrecedenceForm,
    /// Highest event point index; `None` means `2m`.
    pub event_points: Option<usize>,
    pub var_cap: usize,
    pub row_cap: usize,
}

impl Default for MilpOptions {
    fn default() -> Self {
        Self {
            precedence: PrecedenceForm::Pairwise,
            event_points: None,
            var_cap: DEFAULT_VAR_CAP,
            row_cap: DEFAULT_ROW_CAP,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MilpModel<S = f64> {
    pub num_jobs: usize,
    pub cores: usize,
    /// Highest event point index (`N = 0..=e`).
    pub e: usize,
    pub t_max: S,
    pub precedence: PrecedenceForm,
    pub configs: Vec<Configuration>,
    pub variables: Vec<Variable<S>>,
    pub objective: Vec<usize>,
    pub constraints: Vec<Constraint<S>>,
    by_name: HashMap<String, usize>,
}

impl<S: Scalar> MilpModel<S> {
    pub fn num_configs(&self) -> usize {
        self.configs.len()
    }

    pub fn t(&self, n: usize, k: usize) -> usize {
        n * self.configs.len() + k
    }

    pub fn d(&self, n: usize, k: usize) -> usize {
        (self.e + 1 + n) * self.configs.len() + k
    }

    pub fn y(&self, p: JobId, n: usize) -> usize {
        2 * (self.e + 1) * self.configs.len() + (p - 1) * (self.e + 1) + n
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn count_kind(&self, pred: impl Fn(&VarRole) -> bool) -> usize {
        self.variables.iter().filter(|v| pred(&v.role)).count()
    }
}

/// Builds the event-point model for `inst` over the configurations of `space`.
pub fn build_milp<S: Scalar>(inst: &Instance<S>, space: &ConfigSpace) -> Result<MilpModel<S>> {
    build_milp_with(inst, space, &MilpOptions::default())
}

pub fn build_milp_with<S: Scalar>(
    inst: &Instance<S>,
    space: &ConfigSpace,
    opts: &MilpOptions,
) -> Result<MilpModel<S>> {
    let table: SpeedTable<S> = match (inst.speed_table(), inst.flavor()) {
        (Some(t), _) => t.clone(),
        (None, Flavor::F2) => materialize_speed_table(inst, space)?,
        (None, Flavor::F1) => {
            return Err(Error::InvalidArgument("F1 instance without speed table".into()))
        }
    };
    let m = inst.num_jobs();
    let kk = space.len();
    let e = opts.event_points.unwrap_or(2 * m);
    let np = e + 1;
    let n_vars = 2 * np * kk + m * np;
    if np * kk > opts.var_cap {
        return Err(Error::Capacity {
            what: "MILP variables per family",
            actual: np * kk,
            limit: opts.var_cap,
            advice: "reduce jobs or cores, or use the greedy scheduler",
        });
    }
    let prec_pairs: Vec<(usize, usize)> = (0..kk)
        .flat_map(|k1| (0..kk).map(move |k2| (k1, k2)))
        .filter(|&(k1, k2)| space.precedence(k1, k2))
        .collect();
    let per_pair = match opts.precedence {
        PrecedenceForm::Pairwise => np * (np + 1) / 2,
        PrecedenceForm::Literal => np * np,
    };
    let n_rows = np * kk + np + m + m * np + m + prec_pairs.len() * per_pair;
    if n_rows > opts.row_cap {
        return Err(Error::Capacity {
            what: "MILP constraints",
            actual: n_rows,
            limit: opts.row_cap,
            advice: "reduce jobs or cores, or use the greedy scheduler",
        });
    }

    let t_max: S = inst.ideal_times().into_iter().sum();
    let mut variables = Vec::with_capacity(n_vars);
    for n in 0..np {
        for k in 0..kk {
            variables.push(Variable {
                name: format!("t_{n}_{k}"),
                kind: VarKind::Continuous,
                role: VarRole::Duration { n, k },
                lower: S::zero(),
                upper: None,
            });
        }
    }
    for n in 0..np {
        for k in 0..kk {
            let fixed = (n == 0).then(|| if k == 0 { S::one() } else { S::zero() });
            variables.push(Variable {
                name: format!("d_{n}_{k}"),
                kind: VarKind::Binary,
                role: VarRole::Chosen { n, k },
                lower: fixed.unwrap_or(S::zero()),
                upper: Some(fixed.unwrap_or(S::one())),
            });
        }
    }
    for p in 1..=m {
        for n in 0..np {
            variables.push(Variable {
                name: format!("y_{p}_{n}"),
                kind: VarKind::Binary,
                role: VarRole::Start { p, n },
                lower: S::zero(),
                upper: Some(S::one()),
            });
        }
    }
    let by_name = variables
        .iter()
        .enumerate()
        .map(|(i, v)| (v.name.clone(), i))
        .collect();

    let mut model = MilpModel {
        num_jobs: m,
        cores: inst.cores(),
        e,
        t_max,
        precedence: opts.precedence,
        configs: space.configs().to_vec(),
        variables,
        objective: Vec::new(),
        constraints: Vec::with_capacity(n_rows),
        by_name,
    };
    model.objective = (0..np)
        .flat_map(|n| (0..kk).map(move |k| (n, k)))
        .map(|(n, k)| model.t(n, k))
        .collect();

    let mut rows = Vec::with_capacity(n_rows);
    // duration only on the chosen configuration
    for n in 0..np {
        for k in 0..kk {
            rows.push(Constraint {
                name: format!("dur_{n}_{k}"),
                terms: vec![(model.t(n, k), S::one()), (model.d(n, k), -t_max)],
                relation: Relation::Le,
                rhs: S::zero(),
            });
        }
    }
    // one configuration per event point
    for n in 0..np {
        rows.push(Constraint {
            name: format!("one_{n}"),
            terms: (0..kk).map(|k| (model.d(n, k), S::one())).collect(),
            relation: Relation::Eq,
            rhs: S::zero() + S::one(),
        });
    }
    // every job receives its full ideal work
    let ideal = inst.ideal_times();
    for p in 1..=m {
        let mut terms = Vec::new();
        for n in 0..np {
            for (k, config) in space.configs().iter().enumerate() {
                if config.contains(p) {
                    let v = table.speed(p, config).ok_or_else(|| Error::Coverage {
                        job: p,
                        config: config.jobs().to_vec(),
                    })?;
                    terms.push((model.t(n, k), v));
                }
            }
        }
        rows.push(Constraint {
            name: format!("work_{p}"),
            terms,
            relation: Relation::Eq,
            rhs: ideal[p - 1],
        });
    }
    // a job present at n but not at n-1 starts at n
    for p in 1..=m {
        let with_p: Vec<usize> = (0..kk).filter(|&k| space.membership(p, k)).collect();
        for n in 0..np {
            let mut terms: Vec<(usize, S)> =
                with_p.iter().map(|&k| (model.d(n, k), S::one())).collect();
            if n > 0 {
                terms.extend(with_p.iter().map(|&k| (model.d(n - 1, k), -S::one())));
            }
            terms.push((model.y(p, n), -S::one()));
            rows.push(Constraint {
                name: format!("start_{p}_{n}"),
                terms,
                relation: Relation::Le,
                rhs: S::zero(),
            });
        }
    }
    // exactly one start per job
    for p in 1..=m {
        rows.push(Constraint {
            name: format!("once_{p}"),
            terms: (0..np).map(|n| (model.y(p, n), S::one())).collect(),
            relation: Relation::Eq,
            rhs: S::one(),
        });
    }
    // configuration precedence
    let es = S::from_usize(e).unwrap();
    for &(k1, k2) in &prec_pairs {
        for n1 in 0..np {
            match opts.precedence {
                PrecedenceForm::Pairwise => {
                    for n2 in 0..=n1 {
                        rows.push(Constraint {
                            name: format!("prec_{k1}_{k2}_{n1}_{n2}"),
                            terms: vec![(model.d(n1, k2), S::one()), (model.d(n2, k1), S::one())],
                            relation: Relation::Le,
                            rhs: S::one(),
                        });
                    }
                }
                PrecedenceForm::Literal => {
                    for n2 in 0..np {
                        let n2s = S::from_usize(n2).unwrap();
                        let mut terms = vec![(model.d(n1, k2), S::from_usize(n1 + 1).unwrap())];
                        let c2 = n2s * (es - S::one());
                        if c2 != S::zero() {
                            terms.push((model.d(n2, k1), c2));
                        }
                        rows.push(Constraint {
                            name: format!("prec_{k1}_{k2}_{n1}_{n2}"),
                            terms,
                            relation: Relation::Le,
                            rhs: es * n2s,
                        });
                    }
                }
            }
        }
    }
    model.constraints = rows;
    Ok(model)
}

fn write_terms<S: Scalar>(out: &mut String, model: &MilpModel<S>, terms: &[(usize, S)]) {
    let mut first = true;
    for (i, &(var, coef)) in terms.iter().enumerate() {
        if coef == S::zero() {
            continue;
        }
        if i > 0 && i % 8 == 0 {
            out.push_str("\n  ");
        }
        let name = &model.variables[var].name;
        let (sign, mag) = if coef < S::zero() { ("-", -coef) } else { ("+", coef) };
        if first {
            if sign == "-" {
                out.push_str("- ");
            }
        } else {
            let _ = write!(out, " {sign} ");
        }
        if mag == S::one() {
            out.push_str(name);
        } else {
            let _ = write!(out, "{mag} {name}");
        }
        first = false;
    }
    if first {
        out.push('0');
    }
}

/// Renders the model in CPLEX LP format. Output is byte-identical for
/// identical models.
pub fn lp_string<S: Scalar>(model: &MilpModel<S>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "\\ bussched event-point model");
    let _ = writeln!(
        out,
        "\\ jobs {} cores {} configurations {} event points 0..{} t_max {}",
        model.num_jobs,
        model.cores,
        model.configs.len(),
        model.e,
        model.t_max
    );
    let _ = writeln!(
        out,
        "\\ precedence form {}",
        match model.precedence {
            PrecedenceForm::Pairwise => "pairwise",
            PrecedenceForm::Literal => "literal",
        }
    );
    for (k, c) in model.configs.iter().enumerate() {
        let _ = writeln!(out, "\\ config {k} = {c}");
    }
    out.push_str("Minimize\n obj: ");
    let obj: Vec<(usize, S)> = model.objective.iter().map(|&v| (v, S::one())).collect();
    write_terms(&mut out, model, &obj);
    out.push_str("\nSubject To\n");
    for c in &model.constraints {
        let _ = write!(out, " {}: ", c.name);
        write_terms(&mut out, model, &c.terms);
        let rel = match c.relation {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        };
        let _ = writeln!(out, " {rel} {}", c.rhs);
    }
    out.push_str("Bounds\n");
    for v in &model.variables {
        match (v.kind, v.upper) {
            (VarKind::Binary, Some(u)) if u == v.lower => {
                let _ = writeln!(out, " {} = {}", v.name, u);
            }
            (VarKind::Continuous, Some(u)) => {
                let _ = writeln!(out, " {} <= {} <= {}", v.lower, v.name, u);
            }
            _ => {}
        }
    }
    out.push_str("Binaries\n");
    let mut line = 0;
    for v in model.variables.iter().filter(|v| v.kind == VarKind::Binary) {
        out.push(' ');
        out.push_str(&v.name);
        line += 1;
        if line == 10 {
            out.push('\n');
            line = 0;
        }
    }
    if line != 0 {
        out.push('\n');
    }
    out.push_str("End\n");
    out
}

pub fn export_lp<S: Scalar>(model: &MilpModel<S>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, lp_string(model))?;
    Ok(())
}

#[derive(Serialize)]
struct MetaVar<'a> {
    name: &'a str,
    kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    jobs: Option<&'a [JobId]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p: Option<JobId>,
}

#[derive(Serialize)]
struct Meta<'a> {
    version: u32,
    m: usize,
    cores: usize,
    e: usize,
    t_max: f64,
    precedence: PrecedenceForm,
    configs: Vec<&'a [JobId]>,
    variables: Vec<MetaVar<'a>>,
}

/// JSON sidecar mapping every variable name to its event point and job set.
pub fn metadata_json<S: Scalar>(model: &MilpModel<S>) -> String {
    let variables = model
        .variables
        .iter()
        .map(|v| match v.role {
            VarRole::Duration { n, k } | VarRole::Chosen { n, k } => MetaVar {
                name: &v.name,
                kind: if matches!(v.role, VarRole::Duration { .. }) { "t" } else { "d" },
                n: Some(n),
                k: Some(k),
                jobs: Some(model.configs[k].jobs()),
                p: None,
            },
            VarRole::Start { p, n } => MetaVar {
                name: &v.name,
                kind: "y",
                n: Some(n),
                k: None,
                jobs: None,
                p: Some(p),
            },
        })
        .collect();
    let meta = Meta {
        version: 1,
        m: model.num_jobs,
        cores: model.cores,
        e: model.e,
        t_max: model.t_max.to_f64_lossy(),
        precedence: model.precedence,
        configs: model.configs.iter().map(|c| c.jobs()).collect(),
        variables,
    };
    serde_json::to_string_pretty(&meta).expect("metadata serializes")
}

pub fn export_metadata<S: Scalar>(model: &MilpModel<S>, path: impl AsRef<Path>) -> Result<()> {
    let mut text = metadata_json(model);
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Variable values of a (claimed) solution.
#[derive(Clone, Debug, PartialEq)]
pub struct MilpSolution<S = f64> {
    pub values: Vec<S>,
    pub objective: S,
}

impl<S: Scalar> MilpSolution<S> {
    pub fn value(&self, var: usize) -> S {
        self.values[var]
    }
}

/// Parses `name value` lines. Blank lines and lines starting with `#` or
/// `\` are ignored; variables not listed are zero. An optional
/// `objective <value>` line is checked against the sum of durations.
pub fn parse_solution<S: Scalar>(model: &MilpModel<S>, text: &str) -> Result<MilpSolution<S>> {
    let mut values = vec![S::zero(); model.variables.len()];
    let mut claimed = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('\\') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(name), Some(val), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::Parse(format!("line {}: expected `name value`", lineno + 1)));
        };
        let v: f64 = val
            .parse()
            .map_err(|_| Error::Parse(format!("line {}: bad value `{val}` for {name}", lineno + 1)))?;
        let v = S::lit(v);
        if name == "objective" || name == "obj" {
            claimed = Some(v);
            continue;
        }
        let idx = model
            .var_index(name)
            .ok_or_else(|| Error::Parse(format!("line {}: unknown variable `{name}`", lineno + 1)))?;
        values[idx] = v;
    }
    let objective: S = model.objective.iter().map(|&i| values[i]).sum();
    if let Some(c) = claimed {
        if (c - objective).abs() > S::integrality_tol() * S::one().max(objective.abs()) {
            return Err(Error::Validation(format!(
                "claimed objective {c} differs from sum of durations {objective}"
            )));
        }
    }
    Ok(MilpSolution { values, objective })
}

pub fn solution_to_string<S: Scalar>(model: &MilpModel<S>, sol: &MilpSolution<S>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "objective {}", sol.objective);
    for (v, &x) in model.variables.iter().zip(&sol.values) {
        if x != S::zero() {
            let _ = writeln!(out, "{} {}", v.name, x);
        }
    }
    out
}

/// Verifies bounds, integrality and every constraint within `tol` (scaled
/// by the constraint's magnitude). The error names the first violation.
pub fn check_feasibility<S: Scalar>(model: &MilpModel<S>, sol: &MilpSolution<S>, tol: S) -> Result<()> {
    for (v, &x) in model.variables.iter().zip(&sol.values) {
        if x < v.lower - tol || v.upper.is_some_and(|u| x > u + tol) {
            return Err(Error::Validation(format!("{} = {x} violates its bounds", v.name)));
        }
        if v.kind == VarKind::Binary && (x - x.round()).abs() > tol {
            return Err(Error::Validation(format!("{} = {x} is not integral", v.name)));
        }
    }
    for c in &model.constraints {
        let lhs: S = c.terms.iter().map(|&(i, a)| a * sol.values[i]).sum();
        let scale = c
            .terms
            .iter()
            .map(|&(i, a)| (a * sol.values[i]).abs())
            .fold(c.rhs.abs(), S::max)
            .max(S::one());
        let slack = tol * scale;
        let ok = match c.relation {
            Relation::Le => lhs <= c.rhs + slack,
            Relation::Ge => lhs >= c.rhs - slack,
            Relation::Eq => (lhs - c.rhs).abs() <= slack,
        };
        if !ok {
            return Err(Error::Validation(format!(
                "constraint {} violated: lhs {lhs} vs rhs {}",
                c.name, c.rhs
            )));
        }
    }
    Ok(())
}

/// Encodes a schedule as a model solution: step `i` occupies event point
/// `i + 1`; leftover points run the zero configuration for zero time.
pub fn solution_from_schedule<S: Scalar>(
    model: &MilpModel<S>,
    sched: &Schedule<S>,
) -> Result<MilpSolution<S>> {
    if sched.steps.len() > model.e {
        return Err(Error::InvalidArgument(format!(
            "schedule has {} steps but the model only {} non-zero event points",
            sched.steps.len(),
            model.e
        )));
    }
    let index: HashMap<&Configuration, usize> =
        model.configs.iter().enumerate().map(|(k, c)| (c, k)).collect();
    let mut values = vec![S::zero(); model.variables.len()];
    values[model.d(0, 0)] = S::one();
    let mut first_seen: HashMap<JobId, usize> = HashMap::new();
    for n in 1..=model.e {
        let (k, dur) = match sched.steps.get(n - 1) {
            Some(step) => {
                let k = *index.get(&step.jobs).ok_or_else(|| {
                    Error::InvalidArgument(format!("configuration {} not in the model", step.jobs))
                })?;
                (k, step.duration)
            }
            None => (0, S::zero()),
        };
        values[model.d(n, k)] = S::one();
        values[model.t(n, k)] = dur;
        for &p in model.configs[k].jobs() {
            first_seen.entry(p).or_insert(n);
        }
    }
    for (&p, &n) in &first_seen {
        values[model.y(p, n)] = S::one();
    }
    let objective = model.objective.iter().map(|&i| values[i]).sum();
    Ok(MilpSolution { values, objective })
}

/// Rebuilds a schedule from a solution: event points in order, zero-length
/// points dropped, equal neighbours merged, cores assigned.
pub fn schedule_from_solution<S: Scalar>(
    model: &MilpModel<S>,
    sol: &MilpSolution<S>,
) -> Result<Schedule<S>> {
    let itol = S::integrality_tol();
    for v in &model.variables {
        if v.kind == VarKind::Binary {
            let x = sol.values[model.var_index(&v.name).unwrap()];
            if (x - x.round()).abs() > itol {
                return Err(Error::Validation(format!("{} = {x} is not integral", v.name)));
            }
        }
    }
    let kk = model.configs.len();
    let dtol = S::completion_tol() * S::one().max(sol.objective.abs());
    let mut steps: Vec<Step<S>> = Vec::new();
    for n in 0..=model.e {
        let chosen: Vec<usize> = (0..kk)
            .filter(|&k| sol.values[model.d(n, k)] > S::lit(0.5))
            .collect();
        let [k] = chosen[..] else {
            return Err(Error::Validation(format!(
                "event point {n} selects {} configurations",
                chosen.len()
            )));
        };
        let duration: S = (0..kk).map(|k| sol.values[model.t(n, k)]).sum();
        if duration <= dtol {
            continue;
        }
        match steps.last_mut() {
            Some(last) if last.jobs == model.configs[k] => last.duration = last.duration + duration,
            _ => steps.push(Step {
                jobs: model.configs[k].clone(),
                duration,
            }),
        }
    }
    // continuity
    let mut left = vec![false; model.num_jobs + 1];
    let mut prev = Configuration::empty();
    for step in &steps {
        for &p in step.jobs.jobs() {
            if left[p] {
                return Err(Error::Validation(format!(
                    "job {p} runs in non-contiguous event points"
                )));
            }
        }
        for &p in prev.jobs() {
            if !step.jobs.contains(p) {
                left[p] = true;
            }
        }
        prev = step.jobs.clone();
    }
    for p in 1..=model.num_jobs {
        if !steps.iter().any(|s| s.jobs.contains(p)) {
            return Err(Error::Validation(format!("job {p} never runs")));
        }
    }
    Schedule::from_steps(steps, model.cores).map_err(|e| match e {
        Error::Contract(msg) => Error::Validation(msg),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::configspace::{enumerate_configurations, DEFAULT_CONFIG_CAP};
    use crate::instance::f2_instance;

    fn ab() -> (Instance, ConfigSpace) {
        let inst = f2_instance::<f64>(&[(10.0, 60.0), (2.0, 60.0)], 2, &[]).unwrap();
        let space = enumerate_configurations(&inst, DEFAULT_CONFIG_CAP).unwrap();
        (inst, space)
    }

    #[test]
    fn variable_counts() {
        let (inst, space) = ab();
        let model = build_milp(&inst, &space).unwrap();
        assert_eq!(space.len(), 4);
        assert_eq!(model.e, 4);
        assert_eq!(model.count_kind(|r| matches!(r, VarRole::Duration { .. })), 20);
        assert_eq!(model.count_kind(|r| matches!(r, VarRole::Chosen { .. })), 20);
        assert_eq!(model.count_kind(|r| matches!(r, VarRole::Start { .. })), 10);
        assert_eq!(model.t_max, 12.0);
    }

    #[test]
    fn zero_point_is_pinned() {
        let (inst, space) = ab();
        let model = build_milp(&inst, &space).unwrap();
        let d00 = &model.variables[model.d(0, 0)];
        assert_eq!((d00.lower, d00.upper), (1.0, Some(1.0)));
        let d01 = &model.variables[model.d(0, 1)];
        assert_eq!((d01.lower, d01.upper), (0.0, Some(0.0)));
    }

    #[test]
    fn single_job_lp_text() {
        let inst = f2_instance::<f64>(&[(3.0, 20.0)], 1, &[]).unwrap();
        let space = enumerate_configurations(&inst, DEFAULT_CONFIG_CAP).unwrap();
        let model = build_milp(&inst, &space).unwrap();
        let text = lp_string(&model);
        assert!(text.contains("Minimize\n obj: t_0_0 + t_0_1 + t_1_0 + t_1_1 + t_2_0 + t_2_1\n"));
        assert!(text.contains(" work_1: t_0_1 + t_1_1 + t_2_1 = 3\n"));
        assert!(text.contains("Binaries\n d_0_0 d_0_1 d_1_0 d_1_1 d_2_0 d_2_1 y_1_0 y_1_1 y_1_2\n"));
        assert!(text.ends_with("End\n"));
        assert_eq!(text, lp_string(&build_milp(&inst, &space).unwrap()));
    }

    #[test]
    fn schedule_round_trip_through_solution() {
        let (inst, space) = ab();
        let model = build_milp(&inst, &space).unwrap();
        let sched = crate::greedy::greedy_schedule(&inst).unwrap();
        let sol = solution_from_schedule(&model, &sched).unwrap();
        check_feasibility(&model, &sol, 1e-9).unwrap();
        assert!((sol.objective - 10.4).abs() < 1e-12);
        let back = schedule_from_solution(&model, &sol).unwrap();
        assert_eq!(back.steps, sched.steps);
        assert!((back.makespan - sol.objective).abs() < 1e-6);
    }

    #[test]
    fn literal_precedence_rejects_feasible_chain() {
        let inst = f2_instance::<f64>(&[(1.0, 50.0), (2.0, 50.0)], 2, &[(1, 2)]).unwrap();
        let space = enumerate_configurations(&inst, DEFAULT_CONFIG_CAP).unwrap();
        let sched = crate::greedy::greedy_schedule(&inst).unwrap();
        let pairwise = build_milp(&inst, &space).unwrap();
        let sol = solution_from_schedule(&pairwise, &sched).unwrap();
        check_feasibility(&pairwise, &sol, 1e-9).unwrap();

        let opts = MilpOptions { precedence: PrecedenceForm::Literal, ..Default::default() };
        let literal = build_milp_with(&inst, &space, &opts).unwrap();
        let sol = solution_from_schedule(&literal, &sched).unwrap();
        let err = check_feasibility(&literal, &sol, 1e-9).unwrap_err();
        assert!(err.to_string().contains("prec_"), "{err}");
    }

    #[test]
    fn pairwise_rejects_reversed_chain() {
        let inst = f2_instance::<f64>(&[(1.0, 50.0), (2.0, 50.0)], 2, &[(1, 2)]).unwrap();
        let space = enumerate_configurations(&inst, DEFAULT_CONFIG_CAP).unwrap();
        let model = build_milp(&inst, &space).unwrap();
        let reversed = Schedule::from_steps(
            vec![
                Step { jobs: Configuration::new([2]), duration: 2.0 },
                Step { jobs: Configuration::new([1]), duration: 1.0 },
            ],
            2,
        )
        .unwrap();
        let sol = solution_from_schedule(&model, &reversed).unwrap();
        assert!(check_feasibility(&model, &sol, 1e-9).is_err());
    }

    #[test]
    fn fractional_binary_rejected() {
        let (inst, space) = ab();
        let model = build_milp(&inst, &space).unwrap();
        let sched = crate::greedy::greedy_schedule(&inst).unwrap();
        let mut sol = solution_from_schedule(&model, &sched).unwrap();
        sol.values[model.d(1, 3)] = 0.5;
        assert!(matches!(schedule_from_solution(&model, &sol), Err(Error::Validation(_))));
    }

    #[test]
    fn non_contiguous_solution_names_job() {
        let (inst, space) = ab();
        let model = build_milp(&inst, &space).unwrap();
        let k1 = space.index_of(&Configuration::new([1])).unwrap();
        let k2 = space.index_of(&Configuration::new([2])).unwrap();
        let mut values = vec![0.0; model.variables.len()];
        values[model.d(0, 0)] = 1.0;
        for (n, k, t) in [(1, k1, 5.0), (2, k2, 2.0), (3, k1, 5.0), (4, 0, 0.0)] {
            values[model.d(n, k)] = 1.0;
            values[model.t(n, k)] = t;
        }
        let sol = MilpSolution { objective: 12.0, values };
        match schedule_from_solution(&model, &sol) {
            Err(Error::Validation(msg)) => assert!(msg.contains("job 1"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn solution_text_round_trip() {
        let (inst, space) = ab();
        let model = build_milp(&inst, &space).unwrap();
        let sched = crate::greedy::greedy_schedule(&inst).unwrap();
        let sol = solution_from_schedule(&model, &sched).unwrap();
        let parsed = parse_solution(&model, &solution_to_string(&model, &sol)).unwrap();
        assert_eq!(parsed, sol);
        assert!(matches!(parse_solution(&model, "zz_1 3\n"), Err(Error::Parse(_))));
        assert!(matches!(parse_solution(&model, "objective 3\n"), Err(Error::Validation(_))));
    }

    #[test]
    fn variable_cap() {
        let (inst, space) = ab();
        let opts = MilpOptions { var_cap: 10, ..Default::default() };
        assert!(matches!(build_milp_with(&inst, &space, &opts), Err(Error::Capacity { .. })));
    }

    #[test]
    fn metadata_lists_every_variable() {
        let (inst, space) = ab();
        let model = build_milp(&inst, &space).unwrap();
        let v: serde_json::Value = serde_json::from_str(&metadata_json(&model)).unwrap();
        assert_eq!(v["variables"].as_array().unwrap().len(), 50);
        assert_eq!(v["configs"][3], serde_json::json!([1, 2]));
        assert_eq!(v["variables"][3]["jobs"], serde_json::json!([1, 2]));
    }
}
