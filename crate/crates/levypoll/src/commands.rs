//! The four batch commands plus the trace dump. Each returns its output as
//! a string so that the binary only handles files and exit codes.
//!
//! CSV layouts (values in `{:.11e}`, blank cells where a column does not apply):
//!
//! * transform: `point,u1..uN,quantity,queue,value,terms_used`
//! * simulate: `quantity,queue,component,point,u1..uN,mean,stderr,n`
//! * validate: `kind,quantity,queue,component,point,u1..uN,expected,observed,stderr,score,pass`
//! * trace: `cycle,phase,queue,t_start,t_end,F1..FN,v1..vN`

use levypoll_core::mtjbp::{immigration_lst, stability};
use levypoll_core::sim::{
    aggregate, replication_rng, run_cycles, run_replication, EstimationPlan, Estimates, OneStepTarget, Phase,
};
use levypoll_core::{Analysis, PollingModel, SimConfig, SimEstimate, Verdict};
use rayon::prelude::*;

use crate::config::{ConfigDocument, ConfigError, Resolved};
use crate::report::{fmt, AnalyzeReport, StabilitySection};

/// Largest accepted `|z|` in `validate`.
pub const Z_LIMIT: f64 = 4.0;
/// Largest accepted gap in the chain identity.
pub const CHAIN_TOL: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] levypoll_core::Error),
    #[error("model is {verdict}; refusing to evaluate stationary quantities\n{report}")]
    Refused { verdict: &'static str, report: String },
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Command-line overrides of the simulation block.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub replications: Option<usize>,
}

/// Parse a config and apply overrides.
pub fn load(text: &str, overrides: Overrides) -> Result<(ConfigDocument, Resolved), CliError> {
    let mut doc = crate::config::parse_config(text)?;
    if let Some(seed) = overrides.seed {
        doc.simulation.seed = seed;
    }
    if let Some(r) = overrides.replications {
        doc.simulation.replications = r;
    }
    let resolved = doc.resolve()?;
    Ok((doc, resolved))
}

fn stable_analysis(model: &PollingModel) -> Result<Analysis, CliError> {
    let report = stability(model)?;
    if report.verdict != Verdict::Stable {
        let section = StabilitySection::from(&report);
        return Err(CliError::Refused {
            verdict: report.verdict.as_str(),
            report: serde_json::to_string_pretty(&section).expect("reports always serialize"),
        });
    }
    Ok(Analysis::new(model)?)
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String, CliError> {
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is ascii"))
}

fn u_headers(n: usize) -> impl Iterator<Item = String> {
    (1..=n).map(|k| format!("u{k}"))
}

fn u_cells(u: &[f64]) -> impl Iterator<Item = String> + '_ {
    u.iter().map(|x| fmt(*x))
}

/// Stability section and, for stable models, the first moments (JSON).
pub fn analyze(doc: &ConfigDocument, r: &Resolved) -> Result<String, CliError> {
    let report = stability(&r.model)?;
    // Moments need a stable model with work arriving during switch-overs.
    let analysis = match report.verdict {
        Verdict::Stable if r.model.switch_work() > 0.0 => Some(Analysis::new(&r.model)?),
        _ => None,
    };
    Ok(AnalyzeReport::new(&report, analysis.as_ref(), doc).to_json())
}

/// Analytic transforms at every evaluation point (CSV).
pub fn transform(r: &Resolved) -> Result<String, CliError> {
    let analysis = stable_analysis(&r.model)?;
    let model = &r.model;
    let n = model.dim();
    type Row = (&'static str, Option<usize>, f64, usize);
    let blocks: Vec<Vec<Row>> = r
        .points
        .par_iter()
        .map(|u| -> Result<Vec<Row>, CliError> {
            let mut rows = Vec::new();
            if model.globally_gated {
                let b = analysis.b1_transform(u)?;
                rows.push(("polling", Some(0), b.value, b.terms_used));
            } else {
                for i in 0..n {
                    let (b, e) = analysis.embedded_transforms(i, u)?;
                    rows.push(("polling", Some(i), b.value, b.terms_used));
                    rows.push(("switching", Some(i), e.value, e.terms_used));
                    rows.push(("chain", Some(i), e.value * analysis.switch_factor(i, u)?, e.terms_used));
                }
                let f = analysis.arbitrary_epoch_transform(u)?;
                rows.push(("arbitrary", None, f.value, f.terms_used));
            }
            rows.push(("immigration", None, immigration_lst(model, u)?, 1));
            Ok(rows)
        })
        .collect::<Result<_, _>>()?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["point".to_string()];
    header.extend(u_headers(n));
    header.extend(["quantity", "queue", "value", "terms_used"].map(String::from));
    w.write_record(&header)?;
    for (k, (u, rows)) in r.points.iter().zip(blocks).enumerate() {
        for (quantity, queue, value, terms) in rows {
            let mut rec = vec![k.to_string()];
            rec.extend(u_cells(u));
            rec.push(quantity.to_string());
            rec.push(queue.map_or(String::new(), |i| (i + 1).to_string()));
            rec.push(fmt(value));
            rec.push(terms.to_string());
            w.write_record(&rec)?;
        }
    }
    finish(w)
}

/// Replications in parallel, aggregated in index order.
pub fn run_simulation(model: &PollingModel, cfg: &SimConfig, plan: &EstimationPlan) -> Result<Estimates, CliError> {
    let tallies = (0..cfg.replications as u64)
        .into_par_iter()
        .map(|rep| run_replication(model, cfg, plan, rep))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(aggregate(plan, &tallies))
}

fn plan_for(r: &Resolved) -> Result<EstimationPlan, CliError> {
    let one_step = r
        .points
        .iter()
        .map(|u| OneStepTarget::from_model(&r.model, u))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EstimationPlan { points: r.points.clone(), one_step })
}

struct SimRow<'a> {
    quantity: &'static str,
    queue: Option<usize>,
    component: Option<usize>,
    point: Option<(usize, &'a [f64])>,
    estimate: SimEstimate,
}

fn simulation_rows<'a>(r: &'a Resolved, est: &Estimates) -> Vec<SimRow<'a>> {
    let n = r.model.dim();
    let mut rows = vec![SimRow {
        quantity: "cycle_length",
        queue: None,
        component: None,
        point: None,
        estimate: est.cycle_length,
    }];
    for i in 0..n {
        for j in 0..n {
            rows.push(SimRow {
                quantity: "polling_level",
                queue: Some(i),
                component: Some(j),
                point: None,
                estimate: est.polling_mean[i][j],
            });
        }
    }
    for (k, u) in r.points.iter().enumerate() {
        let point = Some((k, u.as_slice()));
        rows.push(SimRow { quantity: "arbitrary", queue: None, component: None, point, estimate: est.arbitrary[k] });
        for i in 0..n {
            rows.push(SimRow { quantity: "polling", queue: Some(i), component: None, point, estimate: est.polling[k][i] });
            rows.push(SimRow {
                quantity: "switching",
                queue: Some(i),
                component: None,
                point,
                estimate: est.switching[k][i],
            });
        }
        rows.push(SimRow {
            quantity: "one_step_residual",
            queue: None,
            component: None,
            point,
            estimate: est.one_step[k].residual,
        });
    }
    rows
}

fn opt_index(x: Option<usize>) -> String {
    x.map_or(String::new(), |i| (i + 1).to_string())
}

fn point_cells(point: Option<(usize, &[f64])>, n: usize) -> Vec<String> {
    match point {
        Some((k, u)) => std::iter::once(k.to_string()).chain(u_cells(u)).collect(),
        None => vec![String::new(); n + 1],
    }
}

/// Monte Carlo estimates of every simulated quantity (CSV).
pub fn simulate(r: &Resolved) -> Result<String, CliError> {
    let est = run_simulation(&r.model, &r.simulation, &plan_for(r)?)?;
    let n = r.model.dim();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = ["quantity", "queue", "component", "point"].map(String::from).to_vec();
    header.extend(u_headers(n));
    header.extend(["mean", "stderr", "n"].map(String::from));
    w.write_record(&header)?;
    for row in simulation_rows(r, &est) {
        let mut rec = vec![row.quantity.to_string(), opt_index(row.queue), opt_index(row.component)];
        rec.extend(point_cells(row.point, n));
        rec.extend([fmt(row.estimate.mean), fmt(row.estimate.stderr), row.estimate.n.to_string()]);
        w.write_record(&rec)?;
    }
    finish(w)
}

/// Result of `validate`: the CSV table and the overall verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationOutcome {
    pub csv: String,
    pub passed: bool,
    pub failures: Vec<String>,
}

struct Check<'a> {
    kind: &'static str,
    quantity: &'static str,
    queue: Option<usize>,
    component: Option<usize>,
    point: Option<(usize, &'a [f64])>,
    expected: f64,
    observed: f64,
    stderr: Option<f64>,
    score: f64,
    pass: bool,
}

fn z_check<'a>(
    quantity: &'static str,
    queue: Option<usize>,
    component: Option<usize>,
    point: Option<(usize, &'a [f64])>,
    expected: f64,
    est: SimEstimate,
) -> Check<'a> {
    let z = est.z_score(expected);
    Check {
        kind: "zscore",
        quantity,
        queue,
        component,
        point,
        expected,
        observed: est.mean,
        stderr: Some(est.stderr),
        score: z,
        pass: z.abs() <= Z_LIMIT,
    }
}

/// Analytic values against simulation on the evaluation grid, plus the
/// chain identity between consecutive embedded transforms.
pub fn validate(r: &Resolved) -> Result<ValidationOutcome, CliError> {
    let analysis = stable_analysis(&r.model)?;
    let model = &r.model;
    let n = model.dim();
    let gg = model.globally_gated;
    let est = run_simulation(model, &r.simulation, &plan_for(r)?)?;
    let means = analysis.means();
    let mut checks = vec![z_check("cycle_length", None, None, None, means.mean_cycle, est.cycle_length)];
    if let Some(c) = means.mean_cycle_unit_rate {
        checks.push(z_check("cycle_length_from_load", None, None, None, c, est.cycle_length));
    }
    for j in 0..n {
        checks.push(z_check("polling_level", Some(0), Some(j), None, means.polling[j], est.polling_mean[0][j]));
    }
    if !gg {
        for i in 1..n {
            checks.push(z_check("polling_level", Some(i), Some(i), None, means.own_at_polling[i], est.polling_mean[i][i]));
        }
    }
    for (k, u) in r.points.iter().enumerate() {
        let point = Some((k, u.as_slice()));
        if gg {
            let b = analysis.b1_transform(u)?.value;
            checks.push(z_check("polling", Some(0), None, point, b, est.polling[k][0]));
        } else {
            let f = analysis.arbitrary_epoch_transform(u)?.value;
            checks.push(z_check("arbitrary", None, None, point, f, est.arbitrary[k]));
            for i in 0..n {
                let (b, e) = analysis.embedded_transforms(i, u)?;
                checks.push(z_check("polling", Some(i), None, point, b.value, est.polling[k][i]));
                checks.push(z_check("switching", Some(i), None, point, e.value, est.switching[k][i]));
                let next = analysis.polling_transform((i + 1) % n, u)?.value;
                let via = e.value * analysis.switch_factor(i, u)?;
                let gap = (next - via).abs();
                checks.push(Check {
                    kind: "identity",
                    quantity: "chain",
                    queue: Some(i),
                    component: None,
                    point,
                    expected: next,
                    observed: via,
                    stderr: None,
                    score: gap,
                    pass: gap <= CHAIN_TOL,
                });
            }
        }
        checks.push(z_check("one_step_residual", None, None, point, 0.0, est.one_step[k].residual));
    }

    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = ["kind", "quantity", "queue", "component", "point"].map(String::from).to_vec();
    header.extend(u_headers(n));
    header.extend(["expected", "observed", "stderr", "score", "pass"].map(String::from));
    w.write_record(&header)?;
    let mut failures = Vec::new();
    for c in &checks {
        let mut rec = vec![c.kind.to_string(), c.quantity.to_string(), opt_index(c.queue), opt_index(c.component)];
        rec.extend(point_cells(c.point, n));
        rec.extend([
            fmt(c.expected),
            fmt(c.observed),
            c.stderr.map_or(String::new(), fmt),
            fmt(c.score),
            c.pass.to_string(),
        ]);
        w.write_record(&rec)?;
        if !c.pass {
            failures.push(format!(
                "{} {} queue={} component={} point={}: expected {} observed {} score {}",
                c.kind,
                c.quantity,
                opt_index(c.queue),
                opt_index(c.component),
                c.point.map_or(String::new(), |(k, _)| k.to_string()),
                fmt(c.expected),
                fmt(c.observed),
                fmt(c.score)
            ));
        }
    }
    Ok(ValidationOutcome { csv: finish(w)?, passed: failures.is_empty(), failures })
}

/// Path segments of the first `cycles` cycles of replication 0 (CSV).
pub fn trace(r: &Resolved, cycles: usize) -> Result<String, CliError> {
    let n = r.model.dim();
    let rng = replication_rng(r.simulation.seed, 0);
    let runner = run_cycles(&r.model, &r.simulation, rng)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = ["cycle", "phase", "queue", "t_start", "t_end"].map(String::from).to_vec();
    header.extend((1..=n).map(|k| format!("F{k}")));
    header.extend((1..=n).map(|k| format!("v{k}")));
    w.write_record(&header)?;
    for c in runner.take(cycles) {
        let c = c?;
        for s in &c.segments {
            let (phase, queue) = match s.phase {
                Phase::Visit(i) => ("visit", i),
                Phase::Switch(i) => ("switch", i),
            };
            let mut rec = vec![c.index.to_string(), phase.to_string(), (queue + 1).to_string()];
            rec.push(fmt(s.t_start));
            rec.push(fmt(s.t_start + s.duration));
            rec.extend(s.level.iter().map(|x| fmt(*x)));
            rec.extend(s.velocity.iter().map(|x| fmt(*x)));
            w.write_record(&rec)?;
        }
    }
    finish(w)
}
