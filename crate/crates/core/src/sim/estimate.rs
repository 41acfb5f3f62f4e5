use alloc::vec;
use alloc::vec::Vec;

use libm::{exp, expm1};

use super::cycles::CycleRunner;
use super::engine::{Phase, SegmentSink};
use super::{replication_rng, SimConfig};
use crate::error::{domain, Result};
use crate::levy::dot;
use crate::model::PollingModel;
use crate::mtjbp;
use crate::stats::SimEstimate;

/// `int_0^L exp(-u . (level + t velocity)) dt`, exact for a linear segment.
pub fn segment_integral(u: &[f64], level: &[f64], velocity: &[f64], duration: f64) -> f64 {
    let a = dot(u, level);
    let c = dot(u, velocity) * duration;
    if c == 0.0 {
        duration * exp(-a)
    } else if c.abs() < 1.0 {
        duration * exp(-a) * (-expm1(-c) / c)
    } else {
        // Difference of exponentials with both exponents nonpositive.
        duration * (exp(-a) - exp(-(a + c))) / c
    }
}

/// Inputs of the one-step branching identity at one argument.
#[derive(Debug, Clone, PartialEq)]
pub struct OneStepTarget {
    pub u: Vec<f64>,
    pub kappa: Vec<f64>,
    pub immigration_lst: f64,
}

impl OneStepTarget {
    pub fn from_model(model: &PollingModel, u: &[f64]) -> Result<Self> {
        Ok(OneStepTarget {
            u: u.to_vec(),
            kappa: mtjbp::kappa(model, u)?,
            immigration_lst: mtjbp::immigration_lst(model, u)?,
        })
    }
}

/// What to estimate during the measured cycles.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EstimationPlan {
    /// Arguments of the transforms (arbitrary epoch, polling and switching).
    pub points: Vec<Vec<f64>>,
    pub one_step: Vec<OneStepTarget>,
}

/// Raw sums collected by one replication over its measured cycles.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationTally {
    pub cycles: u64,
    pub cycle_time: f64,
    pub area: Vec<f64>,
    pub polling: Vec<Vec<f64>>,
    pub switching: Vec<Vec<f64>>,
    /// `polling_level[i][j]`: sum of workload `j` at polling instants of queue `i`.
    pub polling_level: Vec<Vec<f64>>,
    pub one_step_observed: Vec<f64>,
    pub one_step_predicted: Vec<f64>,
    pub events: u64,
}

struct AreaSink<'a> {
    points: &'a [Vec<f64>],
    acc: Vec<f64>,
}

impl SegmentSink for AreaSink<'_> {
    fn segment(&mut self, _: Phase, _: f64, duration: f64, level: &[f64], velocity: &[f64]) {
        for (acc, u) in self.acc.iter_mut().zip(self.points) {
            *acc += segment_integral(u, level, velocity, duration);
        }
    }
}

fn check_points(model: &PollingModel, plan: &EstimationPlan) -> Result<()> {
    let n = model.dim();
    let args = plan.points.iter().chain(plan.one_step.iter().map(|t| &t.u));
    for u in args {
        if u.len() != n || u.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
            return Err(domain!("simulation arguments must be nonnegative vectors of length {n}: {u:?}"));
        }
    }
    Ok(())
}

/// Run replication `rep` of the plan.
pub fn run_replication(
    model: &PollingModel,
    cfg: &SimConfig,
    plan: &EstimationPlan,
    rep: u64,
) -> Result<ReplicationTally> {
    check_points(model, plan)?;
    let n = model.dim();
    let p = plan.points.len();
    let rng = replication_rng(cfg.seed, rep);
    let mut runner = CycleRunner::new(model, cfg, rng, vec![0.0; n])?.recording(false);
    for _ in 0..cfg.warmup_cycles {
        runner.next_cycle(&mut ())?;
    }
    let mut sink = AreaSink { points: &plan.points, acc: vec![0.0; p] };
    let mut tally = ReplicationTally {
        cycles: cfg.measured_cycles,
        cycle_time: 0.0,
        area: Vec::new(),
        polling: vec![vec![0.0; n]; p],
        switching: vec![vec![0.0; n]; p],
        polling_level: vec![vec![0.0; n]; n],
        one_step_observed: vec![0.0; plan.one_step.len()],
        one_step_predicted: vec![0.0; plan.one_step.len()],
        events: 0,
    };
    for _ in 0..cfg.measured_cycles {
        let c = runner.next_cycle(&mut sink)?;
        tally.cycle_time += c.length;
        for (k, u) in plan.points.iter().enumerate() {
            for i in 0..n {
                tally.polling[k][i] += exp(-dot(u, &c.polling[i]));
                tally.switching[k][i] += exp(-dot(u, &c.switching[i]));
            }
        }
        for (acc, b) in tally.polling_level.iter_mut().zip(&c.polling) {
            for (a, x) in acc.iter_mut().zip(b) {
                *a += x;
            }
        }
        for (k, t) in plan.one_step.iter().enumerate() {
            tally.one_step_observed[k] += exp(-dot(&t.u, &c.end));
            tally.one_step_predicted[k] += exp(-dot(&c.polling[0], &t.kappa)) * t.immigration_lst;
        }
    }
    tally.area = sink.acc;
    tally.events = runner.events();
    Ok(tally)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneStepEstimate {
    /// Mean of `exp(-u . B^{n+1})`.
    pub observed: SimEstimate,
    /// Mean of `exp(-B^n . kappa(u)) G~(u)`.
    pub predicted: SimEstimate,
    /// Paired difference of the two.
    pub residual: SimEstimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimates {
    pub replications: usize,
    pub cycles_per_replication: u64,
    pub cycle_length: SimEstimate,
    /// Arbitrary-epoch transform per plan point.
    pub arbitrary: Vec<SimEstimate>,
    /// `polling[k][i]`: transform at the polling instant of queue `i`, point `k`.
    pub polling: Vec<Vec<SimEstimate>>,
    pub switching: Vec<Vec<SimEstimate>>,
    /// `polling_mean[i][j]`: mean workload `j` at polling instants of queue `i`.
    pub polling_mean: Vec<Vec<SimEstimate>>,
    pub one_step: Vec<OneStepEstimate>,
    pub events: u64,
}

/// Combine replications; each replication mean is one i.i.d. batch.
pub fn aggregate(plan: &EstimationPlan, tallies: &[ReplicationTally]) -> Estimates {
    let r = tallies.len();
    let batch = |f: &dyn Fn(&ReplicationTally) -> f64| -> SimEstimate {
        let v: Vec<f64> = tallies.iter().map(|t| f(t) / t.cycles as f64).collect();
        SimEstimate::from_batches(&v)
    };
    let n = tallies.first().map_or(0, |t| t.polling_level.len());
    let arbitrary = plan
        .points
        .iter()
        .enumerate()
        .map(|(k, u)| {
            if u.iter().all(|x| *x == 0.0) {
                return SimEstimate::exact(1.0, r);
            }
            let num: Vec<f64> = tallies.iter().map(|t| t.area[k]).collect();
            let den: Vec<f64> = tallies.iter().map(|t| t.cycle_time).collect();
            SimEstimate::ratio(&num, &den)
        })
        .collect();
    let per_queue = |which: fn(&ReplicationTally) -> &Vec<Vec<f64>>| -> Vec<Vec<SimEstimate>> {
        (0..plan.points.len())
            .map(|k| (0..n).map(|i| batch(&|t| which(t)[k][i])).collect())
            .collect()
    };
    let one_step = (0..plan.one_step.len())
        .map(|k| OneStepEstimate {
            observed: batch(&|t| t.one_step_observed[k]),
            predicted: batch(&|t| t.one_step_predicted[k]),
            residual: batch(&|t| t.one_step_observed[k] - t.one_step_predicted[k]),
        })
        .collect();
    Estimates {
        replications: r,
        cycles_per_replication: tallies.first().map_or(0, |t| t.cycles),
        cycle_length: batch(&|t| t.cycle_time),
        arbitrary,
        polling: per_queue(|t| &t.polling),
        switching: per_queue(|t| &t.switching),
        polling_mean: (0..n).map(|i| (0..n).map(|j| batch(&|t| t.polling_level[i][j])).collect()).collect(),
        one_step,
        events: tallies.iter().map(|t| t.events).sum(),
    }
}

/// Run all replications in index order and aggregate.
pub fn estimate(model: &PollingModel, cfg: &SimConfig, plan: &EstimationPlan) -> Result<Estimates> {
    let tallies = (0..cfg.replications as u64)
        .map(|rep| run_replication(model, cfg, plan, rep))
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(plan, &tallies))
}

/// Simulated `(B~_i(u), E~_i(u))`.
pub fn estimate_embedded_transform(
    model: &PollingModel,
    i: usize,
    u: &[f64],
    cfg: &SimConfig,
) -> Result<(SimEstimate, SimEstimate)> {
    if i >= model.dim() {
        return Err(domain!("queue index {i} out of range"));
    }
    let plan = EstimationPlan { points: vec![u.to_vec()], one_step: Vec::new() };
    let e = estimate(model, cfg, &plan)?;
    Ok((e.polling[0][i], e.switching[0][i]))
}

/// Simulated arbitrary-epoch transform at `u`.
pub fn estimate_arbitrary_epoch(model: &PollingModel, u: &[f64], cfg: &SimConfig) -> Result<SimEstimate> {
    let plan = EstimationPlan { points: vec![u.to_vec()], one_step: Vec::new() };
    Ok(estimate(model, cfg, &plan)?.arbitrary[0])
}
