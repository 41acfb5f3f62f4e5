use alloc::vec::Vec;

use crate::discipline::Discipline;
use crate::error::{invalid, Result};
use crate::levy::{ServedProcessSpec, SubordinatorSpec, SwitchSpec};

/// Numerical knobs shared by the analytic routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Stop the infinite product once the branching iterate and the last
    /// factor gap are both below this.
    pub truncation: f64,
    /// Step of the one-sided difference stencils at the origin.
    pub derivative_step: f64,
    /// Band around zero inside which `rho_A` is declared critical.
    pub stability: f64,
    /// Upper limit on the number of product factors.
    pub max_terms: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { truncation: 1e-12, derivative_step: 1e-6, stability: 1e-9, max_terms: 10_000 }
    }
}

/// Everything attached to one queue: the process while it is served, the
/// switch-over that follows its visit, and its discipline.
#[derive(Debug, Clone, PartialEq)]
pub struct QueueSpec {
    pub served: ServedProcessSpec,
    pub switch: SwitchSpec,
    pub discipline: Discipline,
}

/// Cyclic polling system with `N` queues visited in index order.
///
/// Input may differ per visit (`served.input`) and per switch-over
/// (`switch.input`). With `globally_gated` set, the per-queue disciplines are
/// ignored and all work present at the start of a cycle is served during it.
#[derive(Debug, Clone, PartialEq)]
pub struct PollingModel {
    pub queues: Vec<QueueSpec>,
    pub globally_gated: bool,
    pub tolerances: Tolerances,
}

impl PollingModel {
    pub fn new(queues: Vec<QueueSpec>, globally_gated: bool, tolerances: Tolerances) -> Result<Self> {
        let model = PollingModel { queues, globally_gated, tolerances };
        model.validate()?;
        Ok(model)
    }

    /// Model whose visit and switch inputs are all the same subordinator.
    pub fn with_fixed_input(
        input: &SubordinatorSpec,
        queues: Vec<(f64, f64, crate::levy::SwitchDuration, Discipline)>,
    ) -> Result<Self> {
        let queues = queues
            .into_iter()
            .enumerate()
            .map(|(i, (rate, sd, duration, discipline))| QueueSpec {
                served: ServedProcessSpec { input: input.clone(), queue: i, service_rate: rate, brownian_sd: sd },
                switch: SwitchSpec { duration, input: input.clone() },
                discipline,
            })
            .collect();
        Self::new(queues, false, Tolerances::default())
    }

    pub fn dim(&self) -> usize {
        self.queues.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        if n == 0 {
            return Err(invalid!("a polling model needs at least one queue"));
        }
        let t = &self.tolerances;
        if !(t.truncation > 0.0 && t.derivative_step > 0.0 && t.stability >= 0.0 && t.max_terms > 0) {
            return Err(invalid!("tolerances must be positive: {t:?}"));
        }
        for (i, q) in self.queues.iter().enumerate() {
            if q.served.queue != i {
                return Err(invalid!("queue {} carries a served process for queue {}", i + 1, q.served.queue + 1));
            }
            if q.served.input.dim() != n || q.switch.input.dim() != n {
                return Err(invalid!("queue {} has inputs of the wrong dimension (expected {n})", i + 1));
            }
            q.served.validate()?;
            q.switch.validate()?;
            if self.globally_gated {
                if !q.served.is_unit_rate() {
                    return Err(invalid!(
                        "queue {}: globally gated service requires unit-rate drift service (rate 1, no Brownian term)",
                        i + 1
                    ));
                }
            } else {
                q.discipline.validate()?;
                if q.discipline.contains_gated() && !q.served.is_unit_rate() {
                    return Err(invalid!(
                        "queue {}: gated requires unit-rate drift service (rate 1, no Brownian term)",
                        i + 1
                    ));
                }
                if q.discipline.is_degenerate() {
                    return Err(invalid!("queue {}: discipline never serves the queue", i + 1));
                }
            }
        }
        if self.globally_gated {
            let w = &self.queues[0].served.input;
            if self.queues.iter().any(|q| &q.served.input != w || &q.switch.input != w) {
                return Err(invalid!("globally gated models need one input process for all visits and switch-overs"));
            }
        }
        Ok(())
    }

    /// Mean total work arriving during the switch-overs of one cycle.
    pub fn switch_work(&self) -> f64 {
        self.queues
            .iter()
            .map(|q| q.switch.mean_duration() * q.switch.input.mean_rate().iter().sum::<f64>())
            .sum()
    }

    /// Stationary quantities need work to arrive during switch-overs.
    /// Stability analysis and simulation do not.
    pub fn require_switch_work(&self) -> Result<()> {
        if self.switch_work() > 0.0 {
            Ok(())
        } else {
            Err(invalid!("the total work arriving during switch-overs is identically zero"))
        }
    }

    /// Relabel so that queue `first` becomes queue 0, keeping the cyclic order.
    pub fn rotated(&self, first: usize) -> Self {
        let n = self.dim();
        let perm: Vec<usize> = (0..n).map(|k| (first + k) % n).collect();
        let queues = perm
            .iter()
            .enumerate()
            .map(|(k, &old)| {
                let q = &self.queues[old];
                QueueSpec {
                    served: ServedProcessSpec {
                        input: q.served.input.permuted(&perm),
                        queue: k,
                        service_rate: q.served.service_rate,
                        brownian_sd: q.served.brownian_sd,
                    },
                    switch: SwitchSpec { duration: q.switch.duration, input: q.switch.input.permuted(&perm) },
                    discipline: q.discipline.clone(),
                }
            })
            .collect();
        PollingModel { queues, globally_gated: self.globally_gated, tolerances: self.tolerances }
    }

    /// Same coordinates as [`rotated`](Self::rotated): `out[k] = u[(first + k) % N]`.
    pub fn rotate_vector(u: &[f64], first: usize) -> Vec<f64> {
        let n = u.len();
        (0..n).map(|k| u[(first + k) % n]).collect()
    }

    pub fn mean_switch_total(&self) -> f64 {
        self.queues.iter().map(|q| q.switch.mean_duration()).sum()
    }

    /// Load `rho` when every phase sees the same input and every server
    /// drains at unit rate without Brownian noise; `None` otherwise.
    pub fn unit_rate_load(&self) -> Option<f64> {
        let w = &self.queues[0].served.input;
        let fixed = self
            .queues
            .iter()
            .all(|q| &q.served.input == w && &q.switch.input == w && q.served.is_unit_rate());
        fixed.then(|| w.mean_rate().iter().sum())
    }
}
