//! Discrete-event simulator of the polling system, used as an independent
//! check on the analytic transforms.
//!
//! Compound Poisson input with drift is simulated exactly. A Brownian term in
//! a served process is handled on an Euler grid of width
//! [`SimConfig::brownian_step`], with the level crossing located by linear
//! interpolation inside the step that crosses.
//!
//! Randomness: replication `r` draws from `ChaCha8Rng::seed_from_u64(seed)`
//! switched to stream `r`, so replications are independent of each other and
//! of the order in which they are run.

mod cycles;
mod engine;
mod estimate;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};

pub use cycles::{run_cycles, CycleRunner, CycleTrace};
pub use engine::{busy_period_sample, replacement_sample, PathEngine, Phase, Segment, SegmentSink, Tee, MAX_EVENTS};
pub use estimate::{
    aggregate, estimate, estimate_arbitrary_epoch, estimate_embedded_transform, run_replication, segment_integral,
    EstimationPlan, Estimates, OneStepEstimate, OneStepTarget, ReplicationTally,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub warmup_cycles: u64,
    pub measured_cycles: u64,
    pub replications: usize,
    pub seed: u64,
    pub brownian_step: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { warmup_cycles: 1000, measured_cycles: 10_000, replications: 32, seed: 1, brownian_step: 1e-3 }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.measured_cycles == 0 || self.replications == 0 {
            return Err(invalid!("simulation needs at least one replication and one measured cycle"));
        }
        if !(self.brownian_step > 0.0 && self.brownian_step.is_finite()) {
            return Err(invalid!("brownian_step must be positive, got {}", self.brownian_step));
        }
        Ok(())
    }
}

/// Random stream of replication `rep`.
pub fn replication_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}
