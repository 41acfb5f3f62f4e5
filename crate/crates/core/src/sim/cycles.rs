use alloc::vec::Vec;

use rand::Rng;

use super::engine::{PathEngine, Phase, Segment, SegmentSink, Tee};
use super::SimConfig;
use crate::error::{invalid, Result};
use crate::model::PollingModel;

/// One full cycle, from the polling instant of queue 1 to the next one.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleTrace {
    pub index: u64,
    pub start_time: f64,
    pub length: f64,
    /// Workload vector at the polling instant of each queue.
    pub polling: Vec<Vec<f64>>,
    /// Workload vector at the switching instant (end of visit) of each queue.
    pub switching: Vec<Vec<f64>>,
    /// Workload vector when queue 1 is polled again.
    pub end: Vec<f64>,
    pub visit_durations: Vec<f64>,
    pub switch_durations: Vec<f64>,
    /// Path segments, filled only when recording is on.
    pub segments: Vec<Segment>,
}

/// Cycle-by-cycle driver. As an iterator it yields recorded traces forever.
pub struct CycleRunner<'m, R> {
    model: &'m PollingModel,
    engine: PathEngine,
    rng: R,
    index: u64,
    record: bool,
}

impl<'m, R: Rng> CycleRunner<'m, R> {
    pub fn new(model: &'m PollingModel, cfg: &SimConfig, rng: R, initial: Vec<f64>) -> Result<Self> {
        model.validate()?;
        cfg.validate()?;
        if initial.len() != model.dim() || initial.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
            return Err(invalid!("initial workload must be a nonnegative vector of length {}", model.dim()));
        }
        Ok(CycleRunner { model, engine: PathEngine::new(initial, cfg.brownian_step), rng, index: 0, record: true })
    }

    pub fn recording(mut self, on: bool) -> Self {
        self.record = on;
        self
    }

    pub fn state(&self) -> &[f64] {
        &self.engine.level
    }

    pub fn time(&self) -> f64 {
        self.engine.time
    }

    pub fn events(&self) -> u64 {
        self.engine.events
    }

    /// Simulate one cycle, streaming its path into `sink`.
    pub fn next_cycle<S: SegmentSink + ?Sized>(&mut self, sink: &mut S) -> Result<CycleTrace> {
        let mut segments = Vec::new();
        let trace = if self.record {
            let mut tee = Tee(sink, &mut segments);
            self.cycle(&mut tee)?
        } else {
            self.cycle(sink)?
        };
        Ok(CycleTrace { segments, ..trace })
    }

    fn cycle<S: SegmentSink + ?Sized>(&mut self, sink: &mut S) -> Result<CycleTrace> {
        let n = self.model.dim();
        let start_time = self.engine.time;
        let marked = self.model.globally_gated.then(|| self.engine.level.clone());
        let mut polling = Vec::with_capacity(n);
        let mut switching = Vec::with_capacity(n);
        let mut visit_durations = Vec::with_capacity(n);
        let mut switch_durations = Vec::with_capacity(n);
        for (i, q) in self.model.queues.iter().enumerate() {
            polling.push(self.engine.level.clone());
            let t0 = self.engine.time;
            match &marked {
                Some(m) => self.engine.serve_for(&q.served, m[i], &mut self.rng, sink)?,
                None => {
                    let found = self.engine.level[i];
                    self.engine.run_discipline(&q.discipline, &q.served, 0.0, found, &mut self.rng, sink)?;
                }
            }
            visit_durations.push(self.engine.time - t0);
            switching.push(self.engine.level.clone());
            let s = q.switch.duration.sample(&mut self.rng);
            self.engine.idle_for(&q.switch.input, s, Phase::Switch(i), &mut self.rng, sink)?;
            switch_durations.push(s);
        }
        let index = self.index;
        self.index += 1;
        Ok(CycleTrace {
            index,
            start_time,
            length: self.engine.time - start_time,
            polling,
            switching,
            end: self.engine.level.clone(),
            visit_durations,
            switch_durations,
            segments: Vec::new(),
        })
    }
}

impl<R: Rng> Iterator for CycleRunner<'_, R> {
    type Item = Result<CycleTrace>;

    fn next(&mut self) -> Option<Self::Item> {
        Some(self.next_cycle(&mut ()))
    }
}

/// Cycles of `model` started from the empty system.
pub fn run_cycles<'m, R: Rng>(model: &'m PollingModel, cfg: &SimConfig, rng: R) -> Result<CycleRunner<'m, R>> {
    CycleRunner::new(model, cfg, rng, alloc::vec![0.0; model.dim()])
}
