//! Path engine: advances the workload vector through visit and switch-over
//! phases, exactly between compound Poisson jumps and on an Euler grid when
//! the served process carries a Brownian term.

use alloc::vec::Vec;

use libm::sqrt;
use rand::Rng;

use crate::discipline::Discipline;
use crate::error::{Error, Result};
use crate::levy::{standard_exponential, standard_normal, ServedProcessSpec, SubordinatorSpec};

pub const MAX_EVENTS: u64 = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Visit(usize),
    Switch(usize),
}

/// A stretch of time on which every workload coordinate moves linearly.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub phase: Phase,
    pub t_start: f64,
    pub duration: f64,
    pub level: Vec<f64>,
    pub velocity: Vec<f64>,
}

/// Receives the piecewise-linear workload path as it is generated.
pub trait SegmentSink {
    fn segment(&mut self, phase: Phase, t_start: f64, duration: f64, level: &[f64], velocity: &[f64]);
}

impl SegmentSink for () {
    fn segment(&mut self, _: Phase, _: f64, _: f64, _: &[f64], _: &[f64]) {}
}

impl SegmentSink for Vec<Segment> {
    fn segment(&mut self, phase: Phase, t_start: f64, duration: f64, level: &[f64], velocity: &[f64]) {
        self.push(Segment { phase, t_start, duration, level: level.to_vec(), velocity: velocity.to_vec() });
    }
}

/// Pair of sinks fed with the same path.
pub struct Tee<'a, A: ?Sized, B: ?Sized>(pub &'a mut A, pub &'a mut B);

impl<A: SegmentSink + ?Sized, B: SegmentSink + ?Sized> SegmentSink for Tee<'_, A, B> {
    fn segment(&mut self, phase: Phase, t_start: f64, duration: f64, level: &[f64], velocity: &[f64]) {
        self.0.segment(phase, t_start, duration, level, velocity);
        self.1.segment(phase, t_start, duration, level, velocity);
    }
}

#[derive(Debug, Clone, Copy)]
enum Stop {
    After(f64),
    LevelAt { queue: usize, target: f64 },
}

/// Mutable simulation state: workload vector and clock.
#[derive(Debug, Clone)]
pub struct PathEngine {
    pub level: Vec<f64>,
    pub time: f64,
    pub events: u64,
    dt: f64,
    velocity: Vec<f64>,
}

impl PathEngine {
    pub fn new(level: Vec<f64>, brownian_step: f64) -> Self {
        let n = level.len();
        PathEngine { level, time: 0.0, events: 0, dt: brownian_step, velocity: alloc::vec![0.0; n] }
    }

    fn count(&mut self) -> Result<()> {
        self.events += 1;
        if self.events > MAX_EVENTS {
            return Err(Error::Runaway(self.events));
        }
        Ok(())
    }

    /// Switch-over (or any unserved stretch) of fixed length.
    pub fn idle_for<R: Rng + ?Sized, S: SegmentSink + ?Sized>(
        &mut self,
        input: &SubordinatorSpec,
        duration: f64,
        phase: Phase,
        rng: &mut R,
        sink: &mut S,
    ) -> Result<()> {
        self.velocity.copy_from_slice(&input.drift);
        self.advance(input, None, Stop::After(duration), phase, rng, sink)
    }

    /// Serve for a fixed time.
    pub fn serve_for<R: Rng + ?Sized, S: SegmentSink + ?Sized>(
        &mut self,
        served: &ServedProcessSpec,
        duration: f64,
        rng: &mut R,
        sink: &mut S,
    ) -> Result<()> {
        self.velocity = served.linear_velocity();
        let noise = (served.brownian_sd > 0.0).then_some((served.queue, served.brownian_sd));
        self.advance(&served.input, noise, Stop::After(duration), Phase::Visit(served.queue), rng, sink)
    }

    /// Serve until the served queue first reaches `target` from above.
    pub fn serve_until<R: Rng + ?Sized, S: SegmentSink + ?Sized>(
        &mut self,
        served: &ServedProcessSpec,
        target: f64,
        rng: &mut R,
        sink: &mut S,
    ) -> Result<()> {
        self.velocity = served.linear_velocity();
        let noise = (served.brownian_sd > 0.0).then_some((served.queue, served.brownian_sd));
        let stop = Stop::LevelAt { queue: served.queue, target };
        self.advance(&served.input, noise, stop, Phase::Visit(served.queue), rng, sink)
    }

    fn advance<R: Rng + ?Sized, S: SegmentSink + ?Sized>(
        &mut self,
        input: &SubordinatorSpec,
        noise: Option<(usize, f64)>,
        stop: Stop,
        phase: Phase,
        rng: &mut R,
        sink: &mut S,
    ) -> Result<()> {
        let rate = input.total_jump_rate();
        let mut remaining = match stop {
            Stop::After(d) => d,
            Stop::LevelAt { .. } => f64::INFINITY,
        };
        if let Stop::LevelAt { queue, target } = stop {
            if self.level[queue] <= target {
                self.level[queue] = target;
                return Ok(());
            }
        }
        loop {
            if remaining <= 0.0 {
                return Ok(());
            }
            let next_jump = if rate > 0.0 { standard_exponential(rng) / rate } else { f64::INFINITY };
            let done = match noise {
                None => self.linear_piece(next_jump, &mut remaining, stop, phase, sink),
                Some((queue, sd)) => self.euler_piece(next_jump, &mut remaining, stop, queue, sd, phase, rng, sink),
            }?;
            if done {
                return Ok(());
            }
            input.sample_jump_into(rng, &mut self.level);
            self.count()?;
        }
    }

    /// Move linearly until the next jump, the end of the phase or the target
    /// crossing. Returns `true` when the phase is over.
    fn linear_piece<S: SegmentSink + ?Sized>(
        &mut self,
        next_jump: f64,
        remaining: &mut f64,
        stop: Stop,
        phase: Phase,
        sink: &mut S,
    ) -> Result<bool> {
        let hit = match stop {
            Stop::LevelAt { queue, target } if self.velocity[queue] < 0.0 => {
                (self.level[queue] - target) / -self.velocity[queue]
            }
            _ => f64::INFINITY,
        };
        let step = next_jump.min(*remaining).min(hit);
        if !step.is_finite() {
            return Err(Error::Runaway(self.events));
        }
        sink.segment(phase, self.time, step, &self.level, &self.velocity);
        for (x, v) in self.level.iter_mut().zip(&self.velocity) {
            *x = (*x + v * step).max(0.0);
        }
        self.time += step;
        if hit <= step {
            if let Stop::LevelAt { queue, target } = stop {
                self.level[queue] = target;
            }
            return Ok(true);
        }
        if *remaining <= step {
            *remaining = 0.0;
            return Ok(true);
        }
        *remaining -= step;
        Ok(false)
    }

    #[allow(clippy::too_many_arguments)]
    fn euler_piece<R: Rng + ?Sized, S: SegmentSink + ?Sized>(
        &mut self,
        next_jump: f64,
        remaining: &mut f64,
        stop: Stop,
        queue: usize,
        sd: f64,
        phase: Phase,
        rng: &mut R,
        sink: &mut S,
    ) -> Result<bool> {
        let drift = self.velocity[queue];
        let mut until_jump = next_jump;
        loop {
            let step = self.dt.min(until_jump).min(*remaining);
            let start = self.level[queue];
            let end = start + drift * step + sd * sqrt(step) * standard_normal(rng);
            let mut velocity = self.velocity.clone();
            if let Stop::LevelAt { target, .. } = stop {
                if end <= target {
                    // Linear interpolation of the crossing inside the step.
                    let frac = (start - target) / (start - end);
                    let partial = frac * step;
                    velocity[queue] = if partial > 0.0 { (target - start) / partial } else { 0.0 };
                    sink.segment(phase, self.time, partial, &self.level, &velocity);
                    for (x, v) in self.level.iter_mut().zip(&self.velocity) {
                        *x += v * partial;
                    }
                    self.level[queue] = target;
                    self.time += partial;
                    return Ok(true);
                }
            }
            velocity[queue] = (end - start) / step;
            sink.segment(phase, self.time, step, &self.level, &velocity);
            for (x, v) in self.level.iter_mut().zip(&self.velocity) {
                *x += v * step;
            }
            self.level[queue] = end.max(0.0);
            self.time += step;
            self.count()?;
            *remaining -= step;
            if *remaining <= 0.0 {
                *remaining = 0.0;
                return Ok(true);
            }
            if until_jump <= step {
                return Ok(false);
            }
            until_jump -= step;
        }
    }

    /// Run one branching discipline on `active` units of work in the served
    /// queue while `reserve` further units sit there untouched. Returns the
    /// amount the discipline leaves behind in the served queue.
    pub fn run_discipline<R: Rng + ?Sized, S: SegmentSink + ?Sized>(
        &mut self,
        d: &Discipline,
        served: &ServedProcessSpec,
        reserve: f64,
        active: f64,
        rng: &mut R,
        sink: &mut S,
    ) -> Result<f64> {
        let i = served.queue;
        match d {
            Discipline::Gated => {
                self.serve_for(served, active, rng, sink)?;
                Ok((self.level[i] - reserve).max(0.0))
            }
            Discipline::Exhaustive => {
                self.serve_until(served, reserve, rng, sink)?;
                Ok(0.0)
            }
            Discipline::PExhaustive(p) => {
                let keep = p * active;
                self.serve_until(served, reserve + keep, rng, sink)?;
                Ok(keep)
            }
            Discipline::Mixture { p, left, right } => {
                let left_share = p * active;
                let right_share = active - left_share;
                let a = self.run_discipline(left, served, reserve + right_share, left_share, rng, sink)?;
                let b = self.run_discipline(right, served, reserve + a, right_share, rng, sink)?;
                Ok(a + b)
            }
            Discipline::Composition { first, second } => {
                let a = self.run_discipline(first, served, reserve, active, rng, sink)?;
                self.run_discipline(second, served, reserve, a, rng, sink)
            }
        }
    }
}

/// First passage of the served process from level `x` to zero. Returns the
/// passage time and the input accumulated in the other coordinates.
pub fn busy_period_sample<R: Rng + ?Sized>(
    served: &ServedProcessSpec,
    x: f64,
    brownian_step: f64,
    rng: &mut R,
) -> Result<(f64, Vec<f64>)> {
    let mut level = alloc::vec![0.0; served.input.dim()];
    level[served.queue] = x;
    let mut engine = PathEngine::new(level, brownian_step);
    engine.serve_until(served, 0.0, rng, &mut ())?;
    let mut off = engine.level;
    off[served.queue] = 0.0;
    Ok((engine.time, off))
}

/// Replacement `H(x)` produced by discipline `d` on found level `x`, with
/// the rest of the system empty. Returns the workload vector after the visit.
pub fn replacement_sample<R: Rng + ?Sized>(
    d: &Discipline,
    served: &ServedProcessSpec,
    x: f64,
    brownian_step: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let mut level = alloc::vec![0.0; served.input.dim()];
    level[served.queue] = x;
    let mut engine = PathEngine::new(level, brownian_step);
    engine.run_discipline(d, served, 0.0, x, rng, &mut ())?;
    Ok(engine.level)
}
