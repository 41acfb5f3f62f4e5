//! Lévy input primitives: nondecreasing multidimensional subordinators built
//! from a linear drift and finite-activity compound Poisson components, the
//! spectrally positive served-queue process, and switch-over durations.
//!
//! Every object here has a closed-form Laplace exponent or LST. Quantities of
//! the form `1 - LST` are evaluated through `expm1`/`log1p` so that exponents
//! stay accurate near the origin, where finite differences and infinite
//! products spend most of their time.

use alloc::vec::Vec;

use libm::{exp, expm1, log, log1p};
use rand::Rng;

use crate::error::{domain, invalid, Result};

const PROB_SUM_TOL: f64 = 1e-12;

/// Scalar law of the jump size factor `X` in `J = c * X`.
#[derive(Debug, Clone, PartialEq)]
pub enum JumpBase {
    Deterministic { value: f64 },
    Exponential { mean: f64 },
    Discrete { points: Vec<f64>, probs: Vec<f64> },
}

impl JumpBase {
    pub fn validate(&self) -> Result<()> {
        match self {
            JumpBase::Deterministic { value } => {
                if !(value.is_finite() && *value > 0.0) {
                    return Err(invalid!("deterministic jump size must be positive, got {value}"));
                }
            }
            JumpBase::Exponential { mean } => {
                if !(mean.is_finite() && *mean > 0.0) {
                    return Err(invalid!("exponential jump mean must be positive, got {mean}"));
                }
            }
            JumpBase::Discrete { points, probs } => {
                if points.is_empty() || points.len() != probs.len() {
                    return Err(invalid!(
                        "discrete jump law needs matching non-empty points/probs ({} vs {})",
                        points.len(),
                        probs.len()
                    ));
                }
                if points.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
                    return Err(invalid!("discrete jump points must be positive"));
                }
                if probs.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
                    return Err(invalid!("discrete jump probabilities must be nonnegative"));
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > PROB_SUM_TOL {
                    return Err(invalid!("discrete jump probabilities sum to {total}, not 1"));
                }
            }
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        match self {
            JumpBase::Deterministic { value } => *value,
            JumpBase::Exponential { mean } => *mean,
            JumpBase::Discrete { points, probs } => {
                points.iter().zip(probs).map(|(p, w)| p * w).sum()
            }
        }
    }

    /// `E exp(-s X)`.
    pub fn lst(&self, s: f64) -> f64 {
        1.0 - self.one_minus_lst(s)
    }

    /// `1 - E exp(-s X)`, accurate for small `s`.
    pub fn one_minus_lst(&self, s: f64) -> f64 {
        match self {
            JumpBase::Deterministic { value } => -expm1(-value * s),
            JumpBase::Exponential { mean } => mean * s / (1.0 + mean * s),
            JumpBase::Discrete { points, probs } => points
                .iter()
                .zip(probs)
                .map(|(p, w)| -w * expm1(-p * s))
                .sum(),
        }
    }

    /// `E[X exp(-s X)]`, i.e. minus the derivative of the LST.
    pub fn neg_lst_derivative(&self, s: f64) -> f64 {
        match self {
            JumpBase::Deterministic { value } => value * exp(-value * s),
            JumpBase::Exponential { mean } => {
                let d = 1.0 + mean * s;
                mean / (d * d)
            }
            JumpBase::Discrete { points, probs } => points
                .iter()
                .zip(probs)
                .map(|(p, w)| w * p * exp(-p * s))
                .sum(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            JumpBase::Deterministic { value } => *value,
            JumpBase::Exponential { mean } => mean * standard_exponential(rng),
            JumpBase::Discrete { points, probs } => {
                let target: f64 = rng.gen();
                let mut acc = 0.0;
                for (p, w) in points.iter().zip(probs) {
                    acc += w;
                    if target < acc {
                        return *p;
                    }
                }
                *points.last().expect("validated non-empty")
            }
        }
    }
}

/// Jump vector `J = scale * X` with `X ~ base`.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpSpec {
    pub base: JumpBase,
    pub scale: Vec<f64>,
}

impl JumpSpec {
    pub fn new(base: JumpBase, scale: Vec<f64>) -> Result<Self> {
        let spec = JumpSpec { base, scale };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.scale.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(invalid!("jump scale entries must be finite and nonnegative"));
        }
        if !self.scale.iter().any(|c| *c > 0.0) {
            return Err(invalid!("jump scale needs at least one positive entry"));
        }
        Ok(())
    }
}

/// Nondecreasing `N`-dimensional Lévy process: linear drift plus a finite
/// collection of compound Poisson components with correlated jump vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SubordinatorSpec {
    pub drift: Vec<f64>,
    pub components: Vec<(f64, JumpSpec)>,
}

/// One jump of a sampled compound Poisson path.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpEvent {
    pub time: f64,
    pub vector: Vec<f64>,
}

impl SubordinatorSpec {
    pub fn new(drift: Vec<f64>, components: Vec<(f64, JumpSpec)>) -> Result<Self> {
        let spec = SubordinatorSpec { drift, components };
        spec.validate()?;
        Ok(spec)
    }

    /// The process that stays at zero.
    pub fn zero(dim: usize) -> Self {
        SubordinatorSpec { drift: alloc::vec![0.0; dim], components: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.drift.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.drift.is_empty() {
            return Err(invalid!("subordinator dimension must be at least 1"));
        }
        if self.drift.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(invalid!("subordinator drift must be finite and nonnegative"));
        }
        for (rate, jump) in &self.components {
            if !(rate.is_finite() && *rate > 0.0) {
                return Err(invalid!("compound Poisson rate must be positive, got {rate}"));
            }
            jump.validate()?;
            if jump.scale.len() != self.dim() {
                return Err(invalid!(
                    "jump scale has length {} but the process has dimension {}",
                    jump.scale.len(),
                    self.dim()
                ));
            }
        }
        Ok(())
    }

    fn check_arg(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.dim() {
            return Err(domain!("argument has length {}, expected {}", u.len(), self.dim()));
        }
        if let Some(x) = u.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
            return Err(domain!("Laplace exponent argument must be finite and nonnegative, got {x}"));
        }
        Ok(())
    }

    /// Laplace exponent `phi(u)` with `E exp(-u . W(t)) = exp(-t phi(u))`.
    pub fn phi(&self, u: &[f64]) -> Result<f64> {
        self.check_arg(u)?;
        Ok(self.phi_unchecked(u))
    }

    pub(crate) fn phi_unchecked(&self, u: &[f64]) -> f64 {
        let linear = dot(&self.drift, u);
        let jumps: f64 = self
            .components
            .iter()
            .map(|(rate, jump)| rate * jump.base.one_minus_lst(dot(&jump.scale, u)))
            .sum();
        linear + jumps
    }

    /// Partial derivative of `phi` in coordinate `j` at `u`.
    pub(crate) fn dphi(&self, u: &[f64], j: usize) -> f64 {
        let jumps: f64 = self
            .components
            .iter()
            .filter(|(_, jump)| jump.scale[j] > 0.0)
            .map(|(rate, jump)| rate * jump.scale[j] * jump.base.neg_lst_derivative(dot(&jump.scale, u)))
            .sum();
        self.drift[j] + jumps
    }

    /// Gradient of `phi` at the origin: the mean input rate per coordinate.
    pub fn mean_rate(&self) -> Vec<f64> {
        let mut rate = self.drift.clone();
        for (lambda, jump) in &self.components {
            let m = lambda * jump.base.mean();
            for (r, c) in rate.iter_mut().zip(&jump.scale) {
                *r += m * c;
            }
        }
        rate
    }

    pub fn total_jump_rate(&self) -> f64 {
        self.components.iter().map(|(rate, _)| rate).sum()
    }

    /// Draw one jump of the superposed compound Poisson stream, adding it to
    /// `target` and returning the jump vector's component index.
    pub(crate) fn sample_jump_into<R: Rng + ?Sized>(&self, rng: &mut R, target: &mut [f64]) -> usize {
        let total = self.total_jump_rate();
        let mut pick = rng.gen::<f64>() * total;
        let mut index = self.components.len() - 1;
        for (k, (rate, _)) in self.components.iter().enumerate() {
            if pick < *rate {
                index = k;
                break;
            }
            pick -= rate;
        }
        let jump = &self.components[index].1;
        let x = jump.base.sample(rng);
        for (t, c) in target.iter_mut().zip(&jump.scale) {
            *t += c * x;
        }
        index
    }

    /// Exact sample of `W(horizon)` together with the ordered jump events.
    pub fn sample_increment<R: Rng + ?Sized>(
        &self,
        horizon: f64,
        rng: &mut R,
    ) -> (Vec<f64>, Vec<JumpEvent>) {
        let n = self.dim();
        let mut total: Vec<f64> = self.drift.iter().map(|d| d * horizon).collect();
        let mut events = Vec::new();
        let rate = self.total_jump_rate();
        if horizon <= 0.0 {
            return (alloc::vec![0.0; n], events);
        }
        if rate > 0.0 {
            let mut t = standard_exponential(rng) / rate;
            while t <= horizon {
                let mut vector = alloc::vec![0.0; n];
                self.sample_jump_into(rng, &mut vector);
                for (acc, v) in total.iter_mut().zip(&vector) {
                    *acc += v;
                }
                events.push(JumpEvent { time: t, vector });
                t += standard_exponential(rng) / rate;
            }
        }
        (total, events)
    }

    /// Relabel coordinates so that new coordinate `k` is old coordinate `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        SubordinatorSpec {
            drift: perm.iter().map(|&j| self.drift[j]).collect(),
            components: self
                .components
                .iter()
                .map(|(rate, jump)| {
                    (
                        *rate,
                        JumpSpec {
                            base: jump.base.clone(),
                            scale: perm.iter().map(|&j| jump.scale[j]).collect(),
                        },
                    )
                })
                .collect(),
        }
    }
}

/// Workload process while the server attends queue `queue`: the visit-phase
/// input minus linear service at rate `service_rate`, optionally perturbed
/// by a Brownian term in the served coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct ServedProcessSpec {
    pub input: SubordinatorSpec,
    pub queue: usize,
    pub service_rate: f64,
    pub brownian_sd: f64,
}

impl ServedProcessSpec {
    pub fn new(input: SubordinatorSpec, queue: usize, service_rate: f64, brownian_sd: f64) -> Result<Self> {
        let spec = ServedProcessSpec { input, queue, service_rate, brownian_sd };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.input.validate()?;
        if self.queue >= self.input.dim() {
            return Err(invalid!("served queue index {} out of range", self.queue));
        }
        if !(self.service_rate.is_finite() && self.service_rate > 0.0) {
            return Err(invalid!("service rate must be positive, got {}", self.service_rate));
        }
        if !(self.brownian_sd.is_finite() && self.brownian_sd >= 0.0) {
            return Err(invalid!("brownian sd must be nonnegative, got {}", self.brownian_sd));
        }
        let drift = self.mean_rate()[self.queue];
        if !(drift < 0.0) {
            return Err(invalid!(
                "queue {} has nonnegative mean drift {drift} while served; its busy period would not end",
                self.queue + 1
            ));
        }
        Ok(())
    }

    /// Gated service needs the server to drain one unit of work per unit time.
    pub fn is_unit_rate(&self) -> bool {
        self.service_rate == 1.0 && self.brownian_sd == 0.0
    }

    /// Laplace exponent of the served process; may be negative.
    pub fn phi_a(&self, u: &[f64]) -> Result<f64> {
        self.input.check_arg(u)?;
        Ok(self.phi_a_unchecked(u))
    }

    pub(crate) fn phi_a_unchecked(&self, u: &[f64]) -> f64 {
        let ui = u[self.queue];
        let sd = self.brownian_sd;
        self.input.phi_unchecked(u) - self.service_rate * ui - 0.5 * sd * sd * ui * ui
    }

    /// Derivative of `phi_a` in the served coordinate.
    pub(crate) fn dphi_a_own(&self, u: &[f64]) -> f64 {
        let ui = u[self.queue];
        self.input.dphi(u, self.queue) - self.service_rate - self.brownian_sd * self.brownian_sd * ui
    }

    pub fn mean_rate(&self) -> Vec<f64> {
        let mut rate = self.input.mean_rate();
        rate[self.queue] -= self.service_rate;
        rate
    }

    /// Workload velocity between jumps while served, Brownian term excluded.
    pub(crate) fn linear_velocity(&self) -> Vec<f64> {
        let mut v = self.input.drift.clone();
        v[self.queue] -= self.service_rate;
        v
    }
}

/// Law of a switch-over duration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SwitchDuration {
    Deterministic { value: f64 },
    Exponential { mean: f64 },
    Erlang { shape: u32, mean: f64 },
}

impl SwitchDuration {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            SwitchDuration::Deterministic { value } => value.is_finite() && value > 0.0,
            SwitchDuration::Exponential { mean } => mean.is_finite() && mean > 0.0,
            SwitchDuration::Erlang { shape, mean } => shape >= 1 && mean.is_finite() && mean > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(invalid!("switch-over duration must have a positive finite mean: {self:?}"))
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            SwitchDuration::Deterministic { value } => value,
            SwitchDuration::Exponential { mean } | SwitchDuration::Erlang { mean, .. } => mean,
        }
    }

    /// `log E exp(-s S)` for `s >= 0`.
    pub fn log_lst(&self, s: f64) -> f64 {
        match *self {
            SwitchDuration::Deterministic { value } => -value * s,
            SwitchDuration::Exponential { mean } => -log1p(mean * s),
            SwitchDuration::Erlang { shape, mean } => {
                let k = f64::from(shape);
                -k * log1p(mean * s / k)
            }
        }
    }

    /// `(1 - E exp(-s S)) / s`, continuous at `s = 0` where it equals `E S`.
    pub fn one_minus_lst_over_s(&self, s: f64) -> f64 {
        if s == 0.0 {
            return self.mean();
        }
        match *self {
            SwitchDuration::Exponential { mean } => mean / (1.0 + mean * s),
            _ => -expm1(self.log_lst(s)) / s,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            SwitchDuration::Deterministic { value } => value,
            SwitchDuration::Exponential { mean } => mean * standard_exponential(rng),
            SwitchDuration::Erlang { shape, mean } => {
                let stage = mean / f64::from(shape);
                (0..shape).map(|_| stage * standard_exponential(rng)).sum()
            }
        }
    }
}

/// Switch-over period after a visit: its duration and the input active
/// while the server is travelling.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchSpec {
    pub duration: SwitchDuration,
    pub input: SubordinatorSpec,
}

impl SwitchSpec {
    pub fn validate(&self) -> Result<()> {
        self.duration.validate()?;
        self.input.validate()
    }

    pub fn lst(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(domain!("switch-over LST argument must be nonnegative, got {s}"));
        }
        Ok(exp(self.duration.log_lst(s)))
    }

    pub fn mean_duration(&self) -> f64 {
        self.duration.mean()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn standard_exponential<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // gen() lies in [0, 1), so 1 - U is in (0, 1].
    let u: f64 = rng.gen();
    -log(1.0 - u)
}

pub(crate) fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    libm::sqrt(-2.0 * log(u1)) * libm::cos(core::f64::consts::TAU * u2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn example() -> SubordinatorSpec {
        SubordinatorSpec::new(
            vec![0.0, 0.0],
            vec![
                (0.5, JumpSpec::new(JumpBase::Exponential { mean: 0.4 }, vec![1.0, 0.0]).unwrap()),
                (1.0, JumpSpec::new(JumpBase::Exponential { mean: 0.3 }, vec![0.0, 1.0]).unwrap()),
            ],
        )
        .unwrap()
    }

    #[test]
    fn phi_closed_form_values() {
        let w = example();
        assert!((w.phi(&[1.0, 0.0]).unwrap() - 0.2 / 1.4).abs() < 1e-15);
        assert_eq!(w.phi(&[0.0, 0.0]).unwrap(), 0.0);
        let drift = SubordinatorSpec::new(vec![1.0, 2.0], vec![]).unwrap();
        assert_eq!(drift.phi(&[3.0, 1.0]).unwrap(), 5.0);
        assert!(matches!(w.phi(&[-1.0, 0.0]), Err(crate::Error::Domain(_))));
    }

    #[test]
    fn phi_a_values() {
        let served = ServedProcessSpec::new(example(), 0, 1.0, 0.0).unwrap();
        assert!((served.phi_a(&[1.0, 0.0]).unwrap() - (0.2 / 1.4 - 1.0)).abs() < 1e-15);
        assert_eq!(served.phi_a(&[0.0, 0.0]).unwrap(), 0.0);
        let brownian = ServedProcessSpec::new(SubordinatorSpec::zero(2), 0, 1.0, 1.0).unwrap();
        assert_eq!(brownian.phi_a(&[2.0, 0.0]).unwrap(), -4.0);
    }

    #[test]
    fn mean_rates() {
        let w = example();
        let m = w.mean_rate();
        assert!((m[0] - 0.2).abs() < 1e-15 && (m[1] - 0.3).abs() < 1e-15);
        assert_eq!(SubordinatorSpec::zero(3).mean_rate(), vec![0.0; 3]);
        let served = ServedProcessSpec::new(w, 0, 1.0, 0.0).unwrap();
        let m = served.mean_rate();
        assert!((m[0] + 0.8).abs() < 1e-15 && (m[1] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn mean_rate_matches_forward_difference() {
        let mut w = example();
        w.drift = vec![0.1, 0.05];
        w.components.push((
            0.7,
            JumpSpec::new(
                JumpBase::Discrete { points: vec![0.5, 2.0], probs: vec![0.25, 0.75] },
                vec![0.3, 1.0],
            )
            .unwrap(),
        ));
        let h = 1e-5;
        let grad = w.mean_rate();
        for j in 0..2 {
            let mut e1 = vec![0.0; 2];
            e1[j] = h;
            let mut e2 = vec![0.0; 2];
            e2[j] = 2.0 * h;
            let fd = (4.0 * w.phi(&e1).unwrap() - w.phi(&e2).unwrap()) / (2.0 * h);
            assert!((fd - grad[j]).abs() <= 1e-6 * grad[j].abs(), "{fd} vs {}", grad[j]);
        }
    }

    #[test]
    fn served_process_requires_negative_drift() {
        let err = ServedProcessSpec::new(example(), 1, 0.3, 0.0).unwrap_err();
        assert!(matches!(err, crate::Error::InvalidModel(_)));
    }

    #[test]
    fn discrete_probs_must_sum_to_one() {
        let base = JumpBase::Discrete { points: vec![1.0, 2.0], probs: vec![0.5, 0.4] };
        assert!(base.validate().is_err());
    }

    #[test]
    fn switch_lst_values() {
        let det = SwitchSpec {
            duration: SwitchDuration::Deterministic { value: 1.0 },
            input: SubordinatorSpec::zero(1),
        };
        assert!((det.lst(0.142857).unwrap() - exp(-0.142857)).abs() < 1e-15);
        assert_eq!(det.lst(0.0).unwrap(), 1.0);
        let ex = SwitchSpec {
            duration: SwitchDuration::Exponential { mean: 2.0 },
            input: SubordinatorSpec::zero(1),
        };
        assert!((ex.lst(0.5).unwrap() - 0.5).abs() < 1e-15);
        assert!(ex.lst(-0.1).is_err());
        let erl = SwitchDuration::Erlang { shape: 3, mean: 1.5 };
        assert!((erl.one_minus_lst_over_s(1e-12) - 1.5).abs() < 1e-9);
        assert!((exp(erl.log_lst(0.7)) - libm::pow(1.0 + 0.35, -3.0)).abs() < 1e-15);
    }

    #[test]
    fn sample_increment_edge_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (inc, ev) = example().sample_increment(0.0, &mut rng);
        assert_eq!(inc, vec![0.0, 0.0]);
        assert!(ev.is_empty());
        let drift = SubordinatorSpec::new(vec![1.5, 0.25], vec![]).unwrap();
        let (inc, ev) = drift.sample_increment(4.0, &mut rng);
        assert_eq!(inc, vec![6.0, 1.0]);
        assert!(ev.is_empty());
    }

    #[test]
    fn jump_count_law_of_large_numbers() {
        let w = SubordinatorSpec::new(
            vec![0.0],
            vec![(0.5, JumpSpec::new(JumpBase::Exponential { mean: 1.0 }, vec![1.0]).unwrap())],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let horizon = 1e4;
        let (_, events) = w.sample_increment(horizon, &mut rng);
        let rate = events.len() as f64 / horizon;
        let stderr = libm::sqrt(0.5 / horizon);
        assert!((rate - 0.5).abs() < 3.0 * stderr, "rate {rate}");
        assert!(events.windows(2).all(|p| p[0].time < p[1].time));
    }

    #[test]
    fn sampler_matches_laplace_exponent() {
        let mut w = example();
        w.drift = vec![0.05, 0.0];
        w.components.push((
            0.4,
            JumpSpec::new(JumpBase::Deterministic { value: 0.5 }, vec![1.0, 2.0]).unwrap(),
        ));
        let t = 2.0;
        let grid = [[0.5, 0.0], [1.0, 1.0], [0.2, 3.0]];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100_000;
        let mut sums = [0.0f64; 3];
        let mut sq = [0.0f64; 3];
        for _ in 0..n {
            let (inc, _) = w.sample_increment(t, &mut rng);
            for (k, u) in grid.iter().enumerate() {
                let v = exp(-dot(u, &inc));
                sums[k] += v;
                sq[k] += v * v;
            }
        }
        for (k, u) in grid.iter().enumerate() {
            let mean = sums[k] / n as f64;
            let var = sq[k] / n as f64 - mean * mean;
            let se = libm::sqrt(var / n as f64);
            let exact = exp(-t * w.phi(u).unwrap());
            assert!((mean - exact).abs() < 3.0 * se, "u={u:?}: {mean} vs {exact} (se {se})");
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn spec_strategy() -> impl Strategy<Value = SubordinatorSpec> {
            (
                proptest::collection::vec(0.0..1.0f64, 3),
                proptest::collection::vec((0.05..2.0f64, 0.05..2.0f64, 0usize..3, proptest::collection::vec(0.0..1.0f64, 3)), 1..4),
            )
                .prop_map(|(drift, comps)| {
                    let components = comps
                        .into_iter()
                        .map(|(rate, m, kind, mut scale)| {
                            scale[0] += 0.1;
                            let base = match kind {
                                0 => JumpBase::Deterministic { value: m },
                                1 => JumpBase::Exponential { mean: m },
                                _ => JumpBase::Discrete { points: vec![m, 2.0 * m], probs: vec![0.5, 0.5] },
                            };
                            (rate, JumpSpec::new(base, scale).unwrap())
                        })
                        .collect();
                    SubordinatorSpec::new(drift, components).unwrap()
                })
        }

        proptest! {
            #[test]
            fn phi_monotone(spec in spec_strategy(), u in proptest::collection::vec(0.0..5.0f64, 3), du in proptest::collection::vec(0.0..5.0f64, 3)) {
                let v: Vec<f64> = u.iter().zip(&du).map(|(a, b)| a + b).collect();
                let pu = spec.phi(&u).unwrap();
                let pv = spec.phi(&v).unwrap();
                prop_assert!(pu >= 0.0);
                prop_assert!(pu <= pv + 1e-12);
            }

            #[test]
            fn phi_concave_along_rays(spec in spec_strategy(), v in proptest::collection::vec(0.0..3.0f64, 3), a in 0.01..3.0f64, b in 0.01..3.0f64) {
                let at = |t: f64| spec.phi(&v.iter().map(|x| x * t).collect::<Vec<_>>()).unwrap();
                let mid = at(0.5 * (a + b));
                prop_assert!(mid >= 0.5 * (at(a) + at(b)) - 1e-10);
            }
        }
    }
}
