//! Branching service disciplines and their replacement exponents.
//!
//! A visit that finds level `x` in the served queue replaces it by a
//! subordinator `H(x)`; `eta` is its Laplace exponent. Gated, exhaustive,
//! p-exhaustive, mixtures and compositions all have this form.

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::error::{domain, numeric, Result};
use crate::levy::ServedProcessSpec;
use crate::model::PollingModel;

const MAX_DOUBLINGS: u32 = 64;
const MAX_BISECTIONS: u32 = 400;
const BISECTION_RTOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub enum Discipline {
    /// Serve exactly the work found on arrival.
    Gated,
    /// Serve until the queue is empty.
    Exhaustive,
    /// Serve until the level found on arrival has dropped to `p` times itself.
    PExhaustive(f64),
    /// Fraction `p` of the found work is handled by `left`, the rest by `right`.
    Mixture { p: f64, left: Box<Discipline>, right: Box<Discipline> },
    /// Run `first` on the found work, then `second` on whatever `first` leaves
    /// in the served queue.
    Composition { first: Box<Discipline>, second: Box<Discipline> },
}

impl Discipline {
    pub fn mixture(p: f64, left: Discipline, right: Discipline) -> Self {
        Discipline::Mixture { p, left: Box::new(left), right: Box::new(right) }
    }

    pub fn composition(first: Discipline, second: Discipline) -> Self {
        Discipline::Composition { first: Box::new(first), second: Box::new(second) }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Discipline::Gated | Discipline::Exhaustive => Ok(()),
            Discipline::PExhaustive(p) => check_fraction(*p),
            Discipline::Mixture { p, left, right } => {
                check_fraction(*p)?;
                left.validate()?;
                right.validate()
            }
            Discipline::Composition { first, second } => {
                first.validate()?;
                second.validate()
            }
        }
    }

    pub fn contains_gated(&self) -> bool {
        match self {
            Discipline::Gated => true,
            Discipline::Exhaustive | Discipline::PExhaustive(_) => false,
            Discipline::Mixture { left, right, .. } => left.contains_gated() || right.contains_gated(),
            Discipline::Composition { first, second } => first.contains_gated() || second.contains_gated(),
        }
    }

    /// True when the server never works on the queue, i.e. `tau(x) = 0`.
    pub fn is_degenerate(&self) -> bool {
        match self {
            Discipline::Gated | Discipline::Exhaustive => false,
            Discipline::PExhaustive(p) => *p == 1.0,
            Discipline::Mixture { p, left, right } => {
                (*p == 0.0 || left.is_degenerate()) && (*p == 1.0 || right.is_degenerate())
            }
            Discipline::Composition { first, second } => first.is_degenerate() && second.is_degenerate(),
        }
    }

    /// Replacement exponent `eta(u)` for the queue attended under `served`.
    pub fn eta(&self, served: &ServedProcessSpec, u: &[f64]) -> Result<f64> {
        check_arg(served, u)?;
        Ok(self.eta_unchecked(served, u))
    }

    pub(crate) fn eta_unchecked(&self, served: &ServedProcessSpec, u: &[f64]) -> f64 {
        let i = served.queue;
        match self {
            Discipline::Gated => served.input.phi_unchecked(u),
            Discipline::Exhaustive => psi_unchecked(served, u),
            Discipline::PExhaustive(p) => {
                let psi = if *p == 1.0 { 0.0 } else { psi_unchecked(served, u) };
                p * u[i] + (1.0 - p) * psi
            }
            Discipline::Mixture { p, left, right } => {
                let l = if *p == 0.0 { 0.0 } else { left.eta_unchecked(served, u) };
                let r = if *p == 1.0 { 0.0 } else { right.eta_unchecked(served, u) };
                p * l + (1.0 - p) * r
            }
            Discipline::Composition { first, second } => {
                // H = H2(H1(x)): the second phase acts on the served-queue
                // output of the first, so its exponent enters coordinate i.
                let inner = second.eta_unchecked(served, u);
                let mut v = u.to_vec();
                v[i] = inner;
                first.eta_unchecked(served, &v)
            }
        }
    }

    /// Analytic gradient of `eta` at the origin by the chain rule through the
    /// discipline tree. Used as an independent check on finite differences.
    pub fn gradient_at_zero_closed_form(&self, served: &ServedProcessSpec) -> Vec<f64> {
        let n = served.input.dim();
        let i = served.queue;
        match self {
            Discipline::Gated => served.input.mean_rate(),
            Discipline::Exhaustive => {
                let a = served.mean_rate();
                let denom = -a[i];
                (0..n).map(|j| if j == i { 0.0 } else { a[j] / denom }).collect()
            }
            Discipline::PExhaustive(p) => {
                let ex = Discipline::Exhaustive.gradient_at_zero_closed_form(served);
                (0..n).map(|j| (1.0 - p) * ex[j] + if j == i { *p } else { 0.0 }).collect()
            }
            Discipline::Mixture { p, left, right } => {
                let l = left.gradient_at_zero_closed_form(served);
                let r = right.gradient_at_zero_closed_form(served);
                l.iter().zip(&r).map(|(a, b)| p * a + (1.0 - p) * b).collect()
            }
            Discipline::Composition { first, second } => {
                let f = first.gradient_at_zero_closed_form(served);
                let s = second.gradient_at_zero_closed_form(served);
                (0..n).map(|j| if j == i { 0.0 } else { f[j] } + f[i] * s[j]).collect()
            }
        }
    }
}

fn check_fraction(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(crate::error::invalid!("discipline fraction must lie in [0, 1], got {p}"))
    }
}

fn check_arg(served: &ServedProcessSpec, u: &[f64]) -> Result<()> {
    if u.len() != served.input.dim() {
        return Err(domain!("argument has length {}, expected {}", u.len(), served.input.dim()));
    }
    if let Some(x) = u.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
        return Err(domain!("exponent argument must be finite and nonnegative, got {x}"));
    }
    Ok(())
}

/// Nonnegative root `psi` of `theta -> phi_a(u with u_i = theta)`.
///
/// The map is concave, nonnegative at zero and has strictly negative slope
/// there, so its tangent at zero crosses the axis to the right of the root.
/// That crossing seeds the bracket; the bracket is doubled if rounding makes
/// it fall short, bisected to a relative width of 1e-13 and finished by one
/// Newton step with the analytic derivative.
pub fn psi_solve(served: &ServedProcessSpec, u: &[f64]) -> Result<f64> {
    check_arg(served, u)?;
    try_psi(served, u)
}

pub(crate) fn psi_unchecked(served: &ServedProcessSpec, u: &[f64]) -> f64 {
    // Negative drift is a construction invariant, so the bracket always exists.
    try_psi(served, u).expect("negative drift guarantees a bracket")
}

fn try_psi(served: &ServedProcessSpec, u: &[f64]) -> Result<f64> {
    let i = served.queue;
    let mut v = u.to_vec();
    let mut f = |theta: f64| {
        v[i] = theta;
        served.phi_a_unchecked(&v)
    };
    let f0 = f(0.0);
    if f0 <= 0.0 {
        return Ok(0.0);
    }
    let mut w = u.to_vec();
    w[i] = 0.0;
    let slope0 = served.dphi_a_own(&w);
    let mut lo = 0.0;
    let mut hi = if slope0 < 0.0 { f0 / -slope0 } else { 1.0 };
    let mut doublings = 0;
    while f(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > MAX_DOUBLINGS || !hi.is_finite() {
            return Err(numeric!("no sign change found for psi after {MAX_DOUBLINGS} doublings"));
        }
    }
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= BISECTION_RTOL * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut theta = 0.5 * (lo + hi);
    let value = f(theta);
    w[i] = theta;
    let deriv = served.dphi_a_own(&w);
    if deriv < 0.0 {
        let polished = theta - value / deriv;
        if polished >= lo && polished <= hi && f(polished).abs() <= value.abs() {
            theta = polished;
        }
    }
    Ok(theta)
}

/// `eta_i(u)` for discipline `d` applied at queue `queue` of `model`.
pub fn eta_eval(d: &Discipline, queue: usize, model: &PollingModel, u: &[f64]) -> Result<f64> {
    let q = model
        .queues
        .get(queue)
        .ok_or_else(|| domain!("queue index {queue} out of range"))?;
    d.eta(&q.served, u)
}

/// Gradient of `eta` at zero by second-order one-sided differences.
///
/// The exponent is only defined on the nonnegative orthant, so the central
/// stencil is replaced by the Richardson-extrapolated forward stencil
/// `(4 f(h) - f(2h)) / 2h`, which is also second order.
pub fn eta_gradient_at_zero(d: &Discipline, served: &ServedProcessSpec, step: f64) -> Vec<f64> {
    let n = served.input.dim();
    let mut e = alloc::vec![0.0; n];
    (0..n)
        .map(|j| {
            e[j] = step;
            let a = d.eta_unchecked(served, &e);
            e[j] = 2.0 * step;
            let b = d.eta_unchecked(served, &e);
            e[j] = 0.0;
            (4.0 * a - b) / (2.0 * step)
        })
        .collect()
}

/// Expected visit time per unit of work found, `E tau(1)`.
///
/// From `H_ii(x) = x + A_i(tau(x))` and Wald's identity,
/// `E tau(1) = (1 - d eta / d u_i (0)) / (-E A_i(1))`.
pub fn mean_visit_time_per_unit(d: &Discipline, served: &ServedProcessSpec, step: f64) -> Result<f64> {
    let grad = eta_gradient_at_zero(d, served, step);
    let i = served.queue;
    let drift = served.mean_rate()[i];
    let t = (1.0 - grad[i]) / -drift;
    if !(t > 0.0) || !t.is_finite() {
        return Err(crate::error::invalid!(
            "discipline at queue {} never serves (expected visit time per unit work {t})",
            i + 1
        ));
    }
    Ok(t)
}
