//! The embedded branching process and everything computed from it.
//!
//! At successive polling instants of queue 1 the workload vector evolves as
//! `B' = sum_i R_i(B_i) + G` with Lévy subordinators `R_i` (Laplace exponents
//! `kappa_i`) and i.i.d. immigration `G` generated during switch-overs. The
//! stationary transform is the infinite product of `G~` over the iterates of
//! `kappa`; other queues are handled by relabelling the cycle.

use alloc::vec;
use alloc::vec::Vec;

use libm::{exp, expm1};

use crate::error::{domain, numeric, Error, Result};
use crate::linalg::{spectral_abscissa_metzler, spectral_radius_nonneg, Matrix};
use crate::model::PollingModel;

/// A transform value along with how the infinite product was truncated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformValue {
    pub value: f64,
    pub terms_used: usize,
    pub truncation_bound: f64,
}

impl TransformValue {
    fn exact(value: f64) -> Self {
        TransformValue { value, terms_used: 0, truncation_bound: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Stable,
    Unstable,
    Critical,
    Indeterminate,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Stable => "stable",
            Verdict::Unstable => "unstable",
            Verdict::Critical => "critical",
            Verdict::Indeterminate => "indeterminate",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub rate_matrix: Matrix,
    pub rho_a: f64,
    /// Whether `A` is irreducible, the setting in which `rho_A` and `rho_M` must agree.
    pub rate_irreducible: bool,
    pub mean_matrix: Matrix,
    pub rho_m: f64,
    pub perron_vector_m: Vec<f64>,
    pub verdict: Verdict,
}

fn check_arg(model: &PollingModel, u: &[f64]) -> Result<()> {
    if u.len() != model.dim() {
        return Err(domain!("argument has length {}, expected {}", u.len(), model.dim()));
    }
    if let Some(x) = u.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
        return Err(domain!("transform argument must be finite and nonnegative, got {x}"));
    }
    Ok(())
}

/// One backward sweep `i = N..1` producing `kappa(u)` and `log G~(u)`.
///
/// The sweep keeps a working vector `(u_1..u_i, kappa_{i+1}..kappa_N)`; it is
/// the argument of both `eta_i` and the `i`-th switch-over factor.
fn kappa_and_log_immigration(model: &PollingModel, u: &[f64]) -> (Vec<f64>, f64) {
    let n = model.dim();
    if model.globally_gated {
        let w = &model.queues[0].served.input;
        let phi = w.phi_unchecked(u);
        let log_g = model.queues.iter().map(|q| q.switch.duration.log_lst(phi)).sum();
        return (vec![phi; n], log_g);
    }
    let mut v = u.to_vec();
    let mut kappa = vec![0.0; n];
    let mut log_g = 0.0;
    for i in (0..n).rev() {
        let q = &model.queues[i];
        log_g += q.switch.duration.log_lst(q.switch.input.phi_unchecked(&v));
        kappa[i] = q.discipline.eta_unchecked(&q.served, &v);
        v[i] = kappa[i];
    }
    (kappa, log_g)
}

/// Branching mechanism `kappa(u)`.
pub fn kappa(model: &PollingModel, u: &[f64]) -> Result<Vec<f64>> {
    check_arg(model, u)?;
    Ok(kappa_and_log_immigration(model, u).0)
}

/// `k`-fold iterate of `kappa`; `k = 0` returns `u`.
pub fn kappa_iterate(model: &PollingModel, u: &[f64], k: usize) -> Result<Vec<f64>> {
    check_arg(model, u)?;
    let mut v = u.to_vec();
    for _ in 0..k {
        v = kappa_and_log_immigration(model, &v).0;
    }
    Ok(v)
}

/// Immigration LST `G~(u)`.
pub fn immigration_lst(model: &PollingModel, u: &[f64]) -> Result<f64> {
    check_arg(model, u)?;
    Ok(exp(kappa_and_log_immigration(model, u).1))
}

fn forward_gradient(n: usize, step: f64, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Vec<Vec<f64>> {
    // Columns: d f / d u_j at 0 with the second-order stencil (4 f(h) - f(2h)) / 2h.
    let mut e = vec![0.0; n];
    (0..n)
        .map(|j| {
            e[j] = step;
            let a = f(&e);
            e[j] = 2.0 * step;
            let b = f(&e);
            e[j] = 0.0;
            a.iter().zip(&b).map(|(x, y)| (4.0 * x - y) / (2.0 * step)).collect()
        })
        .collect()
}

/// Mean matrix `m_ij = d kappa_i / d u_j (0)`.
pub fn mean_matrix(model: &PollingModel) -> Result<Matrix> {
    let n = model.dim();
    let cols = forward_gradient(n, model.tolerances.derivative_step, |u| kappa_and_log_immigration(model, u).0);
    let mut m = Matrix::zeros(n);
    for (j, col) in cols.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            if v < -1e-8 {
                return Err(numeric!("mean matrix entry ({}, {}) is negative: {v}", i + 1, j + 1));
            }
            m[(i, j)] = v.max(0.0);
        }
    }
    Ok(m)
}

/// Mean immigration per cycle, `E G = -grad log G~(0)`.
pub fn immigration_mean(model: &PollingModel) -> Vec<f64> {
    let n = model.dim();
    forward_gradient(n, model.tolerances.derivative_step, |u| vec![-kappa_and_log_immigration(model, u).1])
        .into_iter()
        .map(|c| c[0].max(0.0))
        .collect()
}

/// Rate matrix `a_ij`: mean drift of queue `j` while queue `i` is served.
pub fn rate_matrix(model: &PollingModel) -> Matrix {
    let rows: Vec<Vec<f64>> = model.queues.iter().map(|q| q.served.mean_rate()).collect();
    Matrix::from_rows(&rows)
}

pub fn stability(model: &PollingModel) -> Result<StabilityReport> {
    let a = rate_matrix(model);
    let root_a = spectral_abscissa_metzler(&a);
    let m = mean_matrix(model)?;
    let root_m = spectral_radius_nonneg(&m);
    let tol = model.tolerances.stability;
    let rho_a = root_a.value;
    let rho_m = root_m.value;
    let from_rate = if rho_a < -tol {
        Verdict::Stable
    } else if rho_a > tol {
        Verdict::Unstable
    } else {
        Verdict::Critical
    };
    let disagrees = match from_rate {
        Verdict::Stable => !(rho_m < 1.0),
        Verdict::Unstable => !(rho_m > 1.0),
        _ => false,
    };
    let verdict = if !root_a.converged || !root_m.converged || disagrees {
        Verdict::Indeterminate
    } else {
        from_rate
    };
    Ok(StabilityReport {
        rate_irreducible: a.is_irreducible(),
        rate_matrix: a,
        rho_a,
        mean_matrix: m,
        rho_m,
        perron_vector_m: root_m.vector,
        verdict,
    })
}

/// Truncated infinite product `prod_k G~(kappa^(k)(u))`, no stability check.
fn polling_transform(model: &PollingModel, u: &[f64], rho_m: f64) -> Result<TransformValue> {
    if u.iter().all(|x| *x == 0.0) {
        return Ok(TransformValue::exact(1.0));
    }
    let eps = model.tolerances.truncation;
    let mut v = u.to_vec();
    let mut log_sum = 0.0;
    for k in 0..model.tolerances.max_terms {
        let (next, log_g) = kappa_and_log_immigration(model, &v);
        log_sum += log_g;
        let gap = -expm1(log_g);
        let sup = v.iter().fold(0.0f64, |m, x| m.max(*x));
        if sup < eps && gap < eps {
            return Ok(TransformValue { value: exp(log_sum), terms_used: k + 1, truncation_bound: gap });
        }
        v = next;
    }
    Err(Error::Truncation { terms: model.tolerances.max_terms, rho_m })
}

fn require_stable(report: &StabilityReport) -> Result<()> {
    match report.verdict {
        Verdict::Stable => Ok(()),
        v => Err(Error::NotStable(v.as_str())),
    }
}

/// Stationary LST of the workload at polling instants of queue 1.
pub fn b1_transform(model: &PollingModel, u: &[f64]) -> Result<TransformValue> {
    check_arg(model, u)?;
    model.require_switch_work()?;
    let report = stability(model)?;
    require_stable(&report)?;
    polling_transform(model, u, report.rho_m)
}

/// First moments of the stationary embedded process.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryMeans {
    /// `E G` per cycle at polling instants of queue 1.
    pub immigration: Vec<f64>,
    /// `E B^inf` at polling instants of queue 1.
    pub polling: Vec<f64>,
    /// `E B_{i,i}`: mean content of queue `i` when the server arrives there.
    /// Empty for globally gated models.
    pub own_at_polling: Vec<f64>,
    /// `E tau_i(1)`; empty for globally gated models.
    pub visit_time_per_unit: Vec<f64>,
    /// Mean cycle length from the visit-time decomposition.
    pub mean_cycle: f64,
    /// `sum E S_i / (1 - rho)`, defined for unit-rate fixed-input models.
    pub mean_cycle_unit_rate: Option<f64>,
}

fn polling_mean(model: &PollingModel, m: &Matrix) -> Result<(Vec<f64>, Vec<f64>)> {
    let g = immigration_mean(model);
    let n = model.dim();
    // E B = M^T E B + E G
    let mut lhs = Matrix::identity(n);
    for i in 0..n {
        for j in 0..n {
            lhs[(i, j)] -= m[(j, i)];
        }
    }
    let b = lhs.solve(&g)?;
    Ok((b, g))
}

/// Precomputed per-model quantities for evaluating transforms on a grid.
///
/// Construction checks stability once and builds the relabelled models
/// used for queues other than the first.
#[derive(Debug, Clone)]
pub struct Analysis {
    model: PollingModel,
    stability: StabilityReport,
    rotations: Vec<PollingModel>,
    rotation_rho_m: Vec<f64>,
    means: StationaryMeans,
}

/// Below this magnitude the visit-phase exponent is treated as a removable zero.
const SINGULAR_EXPONENT: f64 = 1e-7;
const SINGULAR_STEP: f64 = 1e-6;

impl Analysis {
    pub fn new(model: &PollingModel) -> Result<Self> {
        model.require_switch_work()?;
        let stability = stability(model)?;
        require_stable(&stability)?;
        let n = model.dim();
        let (polling, immigration) = polling_mean(model, &stability.mean_matrix)?;
        let mut rotations = Vec::new();
        let mut rotation_rho_m = Vec::new();
        let mut own = Vec::new();
        let mut visit = Vec::new();
        let mut mean_cycle = model.mean_switch_total();
        if model.globally_gated {
            mean_cycle += polling.iter().sum::<f64>();
        } else {
            for i in 0..n {
                let rot = if i == 0 { model.clone() } else { model.rotated(i) };
                let (b, rho) = if i == 0 {
                    (polling.clone(), stability.rho_m)
                } else {
                    let m = mean_matrix(&rot)?;
                    (polling_mean(&rot, &m)?.0, spectral_radius_nonneg(&m).value)
                };
                let q = &model.queues[i];
                let tau = crate::discipline::mean_visit_time_per_unit(
                    &q.discipline,
                    &q.served,
                    model.tolerances.derivative_step,
                )?;
                own.push(b[0]);
                visit.push(tau);
                mean_cycle += tau * b[0];
                rotations.push(rot);
                rotation_rho_m.push(rho);
            }
        }
        let mean_cycle_unit_rate = model.unit_rate_load().map(|rho| model.mean_switch_total() / (1.0 - rho));
        Ok(Analysis {
            model: model.clone(),
            stability,
            rotations,
            rotation_rho_m,
            means: StationaryMeans {
                immigration,
                polling,
                own_at_polling: own,
                visit_time_per_unit: visit,
                mean_cycle,
                mean_cycle_unit_rate,
            },
        })
    }

    pub fn model(&self) -> &PollingModel {
        &self.model
    }

    pub fn stability(&self) -> &StabilityReport {
        &self.stability
    }

    pub fn means(&self) -> &StationaryMeans {
        &self.means
    }

    fn check_queue(&self, i: usize) -> Result<()> {
        if self.model.globally_gated {
            return Err(Error::Unsupported("per-queue embedded transforms for globally gated models"));
        }
        if i >= self.model.dim() {
            return Err(domain!("queue index {i} out of range"));
        }
        Ok(())
    }

    /// `B~_1(u)`.
    pub fn b1_transform(&self, u: &[f64]) -> Result<TransformValue> {
        check_arg(&self.model, u)?;
        polling_transform(&self.model, u, self.stability.rho_m)
    }

    /// `B~_i(u)` via the model relabelled to start at queue `i`.
    pub fn polling_transform(&self, i: usize, u: &[f64]) -> Result<TransformValue> {
        check_arg(&self.model, u)?;
        if i == 0 {
            return self.b1_transform(u);
        }
        self.check_queue(i)?;
        let v = PollingModel::rotate_vector(u, i);
        polling_transform(&self.rotations[i], &v, self.rotation_rho_m[i])
    }

    /// `E~_i(u) = B~_i(u with u_i replaced by eta_i(u))`.
    pub fn switching_transform(&self, i: usize, u: &[f64]) -> Result<TransformValue> {
        check_arg(&self.model, u)?;
        self.check_queue(i)?;
        let q = &self.model.queues[i];
        let mut v = u.to_vec();
        v[i] = q.discipline.eta_unchecked(&q.served, u);
        self.polling_transform(i, &v)
    }

    pub fn embedded_transforms(&self, i: usize, u: &[f64]) -> Result<(TransformValue, TransformValue)> {
        Ok((self.polling_transform(i, u)?, self.switching_transform(i, u)?))
    }

    /// `S~_i(phi^_i(u))`, the factor linking switching and next polling instants.
    pub fn switch_factor(&self, i: usize, u: &[f64]) -> Result<f64> {
        check_arg(&self.model, u)?;
        let q = self
            .model
            .queues
            .get(i)
            .ok_or_else(|| domain!("queue index {i} out of range"))?;
        Ok(exp(q.switch.duration.log_lst(q.switch.input.phi_unchecked(u))))
    }

    /// `(B~_i(u) - E~_i(u)) / phi^A_i(u)`: expected area under
    /// `exp(-u . F)` during one visit to queue `i`.
    fn visit_area(&self, i: usize, u: &[f64]) -> Result<(f64, TransformValue)> {
        let served = &self.model.queues[i].served;
        let quotient = |v: &[f64]| -> Result<(f64, TransformValue)> {
            let b = self.polling_transform(i, v)?;
            let e = self.switching_transform(i, v)?.value;
            Ok(((b.value - e) / served.phi_a_unchecked(v), b))
        };
        let exponent = served.phi_a_unchecked(u);
        if exponent.abs() >= SINGULAR_EXPONENT {
            return quotient(u);
        }
        // Removable 0/0: approach along the served coordinate from both sides.
        let h = SINGULAR_STEP;
        let mut up = u.to_vec();
        up[i] += h;
        let mut other = u.to_vec();
        let (a, b) = (quotient(&up)?, {
            if u[i] >= h {
                other[i] -= h;
            } else {
                other[i] += 2.0 * h;
            }
            quotient(&other)?
        });
        let value = if u[i] >= h { 0.5 * (a.0 + b.0) } else { 2.0 * a.0 - b.0 };
        let separated = served.phi_a_unchecked(&up).abs() >= SINGULAR_EXPONENT
            && served.phi_a_unchecked(&other).abs() >= SINGULAR_EXPONENT;
        if !separated || !value.is_finite() {
            return Err(numeric!(
                "cannot resolve 0/0 in the visit term of queue {} at u = {u:?} (exponent {exponent})",
                i + 1
            ));
        }
        Ok((value, a.1))
    }

    /// Stationary LST of the workload at an arbitrary epoch.
    pub fn arbitrary_epoch_transform(&self, u: &[f64]) -> Result<TransformValue> {
        check_arg(&self.model, u)?;
        if self.model.globally_gated {
            return Err(Error::Unsupported("arbitrary-epoch transform for globally gated models"));
        }
        if u.iter().all(|x| *x == 0.0) {
            return Ok(TransformValue::exact(1.0));
        }
        let mut numerator = 0.0;
        let mut terms_used = 0;
        let mut bound = 0.0f64;
        for i in 0..self.model.dim() {
            let q = &self.model.queues[i];
            let e = self.switching_transform(i, u)?;
            terms_used = terms_used.max(e.terms_used);
            bound = bound.max(e.truncation_bound);
            let (area, b) = self.visit_area(i, u)?;
            terms_used = terms_used.max(b.terms_used);
            bound = bound.max(b.truncation_bound);
            numerator += area;
            // (E~_i - B~_{i+1}) / phi^_i = E~_i (1 - S~_i(phi^_i)) / phi^_i
            let s = q.switch.input.phi_unchecked(u);
            numerator += e.value * q.switch.duration.one_minus_lst_over_s(s);
        }
        Ok(TransformValue { value: numerator / self.means.mean_cycle, terms_used, truncation_bound: bound })
    }
}

/// `(B~_i(u), E~_i(u))` for one queue.
pub fn embedded_transforms(model: &PollingModel, i: usize, u: &[f64]) -> Result<(TransformValue, TransformValue)> {
    Analysis::new(model)?.embedded_transforms(i, u)
}

pub fn stationary_mean_at_polling(model: &PollingModel) -> Result<StationaryMeans> {
    Ok(Analysis::new(model)?.means)
}

pub fn arbitrary_epoch_transform(model: &PollingModel, u: &[f64]) -> Result<TransformValue> {
    Analysis::new(model)?.arbitrary_epoch_transform(u)
}
