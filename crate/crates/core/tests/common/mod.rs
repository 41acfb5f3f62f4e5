#![allow(dead_code)]

use levypoll_core::{
    Discipline, JumpBase, JumpSpec, PollingModel, QueueSpec, ServedProcessSpec, SubordinatorSpec, SwitchDuration,
    SwitchSpec, Tolerances,
};

/// Two independent exponential streams: rate 0.5 mean 0.4 into queue 1,
/// rate 1.0 mean 0.3 into queue 2. Load 0.2 + 0.3.
pub fn two_stream_input() -> SubordinatorSpec {
    SubordinatorSpec::new(
        vec![0.0, 0.0],
        vec![
            (0.5, JumpSpec::new(JumpBase::Exponential { mean: 0.4 }, vec![1.0, 0.0]).unwrap()),
            (1.0, JumpSpec::new(JumpBase::Exponential { mean: 0.3 }, vec![0.0, 1.0]).unwrap()),
        ],
    )
    .unwrap()
}

pub fn det(value: f64) -> SwitchDuration {
    SwitchDuration::Deterministic { value }
}

/// Unit-rate two-queue model on [`two_stream_input`] with unit switch-overs.
pub fn two_queue(d1: Discipline, d2: Discipline) -> PollingModel {
    PollingModel::with_fixed_input(&two_stream_input(), vec![(1.0, 0.0, det(1.0), d1), (1.0, 0.0, det(1.0), d2)])
        .unwrap()
}

/// Exponential-jump Laplace exponent `sum lambda m u_k / (1 + m u_k)`.
pub fn phi_two_stream(u: &[f64]) -> f64 {
    0.5 * 0.4 * u[0] / (1.0 + 0.4 * u[0]) + 0.3 * u[1] / (1.0 + 0.3 * u[1])
}

/// Root of `theta = a + 0.3 theta / (1 + 0.3 theta)`: exhaustive exponent of
/// queue 2 when the queue-1 part of the input exponent equals `a`.
pub fn psi2_closed_form(a: f64) -> f64 {
    let b = 0.7 - 0.3 * a;
    (-b + (b * b + 1.2 * a).sqrt()) / 0.6
}

/// Root of `theta = c + 0.2 theta / (1 + 0.4 theta)` for queue 1.
pub fn psi1_closed_form(c: f64) -> f64 {
    // 0.4 theta^2 + (1 - 0.4 c - 0.2) theta - c = 0
    let b = 0.8 - 0.4 * c;
    (-b + (b * b + 1.6 * c).sqrt()) / 0.8
}

/// Three queues with per-visit and per-switch inputs, a correlated jump
/// component, a non-unit service rate and a Brownian term.
pub fn varying_input_model() -> PollingModel {
    let comp = |rate: f64, base: JumpBase, scale: Vec<f64>| (rate, JumpSpec::new(base, scale).unwrap());
    let base_input = |scale: f64| {
        SubordinatorSpec::new(
            vec![0.02 * scale, 0.0, 0.01],
            vec![
                comp(0.3 * scale, JumpBase::Exponential { mean: 0.5 }, vec![1.0, 0.0, 0.0]),
                comp(0.2, JumpBase::Deterministic { value: 0.4 }, vec![0.0, 1.0, 0.5]),
                comp(
                    0.25,
                    JumpBase::Discrete { points: vec![0.2, 0.6], probs: vec![0.5, 0.5] },
                    vec![0.3, 0.0, 1.0],
                ),
            ],
        )
        .unwrap()
    };
    let queue = |i: usize, scale: f64, rate: f64, sd: f64, duration: SwitchDuration, discipline: Discipline| QueueSpec {
        served: ServedProcessSpec::new(base_input(scale), i, rate, sd).unwrap(),
        switch: SwitchSpec { duration, input: base_input(1.5 * scale) },
        discipline,
    };
    PollingModel::new(
        vec![
            queue(0, 1.0, 1.0, 0.0, SwitchDuration::Exponential { mean: 0.5 }, Discipline::Gated),
            queue(1, 0.8, 1.4, 0.3, SwitchDuration::Erlang { shape: 3, mean: 0.6 }, Discipline::Exhaustive),
            queue(
                2,
                1.2,
                1.0,
                0.0,
                det(0.4),
                Discipline::mixture(0.4, Discipline::PExhaustive(0.5), Discipline::Gated),
            ),
        ],
        false,
        Tolerances::default(),
    )
    .unwrap()
}
