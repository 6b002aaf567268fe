//! Closed forms for the Gaussian channel with additive interference known at
//! the transmitter: `Y = X + S + N_Y`, `Z = X + S + N_Z`, `S ~ N(0, T)`,
//! `N_Y ~ N(0, 1)`, `N_Z ~ N(0, σ²)`, average power `E[X²] ≤ P`.
//!
//! Covertness forces the transmitter to spend part of its power cancelling
//! the interference: `γ* = min{1, P/(2T)}` of `S` is subtracted, leaving
//! residual interference power `T* = (1 − γ*)² T` and signal power
//! `P* = T − T*`. The receiver noise variance is fixed at 1; for a receiver
//! noise variance `N`, divide `P`, `T` and `σ²` by `N` first.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AwgnSpec {
    pub p: f64,
    pub t: f64,
    pub sigma2: f64,
}

impl AwgnSpec {
    pub fn new(p: f64, t: f64, sigma2: f64) -> Result<Self> {
        if !(p >= 0.0) || !p.is_finite() {
            return Err(Error::Parameter("P must be finite and nonnegative".into()));
        }
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Parameter("T must be finite and positive".into()));
        }
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::Parameter("sigma2 must be finite and positive".into()));
        }
        Ok(Self { p, t, sigma2 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedParams {
    pub gamma_star: f64,
    pub t_star: f64,
    pub p_star: f64,
    /// `E[X²] = P* + γ*² T`, which equals `2 γ* T ≤ P`.
    pub power_used: f64,
}

pub fn derived_params(spec: &AwgnSpec) -> DerivedParams {
    let gamma_star = (spec.p / (2.0 * spec.t)).min(1.0);
    let t_star = (1.0 - gamma_star).powi(2) * spec.t;
    let p_star = (spec.t - t_star).max(0.0);
    DerivedParams { gamma_star, t_star, p_star, power_used: p_star + gamma_star * gamma_star * spec.t }
}

fn half_log2(x: f64) -> f64 {
    0.5 * x.log2()
}

/// `½ log₂(1 + P*)`.
pub fn rate_noncausal(spec: &AwgnSpec) -> f64 {
    half_log2(1.0 + derived_params(spec).p_star)
}

/// `½ log₂(1 + P*/(T* + 1))`, an achievable rate with causal interference
/// knowledge (not known to be the capacity).
pub fn rate_causal_lb(spec: &AwgnSpec) -> f64 {
    let d = derived_params(spec);
    half_log2(1.0 + d.p_star / (d.t_star + 1.0))
}

/// The converse-side expression `½ log₂(1 + m − m²/(4T))`, `m = min{P, 2T}`.
/// It coincides with [`rate_noncausal`].
pub fn rate_converse_expression(spec: &AwgnSpec) -> f64 {
    let m = spec.p.min(2.0 * spec.t);
    half_log2(1.0 + m - m * m / (4.0 * spec.t))
}

/// Minimum key rates (bits) for the causal and noncausal schemes: a key
/// rate strictly above the threshold suffices. Nonpositive values mean no
/// key is needed.
pub fn key_thresholds(spec: &AwgnSpec) -> (f64, f64) {
    let d = derived_params(spec);
    let (p, t) = (d.p_star, d.t_star);
    let causal = half_log2(1.0 + p / (t + spec.sigma2)) - half_log2(1.0 + p / (t + 1.0));

    let alpha = dpc_alpha(p);
    let num = p + alpha * t;
    let den = |noise: f64| (p + alpha * alpha * t) * (p + t + noise) - num * num;
    let term = |noise: f64| {
        let dn = den(noise);
        if num == 0.0 {
            0.0
        } else {
            half_log2(1.0 + num * num / dn)
        }
    };
    let noncausal = term(spec.sigma2) - term(1.0);
    (causal, noncausal)
}

fn dpc_alpha(p_star: f64) -> f64 {
    p_star / (p_star + 1.0)
}

/// Linear construction of the dirty-paper auxiliary and the input from an
/// independent Gaussian `X* ~ N(0, P*)` and the interference `S`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpcAuxiliary {
    /// `α = P*/(P* + 1)`.
    pub alpha: f64,
    /// `U = u_xstar · X* + u_s · S`.
    pub u_xstar: f64,
    pub u_s: f64,
    /// `X = x_xstar · X* + x_s · S`.
    pub x_xstar: f64,
    pub x_s: f64,
    /// `E[X²]` of the construction.
    pub power: f64,
}

pub fn dpc_auxiliary(spec: &AwgnSpec) -> DpcAuxiliary {
    let d = derived_params(spec);
    let alpha = dpc_alpha(d.p_star);
    DpcAuxiliary {
        alpha,
        u_xstar: 1.0,
        u_s: alpha * (1.0 - d.gamma_star),
        x_xstar: 1.0,
        x_s: -d.gamma_star,
        power: d.p_star + d.gamma_star * d.gamma_star * spec.t,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AwgnResult {
    pub gamma_star: f64,
    pub t_star: f64,
    pub p_star: f64,
    pub rate_causal_lb_bits: f64,
    pub rate_noncausal_bits: f64,
    pub key_threshold_causal_bits: f64,
    pub key_threshold_noncausal_bits: f64,
    pub dpc_alpha: f64,
}

pub fn evaluate(spec: &AwgnSpec) -> AwgnResult {
    let d = derived_params(spec);
    let (kc, kn) = key_thresholds(spec);
    AwgnResult {
        gamma_star: d.gamma_star,
        t_star: d.t_star,
        p_star: d.p_star,
        rate_causal_lb_bits: rate_causal_lb(spec),
        rate_noncausal_bits: rate_noncausal(spec),
        key_threshold_causal_bits: kc,
        key_threshold_noncausal_bits: kn,
        dpc_alpha: dpc_alpha(d.p_star),
    }
}
