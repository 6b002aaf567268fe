//! Small-blocklength simulation of the covert coding schemes.
//!
//! Causal schemes send a Shannon-strategy codebook `v^n(k, m)` through the
//! map `x(v, s)`. Noncausal schemes hold `L` candidates `u^n(k, m, l)` per
//! message and pick `l` by likelihood encoding against the state sequence.
//! The decoder knows the key and runs maximum-likelihood decoding, which is
//! meaningful at the blocklengths where exact enumeration is possible.

mod codebook;
mod warden;

pub use codebook::{
    codebook_size, derived_rng, gen_codebook, likelihood_encode, likelihood_weights, ml_decode, sample_index,
    shannon_encode, Codebook, Role, ML_TIE_TOL,
};
pub use warden::{
    covertness_metrics, estimate_metrics, exact_metrics, exact_warden_dist, exact_work, letter_marginals,
    marginal_kl_sum, Covertness, ExactCaps,
};

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::capacity::{AuxDistribution, CapacitySolution, Mode};
use crate::channel::{causal_joint, noncausal_joint, StateDmc, StrategyMap, AXIS_S, AXIS_Y, AXIS_Z};
use crate::error::{Error, Result};
use crate::probability::{mutual_information, ConditionalPmf, JointPmf, Pmf};

/// Everything the encoder, decoder and warden model need from a design
/// distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Scheme {
    pub mode: Mode,
    pub map: StrategyMap,
    /// Codeword symbol law: `P_V` or `P_U`.
    pub codeword_dist: Pmf,
    /// Rows indexed by aux symbol.
    pub y_given_aux: ConditionalPmf,
    pub z_given_aux: ConditionalPmf,
    pub s_given_aux: ConditionalPmf,
    pub i_aux_y_bits: f64,
    pub i_aux_z_bits: f64,
    pub i_aux_s_bits: f64,
}

/// `P(b | a)` from a joint over at least `a_label` and `b_label`; rows for
/// zero-mass `a` are uniform.
fn conditional(joint: &JointPmf, a_label: &str, b_label: &str) -> Result<ConditionalPmf> {
    let ab = joint.marginalize(&[a_label, b_label])?;
    let (na, nb) = (ab.shape()[0], ab.shape()[1]);
    let rows = (0..na)
        .map(|a| {
            let row = &ab.probs()[a * nb..(a + 1) * nb];
            let t: f64 = row.iter().sum();
            if t > 0.0 {
                row.iter().map(|p| p / t).collect()
            } else {
                vec![1.0 / nb as f64; nb]
            }
        })
        .collect();
    ConditionalPmf::from_rows(rows)
}

impl Scheme {
    fn from_joint(mode: Mode, map: &StrategyMap, joint: &JointPmf) -> Result<Self> {
        let aux = joint.labels()[0].clone();
        let aux = aux.as_str();
        Ok(Self {
            mode,
            map: map.clone(),
            codeword_dist: joint.marginal(aux)?,
            y_given_aux: conditional(joint, aux, AXIS_Y)?,
            z_given_aux: conditional(joint, aux, AXIS_Z)?,
            s_given_aux: conditional(joint, aux, AXIS_S)?,
            i_aux_y_bits: mutual_information(joint, &[aux], &[AXIS_Y])?,
            i_aux_z_bits: mutual_information(joint, &[aux], &[AXIS_Z])?,
            i_aux_s_bits: mutual_information(joint, &[aux], &[AXIS_S])?,
        })
    }

    pub fn causal(ch: &StateDmc, p_v: &Pmf, map: &StrategyMap) -> Result<Self> {
        Self::from_joint(Mode::Causal, map, &causal_joint(ch, p_v, map)?)
    }

    pub fn noncausal(ch: &StateDmc, p_u_given_s: &ConditionalPmf, map: &StrategyMap) -> Result<Self> {
        Self::from_joint(Mode::Noncausal, map, &noncausal_joint(ch, p_u_given_s, map)?)
    }

    pub fn from_solution(ch: &StateDmc, sol: &CapacitySolution) -> Result<Self> {
        match &sol.aux {
            AuxDistribution::Causal(p) => Self::causal(ch, p, &sol.map),
            AuxDistribution::Noncausal(q) => Self::noncausal(ch, q, &sol.map),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    /// Message rate, bits per use.
    pub rate: f64,
    pub key_rate: f64,
    /// Multicoding rate; ignored for causal schemes.
    pub rate_prime: f64,
    pub seed: u64,
    /// Decoding trials per codebook.
    pub trials: usize,
    /// Independent codebook draws per blocklength.
    pub codebooks: usize,
    pub exact_caps: ExactCaps,
    /// Warden samples for the plug-in estimate when exact enumeration is
    /// over the caps.
    pub mc_samples: usize,
    pub max_codebook_symbols: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n: 4,
            rate: 0.0,
            key_rate: 0.0,
            rate_prime: 0.0,
            seed: 0,
            trials: 1000,
            codebooks: 1,
            exact_caps: ExactCaps::default(),
            mc_samples: 1_000_000,
            max_codebook_symbols: 1 << 26,
        }
    }
}

/// Codebook dimensions at one blocklength, with the rates they realize.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Realized {
    pub keys: usize,
    pub messages: usize,
    pub bins: usize,
    pub rate: f64,
    pub key_rate: f64,
    pub rate_prime: f64,
}

pub fn realized(cfg: &SimConfig, mode: Mode) -> Result<Realized> {
    if cfg.n == 0 {
        return Err(Error::Parameter("blocklength must be at least 1".into()));
    }
    let keys = codebook_size(cfg.n, cfg.key_rate)?;
    let messages = codebook_size(cfg.n, cfg.rate)?;
    let bins = if mode == Mode::Noncausal { codebook_size(cfg.n, cfg.rate_prime)? } else { 1 };
    let r = |size: usize| (size as f64).log2() / cfg.n as f64;
    Ok(Realized { keys, messages, bins, rate: r(messages), key_rate: r(keys), rate_prime: r(bins) })
}

/// The sufficient rate conditions of the coding scheme, on realized rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateFlags {
    Causal {
        /// `R + R_K > I(V;Z)`.
        soft_covering: bool,
        /// `R < I(V;Y)`.
        reliability: bool,
    },
    Noncausal {
        /// `R' > I(U;S)`.
        multicoding: bool,
        /// `R + R_K + R' > I(U;Z)`.
        soft_covering: bool,
        /// `R + R' < I(U;Y)`.
        reliability: bool,
    },
}

impl RateFlags {
    pub fn all(&self) -> bool {
        match *self {
            RateFlags::Causal { soft_covering, reliability } => soft_covering && reliability,
            RateFlags::Noncausal { multicoding, soft_covering, reliability } => {
                multicoding && soft_covering && reliability
            }
        }
    }
}

pub fn rate_flags(scheme: &Scheme, r: &Realized) -> RateFlags {
    match scheme.mode {
        Mode::Causal => RateFlags::Causal {
            soft_covering: r.rate + r.key_rate > scheme.i_aux_z_bits,
            reliability: r.rate < scheme.i_aux_y_bits,
        },
        Mode::Noncausal => RateFlags::Noncausal {
            multicoding: r.rate_prime > scheme.i_aux_s_bits,
            soft_covering: r.rate + r.key_rate + r.rate_prime > scheme.i_aux_z_bits,
            reliability: r.rate + r.rate_prime < scheme.i_aux_y_bits,
        },
    }
}

/// Results for one codebook draw.
#[derive(Debug, Clone, PartialEq)]
pub struct CodebookStats {
    pub draw: u64,
    pub kl_nats: f64,
    pub tv: f64,
    pub detection_bound: f64,
    pub optimal_test_sum: f64,
    /// `Σ_i D(P̂_{Z_i}‖Q0)`, nats.
    pub marginal_kl_sum_nats: f64,
    pub errors: u64,
    pub trials: u64,
    /// Trials plus warden cases in which the likelihood encoder had no
    /// consistent candidate.
    pub encoder_atypical: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub n: usize,
    pub realized: Realized,
    /// `None` when there is a single message.
    pub p_err: Option<f64>,
    /// Normal-approximation 95% half-width.
    pub p_err_halfwidth: Option<f64>,
    /// Averages over codebook draws.
    pub kl_nats: f64,
    pub tv: f64,
    pub detection_bound: f64,
    pub optimal_test_sum: f64,
    /// `false` when the warden metrics are plug-in estimates.
    pub exact: bool,
    pub flags: RateFlags,
    pub codebooks: Vec<CodebookStats>,
}

fn decode_trials(cb: &Codebook, ch: &StateDmc, scheme: &Scheme, trials: usize, seed: u64) -> (u64, u64) {
    let mut rng = derived_rng(seed, cb.n, cb.draw, Role::Trials);
    let mut errors = 0;
    let mut atypical = 0;
    let mut s_seq = vec![0; cb.n];
    for _ in 0..trials {
        let k = rng.random_range(0..cb.keys);
        let m = rng.random_range(0..cb.messages);
        for s in s_seq.iter_mut() {
            *s = sample_index(ch.state_dist().probs(), rng.random::<f64>());
        }
        let (x, flagged) = codebook::encode(cb, scheme, k, m, &s_seq, &mut rng);
        atypical += u64::from(flagged);
        let y: Vec<usize> =
            x.iter().zip(&s_seq).map(|(&xi, &si)| sample_index(ch.y_row(si, xi), rng.random::<f64>())).collect();
        if ml_decode(cb, k, &y, scheme) != m {
            errors += 1;
        }
    }
    (errors, atypical)
}

/// Runs one blocklength: `cfg.codebooks` fresh codebooks, warden metrics for
/// each, and `cfg.trials` decoding trials per codebook.
pub fn simulate(ch: &StateDmc, scheme: &Scheme, cfg: &SimConfig) -> Result<SimReport> {
    if cfg.codebooks == 0 {
        return Err(Error::Parameter("at least one codebook draw is needed".into()));
    }
    let r = realized(cfg, scheme.mode)?;
    let mut stats = Vec::with_capacity(cfg.codebooks);
    let mut exact = true;
    for draw in 0..cfg.codebooks as u64 {
        let cb = gen_codebook(
            cfg.n,
            r.keys,
            r.messages,
            r.bins,
            &scheme.codeword_dist,
            cfg.seed,
            draw,
            cfg.max_codebook_symbols,
        )?;
        let (cov, msum, warden_atypical) = match exact_warden_dist(&cb, ch, scheme, cfg.exact_caps) {
            Ok((dist, atyp)) => {
                let (cov, msum) = exact_metrics(&dist, ch, cfg.n)?;
                (cov, msum, atyp as u64)
            }
            Err(Error::CapExceeded { .. }) => {
                exact = false;
                let (cov, msum) = estimate_metrics(&cb, ch, scheme, cfg.mc_samples, cfg.seed)?;
                (cov, msum, 0)
            }
            Err(e) => return Err(e),
        };
        let (errors, trials, atyp) = if r.messages > 1 {
            let (e, a) = decode_trials(&cb, ch, scheme, cfg.trials, cfg.seed);
            (e, cfg.trials as u64, a)
        } else {
            (0, 0, 0)
        };
        stats.push(CodebookStats {
            draw,
            kl_nats: cov.kl_nats,
            tv: cov.tv,
            detection_bound: cov.detection_bound,
            optimal_test_sum: cov.optimal_test_sum,
            marginal_kl_sum_nats: msum,
            errors,
            trials,
            encoder_atypical: atyp + warden_atypical,
        });
    }
    let count = stats.len() as f64;
    let mean = |f: fn(&CodebookStats) -> f64| stats.iter().map(f).sum::<f64>() / count;
    let kl = mean(|s| s.kl_nats);
    let tv = mean(|s| s.tv);
    let total_trials: u64 = stats.iter().map(|s| s.trials).sum();
    let total_errors: u64 = stats.iter().map(|s| s.errors).sum();
    let (p_err, half) = if r.messages > 1 && total_trials > 0 {
        let p = total_errors as f64 / total_trials as f64;
        (Some(p), Some(1.96 * (p * (1.0 - p) / total_trials as f64).sqrt()))
    } else {
        (None, None)
    };
    Ok(SimReport {
        n: cfg.n,
        realized: r,
        p_err,
        p_err_halfwidth: half,
        kl_nats: kl,
        tv,
        detection_bound: (1.0 - kl.sqrt()).max(0.0),
        optimal_test_sum: 1.0 - tv,
        exact,
        flags: rate_flags(scheme, &r),
        codebooks: stats,
    })
}

/// [`simulate`] at every blocklength in `n_list`, with the design
/// distribution of `solution`.
pub fn run_experiment(
    ch: &StateDmc,
    solution: &CapacitySolution,
    cfg: &SimConfig,
    n_list: &[usize],
) -> Result<Vec<SimReport>> {
    let scheme = Scheme::from_solution(ch, solution)?;
    run_scheme(ch, &scheme, cfg, n_list)
}

pub fn run_scheme(ch: &StateDmc, scheme: &Scheme, cfg: &SimConfig, n_list: &[usize]) -> Result<Vec<SimReport>> {
    n_list.iter().map(|&n| simulate(ch, scheme, &SimConfig { n, ..*cfg })).collect()
}
