//! Random codebooks, the two encoders and maximum-likelihood decoding.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Scheme;
use crate::capacity::Mode;
use crate::channel::StrategyMap;
use crate::error::{Error, Result};
use crate::probability::{ConditionalPmf, Pmf};

/// Stream ids separating the independent random roles drawn from one key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Role {
    Codebook = 1,
    Trials = 2,
    WardenEstimate = 3,
}

/// Generator keyed by `(master seed, n, draw)` on the stream of `role`.
///
/// Each `f64` drawn consumes exactly one 64-bit block of the ChaCha
/// keystream, so the `j`-th draw of a role is the block at counter `j`:
/// reading sequentially is the same as counter-mode indexing by
/// `((k·M + m)·L + l)·n + i` for codebook symbols.
pub fn derived_rng(master: u64, n: usize, draw: u64, role: Role) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master.to_le_bytes());
    key[8..16].copy_from_slice(&(n as u64).to_le_bytes());
    key[16..24].copy_from_slice(&draw.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(role as u64);
    rng
}

/// Inverse-CDF sample from `probs` with a uniform `u ∈ [0, 1)`; never returns
/// a zero-mass index.
pub fn sample_index(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

/// `⌈2^{n·rate}⌉`, at least 1. A tiny slack keeps exact powers of two from
/// rounding up.
pub fn codebook_size(n: usize, rate_bits: f64) -> Result<usize> {
    if !(rate_bits >= 0.0) {
        return Err(Error::Parameter("rates must be nonnegative".into()));
    }
    let exact = (n as f64 * rate_bits).exp2();
    let size = (exact - 1e-9).ceil().max(1.0);
    if size > usize::MAX as f64 / 2.0 {
        return Err(Error::CapExceeded { needed: u128::MAX, cap: usize::MAX as u128 });
    }
    Ok(size as usize)
}

/// Auxiliary codewords `a^n(k, m, l)`, stored `[k][m][l][i]`. Causal
/// codebooks have a single `l`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Codebook {
    pub n: usize,
    pub keys: usize,
    pub messages: usize,
    pub bins: usize,
    pub aux_size: usize,
    pub master_seed: u64,
    pub draw: u64,
    symbols: Vec<usize>,
}

impl Codebook {
    /// Codebook from explicit codewords, `[k][m][l]` order.
    pub fn from_codewords(
        n: usize,
        keys: usize,
        messages: usize,
        bins: usize,
        aux_size: usize,
        codewords: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if codewords.len() != keys * messages * bins || codewords.iter().any(|c| c.len() != n) {
            return Err(Error::Shape("codeword count or length does not match the codebook shape".into()));
        }
        if codewords.iter().flatten().any(|&a| a >= aux_size) {
            return Err(Error::Shape("codeword symbol outside the auxiliary alphabet".into()));
        }
        Ok(Self { n, keys, messages, bins, aux_size, master_seed: 0, draw: 0, symbols: codewords.concat() })
    }

    #[inline]
    pub fn codeword(&self, k: usize, m: usize, l: usize) -> &[usize] {
        let idx = (k * self.messages + m) * self.bins + l;
        &self.symbols[idx * self.n..(idx + 1) * self.n]
    }

    pub fn symbols(&self) -> &[usize] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.keys * self.messages * self.bins
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Draws every codeword symbol IID from `dist`.
#[allow(clippy::too_many_arguments)]
pub fn gen_codebook(
    n: usize,
    keys: usize,
    messages: usize,
    bins: usize,
    dist: &Pmf,
    master_seed: u64,
    draw: u64,
    max_symbols: usize,
) -> Result<Codebook> {
    let needed = (n as u128) * (keys as u128) * (messages as u128) * (bins as u128);
    if needed > max_symbols as u128 {
        return Err(Error::CapExceeded { needed, cap: max_symbols as u128 });
    }
    let mut rng = derived_rng(master_seed, n, draw, Role::Codebook);
    let symbols = (0..needed as usize).map(|_| sample_index(dist.probs(), rng.random::<f64>())).collect();
    Ok(Codebook { n, keys, messages, bins, aux_size: dist.len(), master_seed, draw, symbols })
}

/// `x_i = x(v_i, s_i)` letter by letter.
pub fn shannon_encode(cb: &Codebook, k: usize, m: usize, s_seq: &[usize], map: &StrategyMap) -> Vec<usize> {
    cb.codeword(k, m, 0).iter().zip(s_seq).map(|(&v, &s)| map.get(v, s)).collect()
}

/// Normalized likelihood-encoder weights over `l` for the observed state
/// sequence, computed in log space. `None` when every candidate gives the
/// state sequence zero probability.
pub fn likelihood_weights(
    cb: &Codebook,
    k: usize,
    m: usize,
    s_seq: &[usize],
    s_given_aux: &ConditionalPmf,
) -> Option<Vec<f64>> {
    let logw: Vec<f64> = (0..cb.bins)
        .map(|l| cb.codeword(k, m, l).iter().zip(s_seq).map(|(&u, &s)| s_given_aux.get(u, s).ln()).sum::<f64>())
        .collect();
    let max = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return None;
    }
    let w: Vec<f64> = logw.iter().map(|&v| (v - max).exp()).collect();
    let t: f64 = w.iter().sum();
    Some(w.into_iter().map(|v| v / t).collect())
}

/// Draws the multicoding index from the likelihood-encoder posterior and
/// applies the map. Fails with [`Error::EncoderAtypical`] when no candidate
/// is consistent with the states.
pub fn likelihood_encode(
    cb: &Codebook,
    k: usize,
    m: usize,
    s_seq: &[usize],
    map: &StrategyMap,
    s_given_aux: &ConditionalPmf,
    rng: &mut impl Rng,
) -> Result<(usize, Vec<usize>)> {
    let w = likelihood_weights(cb, k, m, s_seq, s_given_aux).ok_or(Error::EncoderAtypical)?;
    let l = if cb.bins == 1 { 0 } else { sample_index(&w, rng.random::<f64>()) };
    let x = cb.codeword(k, m, l).iter().zip(s_seq).map(|(&u, &s)| map.get(u, s)).collect();
    Ok((l, x))
}

/// Log-likelihood margin below which two candidates count as tied.
pub const ML_TIE_TOL: f64 = 1e-12;

/// Maximum-likelihood message estimate given the key: maximizes
/// `Σ_i ln P_{Y|A}(y_i|a_i)` over `(m, l)`. Scores within [`ML_TIE_TOL`]
/// (relative, at least absolute) are ties and go to the smaller index, so
/// equal likelihoods are not split by summation rounding.
///
/// With causal state knowledge `P_{Y|V}` is the exact per-letter law, so the
/// decoder is exactly ML. For multicoding it uses the single-letter
/// `P_{Y|U}` of the design distribution.
pub fn ml_decode(cb: &Codebook, k: usize, y_seq: &[usize], scheme: &Scheme) -> usize {
    let table: Vec<f64> = scheme.y_given_aux.as_flat().iter().map(|p| p.ln()).collect();
    let ny = scheme.y_given_aux.cols();
    let mut best = (0, f64::NEG_INFINITY);
    for m in 0..cb.messages {
        for l in 0..cb.bins {
            let score: f64 = cb.codeword(k, m, l).iter().zip(y_seq).map(|(&a, &y)| table[a * ny + y]).sum();
            let beats = if best.1 == f64::NEG_INFINITY {
                score > best.1
            } else {
                score > best.1 + ML_TIE_TOL * best.1.abs().max(1.0)
            };
            if beats {
                best = (m, score);
            }
        }
    }
    best.0
}

/// Encodes one block, substituting `l = 0` (and reporting it) when the
/// likelihood encoder finds no consistent candidate.
pub(crate) fn encode(
    cb: &Codebook,
    scheme: &Scheme,
    k: usize,
    m: usize,
    s_seq: &[usize],
    rng: &mut impl Rng,
) -> (Vec<usize>, bool) {
    match scheme.mode {
        Mode::Causal => (shannon_encode(cb, k, m, s_seq, &scheme.map), false),
        Mode::Noncausal => match likelihood_encode(cb, k, m, s_seq, &scheme.map, &scheme.s_given_aux, rng) {
            Ok((_, x)) => (x, false),
            Err(_) => {
                let x = cb.codeword(k, m, 0).iter().zip(s_seq).map(|(&u, &s)| scheme.map.get(u, s)).collect();
                (x, true)
            }
        },
    }
}
