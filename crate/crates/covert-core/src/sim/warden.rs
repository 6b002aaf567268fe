//! The warden's output distribution `P̂_{Z^n}` induced by a codebook, exact or
//! estimated, and the detection statistics derived from it.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::codebook::{derived_rng, encode, likelihood_weights, sample_index, Codebook, Role};
use super::Scheme;
use crate::capacity::Mode;
use crate::channel::{q0, StateDmc};
use crate::error::{Error, Result};
use crate::probability::{kl_divergence, n_fold_product, tv_distance, JointPmf, Pmf};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Covertness {
    pub kl_nats: f64,
    pub tv: f64,
    /// `max(0, 1 − √D)`: lower bound on the warden's `α + β` for any test.
    pub detection_bound: f64,
    /// `1 − TV`: `α + β` of the optimal test.
    pub optimal_test_sum: f64,
}

pub fn covertness_metrics(p_hat: &[f64], q0_n: &[f64]) -> Covertness {
    let kl = kl_divergence(p_hat, q0_n);
    let tv = tv_distance(p_hat, q0_n);
    Covertness { kl_nats: kl, tv, detection_bound: (1.0 - kl.sqrt()).max(0.0), optimal_test_sum: 1.0 - tv }
}

/// Limits on exact enumeration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactCaps {
    /// Largest `|Z|^n`.
    pub outputs: u128,
    /// Largest enumeration work, in distribution-entry updates.
    pub work: u128,
}

impl Default for ExactCaps {
    fn default() -> Self {
        Self { outputs: 4096, work: 100_000_000 }
    }
}

fn pow(b: usize, e: usize) -> u128 {
    (b as u128).checked_pow(e as u32).unwrap_or(u128::MAX)
}

/// Work needed by [`exact_warden_dist`].
pub fn exact_work(cb: &Codebook, ch: &StateDmc, mode: Mode) -> u128 {
    let outputs = pow(ch.nz(), cb.n);
    let words = cb.len() as u128;
    match mode {
        Mode::Causal => words.saturating_mul(outputs),
        Mode::Noncausal => {
            pow(ch.ns(), cb.n).saturating_mul(words).saturating_mul(outputs.saturating_add(cb.n as u128))
        }
    }
}

/// Multiplies `acc` (over `Z^i`) by a letter law to get a law over
/// `Z^{i+1}`, earlier letters most significant.
fn extend(acc: &[f64], letter: &[f64], out: &mut Vec<f64>) {
    out.clear();
    for &a in acc {
        out.extend(letter.iter().map(|&w| a * w));
    }
}

/// Adds `weight · Π_i letters[i]` over `Z^n` into `dist`.
fn add_product(dist: &mut [f64], letters: &[&[f64]], weight: f64, buf: &mut (Vec<f64>, Vec<f64>)) {
    buf.0.clear();
    buf.0.push(weight);
    for l in letters {
        extend(&buf.0, l, &mut buf.1);
        core::mem::swap(&mut buf.0, &mut buf.1);
    }
    for (d, v) in dist.iter_mut().zip(&buf.0) {
        *d += v;
    }
}

fn z_labels(n: usize) -> Vec<alloc::string::String> {
    (1..=n).map(|i| alloc::format!("Z{i}")).collect()
}

/// Exact `P̂_{Z^n}` over axes `Z1..Zn`: uniform `(k, m)`, IID states, the
/// likelihood-encoder posterior over `l` for multicoding, and the channel.
/// Also returns the number of `(s^n, k, m)` cases where the likelihood
/// encoder had no consistent candidate (it then uses `l = 0`).
pub fn exact_warden_dist(cb: &Codebook, ch: &StateDmc, scheme: &Scheme, caps: ExactCaps) -> Result<(JointPmf, usize)> {
    let n = cb.n;
    let nz = ch.nz();
    let outputs = pow(nz, n);
    if outputs > caps.outputs {
        return Err(Error::CapExceeded { needed: outputs, cap: caps.outputs });
    }
    let work = exact_work(cb, ch, scheme.mode);
    if work > caps.work {
        return Err(Error::CapExceeded { needed: work, cap: caps.work });
    }
    let mut dist = vec![0.0; outputs as usize];
    let mut buf = (Vec::new(), Vec::new());
    let per_word = 1.0 / (cb.keys * cb.messages) as f64;
    let mut atypical = 0;
    match scheme.mode {
        Mode::Causal => {
            // With causal encoding each Z_i depends on the codeword only
            // through v_i, so the state average factorizes per letter.
            for k in 0..cb.keys {
                for m in 0..cb.messages {
                    let letters: Vec<&[f64]> =
                        cb.codeword(k, m, 0).iter().map(|&v| scheme.z_given_aux.row(v)).collect();
                    add_product(&mut dist, &letters, per_word, &mut buf);
                }
            }
        }
        Mode::Noncausal => {
            let ns = ch.ns();
            let ps = ch.state_dist().probs();
            let mut s_seq = vec![0usize; n];
            for code in 0..pow(ns, n) as usize {
                let mut c = code;
                let mut p_s = 1.0;
                for i in (0..n).rev() {
                    s_seq[i] = c % ns;
                    c /= ns;
                }
                for &s in &s_seq {
                    p_s *= ps[s];
                }
                if p_s == 0.0 {
                    continue;
                }
                for k in 0..cb.keys {
                    for m in 0..cb.messages {
                        let w = match likelihood_weights(cb, k, m, &s_seq, &scheme.s_given_aux) {
                            Some(w) => w,
                            None => {
                                atypical += 1;
                                let mut w = vec![0.0; cb.bins];
                                w[0] = 1.0;
                                w
                            }
                        };
                        for (l, &g) in w.iter().enumerate() {
                            if g == 0.0 {
                                continue;
                            }
                            let letters: Vec<&[f64]> = cb
                                .codeword(k, m, l)
                                .iter()
                                .zip(&s_seq)
                                .map(|(&u, &s)| ch.z_row(s, scheme.map.get(u, s)))
                                .collect();
                            add_product(&mut dist, &letters, p_s * per_word * g, &mut buf);
                        }
                    }
                }
            }
        }
    }
    let total: f64 = dist.iter().sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidPmf(alloc::format!("warden distribution has mass {total}")));
    }
    let labels = z_labels(n);
    let refs: Vec<&str> = labels.iter().map(|s| s.as_str()).collect();
    Ok((JointPmf::from_weights(&refs, &vec![nz; n], dist)?, atypical))
}

/// Per-letter marginals `P̂_{Z_i}` of a distribution over `Z^n` (earlier
/// letters most significant).
pub fn letter_marginals(dist: &[f64], nz: usize, n: usize) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; nz]; n];
    for (idx, &p) in dist.iter().enumerate() {
        let mut c = idx;
        for i in (0..n).rev() {
            out[i][c % nz] += p;
            c /= nz;
        }
    }
    out
}

/// `Σ_i D(P̂_{Z_i}‖Q0)` in nats.
pub fn marginal_kl_sum(dist: &[f64], q0: &Pmf, n: usize) -> f64 {
    letter_marginals(dist, q0.len(), n).iter().map(|m| kl_divergence(m, q0)).sum()
}

/// Exact metrics against `Q0^{×n}` plus the marginal divergence sum.
pub fn exact_metrics(dist: &JointPmf, ch: &StateDmc, n: usize) -> Result<(Covertness, f64)> {
    let q = q0(ch);
    let qn = n_fold_product(&q, n, dist.probs().len())?;
    Ok((covertness_metrics(dist.probs(), qn.probs()), marginal_kl_sum(dist.probs(), &q, n)))
}

/// Plug-in estimate of the covertness metrics from `samples` draws of
/// `Z^n`. The divergence estimate is biased; the caller flags it.
pub fn estimate_metrics(
    cb: &Codebook,
    ch: &StateDmc,
    scheme: &Scheme,
    samples: usize,
    master_seed: u64,
) -> Result<(Covertness, f64)> {
    if samples == 0 {
        return Err(Error::Parameter("at least one warden sample is needed".into()));
    }
    let n = cb.n;
    let q = q0(ch);
    let mut rng = derived_rng(master_seed, n, cb.draw, Role::WardenEstimate);
    let mut hist: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
    let mut s_seq = vec![0; n];
    for _ in 0..samples {
        let k = rng.random_range(0..cb.keys);
        let m = rng.random_range(0..cb.messages);
        for s in s_seq.iter_mut() {
            *s = sample_index(ch.state_dist().probs(), rng.random::<f64>());
        }
        let (x, _) = encode(cb, scheme, k, m, &s_seq, &mut rng);
        let z: Vec<usize> =
            x.iter().zip(&s_seq).map(|(&xi, &si)| sample_index(ch.z_row(si, xi), rng.random::<f64>())).collect();
        *hist.entry(z).or_insert(0) += 1;
    }
    let total = samples as f64;
    let mut kl = 0.0;
    let mut l1 = 0.0;
    let mut q_seen = 0.0;
    let mut marg = vec![vec![0.0; ch.nz()]; n];
    for (z, &count) in &hist {
        let p = count as f64 / total;
        let qz: f64 = z.iter().map(|&zi| q[zi]).product();
        kl += if qz > 0.0 { p * (p / qz).ln() } else { f64::INFINITY };
        l1 += (p - qz).abs();
        q_seen += qz;
        for (i, &zi) in z.iter().enumerate() {
            marg[i][zi] += p;
        }
    }
    let tv = (0.5 * (l1 + (1.0 - q_seen).max(0.0))).min(1.0);
    let kl = kl.max(0.0);
    let cov = Covertness { kl_nats: kl, tv, detection_bound: (1.0 - kl.sqrt()).max(0.0), optimal_test_sum: 1.0 - tv };
    let msum = marg.iter().map(|m| kl_divergence(m, &q)).sum();
    Ok((cov, msum))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::StrategyMap;
    use crate::examples::bsc;

    #[test]
    fn metrics_examples() {
        let q = [0.25, 0.25, 0.5];
        let c = covertness_metrics(&q, &q);
        assert_eq!((c.kl_nats, c.tv, c.detection_bound, c.optimal_test_sum), (0.0, 0.0, 1.0, 1.0));
        let c = covertness_metrics(&[1.0, 0.0], &[0.0, 1.0]);
        assert_eq!((c.kl_nats, c.tv, c.detection_bound), (f64::INFINITY, 1.0, 0.0));
    }

    #[test]
    fn all_x0_codebook_is_invisible() {
        let ch = bsc(0.2);
        let map = StrategyMap::constant(2, 2, 2, 0).unwrap();
        let scheme = Scheme::causal(&ch, &Pmf::uniform(2), &map).unwrap();
        let cb = Codebook::from_codewords(3, 1, 2, 1, 2, vec![vec![0, 1, 0], vec![1, 1, 1]]).unwrap();
        let (d, _) = exact_warden_dist(&cb, &ch, &scheme, ExactCaps::default()).unwrap();
        let (c, msum) = exact_metrics(&d, &ch, 3).unwrap();
        assert!(c.kl_nats < 1e-15 && msum < 1e-15);
    }

    #[test]
    fn one_letter_non_idle_symbol() {
        // one codeword whose map sends x = 1 in every state
        let ch = bsc(0.2);
        let map = StrategyMap::constant(1, 2, 2, 1).unwrap();
        let scheme = Scheme::causal(&ch, &Pmf::uniform(1), &map).unwrap();
        let cb = Codebook::from_codewords(1, 1, 1, 1, 1, vec![vec![0]]).unwrap();
        let (d, _) = exact_warden_dist(&cb, &ch, &scheme, ExactCaps::default()).unwrap();
        // Z = 1 ⊕ S ~ Bern(0.8)
        assert!((d.probs()[1] - 0.8).abs() < 1e-15);
        let direct = 0.2 * (0.2f64 / 0.8).ln() + 0.8 * (0.8f64 / 0.2).ln();
        let (c, _) = exact_metrics(&d, &ch, 1).unwrap();
        assert!((c.kl_nats - direct).abs() < 1e-14);
    }

    #[test]
    fn caps() {
        let ch = bsc(0.2);
        let map = StrategyMap::constant(1, 2, 2, 0).unwrap();
        let scheme = Scheme::causal(&ch, &Pmf::uniform(1), &map).unwrap();
        let cb = Codebook::from_codewords(13, 1, 1, 1, 1, vec![vec![0; 13]]).unwrap();
        assert!(matches!(exact_warden_dist(&cb, &ch, &scheme, ExactCaps::default()), Err(Error::CapExceeded { .. })));
    }
}
