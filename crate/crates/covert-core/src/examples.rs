//! Ready-made channels: the binary example with additive state, its degraded
//! variants, and seeded random channels for testing.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::channel::StateDmc;
use crate::probability::{ConditionalPmf, Pmf};

/// Binary channel `Y = Z = X ⊕ S` with `S ~ Bern(p)`, `x0 = 0`, zero cost.
pub fn bsc(p: f64) -> StateDmc {
    StateDmc::deterministic(2, 2, 2, 0, Pmf::bernoulli(p).expect("p in [0,1]"), |s, x| (x ^ s, x ^ s))
        .expect("well-formed")
}

/// `Y = X ⊕ S`, and the warden sees `Y` through a further BSC(`q`).
pub fn bsc_degraded_warden(p: f64, q: f64) -> StateDmc {
    cascade(p, q, false)
}

/// `Z = X ⊕ S`, and the receiver sees `Z` through a further BSC(`q`).
pub fn bsc_degraded_receiver(p: f64, q: f64) -> StateDmc {
    cascade(p, q, true)
}

fn cascade(p: f64, q: f64, noisy_receiver: bool) -> StateDmc {
    let mut rows = Vec::with_capacity(4);
    for s in 0..2 {
        for x in 0..2 {
            let clean = x ^ s;
            let mut row = [0.0; 4];
            for flip in 0..2 {
                let w = if flip == 1 { q } else { 1.0 - q };
                let noisy = clean ^ flip;
                let (y, z) = if noisy_receiver { (noisy, clean) } else { (clean, noisy) };
                row[y * 2 + z] += w;
            }
            rows.push(row.to_vec());
        }
    }
    let law = ConditionalPmf::from_rows(rows).expect("rows are distributions");
    StateDmc::new(2, 2, 2, 0, Pmf::bernoulli(p).expect("p in [0,1]"), law).expect("well-formed")
}

fn dirichlet_row(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let t: f64 = w.iter().sum();
    w.into_iter().map(|v| v / t).collect()
}

/// Channel with every law row and `P_S` drawn from a flat Dirichlet.
/// `x0 = 0`, zero cost.
pub fn random_channel(seed: u64, nx: usize, ns: usize, ny: usize, nz: usize) -> StateDmc {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p_s = Pmf::from_weights(dirichlet_row(&mut rng, ns)).expect("positive weights");
    let mut data = Vec::with_capacity(ns * nx * ny * nz);
    for _ in 0..ns * nx {
        data.extend(dirichlet_row(&mut rng, ny * nz));
    }
    // Rescale each row exactly so it passes the strict simplex check.
    for row in data.chunks_mut(ny * nz) {
        let t: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= t);
    }
    let law = ConditionalPmf::from_flat(ns * nx, ny * nz, data).expect("rows are distributions");
    StateDmc::new(nx, ny, nz, 0, p_s, law).expect("well-formed")
}
