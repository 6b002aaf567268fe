//! Enumeration of strategy maps up to relabelling of auxiliary symbols.

use alloc::vec;
use alloc::vec::Vec;

use crate::channel::StrategyMap;
use crate::error::{Error, Result};
use crate::linalg::binomial;

/// Number of distinct rows `x(a, ·)`: `|X|^|S|`.
fn row_count(nx: usize, ns: usize) -> u128 {
    (nx as u128).checked_pow(ns as u32).unwrap_or(u128::MAX)
}

/// Count of canonical maps (multisets of rows) for an aux alphabet of size
/// `aux`.
pub fn canonical_map_count(nx: usize, ns: usize, aux: usize) -> u128 {
    let rows = row_count(nx, ns);
    binomial(rows.saturating_add(aux as u128).saturating_sub(1), aux as u128)
}

/// Row number `r` as the table row it encodes; state 0 is the most
/// significant digit so numeric order is lexicographic order.
fn decode_row(mut r: usize, nx: usize, ns: usize, out: &mut [usize]) {
    for s in (0..ns).rev() {
        out[s] = r % nx;
        r /= nx;
    }
}

/// All canonical maps in lexicographic table order: row sequences that are
/// non-decreasing in the auxiliary index.
pub fn canonical_maps(nx: usize, ns: usize, aux: usize, budget: u128) -> Result<Vec<StrategyMap>> {
    let needed = canonical_map_count(nx, ns, aux);
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let rows = row_count(nx, ns) as usize;
    let mut out = Vec::with_capacity(needed as usize);
    let mut pick = vec![0usize; aux];
    let mut table = vec![0usize; aux * ns];
    loop {
        for (a, &r) in pick.iter().enumerate() {
            decode_row(r, nx, ns, &mut table[a * ns..(a + 1) * ns]);
        }
        out.push(StrategyMap::new(aux, ns, nx, table.clone())?);
        // next non-decreasing sequence
        let Some(i) = (0..aux).rev().find(|&i| pick[i] + 1 < rows) else {
            break;
        };
        let v = pick[i] + 1;
        for p in pick[i..].iter_mut() {
            *p = v;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeSet;

    #[test]
    fn counts_and_canonical_form() {
        let maps = canonical_maps(2, 2, 4, 1000).unwrap();
        assert_eq!(maps.len(), 35);
        assert_eq!(canonical_map_count(2, 2, 4), 35);
        assert!(maps.iter().all(|m| m.canonical() == *m));
        assert!(maps.windows(2).all(|w| w[0].table() < w[1].table()));
        assert_eq!(maps[0].table(), &[0; 8]);
    }

    #[test]
    fn every_map_has_a_representative() {
        // brute force over all 3^(2*2) tables for nx=3, ns=2, aux=2
        let reps: BTreeSet<_> = canonical_maps(3, 2, 2, 1000).unwrap().into_iter().collect();
        let mut classes = BTreeSet::new();
        for code in 0..81usize {
            let t: Vec<usize> = (0..4).map(|k| (code / 3usize.pow(k)) % 3).collect();
            let m = StrategyMap::new(2, 2, 3, t).unwrap().canonical();
            assert!(reps.contains(&m));
            classes.insert(m);
        }
        assert_eq!(classes.len(), reps.len());
    }

    #[test]
    fn budget() {
        assert!(matches!(canonical_maps(4, 4, 8, 10), Err(Error::BudgetExceeded { .. })));
    }
}
