//! Dense linear algebra on tiny systems: row reduction, square solves, and
//! vertex enumeration of `{x ≥ 0 : A x = b}`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-11;

/// Reduces `[A | b]` to row-echelon form and drops dependent rows.
/// Returns `None` when the system is inconsistent.
pub fn independent_rows(a: &[Vec<f64>], b: &[f64]) -> Option<(Vec<Vec<f64>>, Vec<f64>)> {
    let n = a.first().map(Vec::len).unwrap_or(0);
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &rhs)| {
            let mut r = row.clone();
            r.push(rhs);
            r
        })
        .collect();
    let scale = m.iter().flat_map(|r| r[..n].iter()).fold(0.0f64, |s, v| s.max(v.abs())).max(1.0);
    let mut rank = 0;
    for col in 0..n {
        if rank == m.len() {
            break;
        }
        let piv = (rank..m.len()).max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap()).unwrap();
        if m[piv][col].abs() <= PIVOT_TOL * scale {
            continue;
        }
        m.swap(rank, piv);
        let p = m[rank][col];
        for v in m[rank].iter_mut() {
            *v /= p;
        }
        for i in 0..m.len() {
            if i != rank {
                let f = m[i][col];
                if f != 0.0 {
                    for k in col..=n {
                        m[i][k] -= f * m[rank][k];
                    }
                }
            }
        }
        rank += 1;
    }
    for row in &m[rank..] {
        if row[n].abs() > 1e-9 * scale {
            return None;
        }
    }
    m.truncate(rank);
    let rhs = m.iter_mut().map(|r| r.pop().unwrap()).collect();
    Some((m, rhs))
}

/// Solves the square system `A x = b` by partial pivoting. `None` if singular.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[piv][col].abs() <= PIVOT_TOL {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for i in col + 1..n {
            let f = a[i][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[i][k] -= f * a[col][k];
                }
                b[i] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

/// Binomial coefficient, saturating.
pub fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = match r.checked_mul(n - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    r
}

/// Calls `f` with every `k`-subset of `0..n` in lexicographic order.
pub fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Vertices of `{x ∈ R^n : x ≥ 0, A x = b}` by enumerating basic feasible
/// solutions. Duplicates (degenerate bases) are merged.
pub fn polytope_vertices(a: &[Vec<f64>], b: &[f64], budget: u128) -> Result<Vec<Vec<f64>>> {
    let n = a.first().map(Vec::len).unwrap_or(0);
    let Some((rows, rhs)) = independent_rows(a, b) else {
        return Ok(Vec::new());
    };
    let r = rows.len();
    let needed = binomial(n as u128, r as u128);
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let mut out: Vec<Vec<f64>> = Vec::new();
    for_each_combination(n, r, |basis| {
        let sub: Vec<Vec<f64>> = rows.iter().map(|row| basis.iter().map(|&j| row[j]).collect()).collect();
        let Some(xb) = solve(sub, rhs.clone()) else {
            return;
        };
        if xb.iter().any(|&v| v < -1e-10 || !v.is_finite()) {
            return;
        }
        let mut x = vec![0.0; n];
        for (&j, &v) in basis.iter().zip(&xb) {
            x[j] = v.max(0.0);
        }
        if !out.iter().any(|w| w.iter().zip(&x).all(|(p, q)| (p - q).abs() < 1e-10)) {
            out.push(x);
        }
    });
    Ok(out)
}
