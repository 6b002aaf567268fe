//! Exhaustive grid search over exactly feasible points, used to check the
//! main solvers on tiny channels.
//!
//! For every canonical map the equality system (simplex rows, `P_Z = Q0`,
//! and a cost slack when the budget can bind) is row-reduced. For every
//! nonsingular basis the non-basic coordinates run over a grid of step
//! `1/resolution`; the basic coordinates are then solved for and the point is
//! kept when they are nonnegative. Every kept point is feasible, so the
//! result is a lower bound on the true optimum. The objective is evaluated
//! through the joint distribution and `mutual_information`, independently of
//! the solver's closed-form objective.

use alloc::vec;
use alloc::vec::Vec;

use super::maps::canonical_maps;
use super::Mode;
use crate::channel::{causal_joint, noncausal_joint, q0, StateDmc, StrategyMap, AXIS_S, AXIS_U, AXIS_V, AXIS_Y};
use crate::error::{Error, Result};
use crate::linalg::{binomial, for_each_combination, independent_rows, solve};
use crate::probability::{mutual_information, ConditionalPmf, Pmf};

/// Linear system in the oracle's variables: aux weights (causal) or
/// `P_{U|S}` flattened `[s][u]` (noncausal), plus an optional cost slack.
struct System {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    /// Simplex block of each variable; `None` for the slack.
    block: Vec<Option<usize>>,
    /// Grid step of each variable.
    step: Vec<f64>,
    slack: bool,
}

fn system(ch: &StateDmc, map: &StrategyMap, mode: Mode) -> System {
    let na = map.aux_size();
    let ns = ch.ns();
    let ps = ch.state_dist().probs();
    let q = q0(ch);
    // (simplex block, aux symbol) per variable
    let vars: Vec<(usize, usize)> = match mode {
        Mode::Causal => (0..na).map(|v| (0, v)).collect(),
        Mode::Noncausal => (0..ns).flat_map(|s| (0..na).map(move |u| (s, u))).collect(),
    };
    let blocks = if mode == Mode::Causal { 1 } else { ns };
    let n = vars.len();
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for b in 0..blocks {
        rows.push(vars.iter().map(|&(blk, _)| if blk == b { 1.0 } else { 0.0 }).collect());
        rhs.push(1.0);
    }
    let mut cost = vec![0.0; n];
    for z in 0..ch.nz() {
        let mut row = vec![0.0; n];
        for (j, &(blk, a)) in vars.iter().enumerate() {
            match mode {
                Mode::Causal => {
                    for s in 0..ns {
                        row[j] += ps[s] * ch.z_row(s, map.get(a, s))[z];
                    }
                }
                Mode::Noncausal => row[j] = ps[blk] * ch.z_row(blk, map.get(a, blk))[z],
            }
        }
        rows.push(row);
        rhs.push(q[z]);
    }
    for (j, &(blk, a)) in vars.iter().enumerate() {
        cost[j] = match mode {
            Mode::Causal => (0..ns).map(|s| ps[s] * ch.cost()[map.get(a, s)]).sum(),
            Mode::Noncausal => ps[blk] * ch.cost()[map.get(a, blk)],
        };
    }
    let mut block: Vec<Option<usize>> = vars.iter().map(|&(b, _)| Some(b)).collect();
    let mut step = vec![1.0; n];
    let worst: f64 = match mode {
        Mode::Causal => cost.iter().cloned().fold(0.0, f64::max),
        Mode::Noncausal => (0..ns)
            .map(|s| vars.iter().zip(&cost).filter(|((b, _), _)| *b == s).map(|(_, c)| *c).fold(0.0, f64::max))
            .sum(),
    };
    let slack = ch.budget().is_finite() && worst > ch.budget();
    if slack {
        for r in rows.iter_mut() {
            r.push(0.0);
        }
        let mut r = cost;
        r.push(1.0);
        rows.push(r);
        rhs.push(ch.budget());
        block.push(None);
        step.push(ch.budget());
    }
    System { rows, rhs, block, step, slack }
}

fn objective(ch: &StateDmc, map: &StrategyMap, mode: Mode, x: &[f64]) -> Result<f64> {
    let na = map.aux_size();
    let clamp = |v: &[f64]| -> Vec<f64> { v.iter().map(|p| p.max(0.0)).collect() };
    match mode {
        Mode::Causal => {
            let j = causal_joint(ch, &Pmf::from_weights(clamp(&x[..na]))?, map)?;
            mutual_information(&j, &[AXIS_V], &[AXIS_Y])
        }
        Mode::Noncausal => {
            let rows = (0..ch.ns())
                .map(|s| Pmf::from_weights(clamp(&x[s * na..(s + 1) * na])).map(Pmf::into_vec))
                .collect::<Result<Vec<_>>>()?;
            let j = noncausal_joint(ch, &ConditionalPmf::from_rows(rows)?, map)?;
            Ok(mutual_information(&j, &[AXIS_U], &[AXIS_Y])? - mutual_information(&j, &[AXIS_U], &[AXIS_S])?)
        }
    }
}

/// Calls `f` on every grid assignment of the listed variables, where the
/// variables of each simplex block sum to at most 1.
fn for_each_grid_point(
    vars: &[usize],
    sys: &System,
    blocks: usize,
    resolution: usize,
    f: &mut impl FnMut(&[f64]) -> Result<()>,
) -> Result<()> {
    let mut counts = vec![0usize; vars.len()];
    let mut used = vec![0usize; blocks];
    fn rec(
        i: usize,
        vars: &[usize],
        sys: &System,
        resolution: usize,
        counts: &mut [usize],
        used: &mut [usize],
        f: &mut impl FnMut(&[f64]) -> Result<()>,
    ) -> Result<()> {
        if i == vars.len() {
            let vals: Vec<f64> =
                counts.iter().zip(vars).map(|(&c, &j)| c as f64 * sys.step[j] / resolution as f64).collect();
            return f(&vals);
        }
        let blk = sys.block[vars[i]];
        let limit = match blk {
            Some(b) => resolution - used[b],
            None => resolution,
        };
        for c in 0..=limit {
            counts[i] = c;
            if let Some(b) = blk {
                used[b] += c;
            }
            rec(i + 1, vars, sys, resolution, counts, used, f)?;
            if let Some(b) = blk {
                used[b] -= c;
            }
        }
        Ok(())
    }
    rec(0, vars, sys, resolution, &mut counts, &mut used, f)
}

/// Best objective value (bits) over the grid of exactly feasible points, for
/// all canonical maps with `aux_size` auxiliary symbols. `budget` caps the
/// number of candidate points examined.
pub fn brute_force_oracle(ch: &StateDmc, mode: Mode, aux_size: usize, resolution: usize, budget: u128) -> Result<f64> {
    if resolution == 0 {
        return Err(Error::Parameter("oracle resolution must be positive".into()));
    }
    if aux_size <= 1 {
        // one auxiliary symbol carries no information
        return Ok(0.0);
    }
    let maps = canonical_maps(ch.nx(), ch.ns(), aux_size, budget)?;
    let blocks = if mode == Mode::Causal { 1 } else { ch.ns() };

    let mut needed: u128 = 0;
    for map in &maps {
        let sys = system(ch, map, mode);
        let nvar = sys.rows[0].len();
        let rank = independent_rows(&sys.rows, &sys.rhs).map(|(r, _)| r.len()).unwrap_or(0);
        let per_basis = ((resolution + 1) as u128).saturating_pow((nvar - rank) as u32);
        needed = needed.saturating_add(binomial(nvar as u128, rank as u128).saturating_mul(per_basis));
    }
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }

    let mut best = f64::NEG_INFINITY;
    for map in &maps {
        let sys = system(ch, map, mode);
        let n = sys.rows[0].len();
        let Some((rows, rhs)) = independent_rows(&sys.rows, &sys.rhs) else { continue };
        let r = rows.len();
        let mut err = None;
        for_each_combination(n, r, |basis| {
            if err.is_some() {
                return;
            }
            let bmat: Vec<Vec<f64>> = rows.iter().map(|row| basis.iter().map(|&j| row[j]).collect()).collect();
            if solve(bmat.clone(), rhs.clone()).is_none() && r > 0 {
                // singular basis (solve fails only on singularity)
                return;
            }
            let nonbasic: Vec<usize> = (0..n).filter(|j| !basis.contains(j)).collect();
            let res = for_each_grid_point(&nonbasic, &sys, blocks, resolution, &mut |vals| {
                let b: Vec<f64> = rows
                    .iter()
                    .zip(&rhs)
                    .map(|(row, &c)| c - nonbasic.iter().zip(vals).map(|(&j, v)| row[j] * v).sum::<f64>())
                    .collect();
                let Some(xb) = (if r == 0 { Some(Vec::new()) } else { solve(bmat.clone(), b) }) else {
                    return Ok(());
                };
                if xb.iter().any(|&v| v < -1e-12) {
                    return Ok(());
                }
                let mut x = vec![0.0; n];
                for (&j, &v) in basis.iter().zip(&xb) {
                    x[j] = v.max(0.0);
                }
                for (&j, &v) in nonbasic.iter().zip(vals) {
                    x[j] = v;
                }
                let dim = if sys.slack { n - 1 } else { n };
                let value = objective(ch, map, mode, &x[..dim])?;
                if value > best {
                    best = value;
                }
                Ok(())
            });
            if let Err(e) = res {
                err = Some(e);
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
    }

    if mode == Mode::Noncausal {
        // a state-independent P_{U|S} is a causal point
        best = best.max(brute_force_oracle(ch, Mode::Causal, aux_size, resolution, budget)?);
    }
    if best == f64::NEG_INFINITY {
        return Err(Error::Infeasible);
    }
    Ok(best.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples::{bsc, random_channel};
    use crate::probability::binary_entropy;

    #[test]
    fn bsc_oracle() {
        let ch = bsc(0.2);
        let v = brute_force_oracle(&ch, Mode::Causal, 2, 100, 1 << 30).unwrap();
        assert!((v - binary_entropy(0.2)).abs() < 2e-3, "{v}");
        assert_eq!(brute_force_oracle(&ch, Mode::Causal, 1, 100, 1 << 30).unwrap(), 0.0);
    }

    #[test]
    fn causal_below_noncausal() {
        for seed in 0..3 {
            let ch = random_channel(seed, 2, 2, 2, 2);
            let c = brute_force_oracle(&ch, Mode::Causal, 2, 40, 1 << 30).unwrap();
            let n = brute_force_oracle(&ch, Mode::Noncausal, 2, 40, 1 << 30).unwrap();
            assert!(c <= n + 1e-9);
        }
    }

    #[test]
    fn budget() {
        let ch = bsc(0.2);
        assert!(matches!(brute_force_oracle(&ch, Mode::Noncausal, 3, 200, 1000), Err(Error::BudgetExceeded { .. })));
    }
}
