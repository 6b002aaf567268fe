//! The rate surface `C(A, B)` over a grid of covertness and cost budgets.

use alloc::vec::Vec;

use super::{causal_capacity_relaxed, noncausal_capacity_relaxed, Mode, SolverOptions};
use crate::channel::StateDmc;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    /// Divergence budget, nats.
    pub a_nats: f64,
    /// Cost budget.
    pub b: f64,
    pub value_bits: f64,
}

/// Evaluates `C(A, B)` on the product grid, row-major in `a_grid`.
pub fn capacity_surface(
    ch: &StateDmc,
    mode: Mode,
    a_grid: &[f64],
    b_grid: &[f64],
    opts: &SolverOptions,
) -> Result<Vec<SurfacePoint>> {
    if a_grid.iter().chain(b_grid).any(|v| !(*v >= 0.0)) {
        return Err(Error::Parameter("surface grid values must be nonnegative".into()));
    }
    let mut out = Vec::with_capacity(a_grid.len() * b_grid.len());
    for &a in a_grid {
        for &b in b_grid {
            let c = ch.clone().with_budget(b)?;
            let sol = match mode {
                Mode::Causal => causal_capacity_relaxed(&c, a, opts)?,
                Mode::Noncausal => noncausal_capacity_relaxed(&c, a, opts)?,
            };
            out.push(SurfacePoint { a_nats: a, b, value_bits: sol.rate_bits });
        }
    }
    Ok(out)
}
