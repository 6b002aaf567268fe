//! Covert-capacity bounds for causal and noncausal transmitter state
//! information.
//!
//! For a fixed strategy map the causal objective `I(V;Y)` is concave in `P_V`
//! and the constraints `P_Z = Q0`, `E[b(X)] ≤ B` are linear, so each map is a
//! concave program over a small polytope solved by away-step conditional
//! gradient. Maps are enumerated exhaustively up to relabelling of auxiliary
//! symbols. The noncausal objective `I(U;Y) − I(U;S)` is not concave in
//! `P_{U|S}`; it is maximized by multi-start local ascent, so the reported
//! value is an achievable lower bound.

mod maps;
mod oracle;
pub(crate) mod problem;
mod surface;

pub use maps::{canonical_map_count, canonical_maps};
pub use oracle::brute_force_oracle;
pub use surface::{capacity_surface, SurfacePoint};

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::channel::{
    causal_joint, cost_and_covert_residuals, noncausal_joint, StateDmc, StrategyMap, AXIS_U, AXIS_V, AXIS_Y, AXIS_Z,
};
use crate::error::{Error, Result};
use crate::optimize::{maximize, FwOptions, FwResult, Start};
use crate::probability::{mutual_information, nats_to_bits, ConditionalPmf, JointPmf, Pmf};
use problem::{MapProblem, Penalized, RateObjective};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Causal,
    Noncausal,
}

/// Which auxiliary-alphabet size the solvers use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuxBound {
    /// Lower-bound cardinality (a computed value is a certified achievable rate).
    Achievability,
    /// Upper-bound cardinality.
    Converse,
    Fixed(usize),
}

/// Auxiliary alphabet size for `mode` under `bound`.
pub fn aux_size(ch: &StateDmc, mode: Mode, bound: AuxBound) -> usize {
    let (x, s, y, z) = (ch.nx(), ch.ns(), ch.ny(), ch.nz());
    match (mode, bound) {
        (_, AuxBound::Fixed(n)) => n,
        (Mode::Causal, AuxBound::Converse) => (x + y + z - 2).min((x - 1) * s + 1),
        (Mode::Causal, AuxBound::Achievability) => (x + y + z - 1).min((x - 1) * s + 2),
        (Mode::Noncausal, AuxBound::Converse) => (x + y + z + s - 3).min(x * s),
        (Mode::Noncausal, AuxBound::Achievability) => (x + y + z + s - 2).min(x * s + 1),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub aux_bound: AuxBound,
    /// Random starts per map for the noncausal solver.
    pub restarts: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Frank–Wolfe gap stopping tolerance, nats.
    pub gap_tol_nats: f64,
    pub map_budget: u128,
    /// Cap on candidate bases during vertex enumeration.
    pub vertex_budget: u128,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            aux_bound: AuxBound::Achievability,
            restarts: 32,
            seed: 0,
            max_iter: 20_000,
            gap_tol_nats: 1e-7,
            map_budget: 200_000,
            vertex_budget: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AuxDistribution {
    /// `P_V`.
    Causal(Pmf),
    /// `P_{U|S}`, one row per state.
    Noncausal(ConditionalPmf),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub maps_enumerated: usize,
    pub maps_feasible: usize,
    pub best_map_index: usize,
    pub iterations: usize,
    /// Ascent runs per map (noncausal).
    pub restarts: usize,
    /// Start index that produced the reported optimum; 0 is the lifted causal
    /// solution when one exists.
    pub restarts_to_best: Option<usize>,
    pub nonconverged_runs: usize,
    /// Frank–Wolfe gap at the reported point, nats.
    pub fw_gap_nats: f64,
    /// Lagrangian dual gap for relaxed-covertness solves, nats.
    pub dual_gap_nats: Option<f64>,
    pub oracle_gap_bits: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacitySolution {
    pub mode: Mode,
    pub rate_bits: f64,
    pub aux: AuxDistribution,
    pub map: StrategyMap,
    /// `I(aux;Z) − I(aux;Y)` in bits.
    pub key_deficit_bits: f64,
    /// `key_deficit_bits < R_K`.
    pub key_feasible: bool,
    pub cost_used: f64,
    pub covert_residual_nats: f64,
    pub diagnostics: Diagnostics,
}

impl CapacitySolution {
    /// The full joint over `(aux, S, X, Y, Z)`.
    pub fn joint(&self, ch: &StateDmc) -> Result<JointPmf> {
        match &self.aux {
            AuxDistribution::Causal(p) => causal_joint(ch, p, &self.map),
            AuxDistribution::Noncausal(q) => noncausal_joint(ch, q, &self.map),
        }
    }

    pub fn aux_label(&self) -> &'static str {
        match self.mode {
            Mode::Causal => AXIS_V,
            Mode::Noncausal => AXIS_U,
        }
    }
}

/// Recomputes `I(aux;Z) − I(aux;Y)` from the solution joint and tests it
/// strictly against the channel's key rate.
pub fn key_rate_requirement(sol: &CapacitySolution, ch: &StateDmc) -> Result<(f64, bool)> {
    let joint = sol.joint(ch)?;
    let aux = sol.aux_label();
    let deficit = mutual_information(&joint, &[aux], &[AXIS_Z])? - mutual_information(&joint, &[aux], &[AXIS_Y])?;
    Ok((deficit, deficit < ch.key_rate_bits()))
}

/// Outcome of optimizing over one strategy map.
#[derive(Debug, Clone)]
struct MapOutcome {
    x: Vec<f64>,
    value: f64,
    gap: f64,
    iterations: usize,
    converged: bool,
    runs: usize,
    best_run: usize,
    nonconverged: usize,
    dual_gap: Option<f64>,
}

impl MapOutcome {
    fn single(r: FwResult) -> Self {
        Self {
            x: r.x,
            value: r.value,
            gap: r.gap,
            iterations: r.iterations,
            converged: r.converged,
            runs: 1,
            best_run: 0,
            nonconverged: usize::from(!r.converged),
            dual_gap: None,
        }
    }
}

#[cfg(feature = "parallel")]
fn map_each<T: Sync, R: Send>(items: &[T], f: impl Fn(usize, &T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_each<T, R>(items: &[T], f: impl Fn(usize, &T) -> R) -> Vec<R> {
    items.iter().enumerate().map(|(i, t)| f(i, t)).collect()
}

fn fw_options(opts: &SolverOptions, concave: bool) -> FwOptions {
    FwOptions { max_iter: opts.max_iter, gap_tol: opts.gap_tol_nats, concave }
}

fn uniform_weights(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

/// Solves the causal problem for one map under `P_Z = Q0`.
fn causal_map(pr: &MapProblem, opts: &SolverOptions) -> Result<Option<MapOutcome>> {
    let verts = pr.vertices(true, opts.vertex_budget)?;
    if verts.is_empty() {
        return Ok(None);
    }
    let start = Start::Weights(uniform_weights(verts.len()));
    let r = maximize(&RateObjective(pr), &verts, start, fw_options(opts, true));
    Ok(Some(MapOutcome::single(r)))
}

/// Relaxed covertness `D(P_Z‖Q0) ≤ a` by bisection on the Lagrange
/// multiplier of the divergence constraint. `inner(λ, warm)` maximizes
/// `rate − λ D` over the cost polytope.
fn dual_solve(pr: &MapProblem, a: f64, mut inner: impl FnMut(f64, Option<&[f64]>) -> FwResult) -> Option<MapOutcome> {
    let mut iterations = 0;
    let mut run = |lambda: f64, warm: Option<&[f64]>| {
        let r = inner(lambda, warm);
        iterations += r.iterations;
        let rate = pr.rate_nats(&r.x);
        let d = pr.covert_divergence(&r.x);
        (r, rate, d)
    };
    let mut dual_min = f64::INFINITY;

    let (r0, rate0, d0) = run(0.0, None);
    dual_min = dual_min.min(rate0 + 0.0);
    if d0 <= a {
        let mut out = MapOutcome::single(r0);
        out.value = rate0;
        out.dual_gap = Some(0.0);
        out.iterations = iterations;
        return Some(out);
    }

    let mut lo = 0.0;
    let mut lo_r = r0;
    let mut hi = 1.0;
    let (mut hi_r, mut best_rate);
    loop {
        let warm = lo_r.weights.clone();
        let (r, rate, d) = run(hi, warm.as_deref());
        dual_min = dual_min.min(rate + hi * (a - d));
        if d <= a {
            best_rate = rate;
            hi_r = r;
            break;
        }
        lo = hi;
        lo_r = r;
        hi *= 4.0;
        if hi > 1e12 {
            return None;
        }
    }
    let mut best_x = hi_r.x.clone();
    for _ in 0..80 {
        if hi - lo <= 1e-12 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let warm = hi_r.weights.clone();
        let (r, rate, d) = run(mid, warm.as_deref());
        dual_min = dual_min.min(rate + mid * (a - d));
        if d <= a {
            if rate > best_rate {
                best_rate = rate;
                best_x = r.x.clone();
            }
            hi = mid;
            hi_r = r;
        } else {
            lo = mid;
            lo_r = r;
        }
    }

    // Mix the last infeasible and feasible maximizers up to the divergence
    // boundary; concavity of the rate makes the mixture at least as good as
    // the interpolation of their rates.
    let mix = |t: f64| -> Vec<f64> { lo_r.x.iter().zip(&hi_r.x).map(|(l, h)| t * l + (1.0 - t) * h).collect() };
    let (mut t_lo, mut t_hi) = (0.0, 1.0);
    for _ in 0..60 {
        let t = 0.5 * (t_lo + t_hi);
        if pr.covert_divergence(&mix(t)) <= a {
            t_lo = t;
        } else {
            t_hi = t;
        }
    }
    let xm = mix(t_lo);
    let rate_m = pr.rate_nats(&xm);
    if rate_m > best_rate {
        best_rate = rate_m;
        best_x = xm;
    }

    Some(MapOutcome {
        x: best_x,
        value: best_rate,
        gap: hi_r.gap,
        iterations,
        converged: hi_r.converged,
        runs: 1,
        best_run: 0,
        nonconverged: usize::from(!hi_r.converged),
        dual_gap: Some((dual_min - best_rate).max(0.0)),
    })
}

fn causal_map_relaxed(pr: &MapProblem, a: f64, opts: &SolverOptions) -> Result<Option<MapOutcome>> {
    let verts = pr.vertices(false, opts.vertex_budget)?;
    if verts.is_empty() {
        return Ok(None);
    }
    let fw = fw_options(opts, true);
    Ok(dual_solve(pr, a, |lambda, warm| {
        let w = warm.map(<[f64]>::to_vec).unwrap_or_else(|| uniform_weights(verts.len()));
        maximize(&Penalized { problem: pr, lambda }, &verts, Start::Weights(w), fw)
    }))
}

/// Maximizes `I(V;Y)` over `P_V` for a fixed map subject to
/// `D(P_Z‖Q0) ≤ a` (equality `P_Z = Q0` when `a = 0`) and `E[b(X)] ≤ b`.
/// Returns `P_V` and the rate in bits.
pub fn causal_inner(ch: &StateDmc, map: &StrategyMap, a: f64, b: f64) -> Result<(Pmf, f64)> {
    causal_inner_with(ch, map, a, b, &SolverOptions::default())
}

pub fn causal_inner_with(ch: &StateDmc, map: &StrategyMap, a: f64, b: f64, opts: &SolverOptions) -> Result<(Pmf, f64)> {
    if !(a >= 0.0) {
        return Err(Error::Parameter("covertness budget must be nonnegative".into()));
    }
    if map.ns() != ch.ns() || map.nx() != ch.nx() {
        return Err(Error::Shape("strategy map does not match the channel".into()));
    }
    let ch = ch.clone().with_budget(b)?;
    // Solve on the canonical representative so relabelled maps agree exactly.
    let canon = map.canonical();
    let order = map.canonical_order();
    let pr = MapProblem::causal(&ch, &canon);
    let out = if a == 0.0 { causal_map(&pr, opts)? } else { causal_map_relaxed(&pr, a, opts)? };
    let out = out.ok_or(Error::Infeasible)?;
    let mut p = vec![0.0; map.aux_size()];
    for (pos, &orig) in order.iter().enumerate() {
        p[orig] = out.x[pos];
    }
    Ok((Pmf::from_weights(p)?, nats_to_bits(out.value).max(0.0)))
}

fn best_of(outcomes: Vec<Result<Option<MapOutcome>>>) -> Result<(usize, usize, MapOutcome, usize, usize)> {
    let mut best: Option<(usize, MapOutcome)> = None;
    let mut feasible = 0;
    let mut iterations = 0;
    let mut nonconverged = 0;
    for (i, o) in outcomes.into_iter().enumerate() {
        let Some(o) = o? else { continue };
        feasible += 1;
        iterations += o.iterations;
        nonconverged += o.nonconverged;
        if best.as_ref().is_none_or(|(_, b)| o.value > b.value) {
            best = Some((i, o));
        }
    }
    let (idx, out) = best.ok_or(Error::Infeasible)?;
    Ok((idx, feasible, out, iterations, nonconverged))
}

fn finish(
    ch: &StateDmc,
    mode: Mode,
    map: StrategyMap,
    aux: AuxDistribution,
    out: &MapOutcome,
    diagnostics: Diagnostics,
) -> Result<CapacitySolution> {
    let mut sol = CapacitySolution {
        mode,
        rate_bits: nats_to_bits(out.value).max(0.0),
        aux,
        map,
        key_deficit_bits: 0.0,
        key_feasible: false,
        cost_used: 0.0,
        covert_residual_nats: 0.0,
        diagnostics,
    };
    let (cost, resid) = cost_and_covert_residuals(&sol.joint(ch)?, ch)?;
    sol.cost_used = cost;
    sol.covert_residual_nats = resid;
    let (deficit, feasible) = key_rate_requirement(&sol, ch)?;
    sol.key_deficit_bits = deficit;
    sol.key_feasible = feasible;
    Ok(sol)
}

/// Causal-CSI covert capacity lower bound (`A = 0`).
pub fn causal_capacity(ch: &StateDmc, opts: &SolverOptions) -> Result<CapacitySolution> {
    causal_capacity_relaxed(ch, 0.0, opts)
}

/// `C_c(A, B)` with `B` taken from the channel.
pub fn causal_capacity_relaxed(ch: &StateDmc, a: f64, opts: &SolverOptions) -> Result<CapacitySolution> {
    let aux = aux_size(ch, Mode::Causal, opts.aux_bound);
    let maps = canonical_maps(ch.nx(), ch.ns(), aux, opts.map_budget)?;
    let outcomes = map_each(&maps, |_, map| {
        let pr = MapProblem::causal(ch, map);
        if a == 0.0 {
            causal_map(&pr, opts)
        } else {
            causal_map_relaxed(&pr, a, opts)
        }
    });
    let (idx, feasible, out, iterations, nonconverged) = best_of(outcomes)?;
    let diagnostics = Diagnostics {
        maps_enumerated: maps.len(),
        maps_feasible: feasible,
        best_map_index: idx,
        iterations,
        restarts: 1,
        restarts_to_best: None,
        nonconverged_runs: nonconverged,
        fw_gap_nats: out.gap,
        dual_gap_nats: out.dual_gap,
        oracle_gap_bits: None,
    };
    let p_v = Pmf::from_weights(out.x.clone())?;
    finish(ch, Mode::Causal, maps[idx].clone(), AuxDistribution::Causal(p_v), &out, diagnostics)
}

/// Places a causal solution into a noncausal map with at least as many aux
/// symbols, as the state-independent `P_{U|S}(u|s) = P_V(v)`.
fn lift_causal(causal: &CapacitySolution, map: &StrategyMap, ns: usize) -> Option<Vec<f64>> {
    let AuxDistribution::Causal(p_v) = &causal.aux else { return None };
    let na = map.aux_size();
    let mut used = vec![false; na];
    let mut row = vec![0.0; na];
    for v in p_v.support() {
        let u = (0..na).find(|&u| !used[u] && map.row(u) == causal.map.row(v))?;
        used[u] = true;
        row[u] = p_v[v];
    }
    Some((0..ns).flat_map(|_| row.iter().copied()).collect())
}

fn dirichlet_weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let t: f64 = w.iter().sum();
    w.into_iter().map(|v| v / t).collect()
}

/// Multi-start local ascent of `objective` over `verts`: the optional point
/// start first, then `restarts` Dirichlet(1) mixtures of the vertices.
fn multistart<O: crate::optimize::Objective>(
    objective: &O,
    verts: &[Vec<f64>],
    point: Option<&[f64]>,
    restarts: usize,
    rng: &mut ChaCha8Rng,
    fw: FwOptions,
) -> MapOutcome {
    let mut best: Option<MapOutcome> = None;
    let mut runs = 0;
    let mut nonconverged = 0;
    let mut iterations = 0;
    let mut consider = |r: FwResult, run: usize, best: &mut Option<MapOutcome>| {
        iterations += r.iterations;
        if !r.converged {
            nonconverged += 1;
        }
        if best.as_ref().is_none_or(|b| r.value > b.value) {
            let mut o = MapOutcome::single(r);
            o.best_run = run;
            *best = Some(o);
        }
    };
    if let Some(p) = point {
        consider(maximize(objective, verts, Start::Point(p), fw), runs, &mut best);
        runs += 1;
    }
    for _ in 0..restarts {
        let w = dirichlet_weights(rng, verts.len());
        consider(maximize(objective, verts, Start::Weights(w), fw), runs, &mut best);
        runs += 1;
    }
    let mut out = best.expect("at least one start");
    out.runs = runs;
    out.iterations = iterations;
    out.nonconverged = nonconverged;
    out
}

fn map_rng(seed: u64, map_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(map_index as u64);
    rng
}

fn noncausal_map(
    pr: &MapProblem,
    map: &StrategyMap,
    map_index: usize,
    lift: Option<&CapacitySolution>,
    ns: usize,
    opts: &SolverOptions,
) -> Result<Option<MapOutcome>> {
    let verts = pr.vertices(true, opts.vertex_budget)?;
    if verts.is_empty() {
        return Ok(None);
    }
    let lifted = lift.and_then(|c| lift_causal(c, map, ns));
    let mut rng = map_rng(opts.seed, map_index);
    let fw = fw_options(opts, false);
    Ok(Some(multistart(&RateObjective(pr), &verts, lifted.as_deref(), opts.restarts, &mut rng, fw)))
}

fn noncausal_map_relaxed(
    pr: &MapProblem,
    map: &StrategyMap,
    map_index: usize,
    a: f64,
    lift: Option<&CapacitySolution>,
    ns: usize,
    opts: &SolverOptions,
) -> Result<Option<MapOutcome>> {
    let verts = pr.vertices(false, opts.vertex_budget)?;
    if verts.is_empty() {
        return Ok(None);
    }
    let lifted = lift.and_then(|c| lift_causal(c, map, ns));
    let fw = fw_options(opts, false);
    let restarts = (opts.restarts / 4).max(1);
    Ok(dual_solve(pr, a, |lambda, _| {
        // same seed for every multiplier keeps the dual function consistent
        let mut rng = map_rng(opts.seed, map_index);
        let o = multistart(&Penalized { problem: pr, lambda }, &verts, lifted.as_deref(), restarts, &mut rng, fw);
        FwResult { x: o.x, weights: None, value: o.value, gap: o.gap, iterations: o.iterations, converged: o.converged }
    }))
}

/// Noncausal-CSI covert capacity lower bound (`A = 0`).
pub fn noncausal_capacity(ch: &StateDmc, opts: &SolverOptions) -> Result<CapacitySolution> {
    noncausal_capacity_relaxed(ch, 0.0, opts)
}

/// `C_nc(A, B)` with `B` taken from the channel.
pub fn noncausal_capacity_relaxed(ch: &StateDmc, a: f64, opts: &SolverOptions) -> Result<CapacitySolution> {
    let aux = aux_size(ch, Mode::Noncausal, opts.aux_bound);
    let maps = canonical_maps(ch.nx(), ch.ns(), aux, opts.map_budget)?;

    // The causal optimum, lifted to a state-independent P_{U|S}, seeds the
    // search so the noncausal value never falls below the causal one.
    let causal_opts =
        SolverOptions { aux_bound: AuxBound::Fixed(aux_size(ch, Mode::Causal, opts.aux_bound).min(aux)), ..*opts };
    let causal = causal_capacity_relaxed(ch, a, &causal_opts).ok();

    let ns = ch.ns();
    let outcomes = map_each(&maps, |i, map| {
        let pr = MapProblem::noncausal(ch, map);
        if a == 0.0 {
            noncausal_map(&pr, map, i, causal.as_ref(), ns, opts)
        } else {
            noncausal_map_relaxed(&pr, map, i, a, causal.as_ref(), ns, opts)
        }
    });
    let (idx, feasible, out, iterations, nonconverged) = best_of(outcomes)?;
    let diagnostics = Diagnostics {
        maps_enumerated: maps.len(),
        maps_feasible: feasible,
        best_map_index: idx,
        iterations,
        restarts: out.runs,
        restarts_to_best: Some(out.best_run),
        nonconverged_runs: nonconverged,
        fw_gap_nats: out.gap,
        dual_gap_nats: out.dual_gap,
        oracle_gap_bits: None,
    };
    let mut rows = Vec::with_capacity(ns);
    for s in 0..ns {
        let row = &out.x[s * aux..(s + 1) * aux];
        let t: f64 = row.iter().sum();
        rows.push(if t > 0.0 { row.iter().map(|v| v / t).collect() } else { Pmf::uniform(aux).into_vec() });
    }
    let q = ConditionalPmf::from_rows(rows)?;
    finish(ch, Mode::Noncausal, maps[idx].clone(), AuxDistribution::Noncausal(q), &out, diagnostics)
}

/// Dispatches on `mode`.
pub fn capacity(ch: &StateDmc, mode: Mode, opts: &SolverOptions) -> Result<CapacitySolution> {
    match mode {
        Mode::Causal => causal_capacity(ch, opts),
        Mode::Noncausal => noncausal_capacity(ch, opts),
    }
}
