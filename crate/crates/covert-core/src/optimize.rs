//! Conditional-gradient ascent over a polytope given by its vertex list.
//!
//! For concave objectives the away-step variant is used and the Frank–Wolfe
//! gap `max_v ∇f·(v − x)` certifies `f* − f(x)`. Non-concave objectives get
//! plain conditional-gradient steps with a sampled line search, which only
//! guarantees a stationary point.

use alloc::vec;
use alloc::vec::Vec;

/// Smooth objective on the feasible polytope, in nats.
///
/// Gradient entries may be `+∞` at boundary points where moving inward has
/// unbounded slope (entropy-like terms at zero mass).
pub trait Objective {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], grad: &mut [f64]);
}

#[derive(Debug, Clone, Copy)]
pub struct FwOptions {
    pub max_iter: usize,
    pub gap_tol: f64,
    pub concave: bool,
}

impl Default for FwOptions {
    fn default() -> Self {
        Self { max_iter: 20_000, gap_tol: 1e-7, concave: true }
    }
}

#[derive(Debug, Clone)]
pub struct FwResult {
    pub x: Vec<f64>,
    /// Final vertex weights when started from weights.
    pub weights: Option<Vec<f64>>,
    pub value: f64,
    /// Last Frank–Wolfe gap; an optimality certificate when concave.
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub enum Start<'a> {
    /// Convex weights over the vertex list; enables away steps.
    Weights(Vec<f64>),
    /// Any feasible point.
    Point(&'a [f64]),
}

/// `g·v` skipping coordinates where `v` vanishes, so infinite slopes only
/// count where the direction actually moves.
fn dot(g: &[f64], v: &[f64]) -> f64 {
    g.iter().zip(v).filter(|(_, &vi)| vi != 0.0).map(|(gi, vi)| gi * vi).sum()
}

fn combine(x: &[f64], d: &[f64], t: f64, out: &mut [f64]) {
    for ((o, a), b) in out.iter_mut().zip(x).zip(d) {
        *o = (a + t * b).max(0.0);
    }
}

pub fn maximize<O: Objective>(obj: &O, vertices: &[Vec<f64>], start: Start<'_>, opts: FwOptions) -> FwResult {
    assert!(!vertices.is_empty(), "maximize over an empty polytope");
    let dim = vertices[0].len();
    let (mut x, mut weights) = match start {
        Start::Weights(w) => {
            let mut x = vec![0.0; dim];
            for (v, &wi) in vertices.iter().zip(&w) {
                for (xi, vi) in x.iter_mut().zip(v) {
                    *xi += wi * vi;
                }
            }
            (x, Some(w))
        }
        Start::Point(p) => (p.to_vec(), None),
    };
    let use_away = weights.is_some();

    let mut grad = vec![0.0; dim];
    let mut dir = vec![0.0; dim];
    let mut trial = vec![0.0; dim];
    let mut scores = vec![0.0; vertices.len()];
    let mut gap = f64::INFINITY;
    let mut value = obj.value(&x);
    let mut stalled = 0usize;

    let mut iterations = 0;
    for it in 0..opts.max_iter {
        iterations = it + 1;
        obj.gradient(&x, &mut grad);
        for (s, v) in scores.iter_mut().zip(vertices) {
            *s = dot(&grad, v);
        }
        let gx = dot(&grad, &x);
        let (fw, &fw_score) = scores
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(core::cmp::Ordering::Equal))
            .unwrap();
        gap = fw_score - gx;
        if !gap.is_nan() && gap <= opts.gap_tol {
            return FwResult { x, weights, value, gap: gap.max(0.0), iterations: it, converged: true };
        }

        // Away candidate: worst active vertex.
        let mut away: Option<(usize, f64)> = None;
        if use_away {
            let w = weights.as_ref().unwrap();
            for (j, &wj) in w.iter().enumerate() {
                if wj > 0.0 && away.is_none_or(|(_, s)| scores[j] < s) {
                    away = Some((j, scores[j]));
                }
            }
        }
        let away_step = match away {
            Some((_, s)) => gx - s > gap || gap.is_nan() && (gx - s) > 0.0,
            None => false,
        };

        let max_step;
        if away_step {
            let (a, _) = away.unwrap();
            let wa = weights.as_ref().unwrap()[a];
            for ((d, xi), vi) in dir.iter_mut().zip(&x).zip(&vertices[a]) {
                *d = xi - vi;
            }
            max_step = if wa < 1.0 { wa / (1.0 - wa) } else { 0.0 };
        } else {
            for ((d, xi), vi) in dir.iter_mut().zip(&x).zip(&vertices[fw]) {
                *d = vi - xi;
            }
            max_step = 1.0;
        }

        let step = if opts.concave {
            concave_line_search(obj, &x, &dir, max_step, &mut grad, &mut trial)
        } else {
            sampled_line_search(obj, &x, &dir, max_step, value, &mut trial)
        };
        if step <= 0.0 {
            // No numerically resolvable ascent along the chosen direction.
            break;
        }
        combine(&x.clone(), &dir, step, &mut x);
        let new_value = obj.value(&x);
        if !opts.concave && new_value - value <= 1e-15 * value.abs().max(1.0) {
            stalled += 1;
            if stalled > 20 {
                value = new_value.max(value);
                break;
            }
        } else {
            stalled = 0;
        }
        value = new_value;

        if let Some(w) = weights.as_mut() {
            if away_step {
                let (a, _) = away.unwrap();
                for wi in w.iter_mut() {
                    *wi *= 1.0 + step;
                }
                w[a] -= step;
                if step >= max_step {
                    w[a] = 0.0;
                }
            } else {
                for wi in w.iter_mut() {
                    *wi *= 1.0 - step;
                }
                w[fw] += step;
            }
            for wi in w.iter_mut() {
                if *wi < 1e-16 {
                    *wi = 0.0;
                }
            }
        }
    }
    let converged = gap <= opts.gap_tol;
    FwResult { x, weights, value, gap, iterations, converged }
}

/// Bisection on the directional derivative of a concave `φ(t) = f(x + t d)`.
fn concave_line_search<O: Objective>(
    obj: &O,
    x: &[f64],
    d: &[f64],
    max_step: f64,
    grad: &mut [f64],
    trial: &mut [f64],
) -> f64 {
    if max_step <= 0.0 {
        return 0.0;
    }
    let slope = |t: f64, grad: &mut [f64], trial: &mut [f64]| {
        combine(x, d, t, trial);
        obj.gradient(trial, grad);
        dot(grad, d)
    };
    if slope(max_step, grad, trial) >= 0.0 {
        return max_step;
    }
    let (mut lo, mut hi) = (0.0, max_step);
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let s = slope(mid, grad, trial);
        if s.is_nan() || s > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Grid scan then golden-section refinement around the best sample.
fn sampled_line_search<O: Objective>(obj: &O, x: &[f64], d: &[f64], max_step: f64, f0: f64, trial: &mut [f64]) -> f64 {
    if max_step <= 0.0 {
        return 0.0;
    }
    const SAMPLES: usize = 16;
    let eval = |t: f64, trial: &mut [f64]| {
        combine(x, d, t, trial);
        obj.value(trial)
    };
    let h = max_step / SAMPLES as f64;
    let (mut best_t, mut best_f) = (0.0, f0);
    for k in 1..=SAMPLES {
        let t = h * k as f64;
        let f = eval(t, trial);
        if f > best_f {
            best_t = t;
            best_f = f;
        }
    }
    // Also probe small steps, where the first-order gain lives near a local optimum.
    let mut t = h;
    for _ in 0..30 {
        t *= 0.25;
        let f = eval(t, trial);
        if f > best_f {
            best_t = t;
            best_f = f;
        }
    }
    let (mut a, mut b) = ((best_t - h).max(0.0), (best_t + h).min(max_step));
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut e = a + phi * (b - a);
    let (mut fc, mut fe) = (eval(c, trial), eval(e, trial));
    for _ in 0..60 {
        if fc >= fe {
            b = e;
            e = c;
            fe = fc;
            c = b - phi * (b - a);
            fc = eval(c, trial);
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + phi * (b - a);
            fe = eval(e, trial);
        }
    }
    for (t, f) in [(c, fc), (e, fe)] {
        if f > best_f {
            best_t = t;
            best_f = f;
        }
    }
    if best_f > f0 {
        best_t
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Negative squared distance to a target point.
    struct Quad(Vec<f64>);

    impl Objective for Quad {
        fn value(&self, x: &[f64]) -> f64 {
            -x.iter().zip(&self.0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
        }
        fn gradient(&self, x: &[f64], g: &mut [f64]) {
            for ((gi, a), b) in g.iter_mut().zip(x).zip(&self.0) {
                *gi = -2.0 * (a - b);
            }
        }
    }

    fn simplex(n: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| {
                let mut v = vec![0.0; n];
                v[i] = 1.0;
                v
            })
            .collect()
    }

    #[test]
    fn away_steps_reach_face_optimum() {
        // target outside the simplex; projection is (0.5, 0.5, 0)
        let obj = Quad(vec![0.7, 0.7, -0.4]);
        let r = maximize(&obj, &simplex(3), Start::Weights(vec![1.0 / 3.0; 3]), FwOptions::default());
        assert!(r.converged);
        assert!((r.x[0] - 0.5).abs() < 1e-6 && r.x[2] < 1e-9, "{:?}", r.x);
    }

    #[test]
    fn nonconcave_mode_improves_from_point() {
        let obj = Quad(vec![0.2, 0.3, 0.5]);
        let start = [1.0, 0.0, 0.0];
        let opts = FwOptions { concave: false, ..FwOptions::default() };
        let r = maximize(&obj, &simplex(3), Start::Point(&start), opts);
        assert!(r.value > -1e-6);
    }
}
