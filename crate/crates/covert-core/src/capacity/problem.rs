//! Linear structure of the per-map optimization problems and the objectives
//! evaluated on it.
//!
//! Causal problems optimize `P_V` directly (one variable per aux symbol).
//! Noncausal problems optimize `P_{U|S}` flattened as `[s][u]`. In both cases
//! the induced `P(aux, y)`, `P_Z` and `E[b(X)]` are linear in the variables.

use alloc::vec;
use alloc::vec::Vec;

use crate::channel::{q0, StateDmc, StrategyMap};
use crate::error::Result;
use crate::linalg::polytope_vertices;
use crate::optimize::Objective;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Kind {
    Causal,
    Noncausal,
}

#[derive(Debug, Clone)]
pub(crate) struct MapProblem {
    pub kind: Kind,
    pub dim: usize,
    pub aux_size: usize,
    pub ns: usize,
    /// Aux symbol of each variable.
    pub aux_of: Vec<usize>,
    /// State of each variable (noncausal only).
    pub state_of: Vec<usize>,
    /// `P_S(s)` for each variable (noncausal only; 1 in the causal case).
    pub state_weight: Vec<f64>,
    /// Contribution of a unit of variable `j` to `P(aux_of[j], y)`.
    pub yrows: Vec<Vec<f64>>,
    /// Contribution of a unit of variable `j` to `P_Z`.
    pub zrows: Vec<Vec<f64>>,
    /// Contribution of a unit of variable `j` to `E[b(X)]`.
    pub cost: Vec<f64>,
    pub q0: Vec<f64>,
    pub budget: f64,
}

impl MapProblem {
    pub fn causal(ch: &StateDmc, map: &StrategyMap) -> Self {
        let na = map.aux_size();
        let ps = ch.state_dist().probs();
        let mut yrows = vec![vec![0.0; ch.ny()]; na];
        let mut zrows = vec![vec![0.0; ch.nz()]; na];
        let mut cost = vec![0.0; na];
        for v in 0..na {
            for (s, &p) in ps.iter().enumerate() {
                let x = map.get(v, s);
                for (acc, w) in yrows[v].iter_mut().zip(ch.y_row(s, x)) {
                    *acc += p * w;
                }
                for (acc, w) in zrows[v].iter_mut().zip(ch.z_row(s, x)) {
                    *acc += p * w;
                }
                cost[v] += p * ch.cost()[x];
            }
        }
        Self {
            kind: Kind::Causal,
            dim: na,
            aux_size: na,
            ns: ch.ns(),
            aux_of: (0..na).collect(),
            state_of: vec![0; na],
            state_weight: vec![1.0; na],
            yrows,
            zrows,
            cost,
            q0: q0(ch).into_vec(),
            budget: ch.budget(),
        }
    }

    pub fn noncausal(ch: &StateDmc, map: &StrategyMap) -> Self {
        let na = map.aux_size();
        let ns = ch.ns();
        let ps = ch.state_dist().probs();
        let dim = ns * na;
        let mut yrows = Vec::with_capacity(dim);
        let mut zrows = Vec::with_capacity(dim);
        let mut cost = Vec::with_capacity(dim);
        let mut aux_of = Vec::with_capacity(dim);
        let mut state_of = Vec::with_capacity(dim);
        let mut state_weight = Vec::with_capacity(dim);
        for s in 0..ns {
            for u in 0..na {
                let x = map.get(u, s);
                yrows.push(ch.y_row(s, x).iter().map(|w| ps[s] * w).collect());
                zrows.push(ch.z_row(s, x).iter().map(|w| ps[s] * w).collect());
                cost.push(ps[s] * ch.cost()[x]);
                aux_of.push(u);
                state_of.push(s);
                state_weight.push(ps[s]);
            }
        }
        Self {
            kind: Kind::Noncausal,
            dim,
            aux_size: na,
            ns,
            aux_of,
            state_of,
            state_weight,
            yrows,
            zrows,
            cost,
            q0: q0(ch).into_vec(),
            budget: ch.budget(),
        }
    }

    /// Rows that pin the variables to distributions: one simplex row
    /// (causal) or one per state (noncausal).
    fn simplex_rows(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        match self.kind {
            Kind::Causal => (vec![vec![1.0; self.dim]], vec![1.0]),
            Kind::Noncausal => {
                let rows = (0..self.ns)
                    .map(|s| (0..self.dim).map(|j| if self.state_of[j] == s { 1.0 } else { 0.0 }).collect())
                    .collect();
                (rows, vec![1.0; self.ns])
            }
        }
    }

    /// Whether the cost constraint can bind anywhere on the polytope.
    fn cost_active(&self) -> bool {
        if !self.budget.is_finite() {
            return false;
        }
        // Worst-case cost: the most expensive choice in every simplex block.
        let worst = match self.kind {
            Kind::Causal => self.cost.iter().cloned().fold(0.0, f64::max),
            Kind::Noncausal => (0..self.ns)
                .map(|s| (0..self.dim).filter(|&j| self.state_of[j] == s).map(|j| self.cost[j]).fold(0.0, f64::max))
                .sum(),
        };
        worst > self.budget
    }

    /// Vertices of the feasible polytope. With `covert_equality` the warden
    /// marginal is pinned to `Q0`; otherwise only variables that would make
    /// `D(P_Z‖Q0)` infinite are pinned to zero.
    pub fn vertices(&self, covert_equality: bool, budget: u128) -> Result<Vec<Vec<f64>>> {
        let (mut rows, mut rhs) = self.simplex_rows();
        if covert_equality {
            for (z, &q) in self.q0.iter().enumerate() {
                rows.push(self.zrows.iter().map(|r| r[z]).collect());
                rhs.push(q);
            }
        } else {
            for j in 0..self.dim {
                let blocked = self.zrows[j].iter().zip(&self.q0).any(|(&w, &q)| w > 0.0 && q <= 0.0);
                if blocked {
                    let mut r = vec![0.0; self.dim];
                    r[j] = 1.0;
                    rows.push(r);
                    rhs.push(0.0);
                }
            }
        }
        let with_cost = self.cost_active();
        if with_cost {
            for r in rows.iter_mut() {
                r.push(0.0);
            }
            let mut r = self.cost.clone();
            r.push(1.0);
            rows.push(r);
            rhs.push(self.budget);
        }
        let mut verts = polytope_vertices(&rows, &rhs, budget)?;
        if with_cost {
            for v in verts.iter_mut() {
                v.pop();
            }
        }
        Ok(verts)
    }

    pub fn warden_marginal(&self, x: &[f64]) -> Vec<f64> {
        let mut pz = vec![0.0; self.q0.len()];
        for (row, &xj) in self.zrows.iter().zip(x) {
            if xj > 0.0 {
                for (acc, w) in pz.iter_mut().zip(row) {
                    *acc += xj * w;
                }
            }
        }
        pz
    }

    pub fn covert_divergence(&self, x: &[f64]) -> f64 {
        crate::probability::kl_divergence(&self.warden_marginal(x), &self.q0)
    }

    /// `P(aux, y)` flat `[aux][y]` and `P(y)`.
    fn aux_output(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let ny = self.yrows[0].len();
        let mut pay = vec![0.0; self.aux_size * ny];
        let mut py = vec![0.0; ny];
        for (j, row) in self.yrows.iter().enumerate() {
            let xj = x[j];
            if xj > 0.0 {
                let base = self.aux_of[j] * ny;
                for (y, w) in row.iter().enumerate() {
                    pay[base + y] += xj * w;
                    py[y] += xj * w;
                }
            }
        }
        (pay, py)
    }

    /// Rate objective in nats: `I(V;Y)` (causal) or `I(U;Y) − I(U;S)`.
    pub fn rate_nats(&self, x: &[f64]) -> f64 {
        RateObjective(self).value(x)
    }
}

fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        p * p.ln()
    } else {
        0.0
    }
}

/// The achievable-rate objective of a [`MapProblem`].
pub(crate) struct RateObjective<'a>(pub &'a MapProblem);

impl Objective for RateObjective<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        let pr = self.0;
        let (pay, py) = pr.aux_output(x);
        match pr.kind {
            Kind::Causal => {
                // I(V;Y) = H(Y) − H(Y|V)
                let hy: f64 = -py.iter().map(|&p| plogp(p)).sum::<f64>();
                let hyv: f64 =
                    pr.yrows.iter().zip(x).map(|(row, &xv)| -xv * row.iter().map(|&w| plogp(w)).sum::<f64>()).sum();
                hy - hyv
            }
            Kind::Noncausal => {
                // H(U|S) + H(Y) − H(U,Y)
                let hus: f64 = -pr.state_weight.iter().zip(x).map(|(&ps, &q)| ps * plogp(q)).sum::<f64>();
                let hy: f64 = -py.iter().map(|&p| plogp(p)).sum::<f64>();
                let huy: f64 = -pay.iter().map(|&p| plogp(p)).sum::<f64>();
                hus + hy - huy
            }
        }
    }

    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        let pr = self.0;
        let (pay, py) = pr.aux_output(x);
        let ny = py.len();
        match pr.kind {
            Kind::Causal => {
                for (j, row) in pr.yrows.iter().enumerate() {
                    let mut d = 0.0;
                    for (y, &w) in row.iter().enumerate() {
                        if w > 0.0 {
                            d += if py[y] > 0.0 { w * (w / py[y]).ln() } else { f64::INFINITY };
                        }
                    }
                    grad[j] = d - 1.0;
                }
            }
            Kind::Noncausal => {
                for (j, row) in pr.yrows.iter().enumerate() {
                    let ps = pr.state_weight[j];
                    if ps <= 0.0 {
                        grad[j] = 0.0;
                        continue;
                    }
                    let base = pr.aux_of[j] * ny;
                    let q = x[j];
                    let mut acc = -ps;
                    for (y, &w) in row.iter().enumerate() {
                        if w <= 0.0 {
                            continue;
                        }
                        // ratio = P(u,y) / q(u|s), with its limit at q = 0
                        let puy = pay[base + y];
                        let ratio = if q > 0.0 {
                            puy / q
                        } else if puy > 0.0 {
                            f64::INFINITY
                        } else {
                            w
                        };
                        acc += w * (ratio / py[y].max(f64::MIN_POSITIVE)).ln();
                    }
                    grad[j] = acc;
                }
            }
        }
    }
}

/// `rate − λ·D(P_Z‖Q0)` for the relaxed-covertness surface.
pub(crate) struct Penalized<'a> {
    pub problem: &'a MapProblem,
    pub lambda: f64,
}

impl Objective for Penalized<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        RateObjective(self.problem).value(x) - self.lambda * self.problem.covert_divergence(x)
    }

    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        RateObjective(self.problem).gradient(x, grad);
        if self.lambda == 0.0 {
            return;
        }
        let pz = self.problem.warden_marginal(x);
        for (j, row) in self.problem.zrows.iter().enumerate() {
            let mut d = 0.0;
            for (z, &w) in row.iter().enumerate() {
                if w > 0.0 {
                    d += if pz[z] > 0.0 { w * ((pz[z] / self.problem.q0[z]).ln() + 1.0) } else { f64::NEG_INFINITY };
                }
            }
            grad[j] -= self.lambda * d;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{causal_joint, noncausal_joint, AXIS_S, AXIS_U, AXIS_V, AXIS_Y};
    use crate::examples::random_channel;
    use crate::probability::{bits_to_nats, mutual_information, ConditionalPmf, Pmf};

    fn finite_difference<O: Objective>(obj: &O, x: &[f64], j: usize, k: usize) -> f64 {
        // derivative along e_j − e_k, which stays on the simplex
        let h = 1e-6;
        let mut a = x.to_vec();
        let mut b = x.to_vec();
        a[j] += h;
        a[k] -= h;
        b[j] -= h;
        b[k] += h;
        (obj.value(&a) - obj.value(&b)) / (2.0 * h)
    }

    #[test]
    fn causal_objective_matches_joint_and_fd() {
        let ch = random_channel(7, 2, 2, 3, 2);
        let map = StrategyMap::new(3, 2, 2, vec![0, 1, 1, 0, 1, 1]).unwrap();
        let pr = MapProblem::causal(&ch, &map);
        let x = [0.2, 0.5, 0.3];
        let j = causal_joint(&ch, &Pmf::new(x.to_vec()).unwrap(), &map).unwrap();
        let direct = bits_to_nats(mutual_information(&j, &[AXIS_V], &[AXIS_Y]).unwrap());
        assert!((pr.rate_nats(&x) - direct).abs() < 1e-13);

        let mut g = [0.0; 3];
        RateObjective(&pr).gradient(&x, &mut g);
        let fd = finite_difference(&RateObjective(&pr), &x, 0, 2);
        assert!((fd - (g[0] - g[2])).abs() < 1e-6, "{fd} vs {}", g[0] - g[2]);
    }

    #[test]
    fn noncausal_objective_matches_joint_and_fd() {
        let ch = random_channel(11, 2, 2, 2, 2);
        let map = StrategyMap::new(3, 2, 2, vec![0, 1, 1, 0, 1, 1]).unwrap();
        let pr = MapProblem::noncausal(&ch, &map);
        let q = ConditionalPmf::from_rows(vec![vec![0.2, 0.5, 0.3], vec![0.6, 0.1, 0.3]]).unwrap();
        let x = q.as_flat().to_vec();
        let j = noncausal_joint(&ch, &q, &map).unwrap();
        let direct = bits_to_nats(
            mutual_information(&j, &[AXIS_U], &[AXIS_Y]).unwrap()
                - mutual_information(&j, &[AXIS_U], &[AXIS_S]).unwrap(),
        );
        assert!((pr.rate_nats(&x) - direct).abs() < 1e-13);

        let mut g = [0.0; 6];
        RateObjective(&pr).gradient(&x, &mut g);
        for (a, b) in [(0, 1), (3, 5)] {
            let fd = finite_difference(&RateObjective(&pr), &x, a, b);
            assert!((fd - (g[a] - g[b])).abs() < 1e-6, "{fd} vs {}", g[a] - g[b]);
        }
    }

    #[test]
    fn noncausal_gradient_finite_for_empty_column() {
        let ch = random_channel(3, 2, 2, 2, 2);
        let map = StrategyMap::new(2, 2, 2, vec![0, 1, 1, 0]).unwrap();
        let pr = MapProblem::noncausal(&ch, &map);
        // aux symbol 1 unused in every state
        let x = [1.0, 0.0, 1.0, 0.0];
        let mut g = [0.0; 4];
        RateObjective(&pr).gradient(&x, &mut g);
        assert!(g.iter().all(|v| v.is_finite()));
        let fd = finite_difference(&RateObjective(&pr), &[1.0 - 1e-5, 1e-5, 1.0, 0.0], 1, 0);
        assert!((fd - (g[1] - g[0])).abs() < 1e-2);
    }

    #[test]
    fn penalized_gradient_fd() {
        let ch = random_channel(5, 2, 2, 2, 3);
        let map = StrategyMap::new(3, 2, 2, vec![0, 1, 1, 0, 1, 1]).unwrap();
        let pr = MapProblem::causal(&ch, &map);
        let obj = Penalized { problem: &pr, lambda: 2.5 };
        let x = [0.3, 0.3, 0.4];
        let mut g = [0.0; 3];
        obj.gradient(&x, &mut g);
        let fd = finite_difference(&obj, &x, 1, 2);
        assert!((fd - (g[1] - g[2])).abs() < 1e-6);
    }
}
