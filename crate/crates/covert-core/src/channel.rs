//! State-dependent discrete memoryless channels, strategy maps, and the joint
//! distributions they induce.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::probability::{kl_divergence, ConditionalPmf, JointPmf, Pmf, SIMPLEX_TOL};

/// Row-sum tolerance for ingested channel files. Rows inside it are rescaled.
pub const INGEST_TOL: f64 = 1e-9;

pub const AXIS_V: &str = "V";
pub const AXIS_U: &str = "U";
pub const AXIS_S: &str = "S";
pub const AXIS_X: &str = "X";
pub const AXIS_Y: &str = "Y";
pub const AXIS_Z: &str = "Z";

/// Unchecked channel description, as read from a channel-spec file.
///
/// `law` is flat in `[s][x][y][z]` order.
#[derive(Debug, Clone, PartialEq)]
pub struct RawChannel {
    pub nx: usize,
    pub ns: usize,
    pub ny: usize,
    pub nz: usize,
    pub x0: usize,
    pub p_s: Vec<f64>,
    pub law: Vec<f64>,
    pub cost: Vec<f64>,
    pub budget: f64,
    pub key_rate_bits: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RowIssue {
    /// `P(y,z|s,x)` is negative or not finite.
    BadEntry { s: usize, x: usize, y: usize, z: usize, value: f64 },
    /// Row mass outside the ingest tolerance.
    Mass { s: usize, x: usize, sum: f64 },
}

/// Outcome of semantic validation. Semantic problems are reported here, never
/// raised.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub row_issues: Vec<RowIssue>,
    pub state_issue: Option<String>,
    pub other_issues: Vec<String>,
    /// `(s, x)` rows that were rescaled because they were within tolerance.
    pub renormalized_rows: Vec<(usize, usize)>,
    pub state_renormalized: bool,
    /// Warden outputs `z` with `Q0(z) = 0`.
    pub missing_outputs: Vec<usize>,
    /// Inputs that reach an output outside `supp(Q0)` under some state of
    /// positive probability. They must be used with probability zero.
    pub forbidden_inputs: Vec<usize>,
}

impl ValidationReport {
    /// Problems that prevent constructing a [`StateDmc`].
    pub fn has_semantic_errors(&self) -> bool {
        !self.row_issues.is_empty() || self.state_issue.is_some() || !self.other_issues.is_empty()
    }

    pub fn support_ok(&self) -> bool {
        self.missing_outputs.is_empty()
    }

    pub fn is_valid(&self) -> bool {
        !self.has_semantic_errors() && self.support_ok()
    }

    pub fn lines(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(s) = &self.state_issue {
            out.push(format!("error: P_S {s}"));
        }
        for issue in &self.row_issues {
            out.push(match issue {
                RowIssue::BadEntry { s, x, y, z, value } => {
                    format!("error: law[s={s}][x={x}][y={y}][z={z}] = {value} is not a probability")
                }
                RowIssue::Mass { s, x, sum } => format!("error: law row (s={s}, x={x}) sums to {sum:.17}"),
            });
        }
        for o in &self.other_issues {
            out.push(format!("error: {o}"));
        }
        if self.state_renormalized {
            out.push("note: P_S rescaled to unit mass".into());
        }
        for (s, x) in &self.renormalized_rows {
            out.push(format!("note: law row (s={s}, x={x}) rescaled to unit mass"));
        }
        if !self.missing_outputs.is_empty() {
            out.push(format!("error: supp(Q0) misses warden outputs {:?}", self.missing_outputs));
        }
        for x in &self.forbidden_inputs {
            out.push(format!("warning: input {x} is FORBIDDEN (reaches an output outside supp(Q0))"));
        }
        out
    }
}

impl RawChannel {
    fn check_shape(&self) -> Result<()> {
        let dims = [("nx", self.nx), ("ns", self.ns), ("ny", self.ny), ("nz", self.nz)];
        for (name, d) in dims {
            if d == 0 {
                return Err(Error::Shape(format!("{name} must be positive")));
            }
        }
        if self.x0 >= self.nx {
            return Err(Error::Shape(format!("x0 = {} is not an input index (nx = {})", self.x0, self.nx)));
        }
        if self.p_s.len() != self.ns {
            return Err(Error::Shape(format!("P_S has {} entries, ns = {}", self.p_s.len(), self.ns)));
        }
        if self.cost.len() != self.nx {
            return Err(Error::Shape(format!("cost has {} entries, nx = {}", self.cost.len(), self.nx)));
        }
        let expect = self.ns * self.nx * self.ny * self.nz;
        if self.law.len() != expect {
            return Err(Error::Shape(format!("law has {} entries, expected {expect}", self.law.len())));
        }
        Ok(())
    }

    /// Semantic validation. Only shape mismatches are errors.
    pub fn validate(&self) -> Result<ValidationReport> {
        self.check_shape()?;
        let mut report = ValidationReport::default();

        let ps_sum: f64 = self.p_s.iter().sum();
        if self.p_s.iter().any(|p| !p.is_finite() || *p < 0.0) {
            report.state_issue = Some("has a negative or non-finite entry".into());
        } else if (ps_sum - 1.0).abs() > INGEST_TOL {
            report.state_issue = Some(format!("sums to {ps_sum:.17}"));
        } else if (ps_sum - 1.0).abs() > SIMPLEX_TOL {
            report.state_renormalized = true;
        }

        let row_len = self.ny * self.nz;
        for s in 0..self.ns {
            for x in 0..self.nx {
                let base = (s * self.nx + x) * row_len;
                let row = &self.law[base..base + row_len];
                let mut bad = false;
                for (k, &v) in row.iter().enumerate() {
                    if !v.is_finite() || v < 0.0 {
                        report.row_issues.push(RowIssue::BadEntry { s, x, y: k / self.nz, z: k % self.nz, value: v });
                        bad = true;
                    }
                }
                if bad {
                    continue;
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > INGEST_TOL {
                    report.row_issues.push(RowIssue::Mass { s, x, sum });
                } else if (sum - 1.0).abs() > SIMPLEX_TOL {
                    report.renormalized_rows.push((s, x));
                }
            }
        }

        for (x, &c) in self.cost.iter().enumerate() {
            if !c.is_finite() || c < 0.0 {
                report.other_issues.push(format!("cost[{x}] = {c} must be finite and nonnegative"));
            }
        }
        if self.budget.is_nan() || self.budget < 0.0 {
            report.other_issues.push(format!("budget = {} must be nonnegative", self.budget));
        }
        if !self.key_rate_bits.is_finite() || self.key_rate_bits < 0.0 {
            report.other_issues.push(format!("key_rate_bits = {} must be finite and nonnegative", self.key_rate_bits));
        }

        if !report.has_semantic_errors() {
            let wz = self.z_marginals();
            let q0: Vec<f64> = (0..self.nz)
                .map(|z| (0..self.ns).map(|s| self.p_s[s] * wz[(s * self.nx + self.x0) * self.nz + z]).sum())
                .collect();
            fill_support_findings(&mut report, &q0, &wz, &self.p_s, self.nx, self.nz);
        }
        Ok(report)
    }

    fn z_marginals(&self) -> Vec<f64> {
        let mut wz = vec![0.0; self.ns * self.nx * self.nz];
        for sx in 0..self.ns * self.nx {
            for y in 0..self.ny {
                for z in 0..self.nz {
                    wz[sx * self.nz + z] += self.law[(sx * self.ny + y) * self.nz + z];
                }
            }
        }
        wz
    }
}

fn fill_support_findings(report: &mut ValidationReport, q0: &[f64], wz: &[f64], p_s: &[f64], nx: usize, nz: usize) {
    report.missing_outputs = (0..nz).filter(|&z| q0[z] <= 0.0).collect();
    report.forbidden_inputs = (0..nx)
        .filter(|&x| {
            p_s.iter()
                .enumerate()
                .any(|(s, &ps)| ps > 0.0 && (0..nz).any(|z| q0[z] <= 0.0 && wz[(s * nx + x) * nz + z] > 0.0))
        })
        .collect();
}

/// A validated state-dependent DMC with its no-input symbol, cost, budget and
/// key rate.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDmc {
    nx: usize,
    ns: usize,
    ny: usize,
    nz: usize,
    x0: usize,
    state_dist: Pmf,
    /// Rows indexed by `s * nx + x`, columns by `y * nz + z`.
    law: ConditionalPmf,
    cost: Vec<f64>,
    budget: f64,
    key_rate_bits: f64,
    // Derived marginal views, flat `[s][x][y]` and `[s][x][z]`.
    wy: Vec<f64>,
    wz: Vec<f64>,
}

impl StateDmc {
    /// Builds a channel from already-checked probability objects. Cost,
    /// budget and key rate default to zero cost, unbounded budget, zero key.
    pub fn new(nx: usize, ny: usize, nz: usize, x0: usize, state_dist: Pmf, law: ConditionalPmf) -> Result<Self> {
        let ns = state_dist.len();
        if law.rows() != ns * nx || law.cols() != ny * nz {
            return Err(Error::Shape(format!(
                "law is {}x{}, expected {}x{}",
                law.rows(),
                law.cols(),
                ns * nx,
                ny * nz
            )));
        }
        if x0 >= nx {
            return Err(Error::Shape(format!("x0 = {x0} out of range")));
        }
        let mut wy = vec![0.0; ns * nx * ny];
        let mut wz = vec![0.0; ns * nx * nz];
        for sx in 0..ns * nx {
            let row = law.row(sx);
            for y in 0..ny {
                for z in 0..nz {
                    let p = row[y * nz + z];
                    wy[sx * ny + y] += p;
                    wz[sx * nz + z] += p;
                }
            }
        }
        Ok(Self {
            nx,
            ns,
            ny,
            nz,
            x0,
            state_dist,
            law,
            cost: vec![0.0; nx],
            budget: f64::INFINITY,
            key_rate_bits: 0.0,
            wy,
            wz,
        })
    }

    /// Channel whose outputs are deterministic functions `(y, z) = f(s, x)`.
    pub fn deterministic(
        nx: usize,
        ny: usize,
        nz: usize,
        x0: usize,
        state_dist: Pmf,
        f: impl Fn(usize, usize) -> (usize, usize),
    ) -> Result<Self> {
        let ns = state_dist.len();
        let mut data = vec![0.0; ns * nx * ny * nz];
        for s in 0..ns {
            for x in 0..nx {
                let (y, z) = f(s, x);
                data[((s * nx + x) * ny + y) * nz + z] = 1.0;
            }
        }
        Self::new(nx, ny, nz, x0, state_dist, ConditionalPmf::from_flat(ns * nx, ny * nz, data)?)
    }

    /// Validates and builds from file-level data. Rows off unit mass by more
    /// than [`SIMPLEX_TOL`] but within [`INGEST_TOL`] are rescaled; anything
    /// worse is a [`Error::Channel`]. Other rows are kept bit for bit.
    pub fn from_raw(raw: &RawChannel) -> Result<(Self, ValidationReport)> {
        let report = raw.validate()?;
        if report.has_semantic_errors() {
            return Err(Error::Channel(report.lines().join("; ")));
        }
        let state_dist =
            if report.state_renormalized { Pmf::from_weights(raw.p_s.clone())? } else { Pmf::new(raw.p_s.clone())? };
        let row_len = raw.ny * raw.nz;
        let mut data = raw.law.clone();
        for &(s, x) in &report.renormalized_rows {
            let row = &mut data[(s * raw.nx + x) * row_len..(s * raw.nx + x + 1) * row_len];
            let sum: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= sum);
        }
        let law = ConditionalPmf::from_flat(raw.ns * raw.nx, row_len, data)?;
        let ch = Self::new(raw.nx, raw.ny, raw.nz, raw.x0, state_dist, law)?
            .with_cost(raw.cost.clone())?
            .with_budget(raw.budget)?
            .with_key_rate(raw.key_rate_bits)?;
        Ok((ch, report))
    }

    pub fn to_raw(&self) -> RawChannel {
        RawChannel {
            nx: self.nx,
            ns: self.ns,
            ny: self.ny,
            nz: self.nz,
            x0: self.x0,
            p_s: self.state_dist.probs().to_vec(),
            law: self.law.as_flat().to_vec(),
            cost: self.cost.clone(),
            budget: self.budget,
            key_rate_bits: self.key_rate_bits,
        }
    }

    pub fn with_cost(mut self, cost: Vec<f64>) -> Result<Self> {
        if cost.len() != self.nx {
            return Err(Error::Shape(format!("cost has {} entries, nx = {}", cost.len(), self.nx)));
        }
        if cost.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::Channel("costs must be finite and nonnegative".into()));
        }
        self.cost = cost;
        Ok(self)
    }

    pub fn with_budget(mut self, budget: f64) -> Result<Self> {
        if budget.is_nan() || budget < 0.0 {
            return Err(Error::Channel(format!("budget {budget} must be nonnegative")));
        }
        self.budget = budget;
        Ok(self)
    }

    pub fn with_key_rate(mut self, bits: f64) -> Result<Self> {
        if !bits.is_finite() || bits < 0.0 {
            return Err(Error::Channel(format!("key rate {bits} must be finite and nonnegative")));
        }
        self.key_rate_bits = bits;
        Ok(self)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ns(&self) -> usize {
        self.ns
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn nz(&self) -> usize {
        self.nz
    }
    pub fn x0(&self) -> usize {
        self.x0
    }
    pub fn state_dist(&self) -> &Pmf {
        &self.state_dist
    }
    pub fn law(&self) -> &ConditionalPmf {
        &self.law
    }
    pub fn cost(&self) -> &[f64] {
        &self.cost
    }
    pub fn budget(&self) -> f64 {
        self.budget
    }
    pub fn key_rate_bits(&self) -> f64 {
        self.key_rate_bits
    }

    /// `P(y,z | s,x)` as a row over `y * nz + z`.
    #[inline]
    pub fn yz_row(&self, s: usize, x: usize) -> &[f64] {
        self.law.row(s * self.nx + x)
    }

    /// `P_{Y|S,X}(·|s,x)`.
    #[inline]
    pub fn y_row(&self, s: usize, x: usize) -> &[f64] {
        let b = (s * self.nx + x) * self.ny;
        &self.wy[b..b + self.ny]
    }

    /// `P_{Z|S,X}(·|s,x)`.
    #[inline]
    pub fn z_row(&self, s: usize, x: usize) -> &[f64] {
        let b = (s * self.nx + x) * self.nz;
        &self.wz[b..b + self.nz]
    }

    /// Report for an already-constructed channel (support findings only).
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let q0 = q0(self);
        fill_support_findings(&mut report, q0.probs(), &self.wz, self.state_dist.probs(), self.nx, self.nz);
        report
    }
}

/// Warden output distribution when nothing is sent:
/// `Q0(z) = Σ_s P_S(s) P_{Z|S,X}(z|s,x0)`.
pub fn q0(ch: &StateDmc) -> Pmf {
    let mut q = vec![0.0; ch.nz];
    for (s, &ps) in ch.state_dist.probs().iter().enumerate() {
        for (z, &w) in ch.z_row(s, ch.x0).iter().enumerate() {
            q[z] += ps * w;
        }
    }
    Pmf::from_weights(q).expect("Q0 has unit mass by construction")
}

/// Deterministic strategy table `x(a, s)` for an auxiliary alphabet of size
/// `aux_size`, row-major in `a`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StrategyMap {
    aux_size: usize,
    ns: usize,
    nx: usize,
    table: Vec<usize>,
}

impl StrategyMap {
    pub fn new(aux_size: usize, ns: usize, nx: usize, table: Vec<usize>) -> Result<Self> {
        if aux_size == 0 || ns == 0 || table.len() != aux_size * ns {
            return Err(Error::Shape(format!("{} entries for a {aux_size}x{ns} strategy table", table.len())));
        }
        if let Some(bad) = table.iter().find(|&&x| x >= nx) {
            return Err(Error::Shape(format!("strategy entry {bad} is not an input index (nx = {nx})")));
        }
        Ok(Self { aux_size, ns, nx, table })
    }

    pub fn from_fn(aux_size: usize, ns: usize, nx: usize, f: impl Fn(usize, usize) -> usize) -> Result<Self> {
        let table = (0..aux_size).flat_map(|a| (0..ns).map(move |s| (a, s))).map(|(a, s)| f(a, s)).collect();
        Self::new(aux_size, ns, nx, table)
    }

    /// Every auxiliary symbol sends `x` regardless of state.
    pub fn constant(aux_size: usize, ns: usize, nx: usize, x: usize) -> Result<Self> {
        Self::from_fn(aux_size, ns, nx, |_, _| x)
    }

    #[inline]
    pub fn get(&self, a: usize, s: usize) -> usize {
        self.table[a * self.ns + s]
    }

    pub fn aux_size(&self) -> usize {
        self.aux_size
    }
    pub fn ns(&self) -> usize {
        self.ns
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn table(&self) -> &[usize] {
        &self.table
    }

    pub fn row(&self, a: usize) -> &[usize] {
        &self.table[a * self.ns..(a + 1) * self.ns]
    }

    /// Rows sorted lexicographically: the representative of the map's class
    /// under relabelling of auxiliary symbols.
    pub fn canonical(&self) -> StrategyMap {
        let mut rows: Vec<&[usize]> = (0..self.aux_size).map(|a| self.row(a)).collect();
        rows.sort();
        Self { aux_size: self.aux_size, ns: self.ns, nx: self.nx, table: rows.concat() }
    }

    /// Permutation taking canonical row positions to original aux symbols.
    pub fn canonical_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.aux_size).collect();
        order.sort_by(|&a, &b| self.row(a).cmp(self.row(b)).then(a.cmp(&b)));
        order
    }

    fn check_against(&self, ch: &StateDmc) -> Result<()> {
        if self.ns != ch.ns || self.nx != ch.nx {
            return Err(Error::Shape(format!(
                "strategy map is for ns={}, nx={}; channel has ns={}, nx={}",
                self.ns, self.nx, ch.ns, ch.nx
            )));
        }
        Ok(())
    }
}

/// `P(v,s,x,y,z) = P_V(v) P_S(s) 1{x = map(v,s)} P_{Y,Z|S,X}(y,z|s,x)`.
pub fn causal_joint(ch: &StateDmc, p_v: &Pmf, map: &StrategyMap) -> Result<JointPmf> {
    map.check_against(ch)?;
    if p_v.len() != map.aux_size {
        return Err(Error::Shape(format!("P_V has {} entries, map has {} aux symbols", p_v.len(), map.aux_size)));
    }
    let p_as = |a: usize, s: usize| p_v[a] * ch.state_dist[s];
    build_joint(ch, map, AXIS_V, p_as)
}

/// `P(u,s,x,y,z) = P_S(s) P_{U|S}(u|s) 1{x = map(u,s)} P_{Y,Z|S,X}(y,z|s,x)`.
///
/// `p_u_given_s` has one row per state.
pub fn noncausal_joint(ch: &StateDmc, p_u_given_s: &ConditionalPmf, map: &StrategyMap) -> Result<JointPmf> {
    map.check_against(ch)?;
    if p_u_given_s.rows() != ch.ns || p_u_given_s.cols() != map.aux_size {
        return Err(Error::Shape(format!(
            "P_U|S is {}x{}, expected {}x{}",
            p_u_given_s.rows(),
            p_u_given_s.cols(),
            ch.ns,
            map.aux_size
        )));
    }
    let p_as = |a: usize, s: usize| ch.state_dist[s] * p_u_given_s.get(s, a);
    build_joint(ch, map, AXIS_U, p_as)
}

fn build_joint(
    ch: &StateDmc,
    map: &StrategyMap,
    aux_label: &str,
    p_as: impl Fn(usize, usize) -> f64,
) -> Result<JointPmf> {
    let (na, ns, nx, ny, nz) = (map.aux_size, ch.ns, ch.nx, ch.ny, ch.nz);
    let mut probs = vec![0.0; na * ns * nx * ny * nz];
    for a in 0..na {
        for s in 0..ns {
            let w = p_as(a, s);
            if w == 0.0 {
                continue;
            }
            let x = map.get(a, s);
            let base = ((a * ns + s) * nx + x) * ny * nz;
            for (k, &p) in ch.yz_row(s, x).iter().enumerate() {
                probs[base + k] = w * p;
            }
        }
    }
    JointPmf::from_weights(&[aux_label, AXIS_S, AXIS_X, AXIS_Y, AXIS_Z], &[na, ns, nx, ny, nz], probs)
}

/// `(E[b(X)], D(P_Z‖Q0) in nats)` for a joint with `X` and `Z` axes.
pub fn cost_and_covert_residuals(joint: &JointPmf, ch: &StateDmc) -> Result<(f64, f64)> {
    let px = joint.marginal(AXIS_X)?;
    let pz = joint.marginal(AXIS_Z)?;
    if px.len() != ch.nx || pz.len() != ch.nz {
        return Err(Error::Shape("joint alphabets do not match the channel".into()));
    }
    let cost = px.probs().iter().zip(&ch.cost).map(|(p, b)| p * b).sum();
    Ok((cost, kl_divergence(&pz, &q0(ch))))
}
