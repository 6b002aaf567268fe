//! Finite-alphabet probability objects and the information measures built on
//! them.
//!
//! Divergences are computed in nats. Entropies and mutual informations are
//! reported in bits. Terms with zero mass in the first argument contribute
//! nothing, so `0 log 0 = 0` and `0 log (0 / q) = 0`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::LN_2;

use crate::error::{Error, Result};

/// Tolerance on total mass for distributions built from caller data.
pub const SIMPLEX_TOL: f64 = 1e-12;

#[inline]
pub fn nats_to_bits(x: f64) -> f64 {
    x / LN_2
}

#[inline]
pub fn bits_to_nats(x: f64) -> f64 {
    x * LN_2
}

/// Anything that is a flat array of probability masses.
pub trait Masses {
    fn masses(&self) -> &[f64];
}

impl Masses for [f64] {
    fn masses(&self) -> &[f64] {
        self
    }
}

impl Masses for Vec<f64> {
    fn masses(&self) -> &[f64] {
        self
    }
}

fn check_masses(probs: &[f64], tol: f64) -> Result<f64> {
    if probs.is_empty() {
        return Err(Error::InvalidPmf("empty alphabet".into()));
    }
    let mut total = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::InvalidPmf(format!("entry {i} is {p}")));
        }
        total += p;
    }
    if (total - 1.0).abs() > tol {
        return Err(Error::InvalidPmf(format!("total mass {total} differs from 1")));
    }
    Ok(total)
}

fn normalize(mut weights: Vec<f64>) -> Result<Vec<f64>> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0 && total.is_finite()) || weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
        return Err(Error::InvalidPmf("weights must be finite, nonnegative, with positive total".into()));
    }
    for w in &mut weights {
        *w /= total;
    }
    Ok(weights)
}

/// A probability mass function on `0..len`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    probs: Vec<f64>,
}

impl Pmf {
    /// Validates nonnegativity and unit mass within [`SIMPLEX_TOL`].
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_masses(&probs, SIMPLEX_TOL)?;
        Ok(Self { probs })
    }

    /// Scales nonnegative weights to unit mass.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        Ok(Self { probs: normalize(weights)? })
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform pmf over an empty alphabet");
        Self { probs: vec![1.0 / n as f64; n] }
    }

    pub fn point_mass(n: usize, at: usize) -> Self {
        assert!(at < n, "point mass index out of range");
        let mut probs = vec![0.0; n];
        probs[at] = 1.0;
        Self { probs }
    }

    pub fn bernoulli(p: f64) -> Result<Self> {
        Self::new(vec![1.0 - p, p])
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.probs.iter().enumerate().filter(|(_, p)| **p > 0.0).map(|(i, _)| i)
    }
}

impl core::ops::Index<usize> for Pmf {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.probs[i]
    }
}

impl Masses for Pmf {
    fn masses(&self) -> &[f64] {
        &self.probs
    }
}

/// Row-stochastic matrix: one [`Pmf`] per conditioning symbol, stored flat.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalPmf {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl ConditionalPmf {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let cols = rows.first().map(Vec::len).unwrap_or(0);
        let n = rows.len();
        let mut data = Vec::with_capacity(n * cols);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != cols {
                return Err(Error::Shape(format!("row {i} has {} entries, expected {cols}", row.len())));
            }
            data.extend(row);
        }
        Self::from_flat(n, cols, data)
    }

    pub fn from_flat(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::Shape(format!("{} entries for a {rows}x{cols} conditional pmf", data.len())));
        }
        for (r, row) in data.chunks(cols).enumerate() {
            check_masses(row, SIMPLEX_TOL).map_err(|e| Error::InvalidPmf(format!("row {r}: {e}")))?;
        }
        Ok(Self { rows, cols, data })
    }

    /// Same row for every conditioning symbol.
    pub fn repeated(row: &Pmf, rows: usize) -> Self {
        let mut data = Vec::with_capacity(rows * row.len());
        for _ in 0..rows {
            data.extend_from_slice(row.probs());
        }
        Self { rows, cols: row.len(), data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }
}

/// A joint pmf over a tuple of labelled finite alphabets, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf {
    labels: Vec<String>,
    shape: Vec<usize>,
    probs: Vec<f64>,
}

impl JointPmf {
    pub fn new(labels: &[&str], shape: &[usize], probs: Vec<f64>) -> Result<Self> {
        let joint = Self::from_parts(labels, shape, probs)?;
        check_masses(&joint.probs, SIMPLEX_TOL)?;
        Ok(joint)
    }

    /// Like [`JointPmf::new`] but rescales the entries to unit mass.
    pub fn from_weights(labels: &[&str], shape: &[usize], weights: Vec<f64>) -> Result<Self> {
        let mut joint = Self::from_parts(labels, shape, weights)?;
        joint.probs = normalize(joint.probs)?;
        Ok(joint)
    }

    fn from_parts(labels: &[&str], shape: &[usize], probs: Vec<f64>) -> Result<Self> {
        if labels.len() != shape.len() {
            return Err(Error::Shape(format!("{} labels for {} axes", labels.len(), shape.len())));
        }
        for (i, a) in labels.iter().enumerate() {
            if labels[..i].contains(a) {
                return Err(Error::Shape(format!("duplicate axis label `{a}`")));
            }
        }
        let size: usize = shape.iter().product();
        if size != probs.len() || shape.contains(&0) {
            return Err(Error::Shape(format!("{} entries for shape {shape:?}", probs.len())));
        }
        Ok(Self { labels: labels.iter().map(|s| s.to_string()).collect(), shape: shape.to_vec(), probs })
    }

    pub fn from_pmf(label: &str, p: &Pmf) -> Self {
        Self { labels: vec![label.to_string()], shape: vec![p.len()], probs: p.probs().to_vec() }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn axis(&self, label: &str) -> Result<usize> {
        self.labels.iter().position(|l| l == label).ok_or_else(|| Error::UnknownAxis(label.to_string()))
    }

    /// Mass at a multi-index given in axis order.
    pub fn get(&self, index: &[usize]) -> f64 {
        assert_eq!(index.len(), self.shape.len());
        let mut flat = 0;
        for (i, n) in index.iter().zip(&self.shape) {
            assert!(i < n, "index out of range");
            flat = flat * n + i;
        }
        self.probs[flat]
    }

    /// Projects onto `keep`, in the order given. An empty `keep` yields the
    /// zero-dimensional joint holding the total mass.
    pub fn marginalize(&self, keep: &[&str]) -> Result<JointPmf> {
        let axes = keep.iter().map(|l| self.axis(l)).collect::<Result<Vec<_>>>()?;
        for (i, a) in axes.iter().enumerate() {
            if axes[..i].contains(a) {
                return Err(Error::Shape(format!("axis `{}` kept twice", keep[i])));
            }
        }
        let out_shape: Vec<usize> = axes.iter().map(|&a| self.shape[a]).collect();
        let mut out = vec![0.0; out_shape.iter().product()];

        // Stride of each source axis within the output array.
        let mut out_stride = vec![0usize; self.shape.len()];
        let mut s = 1;
        for (k, &a) in axes.iter().enumerate().rev() {
            out_stride[a] = s;
            s *= out_shape[k];
        }

        let mut idx = vec![0usize; self.shape.len()];
        let mut target = 0usize;
        for &p in &self.probs {
            out[target] += p;
            // Odometer increment, keeping `target` in sync.
            for ax in (0..idx.len()).rev() {
                idx[ax] += 1;
                target += out_stride[ax];
                if idx[ax] < self.shape[ax] {
                    break;
                }
                target -= out_stride[ax] * idx[ax];
                idx[ax] = 0;
            }
        }
        Ok(JointPmf { labels: keep.iter().map(|s| s.to_string()).collect(), shape: out_shape, probs: out })
    }

    /// The single-axis marginal as a [`Pmf`].
    pub fn marginal(&self, label: &str) -> Result<Pmf> {
        let m = self.marginalize(&[label])?;
        Ok(Pmf { probs: m.probs })
    }

    /// Converts a one-axis joint into a [`Pmf`].
    pub fn to_pmf(&self) -> Result<Pmf> {
        if self.shape.len() != 1 {
            return Err(Error::Shape(format!("{} axes, expected 1", self.shape.len())));
        }
        Ok(Pmf { probs: self.probs.clone() })
    }

    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Independent product `self × other`, axes concatenated.
    pub fn product(&self, other: &JointPmf) -> Result<JointPmf> {
        let mut labels: Vec<&str> = self.labels.iter().map(String::as_str).collect();
        labels.extend(other.labels.iter().map(String::as_str));
        let mut shape = self.shape.clone();
        shape.extend_from_slice(&other.shape);
        let mut probs = Vec::with_capacity(self.probs.len() * other.probs.len());
        for &a in &self.probs {
            probs.extend(other.probs.iter().map(|&b| a * b));
        }
        Self::from_parts(&labels, &shape, probs)
    }
}

impl Masses for JointPmf {
    fn masses(&self) -> &[f64] {
        &self.probs
    }
}

/// Shannon entropy in bits.
pub fn entropy<P: Masses + ?Sized>(p: &P) -> f64 {
    nats_to_bits(entropy_nats(p.masses()))
}

pub(crate) fn entropy_nats(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>()
}

/// Binary entropy in bits.
pub fn binary_entropy(p: f64) -> f64 {
    nats_to_bits(entropy_nats(&[p, 1.0 - p]))
}

/// Relative entropy `D(p‖q)` in nats; `+∞` when `p` is not absolutely
/// continuous with respect to `q`.
pub fn kl_divergence<P: Masses + ?Sized, Q: Masses + ?Sized>(p: &P, q: &Q) -> f64 {
    let (p, q) = (p.masses(), q.masses());
    assert_eq!(p.len(), q.len(), "kl_divergence: shape mismatch");
    let mut d = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            d += a * (a / b).ln();
        }
    }
    // Rounding can push a tiny divergence below zero.
    d.max(0.0)
}

/// Total variation distance (half the L1 distance).
pub fn tv_distance<P: Masses + ?Sized, Q: Masses + ?Sized>(p: &P, q: &Q) -> f64 {
    let (p, q) = (p.masses(), q.masses());
    assert_eq!(p.len(), q.len(), "tv_distance: shape mismatch");
    (0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()).min(1.0)
}

/// `I(A;B)` in bits for disjoint axis groups of a joint.
pub fn mutual_information(j: &JointPmf, a: &[&str], b: &[&str]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Ok(0.0);
    }
    if a.iter().any(|x| b.contains(x)) {
        return Err(Error::Shape("mutual information axis groups overlap".into()));
    }
    let mut both: Vec<&str> = a.to_vec();
    both.extend_from_slice(b);
    let ab = j.marginalize(&both)?;
    let pa = j.marginalize(a)?;
    let pb = j.marginalize(b)?;
    let nb = pb.probs.len();
    let mut i = 0.0;
    for (k, &p) in ab.probs.iter().enumerate() {
        if p > 0.0 {
            let (ia, ib) = (k / nb, k % nb);
            i += p * (p / (pa.probs[ia] * pb.probs[ib])).ln();
        }
    }
    Ok(nats_to_bits(i.max(0.0)))
}

/// Entropy in bits of a group of axes of a joint.
pub fn joint_entropy(j: &JointPmf, axes: &[&str]) -> Result<f64> {
    Ok(entropy(&j.marginalize(axes)?))
}

/// `p^{×n}` over axes `Z1..Zn`; fails when `|alphabet|^n` exceeds `cap`.
pub fn n_fold_product(p: &Pmf, n: usize, cap: usize) -> Result<JointPmf> {
    if n == 0 {
        return Err(Error::Parameter("n-fold product needs n ≥ 1".into()));
    }
    let needed = (p.len() as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if needed > cap as u128 {
        return Err(Error::CapExceeded { needed, cap: cap as u128 });
    }
    let mut probs = p.probs().to_vec();
    for _ in 1..n {
        let mut next = Vec::with_capacity(probs.len() * p.len());
        for &a in &probs {
            next.extend(p.probs().iter().map(|&b| a * b));
        }
        probs = next;
    }
    let labels: Vec<String> = (1..=n).map(|i| format!("Z{i}")).collect();
    let label_refs: Vec<&str> = labels.iter().map(String::as_str).collect();
    JointPmf::from_parts(&label_refs, &vec![p.len(); n], probs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn entropy_examples() {
        assert_abs_diff_eq!(entropy(&Pmf::uniform(4)), 2.0, epsilon = 1e-15);
        assert_eq!(entropy(&Pmf::point_mass(3, 1)), 0.0);
        // 0.2 log2(5) + 0.8 log2(1.25)
        let direct = 0.2 * 5f64.log2() + 0.8 * 1.25f64.log2();
        assert_abs_diff_eq!(entropy(&Pmf::bernoulli(0.2).unwrap()), direct, epsilon = 1e-15);
        assert_abs_diff_eq!(direct, 0.721_928_094_887_362_3, epsilon = 1e-15);
        assert_eq!(binary_entropy(0.0), 0.0);
    }

    #[test]
    fn pmf_validation() {
        assert!(Pmf::new(vec![0.5, 0.5 + 1e-13]).is_ok());
        assert!(Pmf::new(vec![0.5, 0.5 + 1e-9]).is_err());
        assert!(Pmf::new(vec![1.5, -0.5]).is_err());
        assert!(Pmf::new(vec![]).is_err());
        assert!(ConditionalPmf::from_rows(vec![vec![0.5, 0.5], vec![1.0]]).is_err());
    }

    #[test]
    fn mutual_information_examples() {
        let p = JointPmf::from_pmf("A", &Pmf::bernoulli(0.3).unwrap());
        let q = JointPmf::from_pmf("B", &Pmf::uniform(3));
        let prod = p.product(&q).unwrap();
        assert_abs_diff_eq!(mutual_information(&prod, &["A"], &["B"]).unwrap(), 0.0, epsilon = 1e-15);

        let copy = JointPmf::new(&["X", "Y"], &[2, 2], vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        assert_abs_diff_eq!(mutual_information(&copy, &["X"], &["Y"]).unwrap(), 1.0, epsilon = 1e-15);

        let e = 0.11;
        let bsc =
            JointPmf::new(&["X", "Y"], &[2, 2], vec![0.5 * (1.0 - e), 0.5 * e, 0.5 * e, 0.5 * (1.0 - e)]).unwrap();
        let i = mutual_information(&bsc, &["X"], &["Y"]).unwrap();
        assert_abs_diff_eq!(i, 1.0 - binary_entropy(e), epsilon = 1e-14);
        assert_abs_diff_eq!(i, 0.50008, epsilon = 1e-5);

        assert!(matches!(mutual_information(&bsc, &["X"], &["W"]), Err(Error::UnknownAxis(_))));
        assert!(mutual_information(&bsc, &["X"], &["X"]).is_err());
    }

    #[test]
    fn kl_and_tv_examples() {
        let p = Pmf::bernoulli(0.3).unwrap();
        let q = Pmf::bernoulli(0.5).unwrap();
        assert_eq!(kl_divergence(&p, &p), 0.0);
        assert_abs_diff_eq!(kl_divergence(&p, &q), 0.3 * 0.6f64.ln() + 0.7 * 1.4f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(kl_divergence(&p, &q), 0.0823, epsilon = 1e-4);
        assert_abs_diff_eq!(nats_to_bits(kl_divergence(&p, &q)), 0.119, epsilon = 1e-3);
        assert_eq!(kl_divergence(&Pmf::point_mass(2, 0), &Pmf::point_mass(2, 1)), f64::INFINITY);
        // zero mass in p ignores q entirely
        assert_eq!(kl_divergence(&Pmf::point_mass(2, 0), &Pmf::new(vec![1.0, 0.0]).unwrap()), 0.0);

        assert_eq!(tv_distance(&p, &p), 0.0);
        assert_eq!(tv_distance(&Pmf::point_mass(2, 0), &Pmf::point_mass(2, 1)), 1.0);
        assert_abs_diff_eq!(tv_distance(&p, &q), 0.2, epsilon = 1e-15);
    }

    #[test]
    fn marginalize_examples() {
        let p = Pmf::bernoulli(0.3).unwrap();
        let q = Pmf::new(vec![0.2, 0.5, 0.3]).unwrap();
        let j = JointPmf::from_pmf("A", &p).product(&JointPmf::from_pmf("B", &q)).unwrap();
        let mb = j.marginal("B").unwrap();
        for (a, b) in mb.probs().iter().zip(q.probs()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
        let none = j.marginalize(&[]).unwrap();
        assert_eq!(none.shape(), &[] as &[usize]);
        assert_abs_diff_eq!(none.probs()[0], 1.0, epsilon = 1e-15);

        // reordering axes transposes
        let ba = j.marginalize(&["B", "A"]).unwrap();
        assert_abs_diff_eq!(ba.get(&[2, 1]), j.get(&[1, 2]), epsilon = 1e-18);
        assert!(matches!(j.marginalize(&["C"]), Err(Error::UnknownAxis(_))));
    }

    #[test]
    fn n_fold_product_examples() {
        let p = Pmf::bernoulli(0.3).unwrap();
        assert_eq!(n_fold_product(&p, 1, 16).unwrap().probs(), p.probs());
        let u = n_fold_product(&Pmf::uniform(2), 3, 16).unwrap();
        assert!(u.probs().iter().all(|&x| (x - 0.125).abs() < 1e-15));
        let two = n_fold_product(&p, 2, 16).unwrap();
        assert_abs_diff_eq!(two.get(&[1, 1]), 0.09, epsilon = 1e-15);
        assert!(matches!(n_fold_product(&p, 5, 16), Err(Error::CapExceeded { .. })));
    }
}
