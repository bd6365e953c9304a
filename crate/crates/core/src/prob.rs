//! Exact finite-alphabet probability engine.
//!
//! A [`JointPmf`] is a dense, row-major table over an ordered list of named
//! axes (last axis varies fastest). Every information quantity in the crate
//! reduces to entropies of marginals of such a table:
//!
//! ```text
//! H(A | C)   = H(A, C) - H(C)
//! I(A; B | C) = H(A, C) + H(B, C) - H(A, B, C) - H(C)
//! ```
//!
//! All logarithms are base 2, and `0 log 0 = 0`. Probabilities below
//! [`ZERO_PROB`] are dropped from entropy sums.

use crate::error::{Error, Result};

/// Probabilities at or below this are treated as exact zeros in entropy sums.
pub const ZERO_PROB: f64 = 1e-15;

/// Normalization slack accepted when a table is constructed.
pub const NORM_TOL: f64 = 1e-12;

const DOMAIN_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Alphabet {
    name: String,
    size: usize,
}

impl Alphabet {
    pub fn new(name: impl Into<String>, size: usize) -> Result<Self> {
        let name = name.into();
        if size == 0 {
            return Err(Error::AxisSize {
                name,
                expected: 1,
                found: 0,
            });
        }
        Ok(Self { name, size })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn size(&self) -> usize {
        self.size
    }
}

/// `-x log2 x`, with the zero convention.
#[inline]
fn surprisal_term(x: f64) -> f64 {
    if x > ZERO_PROB {
        -x * x.log2()
    } else {
        0.0
    }
}

/// Entropy in bits of a probability vector (not checked for normalization).
pub fn entropy_of(probs: &[f64]) -> f64 {
    probs.iter().map(|&p| surprisal_term(p)).sum()
}

/// Binary entropy function in bits.
pub fn entropy2(x: f64) -> Result<f64> {
    if !(-DOMAIN_SLACK..=1.0 + DOMAIN_SLACK).contains(&x) || x.is_nan() {
        return Err(Error::Domain {
            what: "binary entropy",
            value: x,
        });
    }
    let x = x.clamp(0.0, 1.0);
    Ok(surprisal_term(x) + surprisal_term(1.0 - x))
}

/// Ternary entropy in bits of `(a, b, c)`.
pub fn entropy3(a: f64, b: f64, c: f64) -> Result<f64> {
    for v in [a, b, c] {
        if v < 0.0 || v.is_nan() {
            return Err(Error::Domain {
                what: "ternary entropy",
                value: v,
            });
        }
    }
    let sum = a + b + c;
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized {
            what: "ternary entropy argument".into(),
            sum,
        });
    }
    Ok(surprisal_term(a) + surprisal_term(b) + surprisal_term(c))
}

/// A normalized probability table over named finite axes.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf {
    axes: Vec<Alphabet>,
    table: Vec<f64>,
}

impl JointPmf {
    /// Builds a joint from a row-major table, checking shape, sign and
    /// normalization (within [`NORM_TOL`]).
    pub fn new(axes: Vec<Alphabet>, table: Vec<f64>) -> Result<Self> {
        let expected = check_axes(&axes)?;
        if table.len() != expected {
            return Err(Error::Shape {
                expected,
                found: table.len(),
            });
        }
        let mut sum = 0.0;
        for (i, &v) in table.iter().enumerate() {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidEntry {
                    path: format!("{:?}", unravel(&axes, i)),
                    value: v,
                });
            }
            sum += v;
        }
        if (sum - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized {
                what: "joint table".into(),
                sum,
            });
        }
        Ok(Self { axes, table })
    }

    /// Builds a joint by evaluating `weight` on every cell and dividing by
    /// the total. Fails if the total is zero.
    pub fn normalized(
        axes: Vec<Alphabet>,
        mut weight: impl FnMut(&[usize]) -> f64,
    ) -> Result<Self> {
        let n = check_axes(&axes)?;
        let sizes: Vec<usize> = axes.iter().map(Alphabet::size).collect();
        let mut idx = vec![0usize; sizes.len()];
        let mut table = Vec::with_capacity(n);
        for _ in 0..n {
            table.push(weight(&idx));
            advance(&mut idx, &sizes);
        }
        let total: f64 = table.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::NotNormalized {
                what: "weight table".into(),
                sum: total,
            });
        }
        table.iter_mut().for_each(|v| *v /= total);
        Self::new(axes, table)
    }

    /// Like [`JointPmf::normalized`] but the weights are expected to already
    /// sum to one; the table is validated as-is.
    pub fn from_fn(axes: Vec<Alphabet>, mut prob: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let n = check_axes(&axes)?;
        let sizes: Vec<usize> = axes.iter().map(Alphabet::size).collect();
        let mut idx = vec![0usize; sizes.len()];
        let mut table = Vec::with_capacity(n);
        for _ in 0..n {
            table.push(prob(&idx));
            advance(&mut idx, &sizes);
        }
        Self::new(axes, table)
    }

    pub fn axes(&self) -> &[Alphabet] {
        &self.axes
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn axis_names(&self) -> Vec<&str> {
        self.axes.iter().map(Alphabet::name).collect()
    }

    pub fn has_axis(&self, name: &str) -> bool {
        self.axes.iter().any(|a| a.name == name)
    }

    pub fn axis_index(&self, name: &str) -> Result<usize> {
        self.axes
            .iter()
            .position(|a| a.name == name)
            .ok_or_else(|| Error::UnknownAxis(name.to_string()))
    }

    pub fn axis_size(&self, name: &str) -> Result<usize> {
        Ok(self.axes[self.axis_index(name)?].size)
    }

    /// Probability of a single cell, indexed in axis order.
    pub fn prob(&self, index: &[usize]) -> f64 {
        debug_assert_eq!(index.len(), self.axes.len());
        let mut flat = 0;
        for (a, &i) in self.axes.iter().zip(index) {
            flat = flat * a.size + i;
        }
        self.table[flat]
    }

    /// Visits every cell as `(multi-index, probability)` in row-major order.
    pub fn for_each_cell(&self, mut f: impl FnMut(&[usize], f64)) {
        let sizes: Vec<usize> = self.axes.iter().map(Alphabet::size).collect();
        let mut idx = vec![0usize; sizes.len()];
        for &p in &self.table {
            f(&idx, p);
            advance(&mut idx, &sizes);
        }
    }

    /// Sums out every axis not in `keep`. The result's axes follow the order
    /// given in `keep`.
    pub fn marginalize(&self, keep: &[&str]) -> Result<JointPmf> {
        if keep.is_empty() {
            return Err(Error::EmptyAxisSet);
        }
        let positions = self.resolve(keep)?;
        let table = self.project(&positions);
        let axes = positions.iter().map(|&i| self.axes[i].clone()).collect();
        Ok(JointPmf { axes, table })
    }

    /// Marginal table over the given axis names, row-major in the given order.
    /// An empty set yields `[1.0]`.
    pub fn marginal_table(&self, keep: &[&str]) -> Result<Vec<f64>> {
        let positions = self.resolve(keep)?;
        Ok(self.project(&positions))
    }

    /// Joint entropy `H(axes)` in bits; the empty set has entropy 0.
    pub fn entropy(&self, axes: &[&str]) -> Result<f64> {
        if axes.is_empty() {
            return Ok(0.0);
        }
        let positions = self.resolve(axes)?;
        Ok(entropy_of(&self.project(&positions)))
    }

    /// `H(target | given)` in bits.
    pub fn conditional_entropy(&self, target: &[&str], given: &[&str]) -> Result<f64> {
        disjoint(target, given)?;
        let union: Vec<&str> = target.iter().chain(given).copied().collect();
        let h = self.entropy(&union)? - self.entropy(given)?;
        Ok(clamp_small_negative(h))
    }

    /// `I(a; b | given)` in bits.
    pub fn mutual_information(&self, a: &[&str], b: &[&str], given: &[&str]) -> Result<f64> {
        disjoint(a, b)?;
        disjoint(a, given)?;
        disjoint(b, given)?;
        let ac: Vec<&str> = a.iter().chain(given).copied().collect();
        let bc: Vec<&str> = b.iter().chain(given).copied().collect();
        let abc: Vec<&str> = a.iter().chain(b).chain(given).copied().collect();
        let i = self.entropy(&ac)? + self.entropy(&bc)? - self.entropy(&abc)? - self.entropy(given)?;
        Ok(clamp_small_negative(i))
    }

    fn resolve(&self, names: &[&str]) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(names.len());
        for (k, name) in names.iter().enumerate() {
            if names[..k].contains(name) {
                return Err(Error::DuplicateAxis(name.to_string()));
            }
            out.push(self.axis_index(name)?);
        }
        Ok(out)
    }

    fn project(&self, keep: &[usize]) -> Vec<f64> {
        let n = self.axes.len();
        let mut out_stride = vec![0usize; n];
        let mut len = 1;
        for &k in keep.iter().rev() {
            out_stride[k] = len;
            len *= self.axes[k].size;
        }
        let mut out = vec![0.0; len];
        if keep.len() == n && keep.iter().enumerate().all(|(i, &k)| i == k) {
            out.copy_from_slice(&self.table);
            return out;
        }
        let sizes: Vec<usize> = self.axes.iter().map(Alphabet::size).collect();
        let mut idx = vec![0usize; n];
        let mut offset = 0usize;
        for &p in &self.table {
            out[offset] += p;
            // odometer step, keeping `offset` in sync with the kept axes
            let mut d = n;
            while d > 0 {
                d -= 1;
                idx[d] += 1;
                offset += out_stride[d];
                if idx[d] < sizes[d] {
                    break;
                }
                offset -= out_stride[d] * sizes[d];
                idx[d] = 0;
            }
        }
        out
    }
}

fn check_axes(axes: &[Alphabet]) -> Result<usize> {
    if axes.is_empty() {
        return Err(Error::EmptyAxisSet);
    }
    for (k, a) in axes.iter().enumerate() {
        if axes[..k].iter().any(|b| b.name == a.name) {
            return Err(Error::DuplicateAxis(a.name.clone()));
        }
    }
    Ok(axes.iter().map(Alphabet::size).product())
}

fn disjoint(a: &[&str], b: &[&str]) -> Result<()> {
    match a.iter().find(|x| b.contains(x)) {
        Some(x) => Err(Error::OverlappingAxes(x.to_string())),
        None => Ok(()),
    }
}

fn clamp_small_negative(x: f64) -> f64 {
    if (-1e-12..0.0).contains(&x) {
        0.0
    } else {
        x
    }
}

/// Row-major increment of a multi-index.
pub(crate) fn advance(idx: &mut [usize], sizes: &[usize]) {
    let mut d = idx.len();
    while d > 0 {
        d -= 1;
        idx[d] += 1;
        if idx[d] < sizes[d] {
            return;
        }
        idx[d] = 0;
    }
}

fn unravel(axes: &[Alphabet], mut flat: usize) -> Vec<usize> {
    let mut idx = vec![0; axes.len()];
    for (d, a) in axes.iter().enumerate().rev() {
        idx[d] = flat % a.size;
        flat /= a.size;
    }
    idx
}
