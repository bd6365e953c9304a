//! State-dependent two-user MAC with generalized feedback, the binary
//! erasure MAC with binary states, and the `(p, q, r)` input policy.

use serde_json::Value;

use crate::error::{Error, Result};
use crate::prob::{advance, Alphabet, JointPmf, NORM_TOL};

/// Canonical axis names shared by every joint the crate builds.
pub mod axis {
    pub const U: &str = "U";
    pub const V1: &str = "V1";
    pub const V2: &str = "V2";
    pub const X1: &str = "X1";
    pub const X2: &str = "X2";
    pub const S1: &str = "S1";
    pub const S2: &str = "S2";
    pub const Y: &str = "Y";
    pub const Z1: &str = "Z1";
    pub const Z2: &str = "Z2";
    pub const T: &str = "T";
}

fn check_prob(what: &'static str, v: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(Error::Domain { what, value: v })
    }
}

/// Alphabet sizes of a [`StateMac`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MacAlphabets {
    pub x1: usize,
    pub x2: usize,
    pub s1: usize,
    pub s2: usize,
    pub y: usize,
    pub z1: usize,
    pub z2: usize,
}

impl MacAlphabets {
    fn kernel_len(&self) -> usize {
        self.s1 * self.s2 * self.x1 * self.x2 * self.y * self.z1 * self.z2
    }
}

/// A memoryless MAC with i.i.d. state pair `(S1, S2)` and kernel
/// `P(y, z1, z2 | x1, x2, s1, s2)`.
///
/// The kernel is stored row-major in the order `[s1][s2][x1][x2][y][z1][z2]`,
/// the same order as the JSON description.
#[derive(Debug, Clone, PartialEq)]
pub struct StateMac {
    sizes: MacAlphabets,
    state_pmf: Vec<f64>,
    kernel: Vec<f64>,
}

impl StateMac {
    pub fn new(sizes: MacAlphabets, state_pmf: Vec<f64>, kernel: Vec<f64>) -> Result<Self> {
        for (name, v) in [
            ("x1", sizes.x1),
            ("x2", sizes.x2),
            ("s1", sizes.s1),
            ("s2", sizes.s2),
            ("y", sizes.y),
            ("z1", sizes.z1),
            ("z2", sizes.z2),
        ] {
            if v == 0 {
                return Err(Error::Schema {
                    path: format!("alphabets.{name}"),
                    message: "alphabet size must be at least 1".into(),
                });
            }
        }
        if state_pmf.len() != sizes.s1 * sizes.s2 {
            return Err(Error::Shape {
                expected: sizes.s1 * sizes.s2,
                found: state_pmf.len(),
            });
        }
        if kernel.len() != sizes.kernel_len() {
            return Err(Error::Shape {
                expected: sizes.kernel_len(),
                found: kernel.len(),
            });
        }
        let mut sum = 0.0;
        for (i, &v) in state_pmf.iter().enumerate() {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidEntry {
                    path: format!("state_pmf[{}][{}]", i / sizes.s2, i % sizes.s2),
                    value: v,
                });
            }
            sum += v;
        }
        if (sum - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized {
                what: "state_pmf".into(),
                sum,
            });
        }
        let slice = sizes.y * sizes.z1 * sizes.z2;
        let heads = [sizes.s1, sizes.s2, sizes.x1, sizes.x2];
        let mut head = [0usize; 4];
        for chunk in kernel.chunks(slice) {
            let path = format!(
                "kernel[{}][{}][{}][{}]",
                head[0], head[1], head[2], head[3]
            );
            let mut s = 0.0;
            for (k, &v) in chunk.iter().enumerate() {
                if !(v >= 0.0 && v.is_finite()) {
                    let (y, z1, z2) = (
                        k / (sizes.z1 * sizes.z2),
                        (k / sizes.z2) % sizes.z1,
                        k % sizes.z2,
                    );
                    return Err(Error::InvalidEntry {
                        path: format!("{path}[{y}][{z1}][{z2}]"),
                        value: v,
                    });
                }
                s += v;
            }
            if (s - 1.0).abs() > NORM_TOL {
                return Err(Error::NotNormalized { what: path, sum: s });
            }
            advance(&mut head, &heads);
        }
        Ok(Self {
            sizes,
            state_pmf,
            kernel,
        })
    }

    pub fn sizes(&self) -> MacAlphabets {
        self.sizes
    }

    pub fn state_prob(&self, s1: usize, s2: usize) -> f64 {
        self.state_pmf[s1 * self.sizes.s2 + s2]
    }

    /// `P(y, z1, z2 | x1, x2, s1, s2)`.
    #[allow(clippy::too_many_arguments)]
    pub fn kernel(&self, y: usize, z1: usize, z2: usize, x1: usize, x2: usize, s1: usize, s2: usize) -> f64 {
        let m = &self.sizes;
        let head = ((s1 * m.s2 + s2) * m.x1 + x1) * m.x2 + x2;
        self.kernel[(head * m.y + y) * m.z1 * m.z2 + z1 * m.z2 + z2]
    }

    /// True when the kernel puts all mass on cells with `z1 = z2 = y`.
    pub fn has_output_feedback(&self) -> bool {
        let m = &self.sizes;
        if m.z1 != m.y || m.z2 != m.y {
            return false;
        }
        let mut ok = true;
        let mut idx = [0usize; 7];
        let dims = [m.s1, m.s2, m.x1, m.x2, m.y, m.z1, m.z2];
        for &v in &self.kernel {
            if v > 0.0 && !(idx[5] == idx[4] && idx[6] == idx[4]) {
                ok = false;
            }
            advance(&mut idx, &dims);
        }
        ok
    }

    /// Joins an input distribution (any axes, which must include `X1` and
    /// `X2`) with the state and kernel, appending axes `S1, S2, Y, Z1, Z2`.
    pub fn induced_joint(&self, input: &JointPmf) -> Result<JointPmf> {
        self.induce(input, true)
    }

    /// As [`StateMac::induced_joint`] for output-feedback channels, dropping
    /// the redundant `Z1`, `Z2` axes (both equal `Y`).
    pub fn induced_joint_output_feedback(&self, input: &JointPmf) -> Result<JointPmf> {
        if !self.has_output_feedback() {
            return Err(Error::Invalid(
                "channel does not have output feedback (Z1 = Z2 = Y)".into(),
            ));
        }
        self.induce(input, false)
    }

    fn induce(&self, input: &JointPmf, keep_z: bool) -> Result<JointPmf> {
        let m = self.sizes;
        let ix1 = input.axis_index(axis::X1)?;
        let ix2 = input.axis_index(axis::X2)?;
        for (name, pos, want) in [(axis::X1, ix1, m.x1), (axis::X2, ix2, m.x2)] {
            let found = input.axes()[pos].size();
            if found != want {
                return Err(Error::AxisSize {
                    name: name.into(),
                    expected: want,
                    found,
                });
            }
        }
        for reserved in [axis::S1, axis::S2, axis::Y, axis::Z1, axis::Z2] {
            if input.has_axis(reserved) {
                return Err(Error::DuplicateAxis(reserved.into()));
            }
        }
        let mut axes = input.axes().to_vec();
        axes.push(Alphabet::new(axis::S1, m.s1)?);
        axes.push(Alphabet::new(axis::S2, m.s2)?);
        axes.push(Alphabet::new(axis::Y, m.y)?);
        if keep_z {
            axes.push(Alphabet::new(axis::Z1, m.z1)?);
            axes.push(Alphabet::new(axis::Z2, m.z2)?);
        }
        let tail = if keep_z { m.s1 * m.s2 * m.y * m.z1 * m.z2 } else { m.s1 * m.s2 * m.y };
        let mut table = Vec::with_capacity(input.table().len() * tail);
        input.for_each_cell(|idx, p| {
            let (x1, x2) = (idx[ix1], idx[ix2]);
            for s1 in 0..m.s1 {
                for s2 in 0..m.s2 {
                    let ps = p * self.state_prob(s1, s2);
                    for y in 0..m.y {
                        if keep_z {
                            for z1 in 0..m.z1 {
                                for z2 in 0..m.z2 {
                                    table.push(ps * self.kernel(y, z1, z2, x1, x2, s1, s2));
                                }
                            }
                        } else {
                            table.push(ps * self.kernel(y, y, y, x1, x2, s1, s2));
                        }
                    }
                }
            }
        });
        JointPmf::new(axes, table)
    }

    /// Parses the JSON channel description:
    ///
    /// ```json
    /// { "alphabets": {"x1": 2, "x2": 2, "s1": 2, "s2": 2, "y": 3, "z1": 3, "z2": 3},
    ///   "state_pmf": [[..], ..],                 // [s1][s2]
    ///   "kernel": [[[[[[[..]]]]]]] }             // [s1][s2][x1][x2][y][z1][z2]
    /// ```
    ///
    /// `root` is prefixed to every error path.
    pub fn from_json(value: &Value, root: &str) -> Result<Self> {
        let obj = value.as_object().ok_or_else(|| Error::Schema {
            path: root.into(),
            message: "expected an object".into(),
        })?;
        let alph = obj.get("alphabets").ok_or_else(|| Error::Schema {
            path: format!("{root}.alphabets"),
            message: "missing".into(),
        })?;
        let size = |k: &str| -> Result<usize> {
            let path = format!("{root}.alphabets.{k}");
            let v = alph.get(k).ok_or_else(|| Error::Schema {
                path: path.clone(),
                message: "missing".into(),
            })?;
            match v.as_u64() {
                Some(n) if n >= 1 => Ok(n as usize),
                _ => Err(Error::Schema {
                    path,
                    message: format!("expected a positive integer, found {v}"),
                }),
            }
        };
        let sizes = MacAlphabets {
            x1: size("x1")?,
            x2: size("x2")?,
            s1: size("s1")?,
            s2: size("s2")?,
            y: size("y")?,
            z1: size("z1")?,
            z2: size("z2")?,
        };
        let state_pmf = read_tensor(
            obj.get("state_pmf"),
            &[sizes.s1, sizes.s2],
            &format!("{root}.state_pmf"),
        )?;
        let kernel = read_tensor(
            obj.get("kernel"),
            &[sizes.s1, sizes.s2, sizes.x1, sizes.x2, sizes.y, sizes.z1, sizes.z2],
            &format!("{root}.kernel"),
        )?;
        StateMac::new(sizes, state_pmf, kernel).map_err(|e| relabel(e, root))
    }
}

fn relabel(e: Error, root: &str) -> Error {
    match e {
        Error::InvalidEntry { path, value } => Error::Schema {
            path: format!("{root}.{path}"),
            message: format!("invalid probability {value}"),
        },
        Error::NotNormalized { what, sum } => Error::Schema {
            path: format!("{root}.{what}"),
            message: format!("sums to {sum}, expected 1"),
        },
        other => other,
    }
}

/// Reads a nested JSON array of the given shape into a row-major vector,
/// reporting the exact index path of the first violation.
pub fn read_tensor(value: Option<&Value>, shape: &[usize], path: &str) -> Result<Vec<f64>> {
    let value = value.ok_or_else(|| Error::Schema {
        path: path.into(),
        message: "missing".into(),
    })?;
    let mut out = Vec::with_capacity(shape.iter().product());
    walk(value, shape, path, &mut out)?;
    Ok(out)
}

fn walk(v: &Value, shape: &[usize], path: &str, out: &mut Vec<f64>) -> Result<()> {
    match shape.split_first() {
        None => match v.as_f64() {
            Some(x) if x >= 0.0 && x.is_finite() => {
                out.push(x);
                Ok(())
            }
            _ => Err(Error::Schema {
                path: path.into(),
                message: format!("expected a nonnegative number, found {v}"),
            }),
        },
        Some((&n, rest)) => {
            let arr = v.as_array().ok_or_else(|| Error::Schema {
                path: path.into(),
                message: format!("expected an array of length {n}"),
            })?;
            if arr.len() != n {
                return Err(Error::Schema {
                    path: path.into(),
                    message: format!("expected length {n}, found {}", arr.len()),
                });
            }
            for (i, child) in arr.iter().enumerate() {
                walk(child, rest, &format!("{path}[{i}]"), out)?;
            }
            Ok(())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErasureMacParams {
    ps: f64,
}

impl ErasureMacParams {
    pub fn new(ps: f64) -> Result<Self> {
        Ok(Self {
            ps: check_prob("ps", ps)?,
        })
    }

    pub fn ps(&self) -> f64 {
        self.ps
    }
}

/// `Y = S1 X1 + S2 X2` with `Z1 = Z2 = Y` and i.i.d. Bernoulli(ps) states.
pub fn build_erasure_mac(params: ErasureMacParams) -> StateMac {
    let ps = params.ps;
    let sizes = MacAlphabets {
        x1: 2,
        x2: 2,
        s1: 2,
        s2: 2,
        y: 3,
        z1: 3,
        z2: 3,
    };
    let bern = [1.0 - ps, ps];
    let state_pmf = (0..4).map(|i| bern[i / 2] * bern[i % 2]).collect();
    let mut kernel = vec![0.0; sizes.kernel_len()];
    let mut idx = [0usize; 7];
    let dims = [2, 2, 2, 2, 3, 3, 3];
    for cell in kernel.iter_mut() {
        let [s1, s2, x1, x2, y, z1, z2] = idx;
        let out = s1 * x1 + s2 * x2;
        if y == out && z1 == out && z2 == out {
            *cell = 1.0;
        }
        advance(&mut idx, &dims);
    }
    StateMac::new(sizes, state_pmf, kernel).expect("erasure MAC tables are valid by construction")
}

/// Bernoulli parameters of `U`, `Σ_k` and `Θ_k` in the layered input
/// `X_k = U ⊕ Σ_k ⊕ Θ_k`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PolicyParams {
    pub p: f64,
    pub q: f64,
    pub r: f64,
}

impl PolicyParams {
    pub fn new(p: f64, q: f64, r: f64) -> Result<Self> {
        Ok(Self {
            p: check_prob("p", p)?,
            q: check_prob("q", q)?,
            r: check_prob("r", r)?,
        })
    }

    pub fn kappa(&self) -> f64 {
        kappa(self.q, self.r)
    }
}

/// Probability that `Σ ⊕ Θ = 0`.
pub fn kappa(q: f64, r: f64) -> f64 {
    q * r + (1.0 - q) * (1.0 - r)
}

/// Axes of [`policy_joint`] in table order.
pub const POLICY_AXES: [&str; 8] = [
    axis::U,
    axis::V1,
    axis::V2,
    axis::X1,
    axis::X2,
    axis::S1,
    axis::S2,
    axis::Y,
];

fn policy_alphabets() -> Vec<Alphabet> {
    POLICY_AXES
        .iter()
        .map(|&n| Alphabet::new(n, if n == axis::Y { 3 } else { 2 }).unwrap())
        .collect()
}

/// Flat index into the `(U, V1, V2, X1, X2, S1, S2, Y)` table.
#[inline]
#[allow(clippy::too_many_arguments)]
pub(crate) fn policy_index(u: usize, v1: usize, v2: usize, x1: usize, x2: usize, s1: usize, s2: usize, y: usize) -> usize {
    ((((((u * 2 + v1) * 2 + v2) * 2 + x1) * 2 + x2) * 2 + s1) * 2 + s2) * 3 + y
}

/// Raw `(U, V1, V2, X1, X2, S1, S2, Y)` table of the layered policy on the
/// erasure MAC; the hot path of every grid sweep.
pub(crate) fn policy_table(ps: f64, pol: &PolicyParams) -> Vec<f64> {
    let b = |t: f64| [1.0 - t, t];
    let (pu, pq, pr, pst) = (b(pol.p), b(pol.q), b(pol.r), b(ps));
    let mut table = vec![0.0; 384];
    for u in 0..2 {
        for sg1 in 0..2 {
            for sg2 in 0..2 {
                let w_us = pu[u] * pq[sg1] * pq[sg2];
                let (v1, v2) = (u ^ sg1, u ^ sg2);
                for th1 in 0..2 {
                    for th2 in 0..2 {
                        let w = w_us * pr[th1] * pr[th2];
                        let (x1, x2) = (v1 ^ th1, v2 ^ th2);
                        for s1 in 0..2 {
                            for s2 in 0..2 {
                                let y = s1 * x1 + s2 * x2;
                                table[policy_index(u, v1, v2, x1, x2, s1, s2, y)] +=
                                    w * pst[s1] * pst[s2];
                            }
                        }
                    }
                }
            }
        }
    }
    table
}

/// Joint of `(U, V1, V2, X1, X2, S1, S2, Y)` induced on the erasure MAC by
/// the layered policy: `V_k = U ⊕ Σ_k`, `X_k = V_k ⊕ Θ_k`,
/// `Y = S1 X1 + S2 X2`. `Σ_k` and `Θ_k` are summed out.
pub fn policy_joint(ps: f64, pol: &PolicyParams) -> Result<JointPmf> {
    check_prob("ps", ps)?;
    JointPmf::new(policy_alphabets(), policy_table(ps, pol))
}

/// Joint with `X1 = X2 = V1 = V2 = U ~ Bernoulli(p)`, on the same axes as
/// [`policy_joint`].
pub fn shared_input_joint(ps: f64, p: f64) -> Result<JointPmf> {
    check_prob("ps", ps)?;
    check_prob("p", p)?;
    let pu = [1.0 - p, p];
    let pst = [1.0 - ps, ps];
    JointPmf::from_fn(policy_alphabets(), |i| {
        let [u, v1, v2, x1, x2, s1, s2, y] = [i[0], i[1], i[2], i[3], i[4], i[5], i[6], i[7]];
        if v1 != u || v2 != u || x1 != u || x2 != u || y != s1 * u + s2 * u {
            return 0.0;
        }
        pu[u] * pst[s1] * pst[s2]
    })
}
