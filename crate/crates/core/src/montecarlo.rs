//! Seeded per-symbol simulation of the layered policy on the erasure MAC.
//!
//! Samples are drawn in fixed chunks of [`CHUNK`] symbols. Chunk `c` uses
//! ChaCha8 seeded with `seed` on stream `c`, and chunks only contribute
//! integer counts, so the result is bit-identical for any thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{policy_joint, PolicyParams};
use crate::error::{Error, Result};
use crate::estimation::{achievable_cost_oracle, expected_distortion, CostTable, User};

/// Symbols per RNG stream.
pub const CHUNK: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub ps: f64,
    pub policy: PolicyParams,
    pub samples: u64,
    pub seed: u64,
}

/// One simulation run; serializes to the JSON line
/// `{ps, p, q, r, samples, seed, mean, stderr, analytic}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimResult {
    pub ps: f64,
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub samples: u64,
    pub seed: u64,
    /// Empirical mean of `(d(S1, Ŝ1) + d(S2, Ŝ2)) / 2`.
    pub mean: f64,
    /// Sample standard deviation over `√samples`.
    pub stderr: f64,
    /// `E[c̲1(X1, V2)]` of the cost table used.
    pub analytic: f64,
}

#[derive(Default, Clone, Copy)]
struct Counts {
    one_error: u64,
    two_errors: u64,
}

/// Simulates `cfg.samples` channel uses. User 1 applies `ct`'s estimator to
/// `(x1, v2, y)`; user 2 applies the same map to `(x2, v1, y)`, which is the
/// mirror-image estimator under the symmetric policy.
pub fn simulate_distortion(cfg: &SimConfig, ct: &CostTable) -> Result<SimResult> {
    let pol = PolicyParams::new(cfg.policy.p, cfg.policy.q, cfg.policy.r)?;
    if !(0.0..=1.0).contains(&cfg.ps) {
        return Err(Error::Domain {
            what: "ps",
            value: cfg.ps,
        });
    }
    if cfg.samples == 0 {
        return Err(Error::Invalid("samples must be positive".into()));
    }
    let est = ct
        .estimator()
        .ok_or_else(|| Error::Invalid("cost table carries no estimator".into()))?;
    let sizes: Vec<usize> = est.obs_axes().iter().map(|a| a.size()).collect();
    if sizes != [2, 2, 3] {
        return Err(Error::Invalid(format!(
            "estimator must observe (x, v, y) with sizes [2, 2, 3], got {sizes:?}"
        )));
    }
    // lookup[(x * 2 + v) * 3 + y]
    let mut lookup = [0u8; 12];
    for x in 0..2 {
        for v in 0..2 {
            for y in 0..3 {
                lookup[(x * 2 + v) * 3 + y] = est.estimate_or_default(&[x, v, y]).unwrap_or(0) as u8;
            }
        }
    }
    let j = policy_joint(cfg.ps, &pol)?;
    let analytic = expected_distortion(&j, ct)?;

    let n_chunks = cfg.samples.div_ceil(CHUNK);
    let counts: Vec<Counts> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(c);
            let len = CHUNK.min(cfg.samples - c * CHUNK);
            let mut k = Counts::default();
            for _ in 0..len {
                let u = rng.gen_bool(pol.p) as usize;
                let v1 = u ^ rng.gen_bool(pol.q) as usize;
                let v2 = u ^ rng.gen_bool(pol.q) as usize;
                let x1 = v1 ^ rng.gen_bool(pol.r) as usize;
                let x2 = v2 ^ rng.gen_bool(pol.r) as usize;
                let s1 = rng.gen_bool(cfg.ps) as usize;
                let s2 = rng.gen_bool(cfg.ps) as usize;
                let y = s1 * x1 + s2 * x2;
                let e1 = lookup[(x1 * 2 + v2) * 3 + y] as usize != s1;
                let e2 = lookup[(x2 * 2 + v1) * 3 + y] as usize != s2;
                match (e1, e2) {
                    (true, true) => k.two_errors += 1,
                    (false, false) => {}
                    _ => k.one_error += 1,
                }
            }
            k
        })
        .collect();
    let total = counts.iter().fold(Counts::default(), |a, b| Counts {
        one_error: a.one_error + b.one_error,
        two_errors: a.two_errors + b.two_errors,
    });

    // per-sample score is 0, 1/2 or 1
    let n = cfg.samples as f64;
    let sum = 0.5 * total.one_error as f64 + total.two_errors as f64;
    let sum_sq = 0.25 * total.one_error as f64 + total.two_errors as f64;
    let mean = sum / n;
    let stderr = if cfg.samples > 1 {
        ((sum_sq - n * mean * mean).max(0.0) / (n - 1.0) / n).sqrt()
    } else {
        0.0
    };
    Ok(SimResult {
        ps: cfg.ps,
        p: pol.p,
        q: pol.q,
        r: pol.r,
        samples: cfg.samples,
        seed: cfg.seed,
        mean,
        stderr,
        analytic,
    })
}

/// Derives the user-1 Bayes estimator for the policy and simulates it.
pub fn simulate_policy(cfg: &SimConfig) -> Result<SimResult> {
    let j = policy_joint(cfg.ps, &cfg.policy)?;
    let ct = achievable_cost_oracle(&j, User::One)?;
    simulate_distortion(cfg, &ct)
}
