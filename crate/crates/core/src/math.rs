//! Small numeric utilities: link functions, seed streams, deterministic
//! parallel reduction, compensated summation, and Gauss-Legendre quadrature.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Numerically stable inverse-logit.
#[inline]
pub fn expit(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Log-odds of a probability strictly inside (0, 1).
#[inline]
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Clamp a probability into `[lo, 1 - lo]`.
#[inline]
pub fn clamp_prob(p: f64, lo: f64) -> f64 {
    p.clamp(lo, 1.0 - lo)
}

/// Named sub-streams of the master seed. Each (seed, stream, index) triple
/// maps to an independent generator, so parallel draws never depend on
/// scheduling order.
pub mod stream {
    pub const WORLD: u64 = 1;
    pub const NOISE: u64 = 2;
    pub const REPLICATE: u64 = 3;
    pub const TRUTH_POP: u64 = 4;
    pub const FOLDS: u64 = 5;
    pub const FUNCTION_SHIFT: u64 = 6;
}

/// SplitMix64 finalizer; decorrelates structured inputs.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed for (stream, index) under a master seed.
#[inline]
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    mix64(mix64(master ^ mix64(stream)).wrapping_add(index))
}

/// Deterministic per-unit generator: a pure function of (master, stream, index).
#[inline]
pub fn unit_rng(master: u64, stream: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, stream, index))
}

/// Fixed chunk size for deterministic parallel reductions.
pub const CHUNK: usize = 1 << 14;

/// Map fixed index chunks in parallel, then combine the partials
/// sequentially in chunk order. Chunk boundaries do not depend on the thread
/// count, so the result is bitwise identical for one or many threads.
pub fn par_chunked<P, M, R>(n: usize, map: M, mut reduce: R)
where
    P: Send,
    M: Fn(std::ops::Range<usize>) -> P + Sync,
    R: FnMut(P),
{
    if n == 0 {
        return;
    }
    let n_chunks = n.div_ceil(CHUNK);
    let partials: Vec<P> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = usize::min(lo + CHUNK, n);
            map(lo..hi)
        })
        .collect();
    for p in partials {
        reduce(p);
    }
}

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Standard-normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    Normal::new(0.0, 1.0).unwrap().inverse_cdf(p)
}

/// Gauss-Legendre nodes and weights on [0, 1].
///
/// Nodes are the roots of the Legendre polynomial, found by Newton iteration
/// from the Chebyshev initial guess; exact for polynomials up to degree 2n-1.
pub fn gauss_legendre_unit(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 2);
    let mut out = Vec::with_capacity(n);
    let m = n.div_ceil(2);
    for i in 0..m {
        // Initial guess on [-1, 1].
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n(x) and P'_n(x).
            let (mut p0, mut p1) = (1.0_f64, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // Map from [-1, 1] to [0, 1]; push the mirrored node as well.
        out.push(((1.0 - x) / 2.0, w / 2.0));
        if 2 * (i + 1) <= n {
            out.push(((1.0 + x) / 2.0, w / 2.0));
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Integrate `f` over [0, 1] with an `n`-node Gauss-Legendre rule.
pub fn integrate_unit<F: Fn(f64) -> f64>(n: usize, f: F) -> f64 {
    let mut acc = KahanSum::default();
    for (x, w) in gauss_legendre_unit(n) {
        acc.add(w * f(x));
    }
    acc.value()
}
