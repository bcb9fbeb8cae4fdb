//! τ-nice sampling and the hypergeometric identities behind the ESO bounds.
//!
//! A τ-nice sampling picks a subset of `{0, …, n−1}` of cardinality exactly τ,
//! every such subset being equally likely. Draws are a pure function of
//! `(seed, round)`: the ChaCha stream id is the round counter, so any round can
//! be replayed without storing generator state.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplingKind {
    #[default]
    TauNice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplingSpec {
    pub n: usize,
    pub tau: usize,
    pub seed: u64,
    pub kind: SamplingKind,
}

impl SamplingSpec {
    pub fn tau_nice(n: usize, tau: usize, seed: u64) -> Result<Self> {
        if tau == 0 || tau > n {
            return Err(Error::InvalidParameter(format!(
                "tau must lie in 1..={n}, got {tau}"
            )));
        }
        Ok(SamplingSpec {
            n,
            tau,
            seed,
            kind: SamplingKind::TauNice,
        })
    }

    fn rng(&self, round: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(round);
        rng
    }
}

/// Reusable τ-nice generator. Keeps an index pool that is restored after every
/// draw, so each draw costs O(τ) and the output depends only on `(seed, round)`.
#[derive(Debug, Clone)]
pub struct Sampler {
    spec: SamplingSpec,
    pool: Vec<usize>,
    swaps: Vec<usize>,
}

impl Sampler {
    pub fn new(spec: SamplingSpec) -> Self {
        Sampler {
            spec,
            pool: (0..spec.n).collect(),
            swaps: Vec::with_capacity(spec.tau),
        }
    }

    pub fn spec(&self) -> &SamplingSpec {
        &self.spec
    }

    /// Writes the sorted subset for `round` into `out` (cleared first).
    pub fn draw_into(&mut self, round: u64, out: &mut Vec<usize>) {
        let SamplingSpec { n, tau, .. } = self.spec;
        out.clear();
        self.swaps.clear();
        let mut rng = self.spec.rng(round);
        // partial Fisher-Yates; u64 ranges keep the stream identical across platforms
        for k in 0..tau {
            let j = k + rng.gen_range(0..(n - k) as u64) as usize;
            self.pool.swap(k, j);
            self.swaps.push(j);
            out.push(self.pool[k]);
        }
        for k in (0..tau).rev() {
            self.pool.swap(k, self.swaps[k]);
        }
        out.sort_unstable();
    }

    pub fn draw(&mut self, round: u64) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.spec.tau);
        self.draw_into(round, &mut out);
        out
    }
}

/// One-shot draw; allocates an O(n) pool. Prefer [`Sampler`] in loops.
pub fn draw(spec: &SamplingSpec, round: u64) -> Vec<usize> {
    Sampler::new(*spec).draw(round)
}

/// Smallest and largest possible `|J ∩ Ŝ|` for `|J| = omega` under a τ-nice
/// sampling, with the lower end clamped at 1 as in the ESO sums.
pub fn intersection_bounds(omega: usize, n: usize, tau: usize) -> (usize, usize) {
    let k_min = 1.max(tau.saturating_sub(n - omega));
    let k_max = tau.min(omega);
    (k_min, k_max)
}

/// `P(|J ∩ Ŝ| = l)` for `|J| = omega` and a τ-nice `Ŝ` over `n` blocks, i.e.
/// `C(ω,l)·C(n−ω,τ−l)/C(n,τ)`. Zero outside the support.
///
/// Evaluated as a sum of logarithms with Loader's saddle-point expansion of the
/// binomial terms, then exponentiated once. This keeps full relative precision
/// for `n` in the millions, where differences of `ln Γ` values would lose
/// about ten digits.
pub fn hypergeom_pmf(omega: usize, n: usize, tau: usize, l: i64) -> f64 {
    if omega > n || tau > n || l < 0 {
        return 0.0;
    }
    let l = l as usize;
    let others = n - omega;
    if l > omega || l > tau || tau - l > others {
        return 0.0;
    }
    if tau == 0 {
        return 1.0;
    }
    let p = tau as f64 / n as f64;
    let q = (n - tau) as f64 / n as f64;
    let ln_p1 = ln_binom_term(l, omega, p, q);
    let ln_p2 = ln_binom_term(tau - l, others, p, q);
    let ln_p3 = ln_binom_term(tau, n, p, q);
    libm::exp(ln_p1 + ln_p2 - ln_p3)
}

/// `E[|J ∩ Ŝ|²] = (|J|τ/n)(1 + (|J|−1)(τ−1)/max(1, n−1))`
pub fn expected_intersection_sq(j_size: usize, n: usize, tau: usize) -> f64 {
    if j_size == 0 {
        return 0.0;
    }
    let (j, n, t) = (j_size as f64, n as f64, tau as f64);
    (j * t / n) * (1.0 + (j - 1.0) * (t - 1.0) / (n - 1.0).max(1.0))
}

/// `max_i E[|J ∩ Ŝ|·χ(i ∈ Ŝ)] = (τ/n)(1 + (|J|−1)(τ−1)/max(1, n−1))`, attained
/// at any `i ∈ J`.
pub fn max_inclusion_intersection(j_size: usize, n: usize, tau: usize) -> f64 {
    if j_size == 0 {
        return 0.0;
    }
    let (j, n, t) = (j_size as f64, n as f64, tau as f64);
    (t / n) * (1.0 + (j - 1.0) * (t - 1.0) / (n - 1.0).max(1.0))
}

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// `ln(k!) − [½ln(2πk) + k ln k − k]`
fn stirling_error(k: usize) -> f64 {
    #[allow(clippy::excessive_precision)]
    const TABLE: [f64; 16] = [
        0.0,
        0.081_061_466_795_327_258_22,
        0.041_340_695_955_409_294_09,
        0.027_677_925_684_998_339_15,
        0.020_790_672_103_765_093_11,
        0.016_644_691_189_821_192_16,
        0.013_876_128_823_070_747_999,
        0.011_896_709_945_891_770_095,
        0.010_411_265_261_972_096_497,
        0.009_255_462_182_712_732_918,
        0.008_330_563_433_362_871_256,
        0.007_573_675_487_951_840_795,
        0.006_942_840_107_209_529_866,
        0.006_408_994_188_004_207_068,
        0.005_951_370_112_758_847_736,
        0.005_554_733_551_962_801_371,
    ];
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if k < TABLE.len() {
        return TABLE[k];
    }
    let x = k as f64;
    let xx = x * x;
    if k > 500 {
        (S0 - S1 / xx) / x
    } else if k > 80 {
        (S0 - (S1 - S2 / xx) / xx) / x
    } else if k > 35 {
        (S0 - (S1 - (S2 - S3 / xx) / xx) / xx) / x
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / xx) / xx) / xx) / xx) / x
    }
}

/// Deviance term `x ln(x/np) + np − x`, series-expanded near `x = np`.
fn bd0(x: f64, np: f64) -> f64 {
    if libm::fabs(x - np) < 0.1 * (x + np) {
        let mut v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * libm::log(x / np) + np - x
    }
}

/// `ln[C(size, x) p^x q^(size−x)]` with `q = 1 − p` supplied separately.
fn ln_binom_term(x: usize, size: usize, p: f64, q: f64) -> f64 {
    if p == 0.0 {
        return if x == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if q == 0.0 {
        return if x == size { 0.0 } else { f64::NEG_INFINITY };
    }
    let nf = size as f64;
    if x == 0 {
        if size == 0 {
            return 0.0;
        }
        return if p < 0.1 {
            -bd0(nf, nf * q) - nf * p
        } else {
            nf * libm::log(q)
        };
    }
    if x == size {
        return if q < 0.1 {
            -bd0(nf, nf * p) - nf * q
        } else {
            nf * libm::log(p)
        };
    }
    let xf = x as f64;
    let lc = stirling_error(size)
        - stirling_error(x)
        - stirling_error(size - x)
        - bd0(xf, nf * p)
        - bd0(nf - xf, nf * q);
    let lf = LN_2PI + libm::log(xf) + libm::log1p(-xf / nf);
    lc - 0.5 * lf
}
