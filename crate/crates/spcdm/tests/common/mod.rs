//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spcdm::spcdm_core::eso::{self, BetaFormula, EsoParams};
use spcdm::spcdm_core::{LossKind, ProblemData, SmoothedLoss};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Dense random `m × n` instance with entries in `[-1, 1]` (zeros with
/// probability `1 − density`), every row nonempty, labels in `[-2, 2]`.
pub fn random_dense(m: usize, n: usize, density: f64, r: &mut ChaCha8Rng) -> ProblemData {
    let mut trip = Vec::new();
    for j in 0..m {
        let forced = r.gen_range(0..n);
        for i in 0..n {
            if i == forced || r.gen_bool(density) {
                let mut v: f64 = r.gen_range(-1.0..1.0);
                if v.abs() < 0.05 {
                    v = 0.5;
                }
                trip.push((j, i, v));
            }
        }
    }
    let b = (0..m).map(|_| r.gen_range(-2.0..2.0)).collect();
    ProblemData::from_triplets(m, n, &trip, b).unwrap()
}

pub struct EsoAudit {
    pub checks: usize,
    pub violations: usize,
    /// Largest `E[f(x + h_S)] − bound` seen (negative means every check had room).
    pub worst: f64,
}

/// Enumerates every τ-subset and compares `E f_μ(x + h_[S])` with the
/// separable bound `f_μ(x) + (τ/n)(⟨∇f_μ(x), h⟩ + (β/2) Σ w*_i h_i²)`.
pub fn eso_audit(
    loss: &SmoothedLoss,
    formula: BetaFormula,
    tau: usize,
    pairs: usize,
    r: &mut ChaCha8Rng,
    slack: f64,
) -> EsoAudit {
    let pd = loss.problem();
    let n = pd.n();
    let (sigma, _) = loss.constants();
    let params = EsoParams::new(formula, pd.omega(), tau, n, pd.m(), sigma, loss.mu()).unwrap();
    let w = eso::primal_weights(pd, loss.dual_weights()).w;
    let all = subsets(n, tau);
    let mut audit = EsoAudit {
        checks: 0,
        violations: 0,
        worst: f64::NEG_INFINITY,
    };
    for _ in 0..pairs {
        let x: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
        let scale = 10f64.powf(r.gen_range(-2.0..1.0));
        let h: Vec<f64> = (0..n).map(|_| scale * r.gen_range(-1.0..1.0)).collect();
        let f0 = loss.value_at(&x);
        let g = loss.gradient_at(&x);
        let lin: f64 = g.iter().zip(&h).map(|(g, h)| g * h).sum();
        let quad: f64 = w.iter().zip(&h).map(|(w, h)| w * h * h).sum();
        let bound = f0 + tau as f64 / n as f64 * (lin + 0.5 * params.beta * quad);
        let mut mean = 0.0;
        let mut y = x.clone();
        for s in &all {
            for &i in s {
                y[i] = x[i] + h[i];
            }
            mean += loss.value_at(&y);
            for &i in s {
                y[i] = x[i];
            }
        }
        mean /= all.len() as f64;
        let gap = mean - bound;
        audit.checks += 1;
        audit.worst = audit.worst.max(gap);
        if gap > slack {
            audit.violations += 1;
        }
    }
    audit
}

fn dense(pd: &ProblemData) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(pd.m(), pd.n());
    for (j, i, v) in pd.triplets() {
        a[(j, i)] = v;
    }
    a
}

/// `min_x ‖Ax − b‖₁` or `min_x ‖Ax − b‖∞` for a full-column-rank `A`, by
/// enumerating the vertices of the equivalent linear program: interpolation
/// of `n` rows, and equioscillation `s_j (a_j x − b_j) = t` on `n + 1` rows.
/// The minimum objective over all candidates is the optimum.
pub fn exact_min(kind: LossKind, pd: &ProblemData) -> f64 {
    let (m, n) = (pd.m(), pd.n());
    let a = dense(pd);
    let b = DVector::from_column_slice(pd.b());
    let eval = |x: &DVector<f64>| {
        let r = &a * x - &b;
        match kind {
            LossKind::L1 => r.iter().map(|v| v.abs()).sum::<f64>(),
            _ => r.iter().fold(0.0f64, |acc, v| acc.max(v.abs())),
        }
    };
    let mut best = f64::INFINITY;
    for rows in subsets(m, n) {
        let sub = DMatrix::from_fn(n, n, |r, c| a[(rows[r], c)]);
        let rhs = DVector::from_fn(n, |r, _| b[rows[r]]);
        if let Some(x) = sub.lu().solve(&rhs) {
            best = best.min(eval(&x));
        }
    }
    if kind == LossKind::Linf && m > n {
        for rows in subsets(m, n + 1) {
            for signs in 0u32..(1 << (n + 1)) {
                // unknowns (x, t): s_j a_j x − t = s_j b_j
                let s = |r: usize| if signs >> r & 1 == 1 { 1.0 } else { -1.0 };
                let sys = DMatrix::from_fn(n + 1, n + 1, |r, c| {
                    if c < n {
                        s(r) * a[(rows[r], c)]
                    } else {
                        -1.0
                    }
                });
                let rhs = DVector::from_fn(n + 1, |r, _| s(r) * b[rows[r]]);
                if let Some(sol) = sys.lu().solve(&rhs) {
                    let x = sol.rows(0, n).into_owned();
                    best = best.min(eval(&x));
                }
            }
        }
    }
    best
}

/// `min f_μ` by damped Newton with a gradient fallback, to gradient norm 1e-13.
pub fn smoothed_min(loss: &SmoothedLoss) -> f64 {
    let pd = loss.problem();
    let n = pd.n();
    let a = dense(pd);
    let mu = loss.mu();
    let thresholds: Vec<f64> = loss
        .dual_weights()
        .v
        .iter()
        .map(|v| mu * v * v)
        .collect();
    let mut x = vec![0.0; n];
    let mut f = loss.value_at(&x);
    for _ in 0..2000 {
        let g = DVector::from_vec(loss.gradient_at(&x));
        if g.norm() < 1e-13 {
            break;
        }
        let r = loss.residuals(&x);
        let h = match loss.kind() {
            LossKind::L1 => {
                let d = DVector::from_fn(r.len(), |j, _| {
                    if r[j].abs() < thresholds[j] {
                        1.0 / thresholds[j]
                    } else {
                        0.0
                    }
                });
                a.transpose() * DMatrix::from_diagonal(&d) * &a
            }
            _ => {
                let z = DVector::from_vec(loss.dual_point(&r));
                let cov = DMatrix::from_diagonal(&z) - &z * z.transpose();
                a.transpose() * cov * &a / mu
            }
        };
        let ridge = 1e-12 * (1.0 + h.trace());
        let reg = h + DMatrix::identity(n, n) * ridge;
        let mut dir = reg.lu().solve(&(-&g)).unwrap_or_else(|| -&g);
        if dir.dot(&g) >= 0.0 {
            dir = -&g;
        }
        let mut step = 1.0;
        let slope = dir.dot(&g);
        loop {
            let trial: Vec<f64> = x.iter().zip(dir.iter()).map(|(x, d)| x + step * d).collect();
            let ft = loss.value_at(&trial);
            if ft <= f + 1e-4 * step * slope || step < 1e-20 {
                if ft <= f {
                    x = trial;
                    f = ft;
                }
                break;
            }
            step *= 0.5;
        }
        if step < 1e-20 {
            break;
        }
    }
    f
}

/// Largest singular value squared of `diag(v)⁻¹ A^{(S)} diag(w)^{-1/2}` by a
/// dense SVD.
pub fn operator_norm_svd(pd: &ProblemData, s: &[usize], w: &[f64], v: &[f64]) -> f64 {
    let a = dense(pd);
    let sub = DMatrix::from_fn(pd.m(), s.len(), |j, c| a[(j, s[c])] / (v[j] * w[s[c]].sqrt()));
    let sv = sub.singular_values();
    let top = sv.iter().fold(0.0f64, |acc, v| acc.max(*v));
    top * top
}

/// `max_j |Ω(row j) ∩ S|` by brute force.
pub fn brute_lipschitz(pd: &ProblemData, s: &[usize]) -> usize {
    (0..pd.m())
        .map(|j| pd.row(j).iter().filter(|(i, _)| s.contains(i)).count())
        .max()
        .unwrap_or(0)
}

/// The mean of the last `window` values (fewer at the start) never increases.
pub fn trailing_mean_nonincreasing(values: &[f64], window: usize) -> bool {
    let mut prev = f64::INFINITY;
    for k in 0..values.len() {
        let lo = (k + 1).saturating_sub(window);
        let slice = &values[lo..=k];
        let mean = slice.iter().sum::<f64>() / slice.len() as f64;
        if mean > prev + 1e-12 * prev.abs() {
            return false;
        }
        prev = mean;
    }
    true
}
