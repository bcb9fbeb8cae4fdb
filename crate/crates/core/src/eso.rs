//! Expected separable overapproximation parameters.
//!
//! With the data-dependent weights `w*` every single column has unit operator
//! norm, so the stepsize factor `β′` only depends on the sparsity degree `ω`,
//! the number of blocks `n`, the sampling size `τ` and (for `p = 1`) the number
//! of rows `m`. The actual stepsize parameter is `β = β′/(σμ)`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::problem::ProblemData;
use crate::sampling::{hypergeom_pmf, intersection_bounds};
use crate::smoothing::LossKind;

/// Exponent `p` of the weighted dual norm `‖z‖_v = (Σ v_jᵖ|z_j|ᵖ)^{1/p}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    L1,
    L2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualWeights {
    pub v: Vec<f64>,
    pub p: NormKind,
}

/// `w*`; zero on columns without nonzeros, which never get updated.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalWeights {
    pub w: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaFormula {
    /// `min{ω, τ}`; valid for any τ-uniform sampling.
    Beta1,
    /// τ-nice sampling with `p = 2`.
    Beta2,
    /// τ-nice sampling with `p = 1`.
    Beta3,
    /// User-supplied `β′`.
    Override(f64),
}

impl BetaFormula {
    /// The tightest proven formula for τ-nice sampling under norm `p`.
    pub fn default_for(p: NormKind) -> Self {
        match p {
            NormKind::L1 => BetaFormula::Beta3,
            NormKind::L2 => BetaFormula::Beta2,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BetaFormula::Beta1 => "beta1",
            BetaFormula::Beta2 => "beta2",
            BetaFormula::Beta3 => "beta3",
            BetaFormula::Override(_) => "override",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EsoParams {
    pub beta_prime: f64,
    pub formula: BetaFormula,
    pub sigma: f64,
    pub mu: f64,
    pub beta: f64,
}

impl EsoParams {
    /// Evaluates `formula` for the given shape and sets `β = β′/(σμ)`.
    pub fn new(
        formula: BetaFormula,
        omega: usize,
        tau: usize,
        n: usize,
        m: usize,
        sigma: f64,
        mu: f64,
    ) -> Result<Self> {
        if !(sigma > 0.0 && mu > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma and mu must be positive (sigma = {sigma}, mu = {mu})"
            )));
        }
        if tau == 0 || tau > n {
            return Err(Error::InvalidParameter(format!(
                "tau must lie in 1..={n}, got {tau}"
            )));
        }
        let beta_prime = match formula {
            BetaFormula::Beta1 => beta1(omega, tau),
            BetaFormula::Beta2 => beta2(omega, tau, n),
            BetaFormula::Beta3 => beta3(omega, tau, n, m),
            BetaFormula::Override(b) if b > 0.0 && b.is_finite() => b,
            BetaFormula::Override(b) => {
                return Err(Error::InvalidParameter(format!("beta override {b} is not positive")))
            }
        };
        Ok(EsoParams {
            beta_prime,
            formula,
            sigma,
            mu,
            beta: beta_prime / (sigma * mu),
        })
    }
}

/// Dual norm weights for each application.
///
/// L-infinity and log-exponential use `p = 1`, `v = 1`; L1 regression uses
/// `p = 2` with `v_j = Σ_i A_ji²`.
pub fn dual_weights(pd: &ProblemData, kind: LossKind) -> Result<DualWeights> {
    match kind {
        LossKind::Linf | LossKind::AdaBoost => Ok(DualWeights {
            v: vec![1.0; pd.m()],
            p: NormKind::L1,
        }),
        LossKind::L1 => {
            let mut v = Vec::with_capacity(pd.m());
            for j in 0..pd.m() {
                let s = pd.row(j).sq_norm();
                if s == 0.0 {
                    return Err(Error::EmptyRow(j));
                }
                v.push(s);
            }
            Ok(DualWeights { v, p: NormKind::L2 })
        }
    }
}

/// `w*_i = max_j v_j⁻² A_ji²` for `p = 1`, `Σ_j v_j⁻² A_ji²` for `p = 2`.
pub fn primal_weights(pd: &ProblemData, dw: &DualWeights) -> PrimalWeights {
    let w = (0..pd.n())
        .map(|i| {
            let terms = pd.col(i).iter().map(|(j, a)| a * a / (dw.v[j] * dw.v[j]));
            match dw.p {
                NormKind::L1 => terms.fold(0.0, f64::max),
                NormKind::L2 => terms.sum(),
            }
        })
        .collect();
    PrimalWeights { w }
}

/// `β′₁ = min{ω, τ}`
pub fn beta1(omega: usize, tau: usize) -> f64 {
    omega.min(tau) as f64
}

/// `β′₂ = 1 + (ω−1)(τ−1)/max(1, n−1)`
pub fn beta2(omega: usize, tau: usize, n: usize) -> f64 {
    let (w, t, n) = (omega as f64, tau as f64, n as f64);
    1.0 + (w - 1.0) * (t - 1.0) / (n - 1.0).max(1.0)
}

/// `β′₃ = Σ_{k=1}^{k_max} min{1, (mn/τ) Σ_{l=max(k,k_min)}^{k_max} c_l π_l}`,
/// with `π_l` the hypergeometric pmf and
/// `c_l = max{l/ω, (τ−l)/(n−ω)}` (or `l/ω` when `ω = n`).
///
/// The inner sums are suffix sums, so the whole evaluation is O(k_max).
pub fn beta3(omega: usize, tau: usize, n: usize, m: usize) -> f64 {
    if omega == 0 || tau == 0 {
        return 0.0;
    }
    let omega = omega.min(n);
    let (k_min, k_max) = intersection_bounds(omega, n, tau);
    if k_max < k_min {
        return 0.0;
    }
    let (wf, tf) = (omega as f64, tau as f64);
    let c = |l: usize| -> f64 {
        let lf = l as f64;
        let c = if omega < n {
            (lf / wf).max((tf - lf) / (n - omega) as f64)
        } else {
            lf / wf
        };
        c.clamp(0.0, 1.0)
    };
    let scale = m as f64 * n as f64 / tf;
    let mut total = 0.0;
    let mut tail = 0.0;
    for k in (1..=k_max).rev() {
        if k >= k_min {
            tail += c(k) * hypergeom_pmf(omega, n, tau, k as i64);
        }
        total += (scale * tail).min(1.0);
    }
    total
}

/// `L_S = max_j |Ω(Aᵀe_j) ∩ S|`
pub fn subspace_lipschitz(pd: &ProblemData, s: &[usize]) -> usize {
    let mut in_s = vec![false; pd.n()];
    for &i in s {
        in_s[i] = true;
    }
    (0..pd.m())
        .map(|j| pd.row(j).indices.iter().filter(|&&i| in_s[i]).count())
        .max()
        .unwrap_or(0)
}

/// `max_j v_j⁻² A_ji² / w_i`: the squared operator norm of the single column
/// `i` for `p = 1`. Equals one for every active column when `w = w*`.
pub fn single_column_norm_sq_l1(pd: &ProblemData, i: usize, w: &[f64], v: &[f64]) -> f64 {
    pd.col(i)
        .iter()
        .map(|(j, a)| a * a / (v[j] * v[j] * w[i]))
        .fold(0.0, f64::max)
}

const ORACLE_MAX_DIM: usize = 200;
const ORACLE_MAX_ITERS: usize = 10_000;
const ORACLE_TOL: f64 = 1e-9;
const ORACLE_RESTARTS: u64 = 3;

/// Squared largest singular value of `diag(v)⁻¹ A^{(S)} diag(w)^{-1/2}`, i.e.
/// `‖A^{(S)}‖²_{w,v}` for the weighted Euclidean (`p = 2`) norms.
///
/// Dense power iteration on the `|S|×|S|` Gram matrix; meant for test-scale
/// audits only (`|S|, m ≤ 200`).
pub fn operator_norm_oracle(pd: &ProblemData, s: &[usize], w: &[f64], v: &[f64]) -> Result<f64> {
    let (m, k) = (pd.m(), s.len());
    if m > ORACLE_MAX_DIM || k > ORACLE_MAX_DIM {
        return Err(Error::InvalidParameter(format!(
            "operator norm oracle is limited to {ORACLE_MAX_DIM} rows/columns (got {m}×{k})"
        )));
    }
    if k == 0 {
        return Ok(0.0);
    }
    let mut dense = vec![0.0; m * k];
    for (c, &i) in s.iter().enumerate() {
        if !(w[i] > 0.0) {
            return Err(Error::InvalidParameter(format!("w[{i}] must be positive")));
        }
        let scale = 1.0 / libm::sqrt(w[i]);
        for (j, a) in pd.col(i).iter() {
            dense[j * k + c] = a * scale / v[j];
        }
    }
    let mut gram = vec![0.0; k * k];
    for r in 0..k {
        for c in r..k {
            let g: f64 = (0..m).map(|j| dense[j * k + r] * dense[j * k + c]).sum();
            gram[r * k + c] = g;
            gram[c * k + r] = g;
        }
    }
    if gram.iter().all(|&g| g == 0.0) {
        return Ok(0.0);
    }

    let mut best = 0.0f64;
    for restart in 0..ORACLE_RESTARTS {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + restart);
        let mut x: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
        normalize(&mut x);
        let mut lambda = 0.0;
        let mut converged = false;
        for _ in 0..ORACLE_MAX_ITERS {
            let y: Vec<f64> = (0..k)
                .map(|r| (0..k).map(|c| gram[r * k + c] * x[c]).sum())
                .collect();
            let next: f64 = y.iter().zip(&x).map(|(a, b)| a * b).sum();
            let norm = libm::sqrt(y.iter().map(|a| a * a).sum());
            if norm == 0.0 {
                // start orthogonal to the range; try the next restart
                converged = true;
                break;
            }
            x = y.into_iter().map(|a| a / norm).collect();
            if (next - lambda).abs() <= ORACLE_TOL * next.abs() {
                lambda = next;
                converged = true;
                break;
            }
            lambda = next;
        }
        if !converged {
            return Err(Error::NoConvergence(ORACLE_MAX_ITERS));
        }
        best = best.max(lambda);
    }
    Ok(best)
}

fn normalize(x: &mut [f64]) {
    let norm = libm::sqrt(x.iter().map(|a| a * a).sum());
    if norm > 0.0 {
        x.iter_mut().for_each(|a| *a /= norm);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_by_two() -> ProblemData {
        // columns (1, 0) and (2, 3)
        ProblemData::from_rows(2, &[vec![(0, 1.0), (1, 2.0)], vec![(1, 3.0)]], vec![0.0, 0.0])
            .unwrap()
    }

    fn identity(n: usize) -> ProblemData {
        let t: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        ProblemData::from_triplets(n, n, &t, vec![0.0; n]).unwrap()
    }

    #[test]
    fn dual_weights_per_application() {
        let pd = ProblemData::from_rows(2, &[vec![(0, 1.0), (1, 2.0)], vec![(1, 3.0)]], vec![0.0; 2])
            .unwrap();
        let dw = dual_weights(&pd, LossKind::L1).unwrap();
        assert_eq!(dw.v, vec![5.0, 9.0]);
        assert_eq!(dw.p, NormKind::L2);
        let dw = dual_weights(&pd, LossKind::Linf).unwrap();
        assert_eq!(dw.v, vec![1.0, 1.0]);
        assert_eq!(dw.p, NormKind::L1);
        assert_eq!(dual_weights(&identity(4), LossKind::L1).unwrap().v, vec![1.0; 4]);

        let holey = ProblemData::from_rows(2, &[vec![(0, 1.0)], vec![]], vec![0.0; 2]).unwrap();
        assert_eq!(dual_weights(&holey, LossKind::L1), Err(Error::EmptyRow(1)));
    }

    #[test]
    fn primal_weights_by_hand() {
        let pd = two_by_two();
        let ones = |p| DualWeights { v: vec![1.0, 1.0], p };
        assert_eq!(primal_weights(&pd, &ones(NormKind::L2)).w, vec![1.0, 13.0]);
        assert_eq!(primal_weights(&pd, &ones(NormKind::L1)).w, vec![1.0, 9.0]);
        let id = identity(3);
        let dw = DualWeights { v: vec![1.0; 3], p: NormKind::L2 };
        assert_eq!(primal_weights(&id, &dw).w, vec![1.0; 3]);
    }

    #[test]
    fn inactive_columns_get_zero_weight() {
        let pd = ProblemData::from_rows(3, &[vec![(0, 1.0)], vec![(2, 2.0)]], vec![0.0; 2]).unwrap();
        let dw = dual_weights(&pd, LossKind::L1).unwrap();
        assert_eq!(primal_weights(&pd, &dw).w[1], 0.0);
        assert_eq!(pd.active_columns(), vec![0, 2]);
    }

    #[test]
    fn beta_formulas_by_hand() {
        assert_eq!(beta1(414, 16), 16.0);
        assert_eq!(beta1(1, 9), 1.0);
        assert_eq!(beta1(9, 1), 1.0);
        assert_eq!(beta2(1, 7, 10), 1.0);
        assert_eq!(beta2(3, 2, 5), 1.5);
        let b = beta2(414, 16, 3_231_961);
        assert!((b - (1.0 + 413.0 * 15.0 / 3_231_960.0)).abs() < 1e-15);
        assert!((b - 1.00192).abs() < 1e-5);
    }

    #[test]
    fn beta3_serial_and_table_values() {
        for m in [1, 5, 1000] {
            assert!((beta3(4, 1, 4, m) - 1.0).abs() < 1e-15);
        }
        // frozen from an independent evaluation of the same sum
        // (Python, log-gamma binomials, no suffix accumulation)
        assert!((beta3(6061, 4, 100_000, 1600) - 3.355_917_126_263_61).abs() < 1e-9);
        assert!((beta3(6061, 16, 100_000, 1600) - 6.266_803_772_969_877).abs() < 1e-9);
        assert!((beta3(6061, 4, 100_000, 800) - 3.177_958_563_131_805).abs() < 1e-9);
    }

    #[test]
    fn eso_params_divides_by_sigma_mu() {
        let p = EsoParams::new(BetaFormula::Beta2, 3, 2, 5, 10, 1.0, 0.5).unwrap();
        assert_eq!(p.beta_prime, 1.5);
        assert_eq!(p.beta, 3.0);
        let o = EsoParams::new(BetaFormula::Override(0.25), 3, 2, 5, 10, 2.0, 0.5).unwrap();
        assert_eq!(o.beta, 0.25);
        assert!(EsoParams::new(BetaFormula::Override(-1.0), 3, 2, 5, 10, 1.0, 1.0).is_err());
        assert!(EsoParams::new(BetaFormula::Beta1, 3, 6, 5, 10, 1.0, 1.0).is_err());
        assert!(EsoParams::new(BetaFormula::Beta1, 3, 2, 5, 10, 1.0, 0.0).is_err());
    }

    #[test]
    fn subspace_lipschitz_small_cases() {
        // rows {1,2} and {2,3} (1-based in the example, 0-based here)
        let pd = ProblemData::from_rows(3, &[vec![(0, 1.0), (1, 1.0)], vec![(1, 1.0), (2, 1.0)]], vec![0.0; 2])
            .unwrap();
        assert_eq!(subspace_lipschitz(&pd, &[1]), 1);
        assert_eq!(subspace_lipschitz(&pd, &[0, 1]), 2);
        assert_eq!(subspace_lipschitz(&pd, &[0, 2]), 1);
        assert_eq!(subspace_lipschitz(&pd, &[]), 0);
        assert_eq!(subspace_lipschitz(&pd, &[0, 1, 2]), pd.omega());
    }

    #[test]
    fn oracle_on_identity() {
        let id = identity(3);
        let one = vec![1.0; 3];
        assert!((operator_norm_oracle(&id, &[0], &one, &one).unwrap() - 1.0).abs() < 1e-12);
        assert!((operator_norm_oracle(&id, &[0, 2], &one, &one).unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(operator_norm_oracle(&id, &[], &one, &one).unwrap(), 0.0);
    }

    #[test]
    fn oracle_rank_one_exact() {
        // all-ones 3×2 block: σ_max² = 6
        let t: Vec<_> = (0..3).flat_map(|j| (0..2).map(move |i| (j, i, 1.0))).collect();
        let pd = ProblemData::from_triplets(3, 2, &t, vec![0.0; 3]).unwrap();
        let got = operator_norm_oracle(&pd, &[0, 1], &[1.0, 1.0], &[1.0; 3]).unwrap();
        assert!((got - 6.0).abs() < 1e-8);
    }

    proptest! {
        #[test]
        fn beta_orderings(omega in 1usize..60, extra in 0usize..60, tau_frac in 0.0f64..1.0, m in 1usize..50) {
            let n = omega + extra;
            let tau = 1 + ((n - 1) as f64 * tau_frac) as usize;
            let b1 = beta1(omega, tau);
            let b2 = beta2(omega, tau, n);
            let b3 = beta3(omega, tau, n, m);
            prop_assert!(b2 <= b1 + 1e-12);
            prop_assert!(b2 <= b3 + 1e-12, "b2 {} b3 {}", b2, b3);
            prop_assert!(b3 <= omega.min(tau) as f64 + 1e-12);
            prop_assert!(b2 >= 1.0 && b3 >= 1.0 - 1e-12);
        }

        #[test]
        fn beta_monotone_in_tau_and_omega(omega in 1usize..40, extra in 1usize..40, m in 1usize..30) {
            let n = omega + extra;
            for tau in 1..n {
                prop_assert!(beta2(omega, tau + 1, n) >= beta2(omega, tau, n));
                prop_assert!(beta3(omega, tau + 1, n, m) >= beta3(omega, tau, n, m) - 1e-12);
                prop_assert!(beta2(omega + 1, tau, n) >= beta2(omega, tau, n));
                prop_assert!(beta3(omega + 1, tau, n, m) >= beta3(omega, tau, n, m) - 1e-12);
            }
            prop_assert_eq!(beta2(omega, 1, n), 1.0);
            prop_assert!((beta3(omega, 1, n, m) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn lipschitz_bounded_by_omega_and_size(seed in 0u64..500, mask in 0u32..(1 << 9)) {
            let pd = ProblemData::synthetic(6, 9, 4, seed).unwrap();
            let s: Vec<usize> = (0..9).filter(|i| mask & (1 << i) != 0).collect();
            let ls = subspace_lipschitz(&pd, &s);
            prop_assert!(ls <= pd.omega().min(s.len()));
        }
    }
}
