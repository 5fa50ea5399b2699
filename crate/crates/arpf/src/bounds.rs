//! Sample-complexity calculators: covering-entropy bounds for standard
//! signal models, the feature counts they imply for uniform kernel-estimate
//! guarantees, and the fixed-pair Hoeffding failure probability.
//!
//! Universal constants the theory leaves unspecified default to 1 and are
//! exposed as explicit inputs; everything uses natural logarithms. Absolute
//! feature counts are therefore conventions — their scaling in ε, dimension,
//! sparsity, and subspace count is the meaningful content.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{ArpfError, Result};
use crate::periodic::{canonical_mean_lipschitz, PeriodicMap};
use crate::sampling::FrequencySampler;

/// The unspecified universal constants in the entropy bounds. Both default
/// to 1 — a convention, not a derived value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub c: f64,
    pub c_prime: f64,
}

impl Default for BoundConstants {
    fn default() -> Self {
        BoundConstants { c: 1.0, c_prime: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SignalModelKind {
    /// Full-dimensional ball.
    Ball { dim: usize },
    /// s-sparse vectors inside the ball.
    SparseBall { dim: usize, sparsity: usize },
    /// Union of `count` subspaces of dimension `sparsity`.
    UnionOfSubspaces { dim: usize, sparsity: usize, count: u64 },
}

/// A signal set with known covering-entropy behavior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalModel {
    pub kind: SignalModelKind,
    pub radius: f64,
}

impl SignalModel {
    fn check_radius(radius: f64) -> Result<()> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(ArpfError::InvalidParameter(format!(
                "model radius must be positive and finite, got {radius}"
            )));
        }
        Ok(())
    }

    pub fn ball(dim: usize, radius: f64) -> Result<Self> {
        Self::check_radius(radius)?;
        if dim == 0 {
            return Err(ArpfError::InvalidParameter("dimension must be ≥ 1".into()));
        }
        Ok(SignalModel { kind: SignalModelKind::Ball { dim }, radius })
    }

    pub fn sparse_ball(dim: usize, sparsity: usize, radius: f64) -> Result<Self> {
        Self::check_radius(radius)?;
        if sparsity < 1 || sparsity > dim {
            return Err(ArpfError::InvalidParameter(format!(
                "sparsity must satisfy 1 ≤ s ≤ d, got s = {sparsity}, d = {dim}"
            )));
        }
        Ok(SignalModel {
            kind: SignalModelKind::SparseBall { dim, sparsity },
            radius,
        })
    }

    pub fn union_of_subspaces(
        dim: usize,
        sparsity: usize,
        count: u64,
        radius: f64,
    ) -> Result<Self> {
        Self::check_radius(radius)?;
        if sparsity < 1 || sparsity > dim {
            return Err(ArpfError::InvalidParameter(format!(
                "subspace dimension must satisfy 1 ≤ s ≤ d, got s = {sparsity}, d = {dim}"
            )));
        }
        if count < 1 {
            return Err(ArpfError::InvalidParameter(
                "subspace count must be ≥ 1".into(),
            ));
        }
        Ok(SignalModel {
            kind: SignalModelKind::UnionOfSubspaces { dim, sparsity, count },
            radius,
        })
    }
}

/// Covering-entropy upper bound `H_η` of the model at radius `eta`:
/// - ball: `C′·d·ln(1 + 2ρ/η)`
/// - sparse ball: `C·s·ln(d/s)·ln(1 + ρ/η)`
/// - union of subspaces: `C′·s·ln(1 + 2ρ/η) + ln S`
///
/// where `ρ` is the model radius.
pub fn entropy_bound(model: &SignalModel, eta: f64, constants: BoundConstants) -> Result<f64> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(ArpfError::InvalidParameter(format!(
            "covering radius must be positive and finite, got {eta}"
        )));
    }
    let rho = model.radius;
    Ok(match model.kind {
        SignalModelKind::Ball { dim } => {
            constants.c_prime * dim as f64 * (1.0 + 2.0 * rho / eta).ln()
        }
        SignalModelKind::SparseBall { dim, sparsity } => {
            constants.c
                * sparsity as f64
                * (dim as f64 / sparsity as f64).ln()
                * (1.0 + rho / eta).ln()
        }
        SignalModelKind::UnionOfSubspaces { sparsity, count, .. } => {
            constants.c_prime * sparsity as f64 * (1.0 + 2.0 * rho / eta).ln()
                + (count as f64).ln()
        }
    })
}

/// The covering-scale constant `c = 4·C_Λ·(L_f + L_g + 2·min(L_f, L_g))`
/// built from the canonical mean-Lipschitz constants of the two maps.
/// Errors for samplers whose `C_Λ` is undefined.
pub fn smoothness_scale(
    sampler: &FrequencySampler,
    f: &PeriodicMap,
    g: &PeriodicMap,
) -> Result<f64> {
    let c_lambda = sampler.c_lambda().ok_or_else(|| {
        ArpfError::UndefinedConstant(format!(
            "C_Λ is undefined for the {} sampler; feature-count bounds need it",
            sampler.family_name()
        ))
    })?;
    let lf = canonical_mean_lipschitz(f);
    let lg = canonical_mean_lipschitz(g);
    Ok(4.0 * c_lambda * (lf + lg + 2.0 * lf.min(lg)))
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(ArpfError::InvalidParameter(format!(
            "error level must be positive and finite, got {eps}"
        )));
    }
    Ok(())
}

/// Features sufficient for a uniform estimate guarantee at level `eps` over
/// the model: `⌈128·ε⁻²·H_{ε/c}⌉` with `c` from [`smoothness_scale`].
pub fn required_features_uniform(
    eps: f64,
    model: &SignalModel,
    sampler: &FrequencySampler,
    f: &PeriodicMap,
    g: &PeriodicMap,
    constants: BoundConstants,
) -> Result<u64> {
    check_eps(eps)?;
    let c = smoothness_scale(sampler, f, g)?;
    let entropy = entropy_bound(model, eps / c, constants)?;
    Ok((128.0 / (eps * eps) * entropy).ceil() as u64)
}

/// Dedicated path for the quantized-query / cosine-database pair:
/// `⌈32π²·ε⁻²·H_{ε/((8+6π)C_Λ)}⌉`. Algebraically identical to
/// [`required_features_uniform`] with `f = q`, `g = cos` at `ε′ = 2ε/π`;
/// kept as an independent formula so the identity can be cross-checked.
pub fn required_features_semi_quantized(
    eps: f64,
    model: &SignalModel,
    sampler: &FrequencySampler,
    constants: BoundConstants,
) -> Result<u64> {
    check_eps(eps)?;
    let c_lambda = sampler.c_lambda().ok_or_else(|| {
        ArpfError::UndefinedConstant(format!(
            "C_Λ is undefined for the {} sampler; feature-count bounds need it",
            sampler.family_name()
        ))
    })?;
    let eta = eps / ((8.0 + 6.0 * PI) * c_lambda);
    let entropy = entropy_bound(model, eta, constants)?;
    Ok((32.0 * PI * PI / (eps * eps) * entropy).ceil() as u64)
}

/// Feature count for the plain full-precision exponential embedding — the
/// uniform bound specialized to `f = g = exp` (`L = 1`, so `c = 16·C_Λ`).
pub fn required_features_rff(
    eps: f64,
    model: &SignalModel,
    sampler: &FrequencySampler,
    constants: BoundConstants,
) -> Result<u64> {
    required_features_uniform(
        eps,
        model,
        sampler,
        &PeriodicMap::ComplexExponential,
        &PeriodicMap::ComplexExponential,
        constants,
    )
}

/// Fixed-pair failure probability `2·exp(−mε²/2)`: the chance that one
/// inner-product estimate from `m` features misses its expectation by more
/// than `eps`.
pub fn hoeffding_failure_prob(m: u64, eps: f64) -> Result<f64> {
    if m < 1 {
        return Err(ArpfError::InvalidParameter("m must be ≥ 1".into()));
    }
    check_eps(eps)?;
    Ok(2.0 * (-(m as f64) * eps * eps / 2.0).exp())
}

/// Everything the `bounds` subcommand reports for one configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundsReport {
    pub model: SignalModel,
    pub sampler: FrequencySampler,
    pub query_map: PeriodicMap,
    pub support_map: PeriodicMap,
    pub constants: BoundConstants,
    pub eps: f64,
    pub eta: f64,
    /// H_η at the requested η.
    pub entropy_at_eta: f64,
    /// C_Λ when the sampler defines one.
    pub c_lambda: Option<f64>,
    /// Canonical mean-Lipschitz constants of the two maps.
    pub lipschitz_query: f64,
    pub lipschitz_support: f64,
    /// c = 4C_Λ(L_f + L_g + 2min); None when C_Λ is undefined.
    pub smoothness_scale: Option<f64>,
    pub uniform_features: Option<u64>,
    pub semi_quantized_features: Option<u64>,
    pub rff_features: Option<u64>,
    /// Failure probability at (hoeffding_m, eps).
    pub hoeffding_m: u64,
    pub hoeffding_failure: f64,
}

/// Assemble the full report; feature counts that need `C_Λ` become `None`
/// for samplers without one instead of failing the whole report.
pub fn bounds_report(
    model: &SignalModel,
    sampler: &FrequencySampler,
    query_map: &PeriodicMap,
    support_map: &PeriodicMap,
    eps: f64,
    eta: f64,
    hoeffding_m: u64,
    constants: BoundConstants,
) -> Result<BoundsReport> {
    check_eps(eps)?;
    let entropy_at_eta = entropy_bound(model, eta, constants)?;
    let c_lambda = sampler.c_lambda();
    let scale = smoothness_scale(sampler, query_map, support_map).ok();
    let uniform = required_features_uniform(eps, model, sampler, query_map, support_map, constants).ok();
    let semi = required_features_semi_quantized(eps, model, sampler, constants).ok();
    let rff = required_features_rff(eps, model, sampler, constants).ok();
    Ok(BoundsReport {
        model: *model,
        sampler: sampler.clone(),
        query_map: query_map.clone(),
        support_map: support_map.clone(),
        constants,
        eps,
        eta,
        entropy_at_eta,
        c_lambda,
        lipschitz_query: canonical_mean_lipschitz(query_map),
        lipschitz_support: canonical_mean_lipschitz(support_map),
        smoothness_scale: scale,
        uniform_features: uniform,
        semi_quantized_features: semi,
        rff_features: rff,
        hoeffding_m,
        hoeffding_failure: hoeffding_failure_prob(hoeffding_m, eps)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn gaussian(sigma: f64) -> FrequencySampler {
        FrequencySampler::gaussian_rbf(sigma, 4).unwrap()
    }

    #[test]
    fn entropy_reference_values() {
        let c = BoundConstants::default();
        let ball = SignalModel::ball(5, 1.0).unwrap();
        assert_abs_diff_eq!(
            entropy_bound(&ball, 0.1, c).unwrap(),
            5.0 * 21.0f64.ln(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            entropy_bound(&ball, 0.1, c).unwrap(),
            15.222612188617,
            epsilon = 1e-9
        );
        let sparse = SignalModel::sparse_ball(10, 2, 1.0).unwrap();
        assert_abs_diff_eq!(
            entropy_bound(&sparse, 0.1, c).unwrap(),
            2.0 * 5.0f64.ln() * 11.0f64.ln(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            entropy_bound(&sparse, 0.1, c).unwrap(),
            7.718527124176414,
            epsilon = 1e-9
        );
    }

    #[test]
    fn single_subspace_union_reduces_to_subspace_term() {
        let c = BoundConstants::default();
        let uos = SignalModel::union_of_subspaces(20, 3, 1, 1.0).unwrap();
        let eta = 0.07;
        assert_abs_diff_eq!(
            entropy_bound(&uos, eta, c).unwrap(),
            3.0 * (1.0 + 2.0 / eta).ln(),
            epsilon = 1e-12
        );
        // count multiplies the covering number, adds to the entropy
        let many = SignalModel::union_of_subspaces(20, 3, 64, 1.0).unwrap();
        assert_abs_diff_eq!(
            entropy_bound(&many, eta, c).unwrap() - entropy_bound(&uos, eta, c).unwrap(),
            64.0f64.ln(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn smoothness_scale_for_quantizer_cosine() {
        let scale = smoothness_scale(
            &gaussian(1.0),
            &PeriodicMap::UniversalQuantizer,
            &PeriodicMap::Cosine { k: 1 },
        )
        .unwrap();
        // 4·(4/π + 1 + 2) = 12 + 16/π ≈ 17.09
        assert_abs_diff_eq!(scale, 12.0 + 16.0 / PI, epsilon = 1e-12);
        assert_abs_diff_eq!(scale, 17.0929581, epsilon = 1e-6);
        // width scales C_Λ = 1/σ
        let half = smoothness_scale(
            &gaussian(2.0),
            &PeriodicMap::UniversalQuantizer,
            &PeriodicMap::Cosine { k: 1 },
        )
        .unwrap();
        assert_abs_diff_eq!(half, scale / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn rff_scale_is_sixteen_c_lambda() {
        let scale = smoothness_scale(
            &gaussian(1.0),
            &PeriodicMap::ComplexExponential,
            &PeriodicMap::ComplexExponential,
        )
        .unwrap();
        assert_abs_diff_eq!(scale, 16.0, epsilon = 1e-12);
    }

    #[test]
    fn semi_quantized_path_equals_generic_under_substitution() {
        let model = SignalModel::ball(8, 1.0).unwrap();
        let sampler = gaussian(1.3);
        let constants = BoundConstants::default();
        for eps in [0.05, 0.1, 0.2, 0.37, 0.5] {
            let dedicated =
                required_features_semi_quantized(eps, &model, &sampler, constants).unwrap();
            let generic = required_features_uniform(
                2.0 * eps / PI,
                &model,
                &sampler,
                &PeriodicMap::UniversalQuantizer,
                &PeriodicMap::Cosine { k: 1 },
                constants,
            )
            .unwrap();
            assert_eq!(dedicated, generic, "mismatch at eps = {eps}");
        }
    }

    #[test]
    fn hoeffding_reference_values() {
        assert_abs_diff_eq!(
            hoeffding_failure_prob(1000, 0.1).unwrap(),
            2.0 * (-5.0f64).exp(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            hoeffding_failure_prob(1000, 0.1).unwrap(),
            0.0134758939,
            epsilon = 1e-9
        );
        // vacuous at eps → 0 (checked in the limit by a tiny eps)
        assert!(hoeffding_failure_prob(10, 1e-12).unwrap() > 2.0 - 1e-9);
        // doubling m squares the exponential factor: p(2m) = p(m)²/2
        let p1 = hoeffding_failure_prob(500, 0.2).unwrap();
        let p2 = hoeffding_failure_prob(1000, 0.2).unwrap();
        assert_abs_diff_eq!(p2, p1 * p1 / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn monotonicity_in_eps_dim_sparsity_count() {
        let sampler = gaussian(1.0);
        let constants = BoundConstants::default();
        let q = PeriodicMap::UniversalQuantizer;
        let cos = PeriodicMap::Cosine { k: 1 };
        // nonincreasing in eps
        let mut prev = u64::MAX;
        for i in 1..=20 {
            let eps = 0.02 * i as f64;
            let model = SignalModel::ball(6, 1.0).unwrap();
            let m = required_features_uniform(eps, &model, &sampler, &q, &cos, constants).unwrap();
            assert!(m <= prev);
            assert!(m > 0);
            prev = m;
        }
        // nondecreasing in dim
        let mut prev = 0;
        for d in [2, 4, 8, 16, 32] {
            let model = SignalModel::ball(d, 1.0).unwrap();
            let m = required_features_uniform(0.1, &model, &sampler, &q, &cos, constants).unwrap();
            assert!(m >= prev);
            prev = m;
        }
        // nondecreasing in sparsity while s ≤ d/3 (the growing branch of s·ln(d/s))
        let mut prev = 0.0;
        for s in [1, 2, 4, 8, 16] {
            let model = SignalModel::sparse_ball(64, s, 1.0).unwrap();
            let h = entropy_bound(&model, 0.05, constants).unwrap();
            assert!(h >= prev);
            prev = h;
        }
        // nondecreasing in subspace count
        let mut prev = 0;
        for count in [1u64, 4, 64, 1024] {
            let model = SignalModel::union_of_subspaces(32, 4, count, 1.0).unwrap();
            let m = required_features_uniform(0.1, &model, &sampler, &q, &cos, constants).unwrap();
            assert!(m >= prev);
            prev = m;
        }
    }

    #[test]
    fn rff_halving_eps_roughly_quadruples() {
        let model = SignalModel::ball(5, 1.0).unwrap();
        let sampler = gaussian(1.0);
        let constants = BoundConstants::default();
        let m_half = required_features_rff(0.25, &model, &sampler, constants).unwrap();
        let m_full = required_features_rff(0.5, &model, &sampler, constants).unwrap();
        assert!(m_half > 4 * m_full); // ε⁻² factor times entropy growth
        assert!(m_full > 0);
    }

    #[test]
    fn cauchy_sampler_is_rejected_where_c_lambda_is_needed() {
        let model = SignalModel::ball(5, 1.0).unwrap();
        let cauchy = FrequencySampler::cauchy_laplace(1.0, 5).unwrap();
        let q = PeriodicMap::UniversalQuantizer;
        let cos = PeriodicMap::Cosine { k: 1 };
        match required_features_uniform(0.1, &model, &cauchy, &q, &cos, BoundConstants::default()) {
            Err(ArpfError::UndefinedConstant(_)) => {}
            other => panic!("expected undefined-constant error, got {other:?}"),
        }
        // the report still assembles, with the affected fields empty
        let report = bounds_report(
            &model,
            &cauchy,
            &q,
            &cos,
            0.1,
            0.05,
            1000,
            BoundConstants::default(),
        )
        .unwrap();
        assert!(report.uniform_features.is_none());
        assert!(report.c_lambda.is_none());
        assert!(report.entropy_at_eta > 0.0);
    }

    #[test]
    fn invalid_model_parameters_are_rejected() {
        assert!(SignalModel::ball(0, 1.0).is_err());
        assert!(SignalModel::ball(3, 0.0).is_err());
        assert!(SignalModel::sparse_ball(4, 0, 1.0).is_err());
        assert!(SignalModel::sparse_ball(4, 5, 1.0).is_err());
        assert!(SignalModel::union_of_subspaces(4, 2, 0, 1.0).is_err());
        let model = SignalModel::ball(3, 1.0).unwrap();
        assert!(entropy_bound(&model, 0.0, BoundConstants::default()).is_err());
        assert!(hoeffding_failure_prob(0, 0.1).is_err());
    }

    #[test]
    fn report_serializes_to_json() {
        let model = SignalModel::sparse_ball(16, 3, 2.0).unwrap();
        let report = bounds_report(
            &model,
            &gaussian(1.0),
            &PeriodicMap::UniversalQuantizer,
            &PeriodicMap::Cosine { k: 1 },
            0.1,
            0.05,
            2048,
            BoundConstants::default(),
        )
        .unwrap();
        let text = serde_json::to_string_pretty(&report).unwrap();
        let back: BoundsReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back.uniform_features, report.uniform_features);
        assert!(text.contains("semi_quantized_features"));
    }
}
