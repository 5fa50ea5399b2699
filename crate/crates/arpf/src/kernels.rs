//! Expected kernels of feature inner products, their normalizations, and
//! distance maps that convert similarity scores back into metric distances.
//!
//! For maps `f`, `g` with Fourier coefficients `F_k`, `G_k` and a frequency
//! sampler whose base kernel profile is `κ₀`, the expectation of
//! `m · <z_f(x), z_g(y)>` is the series `Σ_k F_k conj(G_k) κ₀(|k|·s)` in the
//! distance `s` between the points. When at least one side has a finite
//! spectrum the series is a finite sum; the fully quantized pair needs a
//! truncated series or, under the Gaussian sampler, an exact quadrature of
//! the quantizer's triangular autocorrelation against the normal density.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{ArpfError, Result};
use crate::features::MapCombo;
use crate::periodic::{pf_inner_product, quantizer_triangle, PeriodicMap};
use crate::sampling::FrequencySampler;

/// Stopping rule for the doubly infinite quantizer/quantizer series.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SeriesTruncation {
    /// Absolute bound on the discarded tail.
    pub tol: f64,
    /// Hard cap on summed terms; exceeding it is an error, not a silent
    /// truncation.
    pub max_terms: usize,
}

impl Default for SeriesTruncation {
    fn default() -> Self {
        SeriesTruncation {
            tol: 1e-10,
            max_terms: 60_000_000,
        }
    }
}

/// The expectation of the rescaled feature inner product as a function of
/// inter-point distance, for one query map, one support map, and a sampler.
#[derive(Debug, Clone)]
pub struct ExpectedKernel {
    pub query: PeriodicMap,
    pub support: PeriodicMap,
    pub sampler: FrequencySampler,
    pub truncation: SeriesTruncation,
}

impl ExpectedKernel {
    pub fn new(query: PeriodicMap, support: PeriodicMap, sampler: FrequencySampler) -> Self {
        ExpectedKernel {
            query,
            support,
            sampler,
            truncation: SeriesTruncation::default(),
        }
    }

    pub fn with_truncation(mut self, truncation: SeriesTruncation) -> Self {
        self.truncation = truncation;
        self
    }

    /// Series value at distance `s ≥ 0`.
    pub fn at_distance(&self, s: f64) -> Result<Complex64> {
        if !(s >= 0.0) || !s.is_finite() {
            return Err(ArpfError::InvalidParameter(format!(
                "distance must be finite and nonnegative, got {s}"
            )));
        }
        if s == 0.0 {
            // κ₀(0) = 1 for every profile, so the series collapses to the
            // inner product of the maps.
            return Ok(pf_inner_product(&self.query, &self.support));
        }
        match (self.query.finite_spectrum(), self.support.finite_spectrum()) {
            (Some(spec), _) => {
                let mut acc = Complex64::new(0.0, 0.0);
                for (k, fk) in spec {
                    let gk = self.support.fourier_coefficient(k);
                    acc += fk * gk.conj() * self.sampler.kernel_profile(k.unsigned_abs() as f64 * s);
                }
                Ok(acc)
            }
            (None, Some(spec)) => {
                let mut acc = Complex64::new(0.0, 0.0);
                for (k, gk) in spec {
                    let fk = self.query.fourier_coefficient(k);
                    acc += fk * gk.conj() * self.sampler.kernel_profile(k.unsigned_abs() as f64 * s);
                }
                Ok(acc)
            }
            (None, None) => {
                // Both sides are the quantizer: Σ over odd k of (8/π²k²)·κ₀(ks).
                Ok(Complex64::new(
                    quantizer_pair_series(&self.sampler, s, self.truncation)?,
                    0.0,
                ))
            }
        }
    }

    /// Series value for a concrete pair of points, using the sampler's norm.
    pub fn between(&self, x: &[f64], y: &[f64]) -> Result<Complex64> {
        if x.len() != y.len() {
            return Err(ArpfError::LengthMismatch {
                left: x.len(),
                right: y.len(),
            });
        }
        let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        self.at_distance(self.sampler.norm(&diff))
    }
}

/// `Σ_{odd k ≥ 1} (8/π²k²) κ₀(k·s)` with a certified tail bound: after term
/// `k` the remainder is at most `min(4/(π²(k+1)), κ₀((k+2)s))`, using that
/// the squared coefficients sum to one and `κ₀` decreases.
fn quantizer_pair_series(
    sampler: &FrequencySampler,
    s: f64,
    truncation: SeriesTruncation,
) -> Result<f64> {
    let mut acc = 0.0;
    let mut k: u64 = 1;
    let mut terms = 0usize;
    loop {
        acc += 8.0 / (PI * PI * (k * k) as f64) * sampler.kernel_profile(k as f64 * s);
        terms += 1;
        let generic_tail = 4.0 / (PI * PI * (k + 1) as f64);
        let envelope_tail = sampler.kernel_profile((k + 2) as f64 * s);
        if generic_tail.min(envelope_tail) < truncation.tol {
            return Ok(acc);
        }
        if terms >= truncation.max_terms {
            return Err(ArpfError::InvalidParameter(format!(
                "quantizer pair series did not reach tail {} within {} terms \
                 (achieved {:.3e}); increase the tolerance or the term cap",
                truncation.tol,
                truncation.max_terms,
                generic_tail.min(envelope_tail)
            )));
        }
        k += 2;
    }
}

/// Expected kernel divided by the inner product of the maps, so that its
/// value at distance zero is one. Errors when the maps are orthogonal.
pub fn normalized_expected_kernel(
    kernel: &ExpectedKernel,
    s: f64,
) -> Result<Complex64> {
    let ip = pf_inner_product(&kernel.query, &kernel.support);
    if ip.norm() < 1e-12 {
        return Err(ArpfError::OrthogonalMaps {
            inner: ip.norm(),
        });
    }
    Ok(kernel.at_distance(s)? / ip)
}

const GL24: [(f64, f64); 24] = [
    (-9.95187219997021311e-01, 1.23412297999870909e-02),
    (-9.74728555971309474e-01, 2.85313886289337432e-02),
    (-9.38274552002732798e-01, 4.42774388174195510e-02),
    (-8.86415527004400960e-01, 5.92985849154367417e-02),
    (-8.20001985973902947e-01, 7.33464814110804109e-02),
    (-7.40124191578554358e-01, 8.61901615319532882e-02),
    (-6.48093651936975546e-01, 9.76186521041140648e-02),
    (-5.45421471388839563e-01, 1.07444270115965607e-01),
    (-4.33793507626045127e-01, 1.15505668053725613e-01),
    (-3.15042679696163397e-01, 1.21670472927803419e-01),
    (-1.91118867473616311e-01, 1.25837456346828303e-01),
    (-6.40568928626056300e-02, 1.27938195346752215e-01),
    (6.40568928626056300e-02, 1.27938195346752215e-01),
    (1.91118867473616311e-01, 1.25837456346828303e-01),
    (3.15042679696163397e-01, 1.21670472927803419e-01),
    (4.33793507626045127e-01, 1.15505668053725613e-01),
    (5.45421471388839563e-01, 1.07444270115965607e-01),
    (6.48093651936975546e-01, 9.76186521041140648e-02),
    (7.40124191578554358e-01, 8.61901615319532882e-02),
    (8.20001985973902947e-01, 7.33464814110804109e-02),
    (8.86415527004400960e-01, 5.92985849154367417e-02),
    (9.38274552002732798e-01, 4.42774388174195510e-02),
    (9.74728555971309474e-01, 2.85313886289337432e-02),
    (9.95187219997021311e-01, 1.23412297999870909e-02),
];

/// Integration range in standard deviations; the normal tail beyond is below
/// f64 resolution.
const QUAD_RANGE: f64 = 9.0;
const QUAD_MAX_PANEL: f64 = 0.5;

/// Fully quantized expected kernel under the Gaussian sampler, evaluated by
/// integrating the quantizer's triangular autocorrelation against the normal
/// density: `E_w[tri(w·s/σ)]` for standard normal `w`. Panels are split at
/// the triangle's kinks (`w = kπσ/s`) and capped in width, then integrated
/// with 24-point Gauss–Legendre per panel; the result is exact to roughly
/// machine precision for every `s`.
pub fn distorted_qq_closed_form(s: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(ArpfError::InvalidParameter(format!(
            "sigma must be positive and finite, got {sigma}"
        )));
    }
    if !(s >= 0.0) || !s.is_finite() {
        return Err(ArpfError::InvalidParameter(format!(
            "distance must be finite and nonnegative, got {s}"
        )));
    }
    if s == 0.0 {
        return Ok(1.0);
    }
    let a = s / sigma;
    if a >= 12.0 {
        // Every series term carries exp(-k²a²/2) ≤ exp(-72) ≈ 5e-32.
        return Ok(0.0);
    }
    let mut bounds = vec![0.0f64];
    let mut k = 1u64;
    loop {
        let kink = k as f64 * PI / a;
        if kink >= QUAD_RANGE {
            break;
        }
        bounds.push(kink);
        k += 1;
    }
    bounds.push(QUAD_RANGE);
    let inv_sqrt_2pi = 1.0 / (2.0 * PI).sqrt();
    let mut total = 0.0;
    for pair in bounds.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        let nsub = ((hi - lo) / QUAD_MAX_PANEL).ceil().max(1.0) as usize;
        let step = (hi - lo) / nsub as f64;
        for i in 0..nsub {
            let l = lo + i as f64 * step;
            let c = l + 0.5 * step;
            let hw = 0.5 * step;
            let mut panel = 0.0;
            for (node, weight) in GL24 {
                let v = c + hw * node;
                panel += weight * (-0.5 * v * v).exp() * inv_sqrt_2pi * quantizer_triangle(a * v);
            }
            total += hw * panel;
        }
    }
    Ok(2.0 * total)
}

/// Slope of the fully quantized Gaussian kernel at the origin (per unit
/// distance, σ = 1): the kernel behaves as `1 − 2√2 π^{-3/2} s/σ` up to
/// exponentially small corrections for `s ≪ σ`.
pub fn qq_linearization_slope(sigma: f64) -> f64 {
    2.0 * std::f64::consts::SQRT_2 * PI.powf(-1.5) / sigma
}

/// `dκ_qq/ds` under the Gaussian sampler:
/// `-(s/σ²)·(8/π²)·Σ_{odd k} exp(-k²s²/2σ²)`, summed until the envelope is
/// below f64 resolution. For `s/σ < 0.3` the sum equals its `s → 0` limit
/// `√(2π)σ/(4s)·…` to machine precision, giving back the linearization slope.
fn qq_derivative(s: f64, sigma: f64) -> f64 {
    let a = s / sigma;
    if a <= 0.0 {
        return -qq_linearization_slope(sigma);
    }
    if a < 0.3 {
        // Poisson-summation correction to the constant slope is O(exp(-π²/2a²)).
        return -qq_linearization_slope(sigma);
    }
    let mut theta = 0.0;
    let mut k = 1u64;
    while (k as f64 * a) < 14.0 {
        theta += (-0.5 * (k as f64 * a).powi(2)).exp();
        k += 2;
    }
    -(s / (sigma * sigma)) * (8.0 / (PI * PI)) * theta
}

/// Monotone map from distance to the expected squared feature distance
/// `E‖z_f(x) − z_g(y)‖²`, under the Gaussian sampler with width `σ`, plus its
/// inverse. Lets a similarity score double as a distance estimate.
#[derive(Debug, Clone, Copy)]
pub struct DistanceMap {
    pub combo: MapCombo,
    pub sigma: f64,
}

impl DistanceMap {
    pub fn new(combo: MapCombo, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(ArpfError::InvalidParameter(format!(
                "sigma must be positive and finite, got {sigma}"
            )));
        }
        Ok(DistanceMap { combo, sigma })
    }

    fn profile(&self, s: f64) -> f64 {
        (-0.5 * (s / self.sigma).powi(2)).exp()
    }

    /// `γ(s) = E‖z_f(x) − z_g(y)‖²` at distance `s ≥ 0`.
    pub fn value(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) || !s.is_finite() {
            return Err(ArpfError::InvalidParameter(format!(
                "distance must be finite and nonnegative, got {s}"
            )));
        }
        Ok(match self.combo {
            // ‖z_cos‖² = 1/2 each; cross term 2·(1/2)κ₀.
            MapCombo::CosCos => 1.0 - self.profile(s),
            // ‖z_q‖² = 1, ‖z_cos‖² = 1/2; cross term 2·(2/π)κ₀.
            MapCombo::QCos | MapCombo::CosQ => 1.5 - (4.0 / PI) * self.profile(s),
            // ‖z_q‖² = 1 each; cross term 2·κ_qq.
            MapCombo::QQ => 2.0 - 2.0 * distorted_qq_closed_form(s, self.sigma)?,
        })
    }

    /// Closed interval of attainable values `[γ(0), sup γ)`.
    pub fn range(&self) -> (f64, f64) {
        match self.combo {
            MapCombo::CosCos => (0.0, 1.0),
            MapCombo::QCos | MapCombo::CosQ => (1.5 - 4.0 / PI, 1.5),
            MapCombo::QQ => (0.0, 2.0),
        }
    }

    /// Inverse map: the distance whose expected squared feature distance is
    /// `gamma`. Strict about the domain — values outside `[γ(0), sup γ)` are
    /// rejected rather than clamped.
    pub fn invert(&self, gamma: f64) -> Result<f64> {
        let (lo, hi) = self.range();
        if !gamma.is_finite() || gamma < lo || gamma >= hi {
            return Err(ArpfError::OutOfRange {
                value: gamma,
                lo,
                hi,
            });
        }
        match self.combo {
            MapCombo::CosCos => {
                let kappa = 1.0 - gamma;
                Ok(self.sigma * (-2.0 * kappa.ln()).sqrt())
            }
            MapCombo::QCos | MapCombo::CosQ => {
                let kappa = (PI / 4.0) * (1.5 - gamma);
                Ok(self.sigma * (-2.0 * kappa.ln()).sqrt())
            }
            MapCombo::QQ => {
                let target = 1.0 - 0.5 * gamma; // κ_qq(s) to match
                let (mut lo_s, mut hi_s) = (0.0f64, 12.0 * self.sigma);
                if target <= distorted_qq_closed_form(hi_s, self.sigma)? {
                    return Err(ArpfError::OutOfRange {
                        value: gamma,
                        lo,
                        hi: self.value(hi_s)?,
                    });
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo_s + hi_s);
                    if distorted_qq_closed_form(mid, self.sigma)? > target {
                        lo_s = mid;
                    } else {
                        hi_s = mid;
                    }
                    if hi_s - lo_s < 1e-14 * self.sigma {
                        break;
                    }
                }
                Ok(0.5 * (lo_s + hi_s))
            }
        }
    }

    /// `|ds/dγ|` at distance `s > 0`: how strongly measurement error in the
    /// expected squared distance amplifies into distance error.
    pub fn inversion_sensitivity(&self, s: f64) -> Result<f64> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(ArpfError::InvalidParameter(format!(
                "sensitivity needs a positive finite distance, got {s}"
            )));
        }
        let dgamma_ds = match self.combo {
            MapCombo::CosCos => (s / (self.sigma * self.sigma)) * self.profile(s),
            MapCombo::QCos | MapCombo::CosQ => {
                (4.0 / PI) * (s / (self.sigma * self.sigma)) * self.profile(s)
            }
            MapCombo::QQ => -2.0 * qq_derivative(s, self.sigma),
        };
        Ok(1.0 / dgamma_ds)
    }
}

/// True when every spectral product `F_k conj(G_k)` is real and nonnegative,
/// which makes the expected kernel positive semidefinite for any sampler.
pub fn pair_spectrum_nonnegative(f: &PeriodicMap, g: &PeriodicMap) -> bool {
    const EPS: f64 = 1e-12;
    let nonneg = |z: Complex64| z.im.abs() <= EPS && z.re >= -EPS;
    match (f.finite_spectrum(), g.finite_spectrum()) {
        (Some(spec), _) => spec
            .iter()
            .all(|&(k, fk)| nonneg(fk * g.fourier_coefficient(k).conj())),
        (None, Some(spec)) => spec
            .iter()
            .all(|&(k, gk)| nonneg(f.fourier_coefficient(k) * gk.conj())),
        // Quantizer against itself: every product is a squared coefficient.
        (None, None) => true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::periodic::SERIES_TAIL_TOL;
    use approx::assert_abs_diff_eq;

    fn gaussian(sigma: f64) -> FrequencySampler {
        FrequencySampler::gaussian_rbf(sigma, 3).unwrap()
    }

    fn cauchy(tau: f64) -> FrequencySampler {
        FrequencySampler::cauchy_laplace(tau, 3).unwrap()
    }

    #[test]
    fn finite_pairs_match_closed_forms() {
        let sigma = 1.3;
        for s in [0.0f64, 0.2, 0.7, 1.5, 3.0] {
            let k0 = (-0.5 * (s / sigma) * (s / sigma)).exp();
            let cc = ExpectedKernel::new(
                PeriodicMap::Cosine { k: 1 },
                PeriodicMap::Cosine { k: 1 },
                gaussian(sigma),
            );
            assert_abs_diff_eq!(cc.at_distance(s).unwrap().re, 0.5 * k0, epsilon = 1e-14);
            let ee = ExpectedKernel::new(
                PeriodicMap::ComplexExponential,
                PeriodicMap::ComplexExponential,
                gaussian(sigma),
            );
            assert_abs_diff_eq!(ee.at_distance(s).unwrap().re, k0, epsilon = 1e-14);
            let qc = ExpectedKernel::new(
                PeriodicMap::UniversalQuantizer,
                PeriodicMap::Cosine { k: 1 },
                gaussian(sigma),
            );
            assert_abs_diff_eq!(
                qc.at_distance(s).unwrap().re,
                (2.0 / PI) * k0,
                epsilon = 1e-14
            );
            // same value with the roles swapped: both products are real
            let cq = ExpectedKernel::new(
                PeriodicMap::Cosine { k: 1 },
                PeriodicMap::UniversalQuantizer,
                gaussian(sigma),
            );
            assert_abs_diff_eq!(
                cq.at_distance(s).unwrap().re,
                (2.0 / PI) * k0,
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn cauchy_pair_matches_closed_form() {
        let tau = 2.0;
        for s in [0.1f64, 0.5, 2.0] {
            let k0 = (-s / tau).exp();
            let qc = ExpectedKernel::new(
                PeriodicMap::UniversalQuantizer,
                PeriodicMap::Cosine { k: 1 },
                cauchy(tau),
            );
            assert_abs_diff_eq!(
                qc.at_distance(s).unwrap().re,
                (2.0 / PI) * k0,
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn quantizer_pair_series_matches_brute_force() {
        let sigma = 1.0;
        let kernel = ExpectedKernel::new(
            PeriodicMap::UniversalQuantizer,
            PeriodicMap::UniversalQuantizer,
            gaussian(sigma),
        );
        for s in [0.05, 0.25, 0.5, 1.0, 2.5] {
            // brute-force reference with a fixed huge cutoff
            let mut reference = 0.0;
            let mut k = 1u64;
            while k < 3_000_001 {
                reference +=
                    8.0 / (PI * PI * (k * k) as f64) * (-0.5 * (k as f64 * s / sigma).powi(2)).exp();
                k += 2;
            }
            let got = kernel.at_distance(s).unwrap().re;
            assert_abs_diff_eq!(got, reference, epsilon = 1e-9);
        }
    }

    #[test]
    fn quantizer_pair_at_zero_is_exactly_one() {
        let kernel = ExpectedKernel::new(
            PeriodicMap::UniversalQuantizer,
            PeriodicMap::UniversalQuantizer,
            gaussian(0.7),
        );
        assert_eq!(kernel.at_distance(0.0).unwrap().re, 1.0);
    }

    #[test]
    fn quantizer_series_respects_term_cap() {
        let kernel = ExpectedKernel::new(
            PeriodicMap::UniversalQuantizer,
            PeriodicMap::UniversalQuantizer,
            gaussian(1.0),
        )
        .with_truncation(SeriesTruncation {
            tol: 1e-10,
            max_terms: 10,
        });
        assert!(kernel.at_distance(1e-4).is_err());
    }

    #[test]
    fn closed_form_matches_series_everywhere() {
        let kernel = ExpectedKernel::new(
            PeriodicMap::UniversalQuantizer,
            PeriodicMap::UniversalQuantizer,
            gaussian(1.0),
        )
        .with_truncation(SeriesTruncation {
            tol: 1e-12,
            max_terms: 60_000_000,
        });
        for s in [1e-3, 0.05, 0.1, 0.25, 0.5, 1.0, 2.0, 3.0, 5.0] {
            let series = kernel.at_distance(s).unwrap().re;
            let quad = distorted_qq_closed_form(s, 1.0).unwrap();
            assert_abs_diff_eq!(quad, series, epsilon = 5e-12);
        }
        // and for a different width
        for s in [0.3, 0.7, 1.9] {
            let kernel2 = ExpectedKernel::new(
                PeriodicMap::UniversalQuantizer,
                PeriodicMap::UniversalQuantizer,
                gaussian(2.0),
            )
            .with_truncation(SeriesTruncation {
                tol: 1e-12,
                max_terms: 60_000_000,
            });
            assert_abs_diff_eq!(
                distorted_qq_closed_form(s, 2.0).unwrap(),
                kernel2.at_distance(s).unwrap().re,
                epsilon = 5e-12
            );
        }
    }

    #[test]
    fn closed_form_reference_values() {
        // frozen from an independent high-order series evaluation
        assert_abs_diff_eq!(
            distorted_qq_closed_form(0.5, 1.0).unwrap(),
            0.746025456295125,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            distorted_qq_closed_form(0.7, 2.0).unwrap(),
            0.822217819384125,
            epsilon = 1e-12
        );
        assert_eq!(distorted_qq_closed_form(0.0, 1.0).unwrap(), 1.0);
        assert_eq!(distorted_qq_closed_form(25.0, 1.0).unwrap(), 0.0);
        // the value at distance 1/2 equals 1 − √2·π^{-3/2} to high accuracy
        let expected = 1.0 - std::f64::consts::SQRT_2 * PI.powf(-1.5);
        assert_abs_diff_eq!(
            distorted_qq_closed_form(0.5, 1.0).unwrap(),
            expected,
            epsilon = 1e-9
        );
    }

    #[test]
    fn closed_form_is_monotone_decreasing() {
        let mut prev = 1.0;
        for i in 1..=60 {
            let s = i as f64 * 0.1;
            let v = distorted_qq_closed_form(s, 1.0).unwrap();
            assert!(v < prev, "not decreasing at s = {s}");
            prev = v;
        }
    }

    #[test]
    fn small_distance_linearization() {
        let slope = qq_linearization_slope(1.0);
        assert_abs_diff_eq!(slope, 0.5079490874739279, epsilon = 1e-15);
        for s in [0.01, 0.1, 0.3] {
            let v = distorted_qq_closed_form(s, 1.0).unwrap();
            assert_abs_diff_eq!(v, 1.0 - slope * s, epsilon = 1e-9);
        }
    }

    #[test]
    fn normalization_divides_by_map_inner_product() {
        let sigma = 1.1;
        for (f, g) in [
            (PeriodicMap::Cosine { k: 1 }, PeriodicMap::Cosine { k: 1 }),
            (
                PeriodicMap::UniversalQuantizer,
                PeriodicMap::Cosine { k: 1 },
            ),
            (
                PeriodicMap::ComplexExponential,
                PeriodicMap::ComplexExponential,
            ),
        ] {
            let kernel = ExpectedKernel::new(f, g, gaussian(sigma));
            for s in [0.2, 1.0] {
                let k0 = (-0.5 * (s / sigma) * (s / sigma)).exp();
                assert_abs_diff_eq!(
                    normalized_expected_kernel(&kernel, s).unwrap().re,
                    k0,
                    epsilon = 1e-13
                );
            }
            assert_abs_diff_eq!(
                normalized_expected_kernel(&kernel, 0.0).unwrap().re,
                1.0,
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn orthogonal_maps_are_rejected() {
        let kernel = ExpectedKernel::new(
            PeriodicMap::Cosine { k: 1 },
            PeriodicMap::cosine(2).unwrap(),
            gaussian(1.0),
        );
        match normalized_expected_kernel(&kernel, 0.5) {
            Err(ArpfError::OrthogonalMaps { .. }) => {}
            other => panic!("expected orthogonality error, got {other:?}"),
        }
    }

    #[test]
    fn between_uses_sampler_norm() {
        let kernel = ExpectedKernel::new(
            PeriodicMap::Cosine { k: 1 },
            PeriodicMap::Cosine { k: 1 },
            cauchy(1.0),
        );
        // Cauchy sampler pairs with the ℓ1 norm: s = |1−0| + |2−0| = 3
        let v = kernel.between(&[1.0, 2.0, 0.0], &[0.0, 0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(v.re, 0.5 * (-3.0f64).exp(), epsilon = 1e-14);
        assert!(kernel.between(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn distance_map_round_trips() {
        for combo in [MapCombo::CosCos, MapCombo::QCos, MapCombo::CosQ] {
            let map = DistanceMap::new(combo, 1.4).unwrap();
            for i in 1..=40 {
                let s = i as f64 * 0.1;
                let gamma = map.value(s).unwrap();
                let back = map.invert(gamma).unwrap();
                assert_abs_diff_eq!(back, s, epsilon = 1e-9);
            }
        }
        let qq = DistanceMap::new(MapCombo::QQ, 1.4).unwrap();
        for i in 1..=40 {
            let s = i as f64 * 0.1;
            let back = qq.invert(qq.value(s).unwrap()).unwrap();
            assert_abs_diff_eq!(back, s, epsilon = 1e-8);
        }
    }

    #[test]
    fn distance_map_values_at_zero() {
        let qcos = DistanceMap::new(MapCombo::QCos, 1.0).unwrap();
        assert_abs_diff_eq!(qcos.value(0.0).unwrap(), 1.5 - 4.0 / PI, epsilon = 1e-15);
        let coscos = DistanceMap::new(MapCombo::CosCos, 1.0).unwrap();
        assert_abs_diff_eq!(coscos.value(0.0).unwrap(), 0.0, epsilon = 1e-15);
        let qq = DistanceMap::new(MapCombo::QQ, 1.0).unwrap();
        assert_abs_diff_eq!(qq.value(0.0).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn distance_map_rejects_out_of_domain() {
        let map = DistanceMap::new(MapCombo::QCos, 1.0).unwrap();
        assert!(map.invert(0.0).is_err()); // below γ(0) = 3/2 − 4/π
        assert!(map.invert(1.5).is_err()); // at the supremum
        assert!(map.invert(f64::NAN).is_err());
        assert!(map.value(-0.1).is_err());
        let cc = DistanceMap::new(MapCombo::CosCos, 1.0).unwrap();
        assert!(cc.invert(-1e-9).is_err());
        assert!(cc.invert(1.0).is_err());
        assert!(DistanceMap::new(MapCombo::QQ, 0.0).is_err());
    }

    #[test]
    fn sensitivity_matches_finite_differences() {
        for combo in MapCombo::ALL {
            let map = DistanceMap::new(combo, 1.2).unwrap();
            for s in [0.4, 1.0, 2.0] {
                let h = 1e-6;
                let dgamma = (map.value(s + h).unwrap() - map.value(s - h).unwrap()) / (2.0 * h);
                let expected = 1.0 / dgamma;
                let got = map.inversion_sensitivity(s).unwrap();
                assert!(
                    (got - expected).abs() / expected.abs() < 1e-4,
                    "combo {combo}: got {got}, finite-difference {expected}"
                );
            }
            assert!(map.inversion_sensitivity(0.0).is_err());
        }
    }

    #[test]
    fn spectrum_sign_helper() {
        assert!(pair_spectrum_nonnegative(
            &PeriodicMap::Cosine { k: 1 },
            &PeriodicMap::Cosine { k: 1 }
        ));
        assert!(pair_spectrum_nonnegative(
            &PeriodicMap::UniversalQuantizer,
            &PeriodicMap::UniversalQuantizer
        ));
        assert!(pair_spectrum_nonnegative(
            &PeriodicMap::UniversalQuantizer,
            &PeriodicMap::Cosine { k: 1 }
        ));
        // cos(3t) pairs with the quantizer's negative third harmonic
        assert!(!pair_spectrum_nonnegative(
            &PeriodicMap::UniversalQuantizer,
            &PeriodicMap::cosine(3).unwrap()
        ));
    }

    #[test]
    fn default_truncation_is_tight_enough() {
        let t = SeriesTruncation::default();
        assert!(t.tol <= SERIES_TAIL_TOL);
    }
}
