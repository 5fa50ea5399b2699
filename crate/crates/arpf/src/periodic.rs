//! Bounded 2π-periodic, zero-mean feature maps and their Fourier-side algebra.
//!
//! A map `f` here is any 2π-periodic function with `|f| <= 1` and zero mean,
//! identified with its Fourier series `f(t) = Σ_k F_k e^{ikt}` (no `k = 0`
//! term). The module provides evaluation, exact Fourier coefficients, inner
//! products `<f, g> = Σ_k F_k G_k^*`, the correlation map `h = f ∗ ḡ` with
//! `H_k = F_k G_k^*`, and an averaged (mean) Lipschitz constant that stays
//! finite even for the discontinuous one-bit quantizer.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ArpfError, Result};
use crate::util::{linspace, logspace};

/// Default tail tolerance for truncated coefficient series.
pub const SERIES_TAIL_TOL: f64 = 1e-8;

/// Coefficient cap when a correlation map with an infinite spectrum has to be
/// materialized as an explicit series (tail ≈ 4/(π²K) ≈ 1e-6 at this K).
const CORRELATION_MAX_INDEX: i64 = 400_001;

/// Whether a map takes real or genuinely complex values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ValueField {
    Real,
    Complex,
}

/// A bounded zero-mean 2π-periodic feature map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PeriodicMap {
    /// `t ↦ e^{it}`; the classical random Fourier feature map.
    ComplexExponential,
    /// `t ↦ cos(k t)` for a positive integer `k`.
    Cosine { k: u32 },
    /// The one-bit universal quantizer `t ↦ sign(cos t)`, with the convention
    /// `+1` where `cos t = 0`.
    UniversalQuantizer,
    /// An explicit finite Fourier series `Σ_k c_k e^{ikt}` (`k ≠ 0`).
    FourierSeries { coefficients: Vec<(i64, Complex64)> },
}

impl PeriodicMap {
    /// `cos(k·)` map; `k` must be a positive integer.
    pub fn cosine(k: u32) -> Result<Self> {
        if k == 0 {
            return Err(ArpfError::InvalidParameter(
                "cosine scale k must be a positive integer".into(),
            ));
        }
        Ok(PeriodicMap::Cosine { k })
    }

    /// Build an explicit finite series. Rejects a `k = 0` term (maps must have
    /// zero mean), duplicate indices, non-finite coefficients, and series whose
    /// coefficient l1 mass exceeds 1 (a sufficient condition for `|f| <= 1`).
    pub fn fourier_series(mut coefficients: Vec<(i64, Complex64)>) -> Result<Self> {
        coefficients.retain(|(_, c)| c.norm() > 0.0);
        if coefficients.is_empty() {
            return Err(ArpfError::InvalidParameter(
                "fourier series needs at least one nonzero coefficient".into(),
            ));
        }
        coefficients.sort_by_key(|(k, _)| *k);
        let mut l1 = 0.0;
        for window in coefficients.windows(2) {
            if window[0].0 == window[1].0 {
                return Err(ArpfError::InvalidParameter(format!(
                    "duplicate fourier index {}",
                    window[0].0
                )));
            }
        }
        for (k, c) in &coefficients {
            if *k == 0 {
                return Err(ArpfError::InvalidParameter(
                    "fourier series must have zero mean (no k = 0 term)".into(),
                ));
            }
            if !c.re.is_finite() || !c.im.is_finite() {
                return Err(ArpfError::InvalidParameter(format!(
                    "non-finite coefficient at k = {k}"
                )));
            }
            l1 += c.norm();
        }
        if l1 > 1.0 + 1e-9 {
            return Err(ArpfError::InvalidParameter(format!(
                "coefficient l1 mass {l1:.6} exceeds 1; map could leave the unit sup ball"
            )));
        }
        Ok(PeriodicMap::FourierSeries { coefficients })
    }

    /// Evaluate the map at `t` (any real argument; the map is 2π-periodic).
    pub fn evaluate(&self, t: f64) -> Complex64 {
        match self {
            PeriodicMap::ComplexExponential => Complex64::new(t.cos(), t.sin()),
            PeriodicMap::Cosine { k } => Complex64::new((*k as f64 * t).cos(), 0.0),
            PeriodicMap::UniversalQuantizer => {
                Complex64::new(if t.cos() >= 0.0 { 1.0 } else { -1.0 }, 0.0)
            }
            PeriodicMap::FourierSeries { coefficients } => coefficients
                .iter()
                .map(|(k, c)| c * Complex64::new(0.0, *k as f64 * t).exp())
                .sum(),
        }
    }

    /// Evaluate a real-valued map at `t`. For complex-valued maps this is the
    /// real part.
    pub fn evaluate_re(&self, t: f64) -> f64 {
        match self {
            PeriodicMap::Cosine { k } => (*k as f64 * t).cos(),
            PeriodicMap::UniversalQuantizer => {
                if t.cos() >= 0.0 {
                    1.0
                } else {
                    -1.0
                }
            }
            _ => self.evaluate(t).re,
        }
    }

    /// Exact Fourier coefficient `F_k`.
    pub fn fourier_coefficient(&self, k: i64) -> Complex64 {
        match self {
            PeriodicMap::ComplexExponential => {
                if k == 1 {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            PeriodicMap::Cosine { k: s } => {
                if k.unsigned_abs() == u64::from(*s) {
                    Complex64::new(0.5, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            PeriodicMap::UniversalQuantizer => Complex64::new(quantizer_coefficient(k), 0.0),
            PeriodicMap::FourierSeries { coefficients } => coefficients
                .iter()
                .find(|(j, _)| *j == k)
                .map(|(_, c)| *c)
                .unwrap_or_else(|| Complex64::new(0.0, 0.0)),
        }
    }

    /// Real or complex valued? A `FourierSeries` is real when its spectrum is
    /// conjugate-symmetric (`F_{-k} = F_k^*`).
    pub fn value_field(&self) -> ValueField {
        match self {
            PeriodicMap::ComplexExponential => ValueField::Complex,
            PeriodicMap::Cosine { .. } | PeriodicMap::UniversalQuantizer => ValueField::Real,
            PeriodicMap::FourierSeries { coefficients } => {
                let symmetric = coefficients.iter().all(|(k, c)| {
                    let m = self.fourier_coefficient(-k);
                    (m - c.conj()).norm() <= 1e-12
                });
                if symmetric {
                    ValueField::Real
                } else {
                    ValueField::Complex
                }
            }
        }
    }

    /// Squared map norm `‖f‖² = Σ_k |F_k|²` (exact closed form).
    pub fn norm_sq(&self) -> f64 {
        match self {
            PeriodicMap::ComplexExponential => 1.0,
            PeriodicMap::Cosine { .. } => 0.5,
            // |q| = 1 pointwise, so ‖q‖² = 1 exactly.
            PeriodicMap::UniversalQuantizer => 1.0,
            PeriodicMap::FourierSeries { coefficients } => {
                coefficients.iter().map(|(_, c)| c.norm_sqr()).sum()
            }
        }
    }

    /// The finitely many nonzero coefficients, if the spectrum is finite.
    /// `None` for the quantizer (its spectrum covers all odd integers).
    pub fn finite_spectrum(&self) -> Option<Vec<(i64, Complex64)>> {
        match self {
            PeriodicMap::ComplexExponential => Some(vec![(1, Complex64::new(1.0, 0.0))]),
            PeriodicMap::Cosine { k } => {
                let k = i64::from(*k);
                Some(vec![
                    (-k, Complex64::new(0.5, 0.0)),
                    (k, Complex64::new(0.5, 0.0)),
                ])
            }
            PeriodicMap::UniversalQuantizer => None,
            PeriodicMap::FourierSeries { coefficients } => Some(coefficients.clone()),
        }
    }

    /// Short lowercase name used by CLI flags and CSV columns.
    pub fn tag(&self) -> String {
        match self {
            PeriodicMap::ComplexExponential => "exp".into(),
            PeriodicMap::Cosine { k } => {
                if *k == 1 {
                    "cos".into()
                } else {
                    format!("cos{k}")
                }
            }
            PeriodicMap::UniversalQuantizer => "q".into(),
            PeriodicMap::FourierSeries { .. } => "series".into(),
        }
    }
}

/// Closed-form coefficient of the universal quantizer:
/// `Q_k = 2/(kπ) · (-1)^{(k-1)/2}` for odd `k`, `0` for even `k`.
pub fn quantizer_coefficient(k: i64) -> f64 {
    if k.rem_euclid(2) == 0 {
        return 0.0;
    }
    let sign = if (k - 1).div_euclid(2).rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    };
    sign * 2.0 / (k as f64 * PI)
}

/// Sum `Σ_{|k| > cutoff} |F_k G_k^*|` for the quantizer/quantizer pair:
/// `8/π² Σ_{odd k > K} k^{-2} ≈ 4/(π² K)`.
pub fn quantizer_pair_tail(cutoff: i64) -> f64 {
    4.0 / (PI * PI * cutoff as f64)
}

/// Inner product `<f, g> = Σ_k F_k G_k^*`, evaluated exactly.
///
/// Every pair of built-in maps admits an exact value: if either side has a
/// finite spectrum the sum is finite, and `<q, q> = ‖q‖² = 1` since `|q| = 1`
/// pointwise.
pub fn pf_inner_product(f: &PeriodicMap, g: &PeriodicMap) -> Complex64 {
    match (f.finite_spectrum(), g.finite_spectrum()) {
        (_, Some(spec_g)) => spec_g
            .iter()
            .map(|(k, gc)| f.fourier_coefficient(*k) * gc.conj())
            .sum(),
        (Some(spec_f), None) => spec_f
            .iter()
            .map(|(k, fc)| fc * g.fourier_coefficient(*k).conj())
            .sum(),
        (None, None) => Complex64::new(1.0, 0.0), // quantizer with itself
    }
}

/// Inner product through explicit series truncation: the coefficient tail l1
/// mass left out is at most `tail_tol`. Exercises the same summation used by
/// kernel series; pairs with a finite spectrum are summed exactly.
pub fn pf_inner_product_series(f: &PeriodicMap, g: &PeriodicMap, tail_tol: f64) -> Complex64 {
    match (f.finite_spectrum(), g.finite_spectrum()) {
        (None, None) => {
            // quantizer pair: Σ_odd 8/(π²k²), truncated at K with 4/(π²K) <= tol
            let cutoff = (4.0 / (PI * PI * tail_tol)).ceil() as i64;
            let mut acc = 0.0;
            let mut k = 1i64;
            while k <= cutoff {
                let kf = k as f64;
                acc += 8.0 / (PI * PI * kf * kf);
                k += 2;
            }
            Complex64::new(acc, 0.0)
        }
        _ => pf_inner_product(f, g),
    }
}

/// Correlation map `h = f ∗ ḡ` with coefficients `H_k = F_k G_k^*`.
///
/// For the quantizer/quantizer pair the spectrum is infinite; the materialized
/// series truncates at `K = 400_001` (coefficient tail ≈ 1e-6). Evaluated
/// pointwise it matches the triangular wave `1 - 2|t'|/π` (`t'` folded into
/// `[-π, π]`) to that tolerance.
pub fn correlation(f: &PeriodicMap, g: &PeriodicMap) -> Result<PeriodicMap> {
    let coefficients: Vec<(i64, Complex64)> = match (f.finite_spectrum(), g.finite_spectrum()) {
        (_, Some(spec_g)) => spec_g
            .iter()
            .map(|(k, gc)| (*k, f.fourier_coefficient(*k) * gc.conj()))
            .collect(),
        (Some(spec_f), None) => spec_f
            .iter()
            .map(|(k, fc)| (*k, fc * g.fourier_coefficient(*k).conj()))
            .collect(),
        (None, None) => {
            let mut coeffs = Vec::new();
            let mut k = 1i64;
            while k <= CORRELATION_MAX_INDEX {
                let c = Complex64::new(quantizer_coefficient(k).powi(2), 0.0);
                coeffs.push((-k, c));
                coeffs.push((k, c));
                k += 2;
            }
            coeffs
        }
    };
    PeriodicMap::fourier_series(coefficients)
}

/// The true autocorrelation of the quantizer: a triangular wave descending
/// from `1` at `t = 0` to `-1` at `t = π`, 2π-periodic.
pub fn quantizer_triangle(t: f64) -> f64 {
    let folded = t - (t / (2.0 * PI)).round() * 2.0 * PI; // into [-π, π]
    1.0 - 2.0 * folded.abs() / PI
}

/// Grid parameters for the numeric mean-Lipschitz estimator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeanLipschitzGrid {
    /// Uniform sample count over one period in `t`.
    pub t_points: usize,
    /// Number of log-spaced deviation radii `δ`.
    pub delta_points: usize,
    /// Samples of the inner supremum over offsets `|r| <= δ`.
    pub offset_points: usize,
    /// Smallest δ; below ~0.1 the t-grid can no longer resolve jump windows.
    pub delta_min: f64,
    /// Largest δ (at most π).
    pub delta_max: f64,
}

impl Default for MeanLipschitzGrid {
    fn default() -> Self {
        MeanLipschitzGrid {
            t_points: 4096,
            delta_points: 64,
            offset_points: 257,
            delta_min: 0.1,
            delta_max: PI,
        }
    }
}

impl MeanLipschitzGrid {
    fn validate(&self) -> Result<()> {
        if self.t_points == 0 || self.delta_points == 0 || self.offset_points < 2 {
            return Err(ArpfError::InvalidParameter(
                "mean-Lipschitz grid resolutions must be positive (>= 2 offsets)".into(),
            ));
        }
        if !(self.delta_min > 0.0 && self.delta_min <= self.delta_max && self.delta_max <= PI) {
            return Err(ArpfError::InvalidParameter(
                "mean-Lipschitz δ range must satisfy 0 < δ_min <= δ_max <= π".into(),
            ));
        }
        Ok(())
    }
}

/// Mean Lipschitz constant of a map: the smallest `L` with
/// `E_t sup_{|r| <= δ} |f(t+r) - f(t)| <= L·δ` for every `δ` in `(0, π]`.
///
/// Exact closed forms are returned for the quantizer (`4/π`) and the complex
/// exponential (`1`); other maps fall back to the numeric estimator with the
/// default grid.
pub fn mean_lipschitz(map: &PeriodicMap) -> f64 {
    match map {
        PeriodicMap::UniversalQuantizer => 4.0 / PI,
        PeriodicMap::ComplexExponential => 1.0,
        _ => mean_lipschitz_numeric(map, &MeanLipschitzGrid::default())
            .expect("default grid is valid"),
    }
}

/// Numeric mean-Lipschitz estimate: sup over the δ-grid of
/// `(1/δ) · mean_t max_{|r| <= δ} |f(t+r) - f(t)|`.
pub fn mean_lipschitz_numeric(map: &PeriodicMap, grid: &MeanLipschitzGrid) -> Result<f64> {
    grid.validate()?;
    let ts: Vec<f64> = (0..grid.t_points)
        .map(|i| 2.0 * PI * i as f64 / grid.t_points as f64)
        .collect();
    let base: Vec<Complex64> = ts.iter().map(|&t| map.evaluate(t)).collect();
    let deltas = if grid.delta_points == 1 {
        vec![grid.delta_max]
    } else {
        logspace(grid.delta_min, grid.delta_max, grid.delta_points)
    };
    let mut best = 0.0f64;
    for delta in deltas {
        let offsets = linspace(-delta, delta, grid.offset_points);
        let mut sup: Vec<f64> = vec![0.0; ts.len()];
        for r in offsets {
            for (i, &t) in ts.iter().enumerate() {
                let dev = (map.evaluate(t + r) - base[i]).norm();
                if dev > sup[i] {
                    sup[i] = dev;
                }
            }
        }
        let mean = sup.iter().sum::<f64>() / sup.len() as f64;
        best = best.max(mean / delta);
    }
    Ok(best)
}

/// Smoothness constant used by the theoretical feature-count bounds: the
/// closed form where one exists, and the analytic upper bound `|k|` for
/// `cos(k·)` (which is what the specialized quantized-query bound assumes).
pub fn canonical_mean_lipschitz(map: &PeriodicMap) -> f64 {
    match map {
        PeriodicMap::UniversalQuantizer => 4.0 / PI,
        PeriodicMap::ComplexExponential => 1.0,
        PeriodicMap::Cosine { k } => f64::from(*k),
        PeriodicMap::FourierSeries { .. } => mean_lipschitz(map),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// Independent oracle: Fourier coefficient by numerical quadrature.
    /// Smooth maps use the uniform rectangle rule over one period (spectrally
    /// accurate); the quantizer is integrated piecewise between its jumps with
    /// composite Simpson.
    fn numeric_fourier_coefficient(map: &PeriodicMap, k: i64) -> Complex64 {
        match map {
            PeriodicMap::UniversalQuantizer => {
                let simpson_piece = |a: f64, b: f64, sign: f64| -> Complex64 {
                    let n = 1 << 15;
                    let h = (b - a) / n as f64;
                    let f = |t: f64| {
                        sign * Complex64::new(0.0, -(k as f64) * t).exp()
                    };
                    let mut acc = f(a) + f(b);
                    for i in 1..n {
                        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                        acc += w * f(a + h * i as f64);
                    }
                    acc * (h / 3.0)
                };
                (simpson_piece(-PI / 2.0, PI / 2.0, 1.0)
                    + simpson_piece(PI / 2.0, 3.0 * PI / 2.0, -1.0))
                    / (2.0 * PI)
            }
            _ => {
                let n = 1 << 14;
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..n {
                    let t = 2.0 * PI * i as f64 / n as f64;
                    acc += map.evaluate(t) * Complex64::new(0.0, -(k as f64) * t).exp();
                }
                acc / n as f64
            }
        }
    }

    /// Independent oracle: correlation value by direct numerical integration
    /// of `(1/2π) ∫ f(τ) g^*(τ - t) dτ` on a fine uniform grid.
    fn numeric_correlation(f: &PeriodicMap, g: &PeriodicMap, t: f64) -> Complex64 {
        let n = 1 << 16;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            // midpoint rule dodges the quantizer's jump points
            let tau = 2.0 * PI * (i as f64 + 0.5) / n as f64;
            acc += f.evaluate(tau) * g.evaluate(tau - t).conj();
        }
        acc / n as f64
    }

    #[test]
    fn evaluate_matches_definitions() {
        let q = PeriodicMap::UniversalQuantizer;
        assert_eq!(q.evaluate(0.0).re, 1.0);
        assert_eq!(q.evaluate(2.0).re, -1.0); // cos 2 < 0
        assert_eq!(q.evaluate(PI / 2.0).re, 1.0); // boundary convention
        let c = PeriodicMap::cosine(1).unwrap();
        assert_abs_diff_eq!(c.evaluate(PI).re, -1.0, epsilon = 1e-15);
        let e = PeriodicMap::ComplexExponential;
        assert_abs_diff_eq!(e.evaluate(PI / 2.0).im, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e.evaluate(1.0).norm(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn quantizer_coefficients_match_closed_form() {
        assert_abs_diff_eq!(quantizer_coefficient(1), 2.0 / PI, epsilon = 1e-15);
        assert_abs_diff_eq!(quantizer_coefficient(-1), 2.0 / PI, epsilon = 1e-15);
        assert_abs_diff_eq!(quantizer_coefficient(3), -2.0 / (3.0 * PI), epsilon = 1e-15);
        assert_abs_diff_eq!(quantizer_coefficient(-3), -2.0 / (3.0 * PI), epsilon = 1e-15);
        assert_abs_diff_eq!(quantizer_coefficient(5), 2.0 / (5.0 * PI), epsilon = 1e-15);
        assert_eq!(quantizer_coefficient(0), 0.0);
        assert_eq!(quantizer_coefficient(4), 0.0);
    }

    #[test]
    fn coefficients_match_numeric_quadrature() {
        let maps = [
            PeriodicMap::UniversalQuantizer,
            PeriodicMap::ComplexExponential,
            PeriodicMap::cosine(1).unwrap(),
            PeriodicMap::cosine(3).unwrap(),
        ];
        for map in &maps {
            for k in -25..=25 {
                let numeric = numeric_fourier_coefficient(map, k);
                let closed = map.fourier_coefficient(k);
                assert!(
                    (numeric - closed).norm() < 1e-9,
                    "{} coefficient {k}: numeric {numeric} vs closed {closed}",
                    map.tag()
                );
            }
        }
    }

    #[test]
    fn inner_products_match_closed_forms() {
        let q = PeriodicMap::UniversalQuantizer;
        let cos = PeriodicMap::cosine(1).unwrap();
        let exp = PeriodicMap::ComplexExponential;
        assert_abs_diff_eq!(pf_inner_product(&q, &cos).re, 2.0 / PI, epsilon = 1e-15);
        assert_abs_diff_eq!(pf_inner_product(&cos, &q).re, 2.0 / PI, epsilon = 1e-15);
        assert_abs_diff_eq!(pf_inner_product(&q, &q).re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(pf_inner_product(&cos, &cos).re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(pf_inner_product(&exp, &exp).re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(pf_inner_product(&q, &exp).re, 2.0 / PI, epsilon = 1e-15);
        let cos3 = PeriodicMap::cosine(3).unwrap();
        assert_abs_diff_eq!(
            pf_inner_product(&q, &cos3).re,
            -2.0 / (3.0 * PI),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(pf_inner_product(&cos, &cos3).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn truncated_inner_product_reaches_tail_tolerance() {
        let q = PeriodicMap::UniversalQuantizer;
        let v = pf_inner_product_series(&q, &q, 1e-6);
        assert!((v.re - 1.0).abs() < 1e-6, "got {}", v.re);
        // finite-spectrum pairs are exact regardless of tolerance
        let cos = PeriodicMap::cosine(1).unwrap();
        assert_abs_diff_eq!(
            pf_inner_product_series(&q, &cos, 1e-2).re,
            2.0 / PI,
            epsilon = 1e-15
        );
    }

    #[test]
    fn correlation_of_quantizer_pair_is_triangle() {
        let q = PeriodicMap::UniversalQuantizer;
        let h = correlation(&q, &q).unwrap();
        // oracle: direct numerical correlation integral
        for (t, want) in [
            (0.0, 1.0),
            (PI / 2.0, 0.0),
            (PI, -1.0),
            (1.0, quantizer_triangle(1.0)),
            (4.4, quantizer_triangle(4.4)),
        ] {
            let oracle = numeric_correlation(&q, &q, t).re;
            assert!(
                (oracle - want).abs() < 1e-4,
                "oracle at {t}: {oracle} vs closed triangle {want}"
            );
            let series = h.evaluate(t).re;
            assert!(
                (series - want).abs() < 2e-6,
                "series at {t}: {series} vs {want}"
            );
        }
    }

    #[test]
    fn correlation_of_quantizer_and_cosine() {
        let q = PeriodicMap::UniversalQuantizer;
        let cos = PeriodicMap::cosine(1).unwrap();
        let h = correlation(&q, &cos).unwrap();
        // H_{±1} = Q_1/2 → h(t) = (2/π) cos t
        for t in [0.0, 0.7, 2.0, PI] {
            assert_abs_diff_eq!(h.evaluate(t).re, 2.0 / PI * t.cos(), epsilon = 1e-12);
            let oracle = numeric_correlation(&q, &cos, t).re;
            assert!((oracle - h.evaluate(t).re).abs() < 1e-6);
        }
        assert_abs_diff_eq!(h.evaluate(0.0).re, pf_inner_product(&q, &cos).re, epsilon = 1e-12);
    }

    #[test]
    fn correlation_slope_bounded_by_mean_lipschitz() {
        let q = PeriodicMap::UniversalQuantizer;
        let cos = PeriodicMap::cosine(1).unwrap();
        for (f, g) in [(&q, &q), (&q, &cos), (&cos, &cos)] {
            let h = correlation(f, g).unwrap();
            let bound = mean_lipschitz(f).min(mean_lipschitz(g)) * 1.05;
            let n = 2000;
            let mut max_slope = 0.0f64;
            for i in 0..n {
                let t = 2.0 * PI * i as f64 / n as f64;
                let dt = 1e-4;
                let slope = (h.evaluate(t + dt) - h.evaluate(t)).norm() / dt;
                max_slope = max_slope.max(slope);
            }
            assert!(
                max_slope <= bound,
                "{}·{}: slope {max_slope} > bound {bound}",
                f.tag(),
                g.tag()
            );
        }
    }

    #[test]
    fn mean_lipschitz_closed_forms_and_numeric_agreement() {
        let q = PeriodicMap::UniversalQuantizer;
        let exp = PeriodicMap::ComplexExponential;
        assert_abs_diff_eq!(mean_lipschitz(&q), 4.0 / PI, epsilon = 1e-15);
        assert_abs_diff_eq!(mean_lipschitz(&exp), 1.0, epsilon = 1e-15);
        let grid = MeanLipschitzGrid::default();
        let nq = mean_lipschitz_numeric(&q, &grid).unwrap();
        assert!(
            (nq - 4.0 / PI).abs() / (4.0 / PI) < 0.01,
            "numeric quantizer estimate {nq}"
        );
        let ne = mean_lipschitz_numeric(&exp, &grid).unwrap();
        assert!((ne - 1.0).abs() < 0.01, "numeric exponential estimate {ne}");
        let nc = mean_lipschitz(&PeriodicMap::cosine(1).unwrap());
        assert!(
            (2.0 / PI..=1.0).contains(&nc),
            "cosine estimate {nc} outside [2/π, 1]"
        );
    }

    #[test]
    fn mean_lipschitz_rejects_bad_grid() {
        let grid = MeanLipschitzGrid {
            t_points: 0,
            ..MeanLipschitzGrid::default()
        };
        assert!(mean_lipschitz_numeric(&PeriodicMap::UniversalQuantizer, &grid).is_err());
        let grid = MeanLipschitzGrid {
            delta_min: -1.0,
            ..MeanLipschitzGrid::default()
        };
        assert!(mean_lipschitz_numeric(&PeriodicMap::UniversalQuantizer, &grid).is_err());
    }

    #[test]
    fn canonical_constants() {
        assert_abs_diff_eq!(
            canonical_mean_lipschitz(&PeriodicMap::UniversalQuantizer),
            4.0 / PI
        );
        assert_abs_diff_eq!(canonical_mean_lipschitz(&PeriodicMap::ComplexExponential), 1.0);
        assert_abs_diff_eq!(canonical_mean_lipschitz(&PeriodicMap::cosine(1).unwrap()), 1.0);
        assert_abs_diff_eq!(canonical_mean_lipschitz(&PeriodicMap::cosine(3).unwrap()), 3.0);
    }

    #[test]
    fn series_constructor_rejects_bad_input() {
        let c = Complex64::new(0.5, 0.0);
        assert!(PeriodicMap::fourier_series(vec![(0, c)]).is_err());
        assert!(PeriodicMap::fourier_series(vec![(1, c), (1, c)]).is_err());
        assert!(PeriodicMap::fourier_series(vec![(1, Complex64::new(2.0, 0.0))]).is_err());
        assert!(PeriodicMap::fourier_series(vec![]).is_err());
        assert!(PeriodicMap::fourier_series(vec![(1, Complex64::new(f64::NAN, 0.0))]).is_err());
        assert!(PeriodicMap::cosine(0).is_err());
    }

    #[test]
    fn value_field_detection() {
        assert_eq!(
            PeriodicMap::UniversalQuantizer.value_field(),
            ValueField::Real
        );
        assert_eq!(
            PeriodicMap::ComplexExponential.value_field(),
            ValueField::Complex
        );
        let c = Complex64::new(0.25, 0.0);
        let real_series =
            PeriodicMap::fourier_series(vec![(-2, c), (2, c)]).unwrap();
        assert_eq!(real_series.value_field(), ValueField::Real);
        let complex_series =
            PeriodicMap::fourier_series(vec![(2, Complex64::new(0.0, 0.25))]).unwrap();
        assert_eq!(complex_series.value_field(), ValueField::Complex);
    }

    #[test]
    fn parseval_for_quantizer() {
        // Σ |Q_k|² over |k| <= K approaches ‖q‖² = 1 at the analytic tail rate
        let mut acc = 0.0;
        let cutoff = 100_001i64;
        let mut k = 1i64;
        while k <= cutoff {
            acc += 2.0 * quantizer_coefficient(k).powi(2);
            k += 2;
        }
        let tail = quantizer_pair_tail(cutoff);
        assert!((1.0 - acc) <= tail * 1.01 && (1.0 - acc) > 0.0);
    }

    proptest! {
        #[test]
        fn maps_are_periodic_and_bounded(t in -20.0f64..20.0) {
            for map in [
                PeriodicMap::UniversalQuantizer,
                PeriodicMap::ComplexExponential,
                PeriodicMap::cosine(2).unwrap(),
            ] {
                let v = map.evaluate(t);
                prop_assert!(v.norm() <= 1.0 + 1e-12);
                let w = map.evaluate(t + 2.0 * PI);
                // the quantizer jumps: folding t+2π can land on the other side
                // of a discontinuity only through floating error, which the
                // cosine argument keeps tiny
                prop_assert!((v - w).norm() < 1e-9);
            }
        }

        #[test]
        fn triangle_matches_series_everywhere(t in -10.0f64..10.0) {
            // spot-check the closed triangle against a direct (coarse) series
            let mut acc = 0.0;
            let mut k = 1i64;
            while k <= 20_001 {
                acc += 2.0 * quantizer_coefficient(k).powi(2) * ((k as f64) * t).cos();
                k += 2;
            }
            prop_assert!((acc - quantizer_triangle(t)).abs() < 1e-3);
        }
    }
}
