//! The periodic maps behind the feature embeddings: their values, Fourier
//! spectra, inner products, and mean-Lipschitz smoothness constants.
//!
//! Run with `cargo run --release --example periodic_maps`.

use std::f64::consts::PI;

use arpf::periodic::{
    canonical_mean_lipschitz, correlation, mean_lipschitz_numeric, pf_inner_product,
    pf_inner_product_series, quantizer_triangle, MeanLipschitzGrid, PeriodicMap,
};

fn main() -> arpf::Result<()> {
    let q = PeriodicMap::UniversalQuantizer;
    let cos = PeriodicMap::Cosine { k: 1 };
    let exp = PeriodicMap::ComplexExponential;

    println!("values over one period (t / pi from 0 to 2):");
    println!("{:>8} {:>10} {:>10}", "t/pi", "cos", "q");
    for i in 0..=8 {
        let t = i as f64 * PI / 4.0;
        println!(
            "{:>8.2} {:>10.4} {:>10.1}",
            t / PI,
            cos.evaluate_re(t),
            q.evaluate_re(t)
        );
    }

    println!("\nquantizer Fourier coefficients (square wave in the phase):");
    println!("{:>4} {:>12} {:>12}", "k", "Q_k", "2/(k pi)");
    for k in [1i64, 3, 5, 7, 9] {
        println!(
            "{k:>4} {:>12.6} {:>12.6}",
            q.fourier_coefficient(k).re,
            2.0 / (k as f64 * PI)
        );
    }
    println!("even coefficients vanish: Q_2 = {}", q.fourier_coefficient(2).re);

    println!("\nperiod-domain inner products <f, g> = sum_k F_k G_k*:");
    println!("  <q,   cos> = {:.10}   (2/pi = {:.10})", pf_inner_product(&q, &cos).re, 2.0 / PI);
    println!("  <cos, cos> = {:.10}", pf_inner_product(&cos, &cos).re);
    println!("  <exp, exp> = {:.10}", pf_inner_product(&exp, &exp).re);
    let qq = pf_inner_product_series(&q, &q, 1e-8).re;
    println!("  <q,   q>   = {qq:.10}   (adaptive truncation, tail below 1e-8)");

    // The q-q correlation map materializes the infinite spectrum; pointwise
    // it matches the triangular wave 1 - 2|t|/pi.
    let auto = correlation(&q, &q)?;
    println!("\nquantizer autocorrelation vs the triangle 1 - 2|t|/pi:");
    println!("{:>8} {:>12} {:>12}", "t/pi", "series", "triangle");
    for i in 0..=4 {
        let t = i as f64 * PI / 4.0;
        println!(
            "{:>8.2} {:>12.6} {:>12.6}",
            t / PI,
            auto.evaluate_re(t),
            quantizer_triangle(t)
        );
    }

    println!("\nmean-Lipschitz constants (numeric estimate vs the analysis constant):");
    let grid = MeanLipschitzGrid::default();
    for map in [&q, &cos, &exp] {
        let numeric = mean_lipschitz_numeric(map, &grid)?;
        println!(
            "  {:<4} numeric {:.5}, analysis constant {:.5}",
            map.tag(),
            numeric,
            canonical_mean_lipschitz(map)
        );
    }
    println!("(the quantizer's 4/pi — not infinity — is what makes one-bit features analyzable)");
    Ok(())
}
