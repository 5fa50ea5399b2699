//! The asymmetric (semi-quantized) setup this crate is built around: the
//! database keeps full-precision cosine features, queries arrive as one bit
//! per feature, and the pi/2-rescaled inner product still estimates the
//! *undistorted* Gaussian kernel — at a 64x transfer discount for the query.
//!
//! Run with `cargo run --release --example semi_quantized`.

use std::f64::consts::PI;

use arpf::features::{rescaled_kernel_estimate, FeatureEmbedding, MapCombo};
use arpf::periodic::PeriodicMap;
use arpf::sampling::FrequencySampler;

fn main() -> arpf::Result<()> {
    let d = 8;
    let m = 2000;
    let sampler = FrequencySampler::gaussian_rbf(1.0, d)?;
    let draw = sampler.draw(m, 42)?;
    let quantized = FeatureEmbedding::new(draw.clone(), PeriodicMap::UniversalQuantizer);
    let full = FeatureEmbedding::new(draw, PeriodicMap::Cosine { k: 1 });

    // One query point; database points at increasing distances along a line.
    let x = vec![0.25; d];
    let query = quantized.embed(&x)?;
    println!("m = {m}, query payload: {} packed sign bytes", m.div_ceil(8));
    println!("a dense f64 query would take {} bytes ({}x more)\n", 8 * m, 8 * m / m.div_ceil(8));

    println!(
        "{:>6} {:>14} {:>12} {:>10}",
        "s", "(pi/2)<zq,zc>", "exp(-s^2/2)", "error"
    );
    for i in 0..=8 {
        let s = i as f64 * 0.35;
        let mut y = x.clone();
        y[0] += s; // Euclidean distance s from x
        let support = full.embed(&y)?;
        let est = rescaled_kernel_estimate(&query, &support, MapCombo::QCos)?;
        let exact = (-s * s / 2.0).exp();
        println!("{s:>6.2} {est:>14.4} {exact:>12.4} {:>10.4}", (est - exact).abs());
    }

    println!("\nwhy it works: the quantizer's first Fourier coefficient against cos is");
    println!("2/pi = {:.6}, so multiplying the one-bit/cosine inner product by pi/2", 2.0 / PI);
    println!("cancels the quantization exactly in expectation — only the variance grows.");
    Ok(())
}
