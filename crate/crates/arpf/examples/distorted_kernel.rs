//! What happens when *both* sides are quantized: the expected kernel is no
//! longer Gaussian but a distorted version of it, computed here two
//! independent ways — the Fourier series over odd harmonics and direct
//! quadrature of the triangular autocorrelation against the frequency
//! distribution.
//!
//! Run with `cargo run --release --example distorted_kernel`.

use arpf::kernels::{distorted_qq_closed_form, qq_linearization_slope, ExpectedKernel};
use arpf::periodic::PeriodicMap;
use arpf::sampling::FrequencySampler;
use arpf::util::linspace;

fn main() -> arpf::Result<()> {
    let sigma = 1.0;
    let sampler = FrequencySampler::gaussian_rbf(sigma, 3)?;
    let series = ExpectedKernel::new(
        PeriodicMap::UniversalQuantizer,
        PeriodicMap::UniversalQuantizer,
        sampler,
    );

    println!("fully quantized expected kernel under the Gaussian sampler (sigma = 1):\n");
    println!(
        "{:>6} {:>12} {:>12} {:>12} {:>12}",
        "s", "series", "quadrature", "gaussian", "distortion"
    );
    let mut worst_gap = 0.0f64;
    let mut worst_distortion = (0.0f64, 0.0f64);
    for s in linspace(0.0, 3.0, 13) {
        let a = series.at_distance(s)?.re;
        let b = distorted_qq_closed_form(s, sigma)?;
        let g = (-s * s / 2.0).exp();
        worst_gap = worst_gap.max((a - b).abs());
        if (a - g).abs() > worst_distortion.1 {
            worst_distortion = (s, (a - g).abs());
        }
        println!("{s:>6.2} {a:>12.6} {b:>12.6} {g:>12.6} {:>12.6}", (a - g).abs());
    }
    println!("\nthe two oracles agree to {worst_gap:.2e} everywhere;");
    println!(
        "the distortion peaks at {:.3} near s = {:.2} — far above estimation noise,",
        worst_distortion.1, worst_distortion.0
    );
    println!("so double quantization genuinely changes the kernel being estimated.");

    println!("\nnear the origin the kernel drops linearly, not quadratically:");
    let slope = qq_linearization_slope(sigma);
    println!("  d kappa_qq / ds at 0+  = -{slope:.6}  (= -2*sqrt(2)/pi^(3/2) for sigma = 1)");
    for s in [0.05, 0.1, 0.2] {
        let k = distorted_qq_closed_form(s, sigma)?;
        println!(
            "  s = {s:>4}: kappa_qq = {k:.6}, linearization 1 - {slope:.4}*s = {:.6}",
            1.0 - slope * s
        );
    }
    println!("\n(the kink at zero is the price of keeping both sides at one bit;");
    println!("the semi-quantized combo avoids it entirely — see the other examples)");
    Ok(())
}
