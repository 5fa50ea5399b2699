//! Monte Carlo kernel estimation with every query/support map combination:
//! embed two points under a shared random draw, rescale the feature inner
//! product, and watch it converge to the combo's expected kernel as the
//! feature count grows.
//!
//! Run with `cargo run --release --example kernel_estimates`.

use arpf::features::{rescaled_kernel_estimate, FeatureEmbedding, MapCombo};
use arpf::kernels::{distorted_qq_closed_form, ExpectedKernel};
use arpf::sampling::FrequencySampler;

fn main() -> arpf::Result<()> {
    let sampler = FrequencySampler::gaussian_rbf(1.0, 4)?;
    let x = [0.3, -0.7, 0.2, 0.5];
    let y = [0.9, -0.2, -0.4, 0.8];
    let s = sampler.norm(&x.iter().zip(&y).map(|(a, b)| a - b).collect::<Vec<_>>());
    println!("pair at Euclidean distance s = {s:.4}, Gaussian sampler (sigma = 1)");
    println!("Gaussian kernel exp(-s^2/2)  = {:.6}\n", (-s * s / 2.0).exp());

    println!(
        "{:<8} {:>10} {:>10} {:>10} {:>10}",
        "combo", "m=100", "m=1000", "m=10000", "expected"
    );
    for combo in MapCombo::ALL {
        let expected = match combo {
            MapCombo::QQ => distorted_qq_closed_form(s, 1.0)?,
            _ => {
                let series = ExpectedKernel::new(
                    combo.query_map(),
                    combo.support_map(),
                    sampler.clone(),
                );
                combo.scale() * series.at_distance(s)?.re
            }
        };
        let mut cells = Vec::new();
        for (mi, m) in [100usize, 1000, 10_000].into_iter().enumerate() {
            let draw = sampler.draw(m, 7 + mi as u64)?;
            let embed_q = FeatureEmbedding::new(draw.clone(), combo.query_map());
            let embed_s = FeatureEmbedding::new(draw, combo.support_map());
            let est =
                rescaled_kernel_estimate(&embed_q.embed(&x)?, &embed_s.embed(&y)?, combo)?;
            cells.push(est);
        }
        println!(
            "{:<8} {:>10.4} {:>10.4} {:>10.4} {:>10.6}",
            combo.tag(),
            cells[0],
            cells[1],
            cells[2],
            expected
        );
    }
    println!("\ncos_cos, q_cos, and cos_q all estimate the Gaussian kernel (after their");
    println!("2x and pi/2 rescalings); q_q converges to its own distorted kernel instead.");
    Ok(())
}
