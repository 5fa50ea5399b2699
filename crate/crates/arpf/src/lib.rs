//! Asymmetric random periodic features for shift-invariant kernel
//! approximation, with one side of the estimate quantized to a single bit
//! per feature.
//!
//! A random feature map `z_f(x) = (1/√m) f(Ωᵀx + ξ)` turns kernel values
//! into inner products. This crate lets the two sides of that inner product
//! use *different* periodic maps `f` and `g` — full-precision cosines on
//! one side, the one-bit universal quantizer `q = sign ∘ cos` on the other
//! — and provides the exact expectation of every such mixed estimate, the
//! rescaling that makes it match the target kernel, and the theory and
//! tooling around it:
//!
//! - [`periodic`]: periodic maps, their Fourier coefficients, and
//!   mean-Lipschitz constants.
//! - [`sampling`]: frequency samplers (Gaussian and Cauchy) and reproducible
//!   random draws `(Ω, ξ)`.
//! - [`features`]: feature vectors (dense and bit-packed), the four
//!   query/support pairings with their rescalings, and a binary batch
//!   format.
//! - [`kernels`]: expected-kernel series, the closed-form distorted
//!   quantizer–quantizer kernel, and distance maps with inverses.
//! - [`bounds`]: covering-entropy bounds and required-feature-count
//!   calculators for uniform kernel approximation.
//! - [`dataset`]: CSV datasets and a Gaussian-mixture generator.
//! - [`svm`]: a one-vs-rest kernel SVM trained exactly or on features, with
//!   quantized-query inference.
//! - [`experiments`]: scripted, seed-reproducible CSV pipelines (scatter,
//!   error sweep, success grid, accuracy curves).
//! - [`net`]: a length-prefixed TCP protocol where an m-bit query is
//!   matched against a full-precision feature database.
//! - [`cli`]: the `arpf` binary tying it all together.
//!
//! # Runnable examples
//!
//! Each major capability has a self-contained example under `examples/`:
//!
//! - `periodic_maps` — Fourier coefficients, the 2/π alignment of quantizer
//!   and cosine, and mean-Lipschitz constants.
//! - `kernel_estimates` — mixed-map estimates against their expectations on
//!   random pairs.
//! - `semi_quantized` — the π/2-rescaled one-bit estimate recovering the
//!   Gaussian kernel.
//! - `distorted_kernel` — what the fully quantized estimate converges to,
//!   series vs closed form.
//! - `distance_maps` — feature distances as functions of input distance,
//!   with inverses and sensitivities.
//! - `bounds_report` — feature-count bounds across signal models.
//! - `error_scaling` — worst-case error shrinking like m^(−1/2).
//! - `svm_pipeline` — train on a synthetic mixture, classify with one-bit
//!   queries.
//! - `client_server` — the TCP demo with its 64× bitrate reduction.
//!
//! Run one with `cargo run --release --example <name>`.

pub mod bounds;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod experiments;
pub mod features;
pub mod kernels;
pub mod net;
pub mod periodic;
pub mod sampling;
pub mod svm;
pub mod util;

pub use error::{ArpfError, Result};
