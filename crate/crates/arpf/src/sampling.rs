//! Frequency samplers and reproducible random draws.
//!
//! A sampler fixes the spectral distribution Λ whose inverse Fourier transform
//! is the target shift-invariant kernel: Gaussian frequencies give the
//! Gaussian RBF kernel `exp(-‖u‖₂²/(2σ²))`, Cauchy frequencies give the
//! Laplace kernel `exp(-‖u‖₁/τ)`. A draw is the matrix Ω of `m` frequency
//! columns plus `m` uniform phase dithers ξ; both sides of a protocol must
//! share it, so draws serialize to a small binary file.

use std::io::{Read, Write};

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Cauchy, Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ArpfError, Result};

const DRAW_MAGIC: [u8; 4] = *b"ARPF";
const DRAW_VERSION: u16 = 1;

/// Which norm a sampler's kernel is shift-invariant in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormKind {
    L2,
    L1,
}

/// A spectral distribution paired with its analytic kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SamplerKind {
    /// Entries of ω i.i.d. `N(0, σ⁻²)`; kernel `exp(-‖u‖₂²/(2σ²))`.
    GaussianRbf { sigma: f64 },
    /// Entries of ω i.i.d. Cauchy with scale `1/τ`; kernel `exp(-‖u‖₁/τ)`.
    CauchyLaplace { tau: f64 },
}

/// A sampler: spectral family plus the ambient dimension `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencySampler {
    pub kind: SamplerKind,
    pub dim: usize,
}

impl FrequencySampler {
    pub fn gaussian_rbf(sigma: f64, dim: usize) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(ArpfError::InvalidParameter(format!(
                "bandwidth sigma must be positive and finite, got {sigma}"
            )));
        }
        if dim == 0 {
            return Err(ArpfError::InvalidParameter("dimension must be positive".into()));
        }
        Ok(FrequencySampler {
            kind: SamplerKind::GaussianRbf { sigma },
            dim,
        })
    }

    pub fn cauchy_laplace(tau: f64, dim: usize) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(ArpfError::InvalidParameter(format!(
                "scale tau must be positive and finite, got {tau}"
            )));
        }
        if dim == 0 {
            return Err(ArpfError::InvalidParameter("dimension must be positive".into()));
        }
        Ok(FrequencySampler {
            kind: SamplerKind::CauchyLaplace { tau },
            dim,
        })
    }

    pub fn family_name(&self) -> &'static str {
        match self.kind {
            SamplerKind::GaussianRbf { .. } => "gaussian",
            SamplerKind::CauchyLaplace { .. } => "cauchy",
        }
    }

    /// Which norm distances are measured in for this sampler's kernel.
    pub fn norm_kind(&self) -> NormKind {
        match self.kind {
            SamplerKind::GaussianRbf { .. } => NormKind::L2,
            SamplerKind::CauchyLaplace { .. } => NormKind::L1,
        }
    }

    /// The norm of a displacement vector in the sampler's geometry.
    pub fn norm(&self, u: &[f64]) -> f64 {
        match self.norm_kind() {
            NormKind::L2 => u.iter().map(|x| x * x).sum::<f64>().sqrt(),
            NormKind::L1 => u.iter().map(|x| x.abs()).sum(),
        }
    }

    /// One-dimensional kernel profile: the kernel value at distance `s >= 0`.
    pub fn kernel_profile(&self, s: f64) -> f64 {
        match self.kind {
            SamplerKind::GaussianRbf { sigma } => (-s * s / (2.0 * sigma * sigma)).exp(),
            SamplerKind::CauchyLaplace { tau } => (-s / tau).exp(),
        }
    }

    /// Analytic kernel at displacement `u = x - y`.
    pub fn analytic_kernel(&self, u: &[f64]) -> Result<f64> {
        if u.len() != self.dim {
            return Err(ArpfError::DimensionMismatch {
                expected: self.dim,
                got: u.len(),
            });
        }
        Ok(self.kernel_profile(self.norm(u)))
    }

    /// Kernel value between two points.
    pub fn kernel_between(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(ArpfError::LengthMismatch {
                left: x.len(),
                right: y.len(),
            });
        }
        let u: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        self.analytic_kernel(&u)
    }

    /// First-moment constant `C_Λ` with `E|ωᵀa| <= C_Λ ‖a‖₂`.
    /// `None` when the spectral family has no first moment (Cauchy).
    pub fn c_lambda(&self) -> Option<f64> {
        match self.kind {
            SamplerKind::GaussianRbf { sigma } => Some(1.0 / sigma),
            SamplerKind::CauchyLaplace { .. } => None,
        }
    }

    /// Draw `m` frequency columns and phase dithers. Column `j` of Ω comes
    /// from its own counter-based stream derived from `(seed, j)`, so the
    /// result is bit-identical no matter how the work is scheduled.
    pub fn draw(&self, m: usize, seed: u64) -> Result<RandomDraw> {
        if m == 0 {
            return Err(ArpfError::InvalidParameter(
                "feature count m must be positive".into(),
            ));
        }
        let d = self.dim;
        let columns: Vec<Vec<f64>> = (0..m)
            .into_par_iter()
            .map(|j| {
                let mut rng = column_rng(seed, j as u64);
                let mut col = vec![0.0; d];
                match self.kind {
                    SamplerKind::GaussianRbf { sigma } => {
                        let normal = Normal::new(0.0, 1.0 / sigma).expect("valid sigma");
                        for v in col.iter_mut() {
                            *v = normal.sample(&mut rng);
                        }
                    }
                    SamplerKind::CauchyLaplace { tau } => {
                        let cauchy = Cauchy::new(0.0, 1.0 / tau).expect("valid tau");
                        for v in col.iter_mut() {
                            *v = cauchy.sample(&mut rng);
                        }
                    }
                }
                col
            })
            .collect();
        let mut omega = Array2::<f64>::zeros((d, m));
        for (j, col) in columns.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                omega[(i, j)] = *v;
            }
        }
        // phase dithers come from the dedicated stream 0
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(0);
        let xi: Vec<f64> = (0..m)
            .map(|_| rng.gen::<f64>() * 2.0 * std::f64::consts::PI)
            .collect();
        Ok(RandomDraw {
            omega,
            xi,
            seed,
        })
    }
}

/// ChaCha stream for column `j` under `seed`; stream 0 is reserved for ξ.
fn column_rng(seed: u64, j: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(j + 1);
    rng
}

/// A shared random draw: frequency matrix Ω (`d × m`), phases ξ (`m`), and the
/// seed it was generated from.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomDraw {
    pub omega: Array2<f64>,
    pub xi: Vec<f64>,
    pub seed: u64,
}

impl RandomDraw {
    pub fn dim(&self) -> usize {
        self.omega.nrows()
    }

    pub fn feature_count(&self) -> usize {
        self.omega.ncols()
    }

    /// Serialize: magic "ARPF", version u16, d u32, m u32, seed u64, then Ω
    /// row-major and ξ as little-endian f64.
    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(&DRAW_MAGIC)?;
        w.write_all(&DRAW_VERSION.to_le_bytes())?;
        w.write_all(&(self.dim() as u32).to_le_bytes())?;
        w.write_all(&(self.feature_count() as u32).to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        for row in self.omega.rows() {
            for v in row {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        for v in &self.xi {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)
            .map_err(|_| ArpfError::Format("draw file truncated before magic".into()))?;
        if magic != DRAW_MAGIC {
            return Err(ArpfError::Format(format!(
                "bad draw-file magic {:?}, expected {:?}",
                magic, DRAW_MAGIC
            )));
        }
        let version = read_u16(r)?;
        if version != DRAW_VERSION {
            return Err(ArpfError::Format(format!(
                "unsupported draw-file version {version}, expected {DRAW_VERSION}"
            )));
        }
        let d = read_u32(r)? as usize;
        let m = read_u32(r)? as usize;
        let seed = read_u64(r)?;
        if d == 0 || m == 0 {
            return Err(ArpfError::Format("draw file declares empty dimensions".into()));
        }
        let mut omega = Array2::<f64>::zeros((d, m));
        for i in 0..d {
            for j in 0..m {
                omega[(i, j)] = read_f64(r)?;
            }
        }
        let mut xi = vec![0.0; m];
        for v in xi.iter_mut() {
            *v = read_f64(r)?;
        }
        Ok(RandomDraw { omega, xi, seed })
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut f)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read_from(&mut f)
    }
}

fn read_u16<R: Read>(r: &mut R) -> Result<u16> {
    let mut b = [0u8; 2];
    r.read_exact(&mut b)
        .map_err(|_| ArpfError::Format("unexpected end of file".into()))?;
    Ok(u16::from_le_bytes(b))
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)
        .map_err(|_| ArpfError::Format("unexpected end of file".into()))?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)
        .map_err(|_| ArpfError::Format("unexpected end of file".into()))?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    Ok(f64::from_bits(read_u64(r)?))
}
