//! Randomized feature embeddings and their inner-product estimators.
//!
//! A draw (Ω, ξ) and a periodic map `f` define the embedding
//! `z_f(x) = (1/√m) f(Ωᵀx + ξ)`. Real maps produce dense real features, the
//! complex exponential produces dense complex features, and the one-bit
//! quantizer produces ±1 signs stored packed, eight per byte. Inner products
//! between any two embeddings estimate an expected kernel; the asymmetric
//! combinations (quantized query against full-precision database, or the
//! reverse) recover the target kernel after a fixed rescaling.

use std::io::{Read, Write};
use std::str::FromStr;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ArpfError, Result};
use crate::periodic::{PeriodicMap, ValueField};
use crate::sampling::RandomDraw;

const FEATURE_MAGIC: [u8; 4] = *b"ARPV";
const FEATURE_VERSION: u16 = 1;

/// Storage class of a feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PayloadKind {
    DenseReal,
    DenseComplex,
    PackedBits,
}

impl PayloadKind {
    fn code(self) -> u8 {
        match self {
            PayloadKind::DenseReal => 0,
            PayloadKind::DenseComplex => 1,
            PayloadKind::PackedBits => 2,
        }
    }

    fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(PayloadKind::DenseReal),
            1 => Ok(PayloadKind::DenseComplex),
            2 => Ok(PayloadKind::PackedBits),
            other => Err(ArpfError::Format(format!("unknown payload kind {other}"))),
        }
    }
}

/// Entries of one embedded point. Dense entries are stored with the `1/√m`
/// factor already applied; packed bits encode signs, with the common
/// magnitude `1/√m` kept in `scale`.
#[derive(Debug, Clone, PartialEq)]
pub enum FeaturePayload {
    DenseReal(Vec<f64>),
    DenseComplex(Vec<Complex64>),
    /// LSB-first: entry `j` lives in byte `j / 8`, bit `j % 8`; a set bit
    /// means `+1`. The final byte's unused high bits are zero.
    PackedBits { bits: Vec<u8>, len: usize },
}

/// A feature vector `z_f(x)` of length `m` with magnitude scale `1/√m`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub payload: FeaturePayload,
    pub scale: f64,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        match &self.payload {
            FeaturePayload::DenseReal(v) => v.len(),
            FeaturePayload::DenseComplex(v) => v.len(),
            FeaturePayload::PackedBits { len, .. } => *len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> PayloadKind {
        match &self.payload {
            FeaturePayload::DenseReal(_) => PayloadKind::DenseReal,
            FeaturePayload::DenseComplex(_) => PayloadKind::DenseComplex,
            FeaturePayload::PackedBits { .. } => PayloadKind::PackedBits,
        }
    }

    /// Entries as complex numbers with the scale applied (unpacks bits).
    pub fn dense_entries(&self) -> Vec<Complex64> {
        match &self.payload {
            FeaturePayload::DenseReal(v) => {
                v.iter().map(|&x| Complex64::new(x, 0.0)).collect()
            }
            FeaturePayload::DenseComplex(v) => v.clone(),
            FeaturePayload::PackedBits { bits, len } => (0..*len)
                .map(|j| {
                    let sign = if bits[j / 8] >> (j % 8) & 1 == 1 { 1.0 } else { -1.0 };
                    Complex64::new(sign * self.scale, 0.0)
                })
                .collect(),
        }
    }

    /// `‖z‖²`. For packed signs this is exactly `m · (1/√m)² = 1`.
    pub fn norm_sq(&self) -> f64 {
        match &self.payload {
            FeaturePayload::DenseReal(v) => v.iter().map(|x| x * x).sum(),
            FeaturePayload::DenseComplex(v) => v.iter().map(|x| x.norm_sqr()).sum(),
            FeaturePayload::PackedBits { len, .. } => *len as f64 * self.scale * self.scale,
        }
    }

    /// `<a, b> = Σ_j a_j conj(b_j)`. Packed×packed uses popcounts; packed×dense
    /// gathers signs without materializing the unpacked vector.
    pub fn inner_product(&self, other: &FeatureVector) -> Result<Complex64> {
        let (m, n) = (self.len(), other.len());
        if m != n {
            return Err(ArpfError::LengthMismatch { left: m, right: n });
        }
        use FeaturePayload::*;
        let v = match (&self.payload, &other.payload) {
            (PackedBits { bits: a, len }, PackedBits { bits: b, .. }) => {
                let mut hamming = 0u32;
                for (x, y) in a.iter().zip(b) {
                    hamming += (x ^ y).count_ones();
                }
                let agree = *len as f64 - 2.0 * hamming as f64;
                Complex64::new(self.scale * other.scale * agree, 0.0)
            }
            (PackedBits { bits, len }, DenseReal(dense)) => {
                Complex64::new(self.scale * signed_gather(bits, *len, dense), 0.0)
            }
            (DenseReal(dense), PackedBits { bits, len }) => {
                Complex64::new(other.scale * signed_gather(bits, *len, dense), 0.0)
            }
            (PackedBits { bits, len }, DenseComplex(dense)) => {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..*len {
                    let sign = if bits[j / 8] >> (j % 8) & 1 == 1 { 1.0 } else { -1.0 };
                    acc += sign * dense[j].conj();
                }
                acc * self.scale
            }
            (DenseComplex(dense), PackedBits { bits, len }) => {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..*len {
                    let sign = if bits[j / 8] >> (j % 8) & 1 == 1 { 1.0 } else { -1.0 };
                    acc += dense[j] * sign;
                }
                acc * other.scale
            }
            (DenseReal(a), DenseReal(b)) => {
                Complex64::new(a.iter().zip(b).map(|(x, y)| x * y).sum(), 0.0)
            }
            (DenseReal(a), DenseComplex(b)) => {
                a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
            }
            (DenseComplex(a), DenseReal(b)) => {
                a.iter().zip(b).map(|(x, y)| x * y).sum()
            }
            (DenseComplex(a), DenseComplex(b)) => {
                a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
            }
        };
        Ok(v)
    }
}

/// Σ over entries of `±dense[j]`, signs read from packed bits.
fn signed_gather(bits: &[u8], len: usize, dense: &[f64]) -> f64 {
    let mut acc = 0.0;
    for j in 0..len {
        let x = dense[j];
        if bits[j / 8] >> (j % 8) & 1 == 1 {
            acc += x;
        } else {
            acc -= x;
        }
    }
    acc
}

/// Pack a slice of ±1 signs into bits, LSB-first; the scale becomes `1/√m`.
pub fn pack_bits(signs: &[f64]) -> Result<FeatureVector> {
    if signs.is_empty() {
        return Err(ArpfError::InvalidParameter("cannot pack zero signs".into()));
    }
    let mut bits = vec![0u8; signs.len().div_ceil(8)];
    for (j, &s) in signs.iter().enumerate() {
        if s == 1.0 {
            bits[j / 8] |= 1 << (j % 8);
        } else if s != -1.0 {
            return Err(ArpfError::InvalidParameter(format!(
                "sign entry {j} is {s}, expected ±1"
            )));
        }
    }
    Ok(FeatureVector {
        payload: FeaturePayload::PackedBits { bits, len: signs.len() },
        scale: 1.0 / (signs.len() as f64).sqrt(),
    })
}

/// Recover the ±1 signs from a packed vector.
pub fn unpack_bits(v: &FeatureVector) -> Result<Vec<f64>> {
    match &v.payload {
        FeaturePayload::PackedBits { bits, len } => Ok((0..*len)
            .map(|j| if bits[j / 8] >> (j % 8) & 1 == 1 { 1.0 } else { -1.0 })
            .collect()),
        _ => Err(ArpfError::PayloadMismatch(
            "unpack_bits needs a packed-bits payload".into(),
        )),
    }
}

/// The four query/database estimator combinations and their rescalings.
///
/// Naming is query-first: `QCos` is a quantized query scored against a
/// full-precision cosine database.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapCombo {
    CosCos,
    QCos,
    CosQ,
    QQ,
}

impl MapCombo {
    pub const ALL: [MapCombo; 4] = [
        MapCombo::CosCos,
        MapCombo::QCos,
        MapCombo::CosQ,
        MapCombo::QQ,
    ];

    /// Rescaling that makes the estimator's expectation the target kernel —
    /// except for the fully quantized pair, which keeps scale 1 and estimates
    /// its own distorted kernel.
    pub fn scale(self) -> f64 {
        match self {
            MapCombo::CosCos => 2.0,
            MapCombo::QCos | MapCombo::CosQ => std::f64::consts::FRAC_PI_2,
            MapCombo::QQ => 1.0,
        }
    }

    pub fn query_map(self) -> PeriodicMap {
        match self {
            MapCombo::CosCos | MapCombo::CosQ => PeriodicMap::Cosine { k: 1 },
            MapCombo::QCos | MapCombo::QQ => PeriodicMap::UniversalQuantizer,
        }
    }

    pub fn support_map(self) -> PeriodicMap {
        match self {
            MapCombo::CosCos | MapCombo::QCos => PeriodicMap::Cosine { k: 1 },
            MapCombo::CosQ | MapCombo::QQ => PeriodicMap::UniversalQuantizer,
        }
    }

    fn expected_query_kind(self) -> PayloadKind {
        match self {
            MapCombo::CosCos | MapCombo::CosQ => PayloadKind::DenseReal,
            MapCombo::QCos | MapCombo::QQ => PayloadKind::PackedBits,
        }
    }

    fn expected_support_kind(self) -> PayloadKind {
        match self {
            MapCombo::CosCos | MapCombo::QCos => PayloadKind::DenseReal,
            MapCombo::CosQ | MapCombo::QQ => PayloadKind::PackedBits,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            MapCombo::CosCos => "cos_cos",
            MapCombo::QCos => "q_cos",
            MapCombo::CosQ => "cos_q",
            MapCombo::QQ => "q_q",
        }
    }
}

impl FromStr for MapCombo {
    type Err = ArpfError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "cos_cos" | "coscos" => Ok(MapCombo::CosCos),
            "q_cos" | "qcos" => Ok(MapCombo::QCos),
            "cos_q" | "cosq" => Ok(MapCombo::CosQ),
            "q_q" | "qq" => Ok(MapCombo::QQ),
            other => Err(ArpfError::InvalidParameter(format!(
                "unknown estimator combo '{other}' (expected cos_cos, q_cos, cos_q, or q_q)"
            ))),
        }
    }
}

impl std::fmt::Display for MapCombo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

/// Rescaled kernel estimate `scale · Re <query, support>` for a combo, with
/// payload kinds checked against what the combo requires.
pub fn rescaled_kernel_estimate(
    query: &FeatureVector,
    support: &FeatureVector,
    combo: MapCombo,
) -> Result<f64> {
    if query.kind() != combo.expected_query_kind() {
        return Err(ArpfError::PayloadMismatch(format!(
            "combo {combo} expects a {:?} query, got {:?}",
            combo.expected_query_kind(),
            query.kind()
        )));
    }
    if support.kind() != combo.expected_support_kind() {
        return Err(ArpfError::PayloadMismatch(format!(
            "combo {combo} expects a {:?} support vector, got {:?}",
            combo.expected_support_kind(),
            support.kind()
        )));
    }
    Ok(combo.scale() * query.inner_product(support)?.re)
}

/// An embedding: a shared draw plus the periodic map applied to the phases.
#[derive(Debug, Clone)]
pub struct FeatureEmbedding {
    pub draw: RandomDraw,
    pub map: PeriodicMap,
    dither_override: Option<Vec<f64>>,
}

impl FeatureEmbedding {
    pub fn new(draw: RandomDraw, map: PeriodicMap) -> Self {
        FeatureEmbedding {
            draw,
            map,
            dither_override: None,
        }
    }

    /// Replace the dither ξ with an explicit vector. A testing hook — keeps
    /// embeddings deterministic functions of chosen phases; not reachable
    /// from the CLI.
    pub fn with_forced_dither(mut self, xi: Vec<f64>) -> Result<Self> {
        if xi.len() != self.draw.feature_count() {
            return Err(ArpfError::LengthMismatch {
                left: xi.len(),
                right: self.draw.feature_count(),
            });
        }
        self.dither_override = Some(xi);
        Ok(self)
    }

    fn xi(&self) -> &[f64] {
        self.dither_override.as_deref().unwrap_or(&self.draw.xi)
    }

    pub fn feature_count(&self) -> usize {
        self.draw.feature_count()
    }

    pub fn dim(&self) -> usize {
        self.draw.dim()
    }

    /// Embed one point: `z_f(x)_j = f(ω_j·x + ξ_j)/√m`, stored in the payload
    /// class the map calls for.
    pub fn embed(&self, x: &[f64]) -> Result<FeatureVector> {
        if x.len() != self.dim() {
            return Err(ArpfError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let m = self.feature_count();
        let scale = 1.0 / (m as f64).sqrt();
        let xi = self.xi();
        let phases: Vec<f64> = (0..m)
            .map(|j| {
                let mut t = xi[j];
                for (i, &v) in x.iter().enumerate() {
                    t += self.draw.omega[(i, j)] * v;
                }
                t
            })
            .collect();
        let payload = match (&self.map, self.map.value_field()) {
            (PeriodicMap::UniversalQuantizer, _) => {
                let mut bits = vec![0u8; m.div_ceil(8)];
                for (j, &t) in phases.iter().enumerate() {
                    if t.cos() >= 0.0 {
                        bits[j / 8] |= 1 << (j % 8);
                    }
                }
                FeaturePayload::PackedBits { bits, len: m }
            }
            (map, ValueField::Real) => {
                FeaturePayload::DenseReal(phases.iter().map(|&t| map.evaluate_re(t) * scale).collect())
            }
            (map, ValueField::Complex) => FeaturePayload::DenseComplex(
                phases.iter().map(|&t| map.evaluate(t) * scale).collect(),
            ),
        };
        Ok(FeatureVector { payload, scale })
    }

    /// Embed many points; rows keep their input order.
    pub fn embed_batch(&self, rows: &[Vec<f64>]) -> Result<Vec<FeatureVector>> {
        rows.par_iter().map(|r| self.embed(r)).collect()
    }
}

/// Fast path for experiments: embed all rows of `x` (an `n × d` matrix) under
/// a real-valued map, producing the `n × m` matrix of scaled feature entries.
/// Quantizer entries come out as `±1/√m`, ready for dense linear algebra.
pub fn embed_real_matrix(
    draw: &RandomDraw,
    map: &PeriodicMap,
    x: &Array2<f64>,
) -> Result<Array2<f64>> {
    if map.value_field() != ValueField::Real {
        return Err(ArpfError::PayloadMismatch(
            "matrix embedding requires a real-valued map".into(),
        ));
    }
    if x.ncols() != draw.dim() {
        return Err(ArpfError::DimensionMismatch {
            expected: draw.dim(),
            got: x.ncols(),
        });
    }
    let m = draw.feature_count();
    let scale = 1.0 / (m as f64).sqrt();
    let mut phases = x.dot(&draw.omega); // n × m
    for mut row in phases.rows_mut() {
        for (j, v) in row.iter_mut().enumerate() {
            *v += draw.xi[j];
        }
    }
    let out = match map {
        PeriodicMap::UniversalQuantizer => {
            phases.mapv(|t| if t.cos() >= 0.0 { scale } else { -scale })
        }
        map => phases.mapv(|t| map.evaluate_re(t) * scale),
    };
    Ok(out)
}

/// Write a homogeneous batch of feature vectors: header (magic "ARPV",
/// version u16, payload-kind u8, m u32, count u64), then payloads
/// back-to-back. Packed rows are padded to whole bytes.
pub fn write_feature_batch<W: Write>(w: &mut W, batch: &[FeatureVector]) -> Result<()> {
    let first = batch.first().ok_or_else(|| {
        ArpfError::InvalidParameter("cannot write an empty feature batch".into())
    })?;
    let kind = first.kind();
    let m = first.len();
    for v in batch {
        if v.kind() != kind || v.len() != m {
            return Err(ArpfError::PayloadMismatch(
                "feature batch must share payload kind and length".into(),
            ));
        }
    }
    w.write_all(&FEATURE_MAGIC)?;
    w.write_all(&FEATURE_VERSION.to_le_bytes())?;
    w.write_all(&[kind.code()])?;
    w.write_all(&(m as u32).to_le_bytes())?;
    w.write_all(&(batch.len() as u64).to_le_bytes())?;
    for v in batch {
        match &v.payload {
            FeaturePayload::DenseReal(entries) => {
                for e in entries {
                    w.write_all(&e.to_le_bytes())?;
                }
            }
            FeaturePayload::DenseComplex(entries) => {
                for e in entries {
                    w.write_all(&e.re.to_le_bytes())?;
                    w.write_all(&e.im.to_le_bytes())?;
                }
            }
            FeaturePayload::PackedBits { bits, .. } => {
                w.write_all(bits)?;
            }
        }
    }
    Ok(())
}

/// Read a feature batch written by [`write_feature_batch`].
pub fn read_feature_batch<R: Read>(r: &mut R) -> Result<Vec<FeatureVector>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| ArpfError::Format("feature file truncated before magic".into()))?;
    if magic != FEATURE_MAGIC {
        return Err(ArpfError::Format(format!(
            "bad feature-file magic {:?}, expected {:?}",
            magic, FEATURE_MAGIC
        )));
    }
    let mut vbuf = [0u8; 2];
    r.read_exact(&mut vbuf)
        .map_err(|_| ArpfError::Format("unexpected end of file".into()))?;
    let version = u16::from_le_bytes(vbuf);
    if version != FEATURE_VERSION {
        return Err(ArpfError::Format(format!(
            "unsupported feature-file version {version}, expected {FEATURE_VERSION}"
        )));
    }
    let mut kbuf = [0u8; 1];
    r.read_exact(&mut kbuf)
        .map_err(|_| ArpfError::Format("unexpected end of file".into()))?;
    let kind = PayloadKind::from_code(kbuf[0])?;
    let mut mbuf = [0u8; 4];
    r.read_exact(&mut mbuf)
        .map_err(|_| ArpfError::Format("unexpected end of file".into()))?;
    let m = u32::from_le_bytes(mbuf) as usize;
    let mut cbuf = [0u8; 8];
    r.read_exact(&mut cbuf)
        .map_err(|_| ArpfError::Format("unexpected end of file".into()))?;
    let count = u64::from_le_bytes(cbuf) as usize;
    if m == 0 {
        return Err(ArpfError::Format("feature file declares m = 0".into()));
    }
    let scale = 1.0 / (m as f64).sqrt();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let payload = match kind {
            PayloadKind::DenseReal => {
                let mut entries = vec![0.0; m];
                for e in entries.iter_mut() {
                    let mut b = [0u8; 8];
                    r.read_exact(&mut b)
                        .map_err(|_| ArpfError::Format("feature payload truncated".into()))?;
                    *e = f64::from_le_bytes(b);
                }
                FeaturePayload::DenseReal(entries)
            }
            PayloadKind::DenseComplex => {
                let mut entries = vec![Complex64::new(0.0, 0.0); m];
                for e in entries.iter_mut() {
                    let mut b = [0u8; 16];
                    r.read_exact(&mut b)
                        .map_err(|_| ArpfError::Format("feature payload truncated".into()))?;
                    let re = f64::from_le_bytes(b[0..8].try_into().unwrap());
                    let im = f64::from_le_bytes(b[8..16].try_into().unwrap());
                    *e = Complex64::new(re, im);
                }
                FeaturePayload::DenseComplex(entries)
            }
            PayloadKind::PackedBits => {
                let mut bits = vec![0u8; m.div_ceil(8)];
                r.read_exact(&mut bits)
                    .map_err(|_| ArpfError::Format("feature payload truncated".into()))?;
                FeaturePayload::PackedBits { bits, len: m }
            }
        };
        out.push(FeatureVector { payload, scale });
    }
    Ok(out)
}

pub fn save_feature_batch(path: &std::path::Path, batch: &[FeatureVector]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_feature_batch(&mut f, batch)
}

pub fn load_feature_batch(path: &std::path::Path) -> Result<Vec<FeatureVector>> {
    let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
    read_feature_batch(&mut f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::FrequencySampler;
    use approx::assert_abs_diff_eq;
    use ndarray::arr2;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn test_draw(d: usize, m: usize, seed: u64) -> RandomDraw {
        FrequencySampler::gaussian_rbf(1.0, d).unwrap().draw(m, seed).unwrap()
    }

    #[test]
    fn quantizer_embedding_of_origin_with_zero_dither() {
        let draw = test_draw(3, 16, 1);
        let emb = FeatureEmbedding::new(draw, PeriodicMap::UniversalQuantizer)
            .with_forced_dither(vec![0.0; 16])
            .unwrap();
        let z = emb.embed(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(unpack_bits(&z).unwrap(), vec![1.0; 16]);
        assert_abs_diff_eq!(z.norm_sq(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn cosine_embedding_with_forced_phases() {
        let mut draw = test_draw(2, 4, 1);
        draw.omega.fill(0.0);
        let emb = FeatureEmbedding::new(draw, PeriodicMap::Cosine { k: 1 })
            .with_forced_dither(vec![0.0, PI / 2.0, PI, 3.0 * PI / 2.0])
            .unwrap();
        let z = emb.embed(&[5.0, -2.0]).unwrap();
        match &z.payload {
            FeaturePayload::DenseReal(v) => {
                assert_abs_diff_eq!(v[0], 0.5, epsilon = 1e-15);
                assert_abs_diff_eq!(v[1], 0.0, epsilon = 1e-15);
                assert_abs_diff_eq!(v[2], -0.5, epsilon = 1e-15);
                assert_abs_diff_eq!(v[3], 0.0, epsilon = 1e-15);
            }
            other => panic!("expected dense real payload, got {other:?}"),
        }
    }

    #[test]
    fn exponential_entries_have_unit_modulus() {
        let draw = test_draw(3, 32, 5);
        let emb = FeatureEmbedding::new(draw, PeriodicMap::ComplexExponential);
        let z = emb.embed(&[0.3, -0.7, 1.1]).unwrap();
        match &z.payload {
            FeaturePayload::DenseComplex(v) => {
                let scale = 1.0 / 32f64.sqrt();
                for e in v {
                    assert_abs_diff_eq!(e.norm(), scale, epsilon = 1e-14);
                }
            }
            other => panic!("expected dense complex payload, got {other:?}"),
        }
        assert_abs_diff_eq!(z.norm_sq(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn pack_example_byte() {
        let signs = [1.0, -1.0, 1.0, 1.0, -1.0, -1.0, -1.0, 1.0];
        let v = pack_bits(&signs).unwrap();
        match &v.payload {
            FeaturePayload::PackedBits { bits, len } => {
                assert_eq!(*len, 8);
                assert_eq!(bits.as_slice(), &[0b1000_1101]);
            }
            other => panic!("unexpected payload {other:?}"),
        }
        assert_eq!(unpack_bits(&v).unwrap(), signs);
    }

    #[test]
    fn pack_rejects_non_sign_input() {
        assert!(pack_bits(&[1.0, 0.5]).is_err());
        assert!(pack_bits(&[]).is_err());
    }

    #[test]
    fn packed_self_inner_product_is_exactly_one() {
        let draw = test_draw(4, 123, 7);
        let emb = FeatureEmbedding::new(draw, PeriodicMap::UniversalQuantizer);
        let z = emb.embed(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        let ip = z.inner_product(&z).unwrap();
        assert_eq!(ip.re, 1.0);
        assert_eq!(
            rescaled_kernel_estimate(&z, &z, MapCombo::QQ).unwrap(),
            1.0
        );
    }

    #[test]
    fn packed_against_dense_matches_unpacked_arithmetic() {
        let draw = test_draw(3, 100, 9);
        let q = FeatureEmbedding::new(draw.clone(), PeriodicMap::UniversalQuantizer);
        let c = FeatureEmbedding::new(draw, PeriodicMap::Cosine { k: 1 });
        let x = [0.4, -0.1, 0.9];
        let y = [0.2, 0.3, -0.5];
        let zq = q.embed(&x).unwrap();
        let zc = c.embed(&y).unwrap();
        let fast = zq.inner_product(&zc).unwrap();
        let slow: Complex64 = zq
            .dense_entries()
            .iter()
            .zip(zc.dense_entries().iter())
            .map(|(a, b)| a * b.conj())
            .sum();
        assert!((fast - slow).norm() < 1e-12);
        // conjugate relation between the two orders
        let rev = zc.inner_product(&zq).unwrap();
        assert!((fast - rev.conj()).norm() < 1e-12);
    }

    #[test]
    fn difference_norm_identity_is_exact() {
        let draw = test_draw(3, 64, 21);
        let q = FeatureEmbedding::new(draw.clone(), PeriodicMap::UniversalQuantizer);
        let c = FeatureEmbedding::new(draw, PeriodicMap::Cosine { k: 1 });
        let zq = q.embed(&[1.0, 0.0, -1.0]).unwrap();
        let zc = c.embed(&[0.5, 0.5, 0.5]).unwrap();
        let lhs: f64 = zq
            .dense_entries()
            .iter()
            .zip(zc.dense_entries().iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        let rhs = zq.norm_sq() + zc.norm_sq() - 2.0 * zq.inner_product(&zc).unwrap().re;
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);
    }

    #[test]
    fn combo_validation() {
        let draw = test_draw(2, 16, 3);
        let q = FeatureEmbedding::new(draw.clone(), PeriodicMap::UniversalQuantizer);
        let c = FeatureEmbedding::new(draw, PeriodicMap::Cosine { k: 1 });
        let zq = q.embed(&[0.0, 0.0]).unwrap();
        let zc = c.embed(&[0.0, 0.0]).unwrap();
        assert!(rescaled_kernel_estimate(&zq, &zc, MapCombo::QCos).is_ok());
        assert!(rescaled_kernel_estimate(&zc, &zq, MapCombo::CosQ).is_ok());
        assert!(rescaled_kernel_estimate(&zq, &zc, MapCombo::CosCos).is_err());
        assert!(rescaled_kernel_estimate(&zc, &zq, MapCombo::QCos).is_err());
        assert!(rescaled_kernel_estimate(&zq, &zq, MapCombo::QCos).is_err());
    }

    #[test]
    fn length_and_dimension_mismatches() {
        let a = test_draw(2, 8, 1);
        let b = test_draw(2, 16, 1);
        let qa = FeatureEmbedding::new(a, PeriodicMap::UniversalQuantizer);
        let qb = FeatureEmbedding::new(b, PeriodicMap::UniversalQuantizer);
        let za = qa.embed(&[0.0, 0.0]).unwrap();
        let zb = qb.embed(&[0.0, 0.0]).unwrap();
        assert!(za.inner_product(&zb).is_err());
        assert!(qa.embed(&[0.0]).is_err());
        assert!(qa
            .clone()
            .with_forced_dither(vec![0.0; 3])
            .is_err());
    }

    #[test]
    fn matrix_embedding_matches_single_path_for_quantizer() {
        let draw = test_draw(3, 40, 13);
        let rows = vec![vec![0.1, 0.2, 0.3], vec![-1.0, 0.5, 2.0]];
        let x = arr2(&[[0.1, 0.2, 0.3], [-1.0, 0.5, 2.0]]);
        let emb = FeatureEmbedding::new(draw.clone(), PeriodicMap::UniversalQuantizer);
        let singles = emb.embed_batch(&rows).unwrap();
        let matrix = embed_real_matrix(&draw, &PeriodicMap::UniversalQuantizer, &x).unwrap();
        for (i, z) in singles.iter().enumerate() {
            let signs = unpack_bits(z).unwrap();
            for j in 0..40 {
                let expect = signs[j] / (40f64).sqrt();
                assert_abs_diff_eq!(matrix[(i, j)], expect, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn matrix_embedding_rejects_complex_map() {
        let draw = test_draw(2, 8, 1);
        let x = arr2(&[[0.0, 0.0]]);
        assert!(embed_real_matrix(&draw, &PeriodicMap::ComplexExponential, &x).is_err());
    }

    #[test]
    fn feature_file_round_trip_all_kinds() {
        let draw = test_draw(3, 19, 2);
        for map in [
            PeriodicMap::UniversalQuantizer,
            PeriodicMap::Cosine { k: 1 },
            PeriodicMap::ComplexExponential,
        ] {
            let emb = FeatureEmbedding::new(draw.clone(), map);
            let batch = emb
                .embed_batch(&[vec![0.1, 0.2, 0.3], vec![1.0, -1.0, 0.0]])
                .unwrap();
            let mut buf = Vec::new();
            write_feature_batch(&mut buf, &batch).unwrap();
            let back = read_feature_batch(&mut buf.as_slice()).unwrap();
            assert_eq!(batch, back);
        }
    }

    #[test]
    fn feature_file_rejects_corruption() {
        let draw = test_draw(2, 9, 2);
        let emb = FeatureEmbedding::new(draw, PeriodicMap::UniversalQuantizer);
        let batch = emb.embed_batch(&[vec![0.0, 0.0]]).unwrap();
        let mut buf = Vec::new();
        write_feature_batch(&mut buf, &batch).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'Z';
        assert!(read_feature_batch(&mut bad.as_slice()).is_err());
        let truncated = &buf[..buf.len() - 1];
        assert!(read_feature_batch(&mut &truncated[..]).is_err());
        let mut mixed_batch = batch.clone();
        mixed_batch.push(FeatureVector {
            payload: FeaturePayload::DenseReal(vec![0.0; 9]),
            scale: 1.0 / 3.0,
        });
        let mut sink = Vec::new();
        assert!(write_feature_batch(&mut sink, &mixed_batch).is_err());
    }

    #[test]
    fn combo_parsing() {
        assert_eq!("q-cos".parse::<MapCombo>().unwrap(), MapCombo::QCos);
        assert_eq!("COS_COS".parse::<MapCombo>().unwrap(), MapCombo::CosCos);
        assert!("bogus".parse::<MapCombo>().is_err());
    }

    proptest! {
        #[test]
        fn pack_round_trips(bools in proptest::collection::vec(any::<bool>(), 1..2000)) {
            let signs: Vec<f64> = bools.iter().map(|&b| if b { 1.0 } else { -1.0 }).collect();
            let packed = pack_bits(&signs).unwrap();
            prop_assert_eq!(unpack_bits(&packed).unwrap(), signs);
        }

        #[test]
        fn packed_inner_product_matches_dense(
            a in proptest::collection::vec(any::<bool>(), 64),
            b in proptest::collection::vec(any::<bool>(), 64),
        ) {
            let sa: Vec<f64> = a.iter().map(|&x| if x { 1.0 } else { -1.0 }).collect();
            let sb: Vec<f64> = b.iter().map(|&x| if x { 1.0 } else { -1.0 }).collect();
            let pa = pack_bits(&sa).unwrap();
            let pb = pack_bits(&sb).unwrap();
            let fast = pa.inner_product(&pb).unwrap().re;
            let slow: f64 = sa.iter().zip(&sb).map(|(x, y)| x * y / 64.0).sum();
            prop_assert!((fast - slow).abs() < 1e-12);
        }
    }
}
