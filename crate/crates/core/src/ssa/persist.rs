//! Binary model container.
//!
//! Layout, all integers `u64` and all reals IEEE-754 `f64`, little-endian:
//!
//! ```text
//! magic        "CASADMDL\x01"           9 bytes
//! train_len    u64
//! lag          u64
//! rank         u64
//! rule         u8   0 = explicit r, 1 = energy fraction
//! rule_value   f64  r or the fraction
//! total_energy f64
//! score_max    f64  training_score_max
//! eigenvalues  rank × f64
//! centroid     rank × f64
//! basis        lag × rank × f64, column-major
//! ```

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use super::{DimensionRule, LagConfig, SsaError, SsaModel};

pub const MODEL_MAGIC: &[u8; 9] = b"CASADMDL\x01";

pub fn encode_model(model: &SsaModel) -> Vec<u8> {
    let config = model.config();
    let rank = model.rank();
    let mut out = Vec::with_capacity(9 + 8 * (7 + 2 * rank + config.lag * rank) + 1);
    out.extend_from_slice(MODEL_MAGIC);
    for v in [config.train_len, config.lag, rank] {
        out.extend_from_slice(&(v as u64).to_le_bytes());
    }
    let (tag, value) = match config.dimension {
        DimensionRule::Explicit(r) => (0u8, r as f64),
        DimensionRule::Energy(f) => (1u8, f),
    };
    out.push(tag);
    let mut put = |v: f64| out.extend_from_slice(&v.to_le_bytes());
    put(value);
    put(model.total_energy());
    put(model.training_score_max());
    model.eigenvalues().iter().for_each(|&v| put(v));
    model.centroid().iter().for_each(|&v| put(v));
    model.basis().iter().for_each(|&v| put(v));
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], SsaError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| SsaError::Format(format!("model file truncated at byte {}", self.pos)))?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u64(&mut self) -> Result<u64, SsaError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64, SsaError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, SsaError> {
        (0..n).map(|_| self.f64()).collect()
    }
}

pub fn decode_model(bytes: &[u8]) -> Result<SsaModel, SsaError> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(MODEL_MAGIC.len())? != MODEL_MAGIC {
        return Err(SsaError::Format("not a model file (bad magic or version)".into()));
    }
    let to_usize = |v: u64| usize::try_from(v).map_err(|_| SsaError::Format(format!("dimension {v} too large")));
    let train_len = to_usize(cur.u64()?)?;
    let lag = to_usize(cur.u64()?)?;
    let rank = to_usize(cur.u64()?)?;
    let expected_len = lag
        .checked_mul(rank)
        .and_then(|lr| lr.checked_add(2 * rank + 6))
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(MODEL_MAGIC.len() + 1))
        .ok_or_else(|| SsaError::Format("dimensions overflow".into()))?;
    if expected_len != bytes.len() {
        return Err(SsaError::Format(format!(
            "model file has {} bytes, header implies {expected_len}",
            bytes.len()
        )));
    }
    let tag = cur.take(1)?[0];
    let value = cur.f64()?;
    let dimension = match tag {
        0 => DimensionRule::Explicit(value as usize),
        1 => DimensionRule::Energy(value),
        t => return Err(SsaError::Format(format!("unknown dimension rule tag {t}"))),
    };
    let config = LagConfig::new(train_len, lag, dimension)?;
    let total_energy = cur.f64()?;
    let score_max = cur.f64()?;
    let eigenvalues = cur.f64s(rank)?;
    let centroid = DVector::from_vec(cur.f64s(rank)?);
    let basis = DMatrix::from_vec(lag, rank, cur.f64s(lag * rank)?);
    SsaModel::from_parts(config, basis, eigenvalues, centroid, total_energy, score_max)
}

pub fn save_model(model: &SsaModel, path: impl AsRef<Path>) -> Result<(), SsaError> {
    std::fs::write(path, encode_model(model)).map_err(|e| SsaError::Io(e.to_string()))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SsaModel, SsaError> {
    let bytes = std::fs::read(path).map_err(|e| SsaError::Io(e.to_string()))?;
    decode_model(&bytes)
}
