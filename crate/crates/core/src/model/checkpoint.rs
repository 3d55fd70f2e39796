//! Binary checkpoint codec.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! "GSKW"                       4-byte magic
//! u32 version                  currently 1
//! u32 layer count L
//! L × (u32 in, u32 out, u32 k)
//! L × (f32 weights in (out,in,row,col) order, then f32 biases)
//! u64 seed, u32 epoch, f64 validation loss
//! ```
//!
//! The leaky slope is not part of the format; decoding restores
//! [`DEFAULT_LEAKY_SLOPE`].

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{NetSpec, Weights, DEFAULT_LEAKY_SLOPE};
use crate::tensor::{ConvKernel, Grid4};

pub const MAGIC: &[u8; 4] = b"GSKW";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainingMeta {
    pub seed: u64,
    /// 1-based epoch the weights were taken from (0 = untrained).
    pub epoch: u32,
    pub validation_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub spec: NetSpec,
    pub weights: Weights<f32>,
    pub meta: TrainingMeta,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CheckpointError {
    #[error("not a checkpoint (bad magic bytes)")]
    NotACheckpoint,
    #[error("unsupported checkpoint version {0} (expected {FORMAT_VERSION})")]
    UnsupportedVersion(u32),
    #[error("truncated checkpoint: needed {needed} more bytes at offset {offset}")]
    Truncated { offset: usize, needed: usize },
    #[error("invalid checkpoint: {0}")]
    Invalid(String),
}

impl Checkpoint {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64 + 4 * self.weights.param_count());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.spec.layers.len() as u32).to_le_bytes());
        for l in &self.spec.layers {
            for v in [l.in_channels, l.out_channels, l.kernel] {
                out.extend_from_slice(&(v as u32).to_le_bytes());
            }
        }
        for t in self.weights.tensors() {
            for v in t {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out.extend_from_slice(&self.meta.seed.to_le_bytes());
        out.extend_from_slice(&self.meta.epoch.to_le_bytes());
        out.extend_from_slice(&self.meta.validation_loss.to_le_bytes());
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, CheckpointError> {
        let mut r = Reader { bytes, pos: 0 };
        if bytes.len() < 4 || &bytes[..4] != MAGIC {
            return Err(CheckpointError::NotACheckpoint);
        }
        r.pos = 4;
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(CheckpointError::UnsupportedVersion(version));
        }
        let count = r.u32()? as usize;
        if count == 0 {
            return Err(CheckpointError::Invalid(String::from("zero layers")));
        }
        let mut triples = Vec::with_capacity(count.min(256));
        for _ in 0..count {
            triples.push((r.u32()? as usize, r.u32()? as usize, r.u32()? as usize));
        }
        let input_channels = triples[0].0;
        let spec = NetSpec::from_layers(input_channels, &triples, DEFAULT_LEAKY_SLOPE)
            .map_err(|e| CheckpointError::Invalid(format!("{e}")))?;
        let mut layers = Vec::with_capacity(count);
        for &(cin, cout, k) in &triples {
            let n = cout * cin * k * k;
            let w = r.f32s(n)?;
            let b = r.f32s(cout)?;
            let grid = Grid4::from_vec([cout, cin, k, k], w).map_err(|e| CheckpointError::Invalid(format!("{e}")))?;
            layers.push(ConvKernel::new(grid, b).map_err(|e| CheckpointError::Invalid(format!("{e}")))?);
        }
        let meta = TrainingMeta {
            seed: r.u64()?,
            epoch: r.u32()?,
            validation_loss: f64::from_bits(r.u64()?),
        };
        if r.pos != bytes.len() {
            return Err(CheckpointError::Invalid(format!(
                "{} trailing bytes",
                bytes.len() - r.pos
            )));
        }
        Ok(Checkpoint {
            spec,
            weights: Weights::from_layers(layers),
            meta,
        })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], CheckpointError> {
        let avail = self.bytes.len() - self.pos;
        if avail < n {
            return Err(CheckpointError::Truncated {
                offset: self.pos,
                needed: n - avail,
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>, CheckpointError> {
        let raw = self.take(
            n.checked_mul(4)
                .ok_or(CheckpointError::Invalid(String::from("size overflow")))?,
        )?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::init_weights;

    fn sample() -> Checkpoint {
        let spec = NetSpec::with_hidden(&[4, 3, 3, 2, 2, 2]).unwrap();
        let weights = init_weights(&spec, 17);
        Checkpoint {
            spec,
            weights,
            meta: TrainingMeta {
                seed: 17,
                epoch: 3,
                validation_loss: 0.4321,
            },
        }
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let c = sample();
        let bytes = c.encode();
        let d = Checkpoint::decode(&bytes).unwrap();
        assert_eq!(d, c);
        for (a, b) in c.weights.tensors().zip(d.weights.tensors()) {
            assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
        assert_eq!(d.encode(), bytes);
    }

    #[test]
    fn header_layout() {
        let bytes = sample().encode();
        assert_eq!(&bytes[..4], b"GSKW");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 7);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 3);
        assert_eq!(u32::from_le_bytes(bytes[16..20].try_into().unwrap()), 4);
        assert_eq!(u32::from_le_bytes(bytes[20..24].try_into().unwrap()), 9);
    }

    #[test]
    fn distinct_failure_modes() {
        let bytes = sample().encode();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert_eq!(Checkpoint::decode(&bad), Err(CheckpointError::NotACheckpoint));
        assert_eq!(Checkpoint::decode(b"GS"), Err(CheckpointError::NotACheckpoint));
        let mut v2 = bytes.clone();
        v2[4] = 2;
        assert_eq!(Checkpoint::decode(&v2), Err(CheckpointError::UnsupportedVersion(2)));
        for cut in [6, 20, bytes.len() / 2, bytes.len() - 1] {
            assert!(
                matches!(
                    Checkpoint::decode(&bytes[..cut]),
                    Err(CheckpointError::Truncated { .. })
                ),
                "cut at {cut}"
            );
        }
        let mut long = bytes.clone();
        long.push(0);
        assert!(matches!(Checkpoint::decode(&long), Err(CheckpointError::Invalid(_))));
    }
}
