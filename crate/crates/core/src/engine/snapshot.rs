//! Binary state snapshots.
//!
//! Layout (all little-endian):
//!
//! | bytes | field                                            |
//! |-------|--------------------------------------------------|
//! | 4     | magic `FLNS`                                     |
//! | 2     | format version (1)                               |
//! | 2     | sample width in bytes (8 = f64)                  |
//! | 4     | grid size `n`                                    |
//! | 4     | channels `C`                                     |
//! | 4     | parameter dimension `K`                          |
//! | 8     | step counter                                     |
//! | 8·C·n²| densities, channel-major then row-major          |
//! | 8·n²·K| kernel weights `h`, cell-major                   |
//! | 8·n²·K| mixing weights `q`, cell-major                   |
//! | ⌈n²/8⌉| wall bitmask, row-major, least significant bit first |

use std::io::{Read, Write};

use super::state::GridState;
use crate::error::{Error, Result};
use crate::genome::ParameterMap;

pub const MAGIC: [u8; 4] = *b"FLNS";
pub const VERSION: u16 = 1;
const SAMPLE_WIDTH: u16 = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub step: u64,
    pub state: GridState,
    pub params: ParameterMap,
}

impl Snapshot {
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        let n = self.state.size();
        let n2 = n * n;
        out.write_all(&MAGIC)?;
        out.write_all(&VERSION.to_le_bytes())?;
        out.write_all(&SAMPLE_WIDTH.to_le_bytes())?;
        out.write_all(&(n as u32).to_le_bytes())?;
        out.write_all(&(self.state.channels() as u32).to_le_bytes())?;
        out.write_all(&(self.params.dim() as u32).to_le_bytes())?;
        out.write_all(&self.step.to_le_bytes())?;
        let mut buf = Vec::with_capacity(8 * (self.state.mass().len() + 2 * self.params.weights().len()));
        for v in self.state.mass().iter().chain(self.params.weights()).chain(self.params.mixing()) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        let mut bits = vec![0u8; n2.div_ceil(8)];
        for (cell, &wall) in self.state.obstacles().iter().enumerate() {
            if wall {
                bits[cell / 8] |= 1 << (cell % 8);
            }
        }
        buf.extend_from_slice(&bits);
        out.write_all(&buf)?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn read_from<R: Read>(mut input: R) -> Result<Self> {
        let mut header = [0u8; 28];
        input
            .read_exact(&mut header)
            .map_err(|_| Error::Format("truncated header".into()))?;
        if header[0..4] != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = u16::from_le_bytes([header[4], header[5]]);
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let width = u16::from_le_bytes([header[6], header[7]]);
        if width != SAMPLE_WIDTH {
            return Err(Error::Format(format!("unsupported sample width {width}")));
        }
        let u32_at = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().unwrap()) as usize;
        let n = u32_at(8);
        let channels = u32_at(12);
        let dim = u32_at(16);
        let step = u64::from_le_bytes(header[20..28].try_into().unwrap());
        let n2 = n
            .checked_mul(n)
            .filter(|&v| v <= 1 << 26)
            .ok_or_else(|| Error::Format(format!("implausible grid size {n}")))?;
        if channels == 0 || channels > 64 || dim > 4096 {
            return Err(Error::Format("implausible channel or parameter count".into()));
        }

        let floats = n2 * channels + 2 * n2 * dim;
        let mut body = vec![0u8; floats * 8 + n2.div_ceil(8)];
        input
            .read_exact(&mut body)
            .map_err(|_| Error::Format("truncated body".into()))?;
        let mut values = body[..floats * 8]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
        let mass: Vec<f64> = values.by_ref().take(n2 * channels).collect();
        let weights: Vec<f64> = values.by_ref().take(n2 * dim).collect();
        let mixing: Vec<f64> = values.collect();
        let bits = &body[floats * 8..];
        let obstacles = (0..n2).map(|cell| bits[cell / 8] & (1 << (cell % 8)) != 0).collect();

        let state = GridState::from_parts(n, channels, mass, obstacles)
            .map_err(|e| Error::Format(e.to_string()))?;
        let params = ParameterMap::from_parts(n2, dim, weights, mixing)?;
        Ok(Snapshot { step, state, params })
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        Self::read_from(bytes)
    }
}
