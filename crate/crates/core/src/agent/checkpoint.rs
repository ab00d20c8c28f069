//! Agent checkpoints: temperature, step count and the five networks.
//!
//! ```text
//! magic     4 bytes "SGCK"
//! version   u16 LE
//! log_alpha f32 LE
//! steps     u64 LE
//! 5 x (u32 LE length, parameter wire blob): policy, trend 1, trend 2, backup 1, backup 2
//! ```
//! Optimizer moments and replay contents are not stored.

use std::path::Path;

use super::SacAgent;
use crate::error::{Error, Result};
use crate::nn::{deserialize, serialize, ParamSet};

const MAGIC: [u8; 4] = *b"SGCK";
const VERSION: u16 = 1;

impl SacAgent {
    pub fn checkpoint(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&self.log_alpha().to_le_bytes());
        out.extend_from_slice(&self.steps().to_le_bytes());
        for p in [self.policy(), self.trend(0), self.trend(1), self.backup(0), self.backup(1)] {
            let blob = serialize(p);
            out.extend_from_slice(&(blob.len() as u32).to_le_bytes());
            out.extend_from_slice(&blob);
        }
        out
    }

    /// Restores networks saved by [`SacAgent::checkpoint`] into an agent of the same shape.
    pub fn restore(&mut self, bytes: &[u8]) -> Result<()> {
        let truncated = || Error::Decode("checkpoint truncated".into());
        let mut pos = 0usize;
        let mut take = |n: usize| -> Result<&[u8]> {
            let s = bytes.get(pos..pos + n).ok_or_else(truncated)?;
            pos += n;
            Ok(s)
        };
        if take(4)? != MAGIC {
            return Err(Error::Decode("not a checkpoint".into()));
        }
        let version = u16::from_le_bytes(take(2)?.try_into().unwrap());
        if version != VERSION {
            return Err(Error::Decode(format!("unsupported checkpoint version {version}")));
        }
        let log_alpha = f32::from_le_bytes(take(4)?.try_into().unwrap());
        let steps = u64::from_le_bytes(take(8)?.try_into().unwrap());
        let mut nets: Vec<ParamSet> = Vec::with_capacity(5);
        for _ in 0..5 {
            let n = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
            nets.push(deserialize(take(n)?)?);
        }
        if pos != bytes.len() {
            return Err(Error::Decode("trailing bytes after checkpoint".into()));
        }
        self.policy().ensure_layout(&nets[0])?;
        for i in 0..2 {
            self.trend(i).ensure_layout(&nets[1 + i])?;
            self.backup(i).ensure_layout(&nets[3 + i])?;
        }
        self.set_policy(&nets[0])?;
        for i in 0..2 {
            self.set_trend(i, &nets[1 + i])?;
            self.set_backup(i, &nets[3 + i])?;
        }
        self.set_log_alpha(log_alpha);
        self.set_steps(steps);
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.checkpoint())?;
        Ok(())
    }

    pub fn load(&mut self, path: &Path) -> Result<()> {
        self.restore(&std::fs::read(path)?)
    }
}
