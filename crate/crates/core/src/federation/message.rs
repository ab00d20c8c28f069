//! Round messages between agents and the center.
//!
//! ```text
//! round  u32 BE
//! agent  u32 BE
//! kind   u8    1 = trend 1, 2 = trend 2, 3 = full model
//! params nn wire bytes, to the end of the message
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{deserialize, serialize, ParamSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[repr(u8)]
pub enum PayloadKind {
    Trend1 = 1,
    Trend2 = 2,
    /// Policy and both trend networks concatenated; carries policy parameters.
    FullModel = 3,
}

impl PayloadKind {
    pub fn from_u8(b: u8) -> Result<Self> {
        match b {
            1 => Ok(Self::Trend1),
            2 => Ok(Self::Trend2),
            3 => Ok(Self::FullModel),
            _ => Err(Error::Decode(format!("unknown payload kind {b}"))),
        }
    }

    pub fn carries_policy(self) -> bool {
        self == Self::FullModel
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundMessage {
    pub round: u32,
    pub agent: u32,
    pub kind: PayloadKind,
    /// Parameter bytes in the nn wire format.
    pub payload: Vec<u8>,
}

impl RoundMessage {
    pub fn new(round: u32, agent: u32, kind: PayloadKind, params: &ParamSet) -> Self {
        Self {
            round,
            agent,
            kind,
            payload: serialize(params),
        }
    }

    pub fn params(&self) -> Result<ParamSet> {
        deserialize(&self.payload)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(9 + self.payload.len());
        out.extend_from_slice(&self.round.to_be_bytes());
        out.extend_from_slice(&self.agent.to_be_bytes());
        out.push(self.kind as u8);
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 9 {
            return Err(Error::Decode(format!("round message of {} bytes", bytes.len())));
        }
        Ok(Self {
            round: u32::from_be_bytes(bytes[0..4].try_into().unwrap()),
            agent: u32::from_be_bytes(bytes[4..8].try_into().unwrap()),
            kind: PayloadKind::from_u8(bytes[8])?,
            payload: bytes[9..].to_vec(),
        })
    }
}
