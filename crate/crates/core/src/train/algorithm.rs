use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Dfsac,
    FedavgSac,
    CentralizedSac,
    Ddqn,
    FlDdqn,
    DfrlDdqn,
    Greedy,
    None,
}

impl Algorithm {
    pub const ALL: [Algorithm; 8] = [
        Self::Dfsac,
        Self::FedavgSac,
        Self::CentralizedSac,
        Self::Ddqn,
        Self::FlDdqn,
        Self::DfrlDdqn,
        Self::Greedy,
        Self::None,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Dfsac => "dfsac",
            Self::FedavgSac => "fedavg_sac",
            Self::CentralizedSac => "centralized_sac",
            Self::Ddqn => "ddqn",
            Self::FlDdqn => "fl_ddqn",
            Self::DfrlDdqn => "dfrl_ddqn",
            Self::Greedy => "greedy",
            Self::None => "none",
        }
    }

    /// Whether the algorithm has parameters to train.
    pub fn learns(self) -> bool {
        !matches!(self, Self::Greedy | Self::None)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::config("algorithm", format!("unknown algorithm `{s}`")))
    }
}
