use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::aggregate::{aggregate_mean, aggregate_soft};
use super::message::{PayloadKind, RoundMessage};
use crate::error::{Error, Result};
use crate::nn::ParamSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FederationMode {
    /// Soft per-agent blending of the two trend networks only.
    DfsacSoft,
    /// Plain averaging of the full model.
    FedavgMean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FederationConfig {
    pub eps: f64,
    /// Train steps between uploads.
    pub k: usize,
    pub mode: FederationMode,
    /// Socket-mode round barrier, in milliseconds.
    pub timeout_ms: u64,
}

impl Default for FederationConfig {
    fn default() -> Self {
        Self {
            eps: 1e-2,
            k: 200,
            mode: FederationMode::DfsacSoft,
            timeout_ms: 30_000,
        }
    }
}

impl FederationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return Err(Error::config("federation.eps", "must be in (0, 1]"));
        }
        if self.k == 0 {
            return Err(Error::config("federation.k", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Up,
    Down,
}

/// Record of one message the center received or sent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AuditEntry {
    pub round: u32,
    pub agent: u32,
    pub kind: PayloadKind,
    pub direction: Direction,
}

/// The federated center: holds the global models and runs barrier rounds.
#[derive(Debug, Clone)]
pub struct FederationServer {
    cfg: FederationConfig,
    roster: Vec<u32>,
    round: u32,
    globals: BTreeMap<PayloadKind, ParamSet>,
    audit: Vec<AuditEntry>,
}

/// Per-agent messages sent back after a round.
pub type Distribution = BTreeMap<u32, Vec<RoundMessage>>;

impl FederationServer {
    /// `initial` holds one global model per payload kind the round expects.
    /// Soft mode refuses policy-bearing kinds outright.
    pub fn new(cfg: FederationConfig, roster: &[u32], initial: Vec<(PayloadKind, ParamSet)>) -> Result<Self> {
        cfg.validate()?;
        let mut sorted = roster.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.is_empty() || sorted.len() != roster.len() {
            return Err(Error::Federation("roster must be nonempty with distinct ids".into()));
        }
        let n = initial.len();
        let globals: BTreeMap<_, _> = initial.into_iter().collect();
        if globals.is_empty() || globals.len() != n {
            return Err(Error::Federation("initial models need distinct, nonempty payload kinds".into()));
        }
        if cfg.mode == FederationMode::DfsacSoft && globals.keys().any(|k| k.carries_policy()) {
            return Err(Error::Federation("soft mode never holds policy parameters".into()));
        }
        Ok(Self {
            cfg,
            roster: sorted,
            round: 0,
            globals,
            audit: Vec::new(),
        })
    }

    pub fn config(&self) -> &FederationConfig {
        &self.cfg
    }

    pub fn round(&self) -> u32 {
        self.round
    }

    pub fn roster(&self) -> &[u32] {
        &self.roster
    }

    /// Payload kinds every agent uploads each round.
    pub fn kinds(&self) -> Vec<PayloadKind> {
        self.globals.keys().copied().collect()
    }

    pub fn global(&self, kind: PayloadKind) -> Option<&ParamSet> {
        self.globals.get(&kind)
    }

    pub fn audit(&self) -> &[AuditEntry] {
        &self.audit
    }

    /// Validates a full round of uploads; returns the decoded parameters
    /// keyed by kind, then agent id. Nothing is mutated.
    fn collect(&self, messages: &[RoundMessage]) -> Result<BTreeMap<PayloadKind, BTreeMap<u32, ParamSet>>> {
        let mut by_kind: BTreeMap<PayloadKind, BTreeMap<u32, ParamSet>> = self.globals.keys().map(|&k| (k, BTreeMap::new())).collect();
        for m in messages {
            if m.round != self.round {
                return Err(Error::Federation(format!(
                    "message for round {} during round {}",
                    m.round, self.round
                )));
            }
            if self.roster.binary_search(&m.agent).is_err() {
                return Err(Error::Federation(format!("agent {} is not on the roster", m.agent)));
            }
            let Some(slot) = by_kind.get_mut(&m.kind) else {
                return Err(Error::Federation(format!(
                    "{:?} payload refused in {:?} mode",
                    m.kind, self.cfg.mode
                )));
            };
            if slot.contains_key(&m.agent) {
                return Err(Error::Federation(format!("duplicate {:?} from agent {}", m.kind, m.agent)));
            }
            let p = m.params()?;
            self.globals[&m.kind].ensure_layout(&p)?;
            slot.insert(m.agent, p);
        }
        for (kind, got) in &by_kind {
            if let Some(a) = self.roster.iter().find(|a| !got.contains_key(a)) {
                return Err(Error::Federation(format!(
                    "agent {a} did not report {kind:?} in round {}",
                    self.round
                )));
            }
        }
        Ok(by_kind)
    }

    /// Aggregates one complete round and returns the new globals for every
    /// agent. The round is rejected whole on any invalid or missing message.
    pub fn run_round(&mut self, messages: &[RoundMessage]) -> Result<Distribution> {
        let uploads = self.collect(messages)?;
        for m in messages {
            self.audit.push(AuditEntry {
                round: m.round,
                agent: m.agent,
                kind: m.kind,
                direction: Direction::Up,
            });
        }
        for (kind, locals) in &uploads {
            let next = match self.cfg.mode {
                FederationMode::DfsacSoft => {
                    // BTreeMap iteration gives ascending agent ids.
                    let mut g = self.globals[kind].clone();
                    for local in locals.values() {
                        g = aggregate_soft(&g, local, self.cfg.eps)?;
                    }
                    g
                }
                FederationMode::FedavgMean => aggregate_mean(&locals.values().collect::<Vec<_>>())?,
            };
            self.globals.insert(*kind, next);
        }
        let mut out = Distribution::new();
        for &agent in &self.roster {
            let msgs: Vec<RoundMessage> = self
                .globals
                .iter()
                .map(|(&kind, p)| RoundMessage::new(self.round, agent, kind, p))
                .collect();
            for m in &msgs {
                self.audit.push(AuditEntry {
                    round: m.round,
                    agent,
                    kind: m.kind,
                    direction: Direction::Down,
                });
            }
            out.insert(agent, msgs);
        }
        self.round += 1;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(x: f32) -> ParamSet {
        ParamSet::from_parts(vec![vec![1]], vec![x]).unwrap()
    }

    fn soft(eps: f64, roster: &[u32], g: f32) -> FederationServer {
        let cfg = FederationConfig {
            eps,
            ..FederationConfig::default()
        };
        FederationServer::new(
            cfg,
            roster,
            vec![(PayloadKind::Trend1, scalar(g)), (PayloadKind::Trend2, scalar(g))],
        )
        .unwrap()
    }

    fn uploads(round: u32, vals: &[(u32, f32)]) -> Vec<RoundMessage> {
        vals.iter()
            .flat_map(|&(a, v)| [PayloadKind::Trend1, PayloadKind::Trend2].map(|k| RoundMessage::new(round, a, k, &scalar(v))))
            .collect()
    }

    fn value(d: &Distribution, agent: u32, kind: PayloadKind) -> f32 {
        d[&agent].iter().find(|m| m.kind == kind).unwrap().params().unwrap().values()[0]
    }

    #[test]
    fn single_agent_full_step_copies_local() {
        let mut s = soft(1.0, &[4], 0.0);
        let d = s.run_round(&uploads(0, &[(4, 2.5)])).unwrap();
        assert_eq!(value(&d, 4, PayloadKind::Trend1), 2.5);
        assert_eq!(s.round(), 1);
    }

    #[test]
    fn identical_locals_are_a_fixed_point() {
        let mut s = soft(0.3, &[0, 1, 2], 1.25);
        for r in 0..5 {
            let d = s.run_round(&uploads(r, &[(0, 1.25), (1, 1.25), (2, 1.25)])).unwrap();
            assert_eq!(value(&d, 1, PayloadKind::Trend2), 1.25);
        }
        let mut s = soft(0.3, &[0, 1], 0.0);
        let mut last = 0.0;
        for r in 0..40 {
            let d = s.run_round(&uploads(r, &[(0, 1.0), (1, 1.0)])).unwrap();
            let v = value(&d, 0, PayloadKind::Trend1);
            assert!(v >= last && v <= 1.0);
            last = v;
        }
        assert!((1.0 - last).abs() < 1e-6);
    }

    #[test]
    fn three_agent_chain_in_id_order() {
        let mut s = soft(0.5, &[0, 1, 2], 0.0);
        // arrival order scrambled on purpose
        let d = s.run_round(&uploads(0, &[(2, 4.0), (0, 1.0), (1, 2.0)])).unwrap();
        // 0 → 0.5 → 1.25 → 2.625
        for a in 0..3 {
            assert_eq!(value(&d, a, PayloadKind::Trend1), 2.625);
        }
    }

    #[test]
    fn rejects_bad_rounds_without_mutation() {
        let mut s = soft(0.5, &[0, 1], 0.0);
        let missing = uploads(0, &[(0, 1.0)]);
        assert!(s.run_round(&missing).is_err());
        let mut dup = uploads(0, &[(0, 1.0), (1, 1.0)]);
        dup.push(dup[0].clone());
        assert!(s.run_round(&dup).is_err());
        let mut policy = uploads(0, &[(0, 1.0), (1, 1.0)]);
        policy.push(RoundMessage::new(0, 0, PayloadKind::FullModel, &scalar(1.0)));
        assert!(s.run_round(&policy).is_err());
        assert!(s.run_round(&uploads(1, &[(0, 1.0), (1, 1.0)])).is_err());
        assert!(s.run_round(&uploads(0, &[(0, 1.0), (7, 1.0)])).is_err());
        assert_eq!(s.round(), 0);
        assert!(s.audit().is_empty());
        assert_eq!(s.global(PayloadKind::Trend1).unwrap().values()[0], 0.0);
    }

    #[test]
    fn fedavg_distributes_mean_full_model() {
        let cfg = FederationConfig {
            mode: FederationMode::FedavgMean,
            ..FederationConfig::default()
        };
        let mut s = FederationServer::new(cfg, &[0, 1, 2], vec![(PayloadKind::FullModel, scalar(0.0))]).unwrap();
        let msgs: Vec<_> = [(0, 1.0), (1, 2.0), (2, 6.0)]
            .iter()
            .map(|&(a, v)| RoundMessage::new(0, a, PayloadKind::FullModel, &scalar(v)))
            .collect();
        let d = s.run_round(&msgs).unwrap();
        assert!((0..3).all(|a| value(&d, a, PayloadKind::FullModel) == 3.0));
        assert!(s.run_round(&uploads(1, &[(0, 1.0), (1, 1.0), (2, 1.0)])).is_err());
    }

    #[test]
    fn soft_mode_cannot_hold_a_policy() {
        let init = vec![(PayloadKind::FullModel, scalar(0.0))];
        assert!(FederationServer::new(FederationConfig::default(), &[0], init).is_err());
    }

    #[test]
    fn soft_mode_audit_has_no_policy() {
        let mut s = soft(0.1, &[0, 1], 0.0);
        for r in 0..3 {
            s.run_round(&uploads(r, &[(0, 1.0), (1, -1.0)])).unwrap();
        }
        assert_eq!(s.audit().len(), 3 * 8);
        assert!(s.audit().iter().all(|e| !e.kind.carries_policy()));
    }
}
