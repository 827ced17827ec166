use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::SimError;
use crate::frame::{CanId, MAX_PAYLOAD};

/// Generator for one payload byte position, driven by the message's release
/// number `k` (0 for the first release).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ByteGen {
    Constant {
        value: u8,
    },
    /// `start + k·step`, wrapping mod 256.
    Counter {
        start: u8,
        step: u8,
    },
    /// `round(center + amplitude·sin(2π(k + phase)/period))`, clamped to a byte.
    Sine {
        center: f64,
        amplitude: f64,
        /// Period in releases.
        period: f64,
        #[serde(default)]
        phase: f64,
    },
}

impl ByteGen {
    pub fn value(&self, k: u64) -> u8 {
        match *self {
            ByteGen::Constant { value } => value,
            ByteGen::Counter { start, step } => start.wrapping_add(((k % 256) as u8).wrapping_mul(step)),
            ByteGen::Sine {
                center,
                amplitude,
                period,
                phase,
            } => {
                // Reduce the phase first so integral periods repeat exactly.
                let t = (k as f64 + phase).rem_euclid(period);
                let v = center + amplitude * (std::f64::consts::TAU * t / period).sin();
                v.round().clamp(0.0, 255.0) as u8
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayloadGen {
    /// One generator per byte; the count must equal the message's dlc.
    Fields(Vec<ByteGen>),
    /// Recorded payloads replayed cyclically.
    Replay(Vec<Vec<u8>>),
}

impl PayloadGen {
    pub fn payload(&self, k: u64) -> Vec<u8> {
        match self {
            PayloadGen::Fields(fields) => fields.iter().map(|g| g.value(k)).collect(),
            PayloadGen::Replay(frames) => frames[(k % frames.len() as u64) as usize].clone(),
        }
    }
}

/// One periodic message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MessageSpec {
    pub id: CanId,
    pub period_ms: f64,
    /// Release time of the first instance.
    #[serde(default)]
    pub offset_ms: f64,
    pub dlc: u8,
    pub payload: PayloadGen,
}

impl MessageSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        let id = self.id;
        let invalid = |msg: String| Err(SimError::InvalidSchedule(format!("message {id}: {msg}")));
        if !(self.period_ms.is_finite() && self.period_ms > 0.0) {
            return invalid(format!("period {} ms must be positive", self.period_ms));
        }
        if !(self.offset_ms.is_finite() && self.offset_ms >= 0.0) {
            return invalid(format!("offset {} ms must be non-negative", self.offset_ms));
        }
        if self.dlc == 0 || usize::from(self.dlc) > MAX_PAYLOAD {
            return invalid(format!("dlc {} outside 1..=8", self.dlc));
        }
        match &self.payload {
            PayloadGen::Fields(fields) => {
                if fields.len() != usize::from(self.dlc) {
                    return invalid(format!("{} byte generators for dlc {}", fields.len(), self.dlc));
                }
                for g in fields {
                    if let ByteGen::Sine {
                        period,
                        center,
                        amplitude,
                        phase,
                    } = g
                    {
                        if !(period.is_finite() && *period > 0.0)
                            || !center.is_finite()
                            || !amplitude.is_finite()
                            || !phase.is_finite()
                        {
                            return invalid("sine generator needs finite parameters and a positive period".into());
                        }
                    }
                }
            }
            PayloadGen::Replay(frames) => {
                if frames.is_empty() {
                    return invalid("replay sequence is empty".into());
                }
                if let Some(bad) = frames.iter().find(|p| p.len() != usize::from(self.dlc)) {
                    return invalid(format!("replayed payload of {} bytes for dlc {}", bad.len(), self.dlc));
                }
            }
        }
        Ok(())
    }

    pub(crate) fn period_ns(&self) -> u64 {
        (self.period_ms * 1e6).round() as u64
    }

    pub(crate) fn offset_ns(&self) -> u64 {
        (self.offset_ms * 1e6).round() as u64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcuSpec {
    pub name: String,
    #[serde(default, rename = "message")]
    pub messages: Vec<MessageSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MutationRule {
    Set(u8),
    /// Add modulo 256.
    Add(u8),
    /// Draw uniformly from the listed values.
    Pool(Vec<u8>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ByteMutation {
    pub offset: u8,
    #[serde(flatten)]
    pub rule: MutationRule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttackKind {
    /// The target ECU stops transmitting.
    Suspension,
    /// Another ECU injects the target message alongside the genuine one.
    Fabrication {
        injector_ecu: String,
        #[serde(default = "one")]
        rate_multiplier: f64,
        #[serde(default)]
        mutation: Vec<ByteMutation>,
    },
    /// The target ECU is silenced and another ECU sends the target message on
    /// its original schedule.
    Masquerade {
        injector_ecu: String,
        #[serde(default)]
        mutation: Vec<ByteMutation>,
    },
    /// The target ECU itself alters the payload of the target message.
    Conquest {
        #[serde(default)]
        mutation: Vec<ByteMutation>,
        /// Keep altered bytes within values seen before the attack.
        #[serde(default)]
        constrained: bool,
    },
}

fn one() -> f64 {
    1.0
}

impl AttackKind {
    pub fn label(&self) -> &'static str {
        match self {
            AttackKind::Suspension => "suspension",
            AttackKind::Fabrication { .. } => "fabrication",
            AttackKind::Masquerade { .. } => "masquerade",
            AttackKind::Conquest { .. } => "conquest",
        }
    }

    pub fn mutation(&self) -> &[ByteMutation] {
        match self {
            AttackKind::Suspension => &[],
            AttackKind::Fabrication { mutation, .. }
            | AttackKind::Masquerade { mutation, .. }
            | AttackKind::Conquest { mutation, .. } => mutation,
        }
    }

    pub fn injector(&self) -> Option<&str> {
        match self {
            AttackKind::Fabrication { injector_ecu, .. } | AttackKind::Masquerade { injector_ecu, .. } => {
                Some(injector_ecu)
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackSchedule {
    #[serde(flatten)]
    pub kind: AttackKind,
    pub target_ecu: String,
    /// Not used by suspension.
    #[serde(default)]
    pub target_id: Option<CanId>,
    /// Seconds from the start of the simulation.
    pub start: f64,
    /// Open-ended when absent.
    #[serde(default)]
    pub duration: Option<f64>,
}

impl AttackSchedule {
    pub fn end(&self, sim_duration: f64) -> f64 {
        self.duration
            .map_or(sim_duration, |d| (self.start + d).min(sim_duration))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BusSchedule {
    pub ecus: Vec<EcuSpec>,
    /// Bits per second.
    pub bitrate: u64,
    /// Seconds.
    pub sim_duration: f64,
    pub rng_seed: u64,
    pub attacks: Vec<AttackSchedule>,
}

pub const DEFAULT_BITRATE: u64 = 500_000;

impl BusSchedule {
    pub fn ecu_index(&self, name: &str) -> Result<usize, SimError> {
        self.ecus
            .iter()
            .position(|e| e.name == name)
            .ok_or_else(|| SimError::UnknownEcu(name.to_string()))
    }

    /// The message with `id` owned by the ECU at `ecu`.
    pub fn message(&self, ecu: usize, id: CanId) -> Option<&MessageSpec> {
        self.ecus[ecu].messages.iter().find(|m| m.id == id)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let invalid = |msg: String| Err(SimError::InvalidSchedule(msg));
        if !(self.sim_duration.is_finite() && self.sim_duration > 0.0) {
            return invalid(format!("duration {} must be positive", self.sim_duration));
        }
        if self.bitrate == 0 {
            return invalid("bitrate must be positive".into());
        }
        let mut names = BTreeSet::new();
        let mut ids = BTreeSet::new();
        for ecu in &self.ecus {
            if !names.insert(ecu.name.as_str()) {
                return invalid(format!("duplicate ECU name `{}`", ecu.name));
            }
            for m in &ecu.messages {
                m.validate()?;
                if !ids.insert(m.id) {
                    return invalid(format!("message {} owned by more than one ECU", m.id));
                }
            }
        }
        for attack in &self.attacks {
            self.validate_attack(attack)?;
        }
        Ok(())
    }

    fn validate_attack(&self, attack: &AttackSchedule) -> Result<(), SimError> {
        let label = attack.kind.label();
        let invalid = |msg: String| Err(SimError::InvalidSchedule(format!("{label} attack: {msg}")));
        if !(attack.start.is_finite() && attack.start >= 0.0) {
            return invalid(format!("start {} must be non-negative", attack.start));
        }
        if attack.start > self.sim_duration {
            return invalid(format!("start {} beyond simulation end", attack.start));
        }
        if let Some(d) = attack.duration {
            if !(d.is_finite() && d > 0.0) {
                return invalid(format!("duration {d} must be positive"));
            }
            if attack.start + d > self.sim_duration + 1e-9 {
                return invalid("window extends past the simulation end".into());
            }
        }
        let target = self.ecu_index(&attack.target_ecu)?;
        if let Some(injector) = attack.kind.injector() {
            let injector = self.ecu_index(injector)?;
            if injector == target {
                return invalid("injector and target must differ".into());
            }
        }
        if matches!(attack.kind, AttackKind::Suspension) {
            return Ok(());
        }
        let id = match attack.target_id {
            Some(id) => id,
            None => return invalid("target_id is required".into()),
        };
        let msg = self.message(target, id).ok_or_else(|| SimError::UnknownMessage {
            ecu: attack.target_ecu.clone(),
            id,
        })?;
        for m in attack.kind.mutation() {
            if m.offset >= msg.dlc {
                return Err(SimError::OffsetOutOfRange {
                    offset: m.offset,
                    dlc: msg.dlc,
                });
            }
            if matches!(&m.rule, MutationRule::Pool(p) if p.is_empty()) {
                return invalid(format!("empty value pool at offset {}", m.offset));
            }
        }
        if let AttackKind::Fabrication { rate_multiplier, .. } = attack.kind {
            if !(rate_multiplier.is_finite() && rate_multiplier >= 1.0) {
                return invalid(format!("rate multiplier {rate_multiplier} must be at least 1"));
            }
        }
        Ok(())
    }
}
