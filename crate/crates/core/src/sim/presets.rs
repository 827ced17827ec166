//! The three-ECU bench prototype and the attack scenarios run against it.
//!
//! Message timing follows the bench setup (0x1C every 30 ms from ECU A, 0x01
//! and 0x05 every 15 ms and 25 ms from ECU B, ECU C listening, 500 kbit/s).
//! Payload contents are synthetic: constant, counter and sinusoidal bytes whose
//! periods all divide the 1.2 s pattern of the release schedule, so attack-free
//! traffic repeats exactly every 1344 bytes. Each message sits at its own byte
//! level (0x1C high, 0x01 mid-range, 0x05 low apart from its last two bytes),
//! as signals from different ECUs usually do.

use super::types::{
    AttackKind, AttackSchedule, BusSchedule, ByteGen, ByteMutation, EcuSpec, MessageSpec, MutationRule, PayloadGen,
    DEFAULT_BITRATE,
};
use crate::frame::CanId;

pub const PROTOTYPE_SEED: u64 = 0xCA5AD;
/// Attack onset used throughout the bench experiments.
pub const DEFAULT_ONSET: f64 = 20.0;

fn id(raw: u32) -> CanId {
    CanId::standard(raw).expect("prototype ids are standard")
}

fn sine(center: f64, amplitude: f64, period: f64, phase: f64) -> ByteGen {
    ByteGen::Sine {
        center,
        amplitude,
        period,
        phase,
    }
}

fn constant(value: u8) -> ByteGen {
    ByteGen::Constant { value }
}

fn counter(step: u8) -> ByteGen {
    ByteGen::Counter { start: 0, step }
}

pub fn id_0x1c() -> CanId {
    id(0x1C)
}

pub fn id_0x01() -> CanId {
    id(0x01)
}

pub fn id_0x05() -> CanId {
    id(0x05)
}

/// The attack-free bench prototype: 60 s of traffic.
pub fn default_prototype() -> BusSchedule {
    let a = EcuSpec {
        name: "A".into(),
        messages: vec![MessageSpec {
            id: id_0x1c(),
            period_ms: 30.0,
            offset_ms: 0.0,
            dlc: 8,
            payload: PayloadGen::Fields(vec![
                sine(190.0, 40.0, 20.0, 0.0),
                constant(0xC8),
                sine(170.0, 50.0, 40.0, 10.0),
                constant(0xFA),
                sine(200.0, 30.0, 10.0, 0.0),
                constant(0xB4),
                constant(0xFF),
                counter(64),
            ]),
        }],
    };
    let b = EcuSpec {
        name: "B".into(),
        messages: vec![
            MessageSpec {
                id: id_0x01(),
                period_ms: 15.0,
                offset_ms: 0.0,
                dlc: 8,
                payload: PayloadGen::Fields(vec![
                    counter(16),
                    sine(128.0, 100.0, 80.0, 0.0),
                    constant(0x20),
                    sine(40.0, 30.0, 16.0, 4.0),
                    constant(0x00),
                    constant(0x00),
                    constant(0xA5),
                    sine(200.0, 10.0, 40.0, 0.0),
                ]),
            },
            MessageSpec {
                id: id_0x05(),
                period_ms: 25.0,
                offset_ms: 0.0,
                dlc: 8,
                payload: PayloadGen::Fields(vec![
                    sine(40.0, 20.0, 48.0, 0.0),
                    constant(0x10),
                    constant(0x08),
                    constant(0x00),
                    sine(50.0, 30.0, 24.0, 6.0),
                    constant(0x03),
                    sine(100.0, 80.0, 12.0, 0.0),
                    sine(128.0, 64.0, 16.0, 3.0),
                ]),
            },
        ],
    };
    let c = EcuSpec {
        name: "C".into(),
        messages: vec![],
    };
    BusSchedule {
        ecus: vec![a, b, c],
        bitrate: DEFAULT_BITRATE,
        sim_duration: 60.0,
        rng_seed: PROTOTYPE_SEED,
        attacks: vec![],
    }
}

/// Attack scenarios on the prototype, all aimed at ECU B.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scenario {
    /// B stops transmitting.
    Suspension,
    /// A injects 0x05 at `multiplier` times its rate with the last byte forced to 0xFF.
    Fabrication { multiplier: f64 },
    /// B is silenced; A sends 0x05 on B's schedule with the last byte forced to 0xFF.
    Masquerade,
    /// B alters the last two bytes of 0x05, staying within previously seen values.
    Conquest,
}

impl Scenario {
    pub fn parse(name: &str, multiplier: f64) -> Option<Self> {
        match name {
            "suspension" => Some(Scenario::Suspension),
            "fabrication" => Some(Scenario::Fabrication { multiplier }),
            "masquerade" => Some(Scenario::Masquerade),
            "conquest" => Some(Scenario::Conquest),
            _ => None,
        }
    }

    /// The attack window `[start, start + duration)`; open-ended without a duration.
    pub fn attack(self, start: f64, duration: Option<f64>) -> AttackSchedule {
        let last_byte = vec![ByteMutation {
            offset: 7,
            rule: MutationRule::Set(0xFF),
        }];
        let (kind, target_id) = match self {
            Scenario::Suspension => (AttackKind::Suspension, None),
            Scenario::Fabrication { multiplier } => (
                AttackKind::Fabrication {
                    injector_ecu: "A".into(),
                    rate_multiplier: multiplier,
                    mutation: last_byte,
                },
                Some(id_0x05()),
            ),
            Scenario::Masquerade => (
                AttackKind::Masquerade {
                    injector_ecu: "A".into(),
                    mutation: last_byte,
                },
                Some(id_0x05()),
            ),
            Scenario::Conquest => (
                AttackKind::Conquest {
                    mutation: vec![
                        ByteMutation {
                            offset: 6,
                            rule: MutationRule::Add(0x55),
                        },
                        ByteMutation {
                            offset: 7,
                            rule: MutationRule::Add(0x2B),
                        },
                    ],
                    constrained: true,
                },
                Some(id_0x05()),
            ),
        };
        AttackSchedule {
            kind,
            target_ecu: "B".into(),
            target_id,
            start,
            duration,
        }
    }
}

/// `count` copies of `scenario`, each `duration` long, starting every `spacing` seconds.
pub fn repeated(
    scenario: Scenario,
    count: usize,
    first_start: f64,
    duration: f64,
    spacing: f64,
) -> Vec<AttackSchedule> {
    (0..count)
        .map(|i| scenario.attack(first_start + i as f64 * spacing, Some(duration)))
        .collect()
}
