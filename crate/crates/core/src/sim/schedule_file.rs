//! Schedule files: TOML with a mandatory `version = 1` header.
//!
//! ```toml
//! version = 1
//! duration = 60.0      # seconds
//! bitrate = 500000     # optional, bits/s
//! seed = 42            # optional
//!
//! [[ecu]]
//! name = "A"
//! [[ecu.message]]
//! id = 0x1C
//! period_ms = 30.0
//! offset_ms = 0.0      # optional
//! dlc = 2
//! payload.fields = [
//!     { kind = "counter", start = 0, step = 16 },
//!     { kind = "sine", center = 120.0, amplitude = 60.0, period = 20.0, phase = 0.0 },
//! ]
//! # or: payload.replay = [[1, 2], [3, 4]]
//!
//! [[attack]]
//! kind = "masquerade"          # suspension | fabrication | masquerade | conquest
//! target_ecu = "B"
//! target_id = 0x05
//! injector_ecu = "A"           # fabrication, masquerade
//! rate_multiplier = 2.0        # fabrication
//! constrained = true           # conquest
//! start = 20.0
//! duration = 10.0              # optional, open-ended when absent
//! mutation = [{ offset = 7, set = 255 }, { offset = 6, add = 16 }, { offset = 5, pool = [1, 2] }]
//! ```

use serde::{Deserialize, Serialize};

use super::types::{AttackSchedule, BusSchedule, EcuSpec, DEFAULT_BITRATE};
use super::SimError;

pub const SCHEDULE_VERSION: u32 = 1;

// Mirrors `BusSchedule` field by field; `flatten` would discard error spans.
#[derive(Serialize, Deserialize)]
struct ScheduleFile {
    version: u32,
    duration: f64,
    #[serde(default = "default_bitrate")]
    bitrate: u64,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    ecu: Vec<EcuSpec>,
    #[serde(default)]
    attack: Vec<AttackSchedule>,
}

fn default_bitrate() -> u64 {
    DEFAULT_BITRATE
}

impl From<ScheduleFile> for BusSchedule {
    fn from(f: ScheduleFile) -> Self {
        BusSchedule {
            ecus: f.ecu,
            bitrate: f.bitrate,
            sim_duration: f.duration,
            rng_seed: f.seed,
            attacks: f.attack,
        }
    }
}

#[derive(Deserialize)]
struct VersionProbe {
    version: Option<u32>,
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, col)
}

fn parse_error(text: &str, err: toml::de::Error) -> SimError {
    let (line, column) = err.span().map_or((0, 0), |s| line_col(text, s.start));
    SimError::ScheduleFile {
        line,
        column,
        message: err.message().to_string(),
    }
}

pub fn parse_schedule(text: &str) -> Result<BusSchedule, SimError> {
    let probe: VersionProbe = toml::from_str(text).map_err(|e| parse_error(text, e))?;
    match probe.version {
        Some(SCHEDULE_VERSION) => {}
        Some(v) => {
            return Err(SimError::ScheduleFile {
                line: 1,
                column: 1,
                message: format!("unsupported schedule version {v}, expected {SCHEDULE_VERSION}"),
            })
        }
        None => {
            return Err(SimError::ScheduleFile {
                line: 1,
                column: 1,
                message: "missing `version` header".into(),
            })
        }
    }
    let file: ScheduleFile = toml::from_str(text).map_err(|e| parse_error(text, e))?;
    let schedule = BusSchedule::from(file);
    schedule.validate()?;
    Ok(schedule)
}

pub fn render_schedule(schedule: &BusSchedule) -> Result<String, SimError> {
    let s = schedule.clone();
    let file = ScheduleFile {
        version: SCHEDULE_VERSION,
        duration: s.sim_duration,
        bitrate: s.bitrate,
        seed: s.rng_seed,
        ecu: s.ecus,
        attack: s.attacks,
    };
    toml::to_string(&file).map_err(|e| SimError::InvalidSchedule(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{default_prototype, AttackKind, MutationRule, Scenario};

    const EXAMPLE: &str = r#"
version = 1
duration = 5.0
seed = 7

[[ecu]]
name = "A"
[[ecu.message]]
id = 0x1C
period_ms = 30.0
dlc = 2
payload.fields = [
    { kind = "counter", start = 0, step = 16 },
    { kind = "sine", center = 120.0, amplitude = 60.0, period = 20.0 },
]

[[ecu]]
name = "B"
[[ecu.message]]
id = 0x05
period_ms = 25.0
dlc = 2
payload.replay = [[1, 2], [3, 4]]

[[attack]]
kind = "fabrication"
target_ecu = "B"
target_id = 0x05
injector_ecu = "A"
rate_multiplier = 2.0
start = 2.0
duration = 1.0
mutation = [{ offset = 1, set = 255 }, { offset = 0, pool = [9, 10] }]
"#;

    #[test]
    fn parses_documented_grammar() {
        let s = parse_schedule(EXAMPLE).unwrap();
        assert_eq!(s.sim_duration, 5.0);
        assert_eq!(s.bitrate, 500_000);
        assert_eq!(s.rng_seed, 7);
        assert_eq!(s.ecus[0].messages[0].id.raw(), 0x1C);
        match &s.attacks[0].kind {
            AttackKind::Fabrication {
                rate_multiplier,
                mutation,
                ..
            } => {
                assert_eq!(*rate_multiplier, 2.0);
                assert_eq!(mutation[0].rule, MutationRule::Set(255));
                assert_eq!(mutation[1].rule, MutationRule::Pool(vec![9, 10]));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn round_trips_prototype_with_attacks() {
        let mut s = default_prototype();
        s.attacks.push(Scenario::Conquest.attack(20.0, Some(5.0)));
        s.attacks.push(Scenario::Suspension.attack(30.0, None));
        let text = render_schedule(&s).unwrap();
        assert_eq!(parse_schedule(&text).unwrap(), s);
    }

    #[test]
    fn errors_carry_position() {
        let bad = EXAMPLE.replace("period_ms = 25.0", "period_ms = \"fast\"");
        match parse_schedule(&bad) {
            Err(SimError::ScheduleFile { line, .. }) => assert_eq!(line, 21),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_schedule("duration = 1.0"),
            Err(SimError::ScheduleFile { message, .. }) if message.contains("version")
        ));
        assert!(matches!(
            parse_schedule(&EXAMPLE.replace("version = 1", "version = 2")),
            Err(SimError::ScheduleFile { .. })
        ));
    }

    #[test]
    fn semantic_errors_surface() {
        let bad = EXAMPLE.replace("offset = 1, set", "offset = 5, set");
        assert!(matches!(
            parse_schedule(&bad),
            Err(SimError::OffsetOutOfRange { offset: 5, dlc: 2 })
        ));
        let bad = EXAMPLE.replace("injector_ecu = \"A\"", "injector_ecu = \"Z\"");
        assert!(matches!(parse_schedule(&bad), Err(SimError::UnknownEcu(name)) if name == "Z"));
    }
}
