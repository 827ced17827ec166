//! Deterministic CAN bus simulator with attack injection.

mod engine;
mod presets;
mod schedule_file;
mod types;

use thiserror::Error;

use crate::frame::CanId;

pub use engine::{run_simulation, wire_time_ns, FRAME_OVERHEAD_BITS};
pub use presets::{default_prototype, id_0x01, id_0x05, id_0x1c, repeated, Scenario, DEFAULT_ONSET, PROTOTYPE_SEED};
pub use schedule_file::{parse_schedule, render_schedule, SCHEDULE_VERSION};
pub use types::{
    AttackKind, AttackSchedule, BusSchedule, ByteGen, ByteMutation, EcuSpec, MessageSpec, MutationRule, PayloadGen,
    DEFAULT_BITRATE,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("unknown ECU `{0}`")]
    UnknownEcu(String),
    #[error("ECU `{ecu}` does not send message {id}")]
    UnknownMessage { ecu: String, id: CanId },
    #[error("mutation offset {offset} outside payload of {dlc} bytes")]
    OffsetOutOfRange { offset: u8, dlc: u8 },
    #[error("no values observed before the attack at offset {offset}")]
    EmptyValuePool { offset: u8 },
    #[error("schedule file line {line}, column {column}: {message}")]
    ScheduleFile {
        line: usize,
        column: usize,
        message: String,
    },
}
