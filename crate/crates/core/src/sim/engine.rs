//! Event-driven bus simulation.
//!
//! All periodic releases are enumerated first, attacks rewrite that release
//! list, and a priority arbiter then serializes the releases onto the bus.
//! Time is kept in integer nanoseconds so release grids repeat exactly.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::types::{AttackKind, AttackSchedule, BusSchedule, ByteMutation, MutationRule};
use super::SimError;
use crate::frame::{Annotation, CanFrame, CanId, FrameLog};

/// Fixed per-frame overhead in bits; bit stuffing is not modelled.
pub const FRAME_OVERHEAD_BITS: u64 = 47;

const NS_PER_SEC: f64 = 1e9;
const CHANNEL: &str = "can0";

/// Time a frame with `dlc` data bytes occupies the bus, in nanoseconds.
pub fn wire_time_ns(dlc: usize, bitrate: u64) -> u64 {
    let bits = u128::from(FRAME_OVERHEAD_BITS + 8 * dlc as u64);
    let bitrate = u128::from(bitrate);
    ((bits * 1_000_000_000 + bitrate / 2) / bitrate) as u64
}

fn secs_to_ns(secs: f64) -> u64 {
    (secs * NS_PER_SEC).round() as u64
}

#[derive(Debug, Clone)]
struct Release {
    time_ns: u64,
    id: CanId,
    sender: usize,
    payload: Vec<u8>,
}

fn periodic_releases(schedule: &BusSchedule, end_ns: u64) -> Vec<Release> {
    let mut releases = Vec::new();
    for (ecu_idx, ecu) in schedule.ecus.iter().enumerate() {
        for msg in &ecu.messages {
            let period = msg.period_ns();
            let mut t = msg.offset_ns();
            let mut k = 0u64;
            while t < end_ns {
                releases.push(Release {
                    time_ns: t,
                    id: msg.id,
                    sender: ecu_idx,
                    payload: msg.payload.payload(k),
                });
                k += 1;
                t = msg.offset_ns() + k * period;
            }
        }
    }
    releases
}

struct Mutator<'a> {
    mutation: &'a [ByteMutation],
    // Per-offset values seen before the window, sorted; set for constrained conquest.
    observed: Option<Vec<Vec<u8>>>,
}

impl Mutator<'_> {
    fn apply(&self, payload: &mut [u8], rng: &mut ChaCha8Rng) -> Result<(), SimError> {
        for m in self.mutation {
            let slot = usize::from(m.offset);
            let original = payload[slot];
            let mut value = match &m.rule {
                MutationRule::Set(v) => *v,
                MutationRule::Add(d) => original.wrapping_add(*d),
                MutationRule::Pool(pool) => pool[rng.random_range(0..pool.len())],
            };
            if let Some(observed) = &self.observed {
                let pool = &observed[slot];
                if pool.is_empty() {
                    return Err(SimError::EmptyValuePool { offset: m.offset });
                }
                if pool.binary_search(&value).is_err() {
                    value = pool[rng.random_range(0..pool.len())];
                }
            }
            payload[slot] = value;
        }
        Ok(())
    }
}

fn in_window(t: u64, start: u64, end: u64) -> bool {
    t >= start && t < end
}

fn apply_attack(
    schedule: &BusSchedule,
    attack: &AttackSchedule,
    releases: &mut Vec<Release>,
    rng: &mut ChaCha8Rng,
) -> Result<(), SimError> {
    let target = schedule.ecu_index(&attack.target_ecu)?;
    let start = secs_to_ns(attack.start);
    let end = secs_to_ns(attack.end(schedule.sim_duration));
    match &attack.kind {
        AttackKind::Suspension => {
            releases.retain(|r| !(r.sender == target && in_window(r.time_ns, start, end)));
        }
        AttackKind::Masquerade { injector_ecu, mutation } => {
            let injector = schedule.ecu_index(injector_ecu)?;
            let target_id = attack.target_id.ok_or_else(|| missing_target(attack))?;
            let mutator = Mutator {
                mutation,
                observed: None,
            };
            releases.retain(|r| !(r.sender == target && r.id != target_id && in_window(r.time_ns, start, end)));
            for r in releases.iter_mut() {
                if r.sender == target && r.id == target_id && in_window(r.time_ns, start, end) {
                    r.sender = injector;
                    mutator.apply(&mut r.payload, rng)?;
                }
            }
        }
        AttackKind::Fabrication {
            injector_ecu,
            rate_multiplier,
            mutation,
        } => {
            let injector = schedule.ecu_index(injector_ecu)?;
            let target_id = attack.target_id.ok_or_else(|| missing_target(attack))?;
            let msg = schedule
                .message(target, target_id)
                .ok_or_else(|| SimError::UnknownMessage {
                    ecu: attack.target_ecu.clone(),
                    id: target_id,
                })?;
            let mutator = Mutator {
                mutation,
                observed: None,
            };
            let interval = ((msg.period_ns() as f64) / rate_multiplier).round().max(1.0) as u64;
            let mut t = start;
            while t < end {
                // Copy of the most recent genuine payload at time t.
                let k = t.saturating_sub(msg.offset_ns()) / msg.period_ns();
                let mut payload = msg.payload.payload(k);
                mutator.apply(&mut payload, rng)?;
                releases.push(Release {
                    time_ns: t,
                    id: target_id,
                    sender: injector,
                    payload,
                });
                t += interval;
            }
        }
        AttackKind::Conquest { mutation, constrained } => {
            let target_id = attack.target_id.ok_or_else(|| missing_target(attack))?;
            let observed = if *constrained {
                let dlc = schedule.message(target, target_id).map_or(0, |m| usize::from(m.dlc));
                let mut seen = vec![BTreeSet::new(); dlc];
                for r in releases.iter().filter(|r| r.id == target_id && r.time_ns < start) {
                    for (slot, &b) in r.payload.iter().enumerate().take(dlc) {
                        seen[slot].insert(b);
                    }
                }
                Some(seen.into_iter().map(|s| s.into_iter().collect()).collect())
            } else {
                None
            };
            let mutator = Mutator { mutation, observed };
            // Stable order so draws do not depend on how attacks reshuffled the list.
            releases.sort_by_key(|r| (r.time_ns, r.id.arbitration_key(), r.sender));
            for r in releases.iter_mut() {
                if r.sender == target && r.id == target_id && in_window(r.time_ns, start, end) {
                    mutator.apply(&mut r.payload, rng)?;
                }
            }
        }
    }
    Ok(())
}

fn missing_target(attack: &AttackSchedule) -> SimError {
    SimError::InvalidSchedule(format!("{} attack needs a target_id", attack.kind.label()))
}

/// Runs the schedule and returns the captured log with one annotation per
/// attack window. Identical schedules (including the seed) give identical logs.
pub fn run_simulation(schedule: &BusSchedule) -> Result<FrameLog, SimError> {
    schedule.validate()?;
    let end_ns = secs_to_ns(schedule.sim_duration);
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.rng_seed);
    let mut releases = periodic_releases(schedule, end_ns);
    releases.sort_by_key(|r| (r.time_ns, r.id.arbitration_key(), r.sender));
    for attack in &schedule.attacks {
        apply_attack(schedule, attack, &mut releases, &mut rng)?;
    }
    releases.sort_by_key(|r| (r.time_ns, r.id.arbitration_key(), r.sender));

    // Priority arbitration: whenever the bus goes idle, the pending frame with
    // the lowest identifier wins; ties between senders go to the lower index.
    let mut frames = Vec::with_capacity(releases.len());
    let mut senders = Vec::with_capacity(releases.len());
    let mut pending = BinaryHeap::new();
    let mut next = 0;
    let mut bus_free = 0u64;
    while next < releases.len() || !pending.is_empty() {
        if pending.is_empty() {
            bus_free = bus_free.max(releases[next].time_ns);
        }
        while next < releases.len() && releases[next].time_ns <= bus_free {
            let r = &releases[next];
            pending.push(Reverse((r.id.arbitration_key(), r.sender, next)));
            next += 1;
        }
        let Reverse((_, _, idx)) = pending.pop().expect("pending frame");
        let r = &releases[idx];
        let frame = CanFrame::new(bus_free / 1_000, r.id, r.payload.clone(), CHANNEL)
            .map_err(|e| SimError::InvalidSchedule(e.to_string()))?;
        frames.push(frame);
        senders.push(schedule.ecus[r.sender].name.clone());
        bus_free += wire_time_ns(r.payload.len(), schedule.bitrate);
    }

    let mut log = FrameLog::new(frames, format!("simulator seed={}", schedule.rng_seed))
        .map_err(|e| SimError::InvalidSchedule(e.to_string()))?;
    log.set_senders(senders);
    if let Some((first, last)) = log.time_range() {
        for attack in &schedule.attacks {
            let start_us = (secs_to_ns(attack.start) / 1_000).clamp(first, last);
            let end_us = (secs_to_ns(attack.end(schedule.sim_duration)) / 1_000).clamp(start_us, last);
            log.add_annotation(Annotation {
                label: attack.kind.label().to_string(),
                start_us,
                end_us,
            })
            .map_err(|e| SimError::InvalidSchedule(e.to_string()))?;
        }
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::types::{ByteGen, EcuSpec, MessageSpec, PayloadGen};

    fn msg(id: u32, period_ms: f64, dlc: u8) -> MessageSpec {
        MessageSpec {
            id: CanId::standard(id).unwrap(),
            period_ms,
            offset_ms: 0.0,
            dlc,
            payload: PayloadGen::Fields((0..dlc).map(|i| ByteGen::Counter { start: i, step: 1 }).collect()),
        }
    }

    fn schedule(ecus: Vec<EcuSpec>, duration: f64) -> BusSchedule {
        BusSchedule {
            ecus,
            bitrate: 500_000,
            sim_duration: duration,
            rng_seed: 1,
            attacks: vec![],
        }
    }

    #[test]
    fn wire_time_at_500k() {
        assert_eq!(wire_time_ns(8, 500_000), 222_000);
        assert_eq!(wire_time_ns(0, 500_000), 94_000);
    }

    #[test]
    fn single_message_gaps_equal_period() {
        let s = schedule(
            vec![EcuSpec {
                name: "A".into(),
                messages: vec![msg(0x10, 10.0, 4)],
            }],
            1.0,
        );
        let log = run_simulation(&s).unwrap();
        assert_eq!(log.len(), 100);
        for w in log.frames().windows(2) {
            assert_eq!(w[1].timestamp_us - w[0].timestamp_us, 10_000);
        }
    }

    #[test]
    fn lower_id_wins_and_loser_waits() {
        let s = schedule(
            vec![
                EcuSpec {
                    name: "A".into(),
                    messages: vec![msg(0x05, 10.0, 8)],
                },
                EcuSpec {
                    name: "B".into(),
                    messages: vec![msg(0x01, 10.0, 8)],
                },
            ],
            0.05,
        );
        let log = run_simulation(&s).unwrap();
        let f = log.frames();
        assert_eq!(f[0].id.raw(), 0x01);
        assert_eq!(f[1].id.raw(), 0x05);
        assert_eq!(f[1].timestamp_us - f[0].timestamp_us, 222);
        assert_eq!(log.senders()[0], "B");
    }

    #[test]
    fn rejects_invalid_schedules() {
        let mut s = schedule(
            vec![EcuSpec {
                name: "A".into(),
                messages: vec![msg(1, 10.0, 1)],
            }],
            1.0,
        );
        s.sim_duration = 0.0;
        assert!(matches!(run_simulation(&s), Err(SimError::InvalidSchedule(_))));
        let s = schedule(
            vec![
                EcuSpec {
                    name: "A".into(),
                    messages: vec![msg(1, 10.0, 1)],
                },
                EcuSpec {
                    name: "B".into(),
                    messages: vec![msg(1, 10.0, 1)],
                },
            ],
            1.0,
        );
        assert!(matches!(run_simulation(&s), Err(SimError::InvalidSchedule(_))));
    }
}
