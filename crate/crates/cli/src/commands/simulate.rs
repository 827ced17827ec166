use std::collections::BTreeMap;
use std::io::Write;

use casad::frame::{extract_byte_series, micros_to_secs, write_annotations, write_log};
use casad::sim::{default_prototype, parse_schedule, repeated, run_simulation, BusSchedule, Scenario, DEFAULT_ONSET};

use crate::args::{AttackName, SimulateArgs};
use crate::error::{CliError, CliResult, Context, Kind};
use crate::io::{create, input_file, output_file, require, sidecar};

fn scenario(name: AttackName, multiplier: f64) -> Scenario {
    match name {
        AttackName::Suspension => Scenario::Suspension,
        AttackName::Fabrication => Scenario::Fabrication { multiplier },
        AttackName::Masquerade => Scenario::Masquerade,
        AttackName::Conquest => Scenario::Conquest,
    }
}

/// The schedule to run: file or prototype, with flag overrides applied.
pub fn build_schedule(args: &SimulateArgs, seed: Option<u64>) -> CliResult<BusSchedule> {
    let mut schedule = match &args.schedule {
        Some(path) => {
            let text = std::fs::read_to_string(input_file(path)?).context(format!("reading {}", path.display()))?;
            parse_schedule(&text).context(format!("schedule {}", path.display()))?
        }
        None => default_prototype(),
    };
    if let Some(d) = args.duration {
        schedule.sim_duration = d;
    }
    if let Some(seed) = seed {
        schedule.rng_seed = seed;
    }
    let repeat = args.repeat.unwrap_or(1);
    match args.attack {
        Some(name) => {
            let sc = scenario(name, args.multiplier.unwrap_or(1.0));
            let start = args.start.unwrap_or(DEFAULT_ONSET);
            if repeat == 1 {
                schedule.attacks.push(sc.attack(start, args.attack_duration));
            } else {
                let duration = args
                    .attack_duration
                    .ok_or_else(|| CliError::usage("--repeat needs --attack-duration"))?;
                let spacing = require(args.spacing, "spacing")?;
                schedule.attacks.extend(repeated(sc, repeat, start, duration, spacing));
            }
        }
        None if args.start.is_some() || args.attack_duration.is_some() || args.repeat.is_some() => {
            return Err(CliError::usage("attack timing flags need --attack"));
        }
        None => {}
    }
    schedule.validate().map_err(|e| CliError::new(Kind::Usage, e))?;
    Ok(schedule)
}

pub fn run(args: &SimulateArgs, schedule: &BusSchedule) -> CliResult<()> {
    let out = output_file(require(args.out.as_deref(), "out")?)?;
    let annotations_path = args.annotations.clone().unwrap_or_else(|| sidecar(out));
    output_file(&annotations_path)?;

    let log = run_simulation(schedule)?;
    let mut w = create(out)?;
    write_log(&mut w, &log)
        .and_then(|_| w.flush())
        .context(format!("writing {}", out.display()))?;
    let mut w = create(&annotations_path)?;
    write_annotations(&mut w, log.annotations())?;
    w.flush().context(format!("writing {}", annotations_path.display()))?;

    let bytes = extract_byte_series(&log, None).map_or(0, |s| s.len());
    println!(
        "simulated {:.3} s: {} frames, {bytes} payload bytes",
        schedule.sim_duration,
        log.len()
    );
    let mut per_id: BTreeMap<u32, usize> = BTreeMap::new();
    for f in log.frames() {
        *per_id.entry(f.id.raw()).or_default() += 1;
    }
    for (id, count) in per_id {
        println!("  id {id:#04X}: {count} frames");
    }
    for a in log.annotations() {
        println!(
            "  attack {}: {} s to {} s",
            a.label,
            micros_to_secs(a.start_us),
            micros_to_secs(a.end_us)
        );
    }
    println!("wrote {} and {}", out.display(), annotations_path.display());
    Ok(())
}
