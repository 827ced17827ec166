use std::fs::File;
use std::io::BufReader;
use std::ops::Range;

use casad::frame::Annotation;
use casad::ssa::read_scores_csv;
use casad::tuner::attack_score_intervals;
use serde::Serialize;

use crate::args::ReportArgs;
use crate::commands::detect::load_tuned;
use crate::error::{CliError, CliResult, Context};
use crate::io::{byte_time, create, input_file, load_annotations, load_log, output_file, parse_ids, require, sidecar};

pub const DEFAULT_PLOT_POINTS: usize = 2000;

#[derive(Serialize)]
struct PlotRow {
    byte_index: usize,
    time_s: f64,
    score: f64,
    alarm: u8,
    in_attack: u8,
}

/// Splits `len` samples into at most `points` contiguous buckets of near-equal size.
fn buckets(len: usize, points: usize) -> Vec<Range<usize>> {
    let points = points.clamp(1, len.max(1));
    (0..points)
        .map(|k| k * len / points..(k + 1) * len / points)
        .filter(|r| !r.is_empty())
        .collect()
}

fn inside(intervals: &[Range<usize>], index: usize) -> bool {
    let k = intervals.partition_point(|r| r.end <= index);
    intervals.get(k).is_some_and(|r| r.contains(&index))
}

pub fn run(args: &ReportArgs) -> CliResult<()> {
    let scores_path = input_file(require(args.scores.as_deref(), "scores")?)?;
    let log = input_file(require(args.log.as_deref(), "log")?)?;
    let annotations_path = match &args.annotations {
        Some(p) => Some(input_file(p)?.to_path_buf()),
        None => Some(sidecar(log)).filter(|p| p.is_file()),
    };
    if let Some(p) = &args.plot_out {
        output_file(p)?;
    }
    let ids = parse_ids(&args.ids)?;
    let tuned = args.tuned.as_deref().map(load_tuned).transpose()?;
    let lag = args
        .lag
        .or(tuned.as_ref().map(|t| t.lag))
        .ok_or_else(|| CliError::usage("missing --L (flag, config file or --tuned)"))?;
    let threshold = args.threshold.or(tuned.as_ref().map(|t| t.threshold));

    let file = File::open(scores_path).context(format!("opening {}", scores_path.display()))?;
    let (scores, alarm_column) =
        read_scores_csv(BufReader::new(file)).context(format!("reading {}", scores_path.display()))?;
    let loaded = load_log(log, args.skip_bad_lines, ids.as_ref())?;
    let series = &loaded.series;
    if scores.is_empty() {
        return Err(CliError::data(format!("{} holds no scores", scores_path.display())));
    }
    if scores.end_index() > series.len() || scores.start_index + 1 < lag {
        return Err(CliError::data(format!(
            "score indices {}..{} do not fit a log of {} bytes with L = {lag}",
            scores.start_index,
            scores.end_index(),
            series.len()
        )));
    }
    let annotations: Vec<Annotation> = match &annotations_path {
        Some(p) => load_annotations(p)?,
        None => Vec::new(),
    };
    let alarms: Vec<bool> = match threshold {
        Some(t) => scores.scores.iter().map(|&s| s >= t).collect(),
        None => alarm_column,
    };
    let start = scores.start_index;
    let scored = start..scores.end_index();

    match threshold {
        Some(t) => println!(
            "{} scores, byte {}..{}, threshold {t:.6e}",
            scores.len(),
            scored.start,
            scored.end
        ),
        None => println!(
            "{} scores, byte {}..{}, alarms as recorded",
            scores.len(),
            scored.start,
            scored.end
        ),
    }
    for a in &annotations {
        let window = attack_score_intervals(series, std::slice::from_ref(a), lag, scored.clone());
        let Some(w) = window.first() else {
            println!("attack {}: outside the scored range", a.label);
            continue;
        };
        match (w.start..w.end).find(|&i| alarms[i - start]) {
            Some(i) => println!(
                "attack {} (bytes {}..{}): first alarm at byte {i}, latency {} bytes, {:.6} s",
                a.label,
                w.start,
                w.end,
                i - w.start,
                byte_time(series, i) - byte_time(series, w.start)
            ),
            None => println!("attack {} (bytes {}..{}): not detected", a.label, w.start, w.end),
        }
    }
    let in_attack = attack_score_intervals(series, &annotations, lag, scored.clone());
    let false_alarms = alarms
        .iter()
        .enumerate()
        .filter(|&(k, &a)| a && !inside(&in_attack, start + k))
        .count();
    println!("false alarms: {false_alarms}");

    if let Some(path) = &args.plot_out {
        let points = args.plot_points.unwrap_or(DEFAULT_PLOT_POINTS);
        let mut csv = csv::Writer::from_writer(create(path)?);
        for b in buckets(scores.len(), points) {
            // The bucket's peak keeps spikes visible after downsampling.
            let k = b
                .clone()
                .max_by(|&i, &j| scores.scores[i].total_cmp(&scores.scores[j]))
                .expect("non-empty");
            let row = PlotRow {
                byte_index: start + k,
                time_s: byte_time(series, start + k),
                score: scores.scores[k],
                alarm: u8::from(b.clone().any(|i| alarms[i])),
                in_attack: u8::from(b.clone().any(|i| inside(&in_attack, start + i))),
            };
            csv.serialize(row)
                .map_err(|e| CliError::data(format!("writing {}: {e}", path.display())))?;
        }
        csv.flush().context(format!("writing {}", path.display()))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
