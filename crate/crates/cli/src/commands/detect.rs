use std::io::Write;
use std::sync::Arc;

use casad::ssa::{load_model, write_scores_csv, DepartureSeries, SsaError, StreamDetector};
use casad::tuner::{validation_threshold, TuneResult, DEFAULT_MARGIN};

use crate::args::DetectArgs;
use crate::commands::train::describe;
use crate::error::{CliError, CliResult, Context};
use crate::io::{byte_time, create, input_file, load_log, output_file, parse_ids, require};

pub fn load_tuned(path: &std::path::Path) -> CliResult<TuneResult> {
    let text = std::fs::read_to_string(input_file(path)?).context(format!("reading {}", path.display()))?;
    TuneResult::from_toml(&text).context(format!("tune result {}", path.display()))
}

pub fn run(args: &DetectArgs) -> CliResult<()> {
    let model_path = input_file(require(args.model.as_deref(), "model")?)?;
    let log = input_file(require(args.log.as_deref(), "log")?)?;
    let out = output_file(require(args.out.as_deref(), "out")?)?;
    let ids = parse_ids(&args.ids)?;
    let tuned = args.tuned.as_deref().map(load_tuned).transpose()?;
    if !args.validate && (args.margin.is_some() || args.validation_len.is_some()) {
        return Err(CliError::usage("--margin and --validation-len need --validate"));
    }

    let model = load_model(model_path).context(format!("model {}", model_path.display()))?;
    describe(&model);
    let lag = model.lag();
    let n = model.config().train_len;
    let loaded = load_log(log, args.skip_bad_lines, ids.as_ref())?;
    let x = loaded.series.values();
    if x.len() < lag {
        return Err(SsaError::SeriesTooShort {
            needed: lag,
            available: x.len(),
        })
        .context("model/log mismatch");
    }

    let validation_len = args.validation_len.unwrap_or(2 * n);
    let threshold = if let Some(t) = args.threshold {
        Some(t)
    } else if let Some(result) = &tuned {
        if result.lag != lag {
            return Err(CliError::data(format!(
                "tune result is for L = {}, model has L = {lag}",
                result.lag
            )));
        }
        Some(result.threshold)
    } else if args.validate {
        let end = n + validation_len;
        if end > x.len() {
            return Err(SsaError::SeriesTooShort {
                needed: end,
                available: x.len(),
            })
            .context("validation segment after the training prefix");
        }
        let margin = args.margin.unwrap_or(DEFAULT_MARGIN);
        let t = validation_threshold(&model, &x[n..end], margin)?;
        println!("validation threshold over bytes {n}..{end} with margin {margin}: {t:.6e}");
        Some(t)
    } else {
        None
    };

    let from = if args.after_training {
        n + if args.validate { validation_len } else { 0 }
    } else {
        0
    };
    let mut detector = StreamDetector::new(Arc::new(model));
    let scores: Vec<f64> = x
        .iter()
        .enumerate()
        .filter_map(|(i, &b)| detector.step(b).filter(|_| i >= from))
        .collect();
    let scores = DepartureSeries::new(from.max(lag - 1), scores, threshold);

    let mut w = create(out)?;
    write_scores_csv(&mut w, &scores).context(format!("writing {}", out.display()))?;
    w.flush().context(format!("writing {}", out.display()))?;

    println!(
        "scored {} windows, byte {}..{}",
        scores.len(),
        scores.start_index,
        scores.end_index()
    );
    match threshold {
        Some(t) => {
            let alarms = scores.alarm_indices();
            println!("threshold {t:.6e}: {} alarms", alarms.len());
            match alarms.first() {
                Some(&i) => println!("first alarm at byte {i}, t = {:.6} s", byte_time(&loaded.series, i)),
                None => println!("no alarms"),
            }
        }
        None => println!("no threshold given; alarm column is 0"),
    }
    println!("wrote {}", out.display());
    Ok(())
}
