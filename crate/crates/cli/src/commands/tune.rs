use std::io::Write;
use std::thread;

use casad::frame::{Annotation, ByteSeries};
use casad::ssa::{save_model, score_from, train, DimensionRule, LagConfig, SsaModel};
use casad::tuner::{
    attack_score_intervals, best_lag, sweep_thresholds, write_curves_csv, DelayFactorInput, ThresholdCurve, TuneResult,
    TunerError, DEFAULT_BUDGET, DEFAULT_SWEEP_COUNT,
};

use crate::args::TuneArgs;
use crate::commands::train::dimension_rule;
use crate::error::{CliError, CliResult, Context};
use crate::io::{create, input_file, load_annotations, load_log, parse_ids, require, sidecar};

struct LagRun {
    model: SsaModel,
    input: DelayFactorInput,
    curve: ThresholdCurve,
}

fn evaluate(
    series: &ByteSeries,
    annotations: &[Annotation],
    config: LagConfig,
    count: usize,
) -> Result<LagRun, TunerError> {
    let x = series.values();
    let model = train(x, config)?;
    let scores = score_from(&model, x, config.train_len, None)?;
    let scored = scores.start_index..scores.end_index();
    let intervals = attack_score_intervals(series, annotations, config.lag, scored);
    let input = DelayFactorInput::new(scores, intervals)?;
    let curve = sweep_thresholds(&input, config.lag, model.rank(), count)?;
    Ok(LagRun { model, input, curve })
}

pub fn run(args: &TuneArgs) -> CliResult<()> {
    let log = input_file(require(args.log.as_deref(), "log")?)?;
    let annotations_path = args.annotations.clone().unwrap_or_else(|| sidecar(log));
    input_file(&annotations_path)?;
    let out_dir = require(args.out_dir.as_deref(), "out-dir")?;
    if !out_dir.is_dir() {
        return Err(CliError::usage(format!(
            "output directory {} does not exist",
            out_dir.display()
        )));
    }
    let ids = parse_ids(&args.ids)?;
    let n = require(args.train_len, "N")?;
    let mut lags = args.lags.clone();
    lags.sort_unstable();
    lags.dedup();
    if lags.is_empty() {
        return Err(CliError::usage("missing --L (flag or config file)"));
    }
    let rule: DimensionRule = dimension_rule(args.rank, args.energy);
    let configs = lags
        .iter()
        .map(|&lag| LagConfig::new(n, lag, rule))
        .collect::<Result<Vec<_>, _>>()?;
    let budget = args.budget.unwrap_or(DEFAULT_BUDGET);
    if !(0.0..=1.0).contains(&budget) {
        return Err(CliError::usage(format!("--budget {budget} must lie in [0, 1]")));
    }
    let count = args.thresholds.unwrap_or(DEFAULT_SWEEP_COUNT);

    let loaded = load_log(log, args.skip_bad_lines, ids.as_ref())?;
    let annotations = load_annotations(&annotations_path)?;
    let series = &loaded.series;
    if series.len() <= n {
        return Err(CliError::data(format!(
            "log has {} bytes, nothing after the training prefix of {n}",
            series.len()
        )));
    }
    for a in &annotations {
        let range = series.byte_range(a.start_us, a.end_us);
        if !range.is_empty() && range.start < n {
            return Err(CliError::data(format!(
                "attack `{}` starts at byte {} inside the training prefix of {n} bytes",
                a.label, range.start
            )));
        }
    }
    println!(
        "{} payload bytes, {} annotated attacks, N = {n}",
        series.len(),
        annotations.len()
    );

    // Lags are independent; results are gathered back in lag order.
    let annotations = annotations.as_slice();
    let runs: Vec<Result<LagRun, TunerError>> = thread::scope(|s| {
        let handles: Vec<_> = configs
            .iter()
            .map(|&config| s.spawn(move || evaluate(series, annotations, config, count)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("tuning worker panicked"))
            .collect()
    });
    let mut done = Vec::with_capacity(runs.len());
    for (lag, run) in lags.iter().zip(runs) {
        done.push(run.context(format!("L = {lag}"))?);
    }
    for r in &done {
        println!(
            "  L = {:>4}, r = {:>3}: AUC {:.4}",
            r.curve.lag, r.curve.rank, r.curve.auc
        );
    }

    let curves: Vec<ThresholdCurve> = done.iter().map(|r| r.curve.clone()).collect();
    let best = best_lag(&curves)?;
    let chosen = done
        .iter()
        .find(|r| r.curve.lag == best.lag)
        .expect("best curve comes from a run");
    let result = TuneResult::from_curve(best, budget);
    let false_alarms = chosen.input.false_alarms(result.threshold);
    println!(
        "chosen L* = {}, theta* = {:.6e}: delay factor {:.4} (budget {budget}), {false_alarms} false alarms",
        result.lag, result.threshold, result.delay
    );

    let curves_path = out_dir.join("curves.csv");
    let mut w = create(&curves_path)?;
    write_curves_csv(&mut w, &curves)?;
    w.flush().context(format!("writing {}", curves_path.display()))?;
    let result_path = out_dir.join("result.toml");
    std::fs::write(&result_path, result.to_toml()).context(format!("writing {}", result_path.display()))?;
    let model_path = out_dir.join("model.bin");
    save_model(&chosen.model, &model_path).context(format!("writing {}", model_path.display()))?;
    println!(
        "wrote {}, {} and {}",
        curves_path.display(),
        result_path.display(),
        model_path.display()
    );
    Ok(())
}
