use casad::ssa::{save_model, train, DimensionRule, LagConfig, SsaModel};

use crate::args::TrainArgs;
use crate::error::{CliResult, Context};
use crate::io::{input_file, load_log, output_file, parse_ids, require};

pub const DEFAULT_ENERGY: f64 = 0.90;

pub fn dimension_rule(rank: Option<usize>, energy: Option<f64>) -> DimensionRule {
    match rank {
        Some(r) => DimensionRule::Explicit(r),
        None => DimensionRule::Energy(energy.unwrap_or(DEFAULT_ENERGY)),
    }
}

pub fn describe(model: &SsaModel) {
    println!(
        "L = {}, r = {}, leading eigenvalue share {:.4}, training score max {:.6e}",
        model.lag(),
        model.rank(),
        model.leading_share(),
        model.training_score_max()
    );
}

pub fn run(args: &TrainArgs) -> CliResult<()> {
    let log = input_file(require(args.log.as_deref(), "log")?)?;
    let out = output_file(require(args.out.as_deref(), "out")?)?;
    let ids = parse_ids(&args.ids)?;
    let config = LagConfig::new(
        require(args.train_len, "N")?,
        require(args.lag, "L")?,
        dimension_rule(args.rank, args.energy),
    )?;

    let loaded = load_log(log, args.skip_bad_lines, ids.as_ref())?;
    println!("{} frames, {} payload bytes", loaded.log.len(), loaded.series.len());
    let model = train(loaded.series.values(), config).context("training")?;
    println!("trained on N = {} bytes", config.train_len);
    describe(&model);
    save_model(&model, out).context(format!("writing {}", out.display()))?;
    println!("wrote {}", out.display());
    Ok(())
}
