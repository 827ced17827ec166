//! Command-line flags. Each command's flag set doubles as its table in the
//! config file, so every field is optional here and defaults are applied only
//! after flags and file have been merged.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

#[derive(Debug, Parser)]
#[command(
    name = "casad",
    version,
    about = "Payload-level stealthy-attack detection for CAN bus logs"
)]
pub struct Cli {
    /// TOML file with one table per command (`[train]`, `[tune]`, ...); flags win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Seed of the simulator's random generator.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the bus simulator and write a candump log plus attack annotations.
    Simulate(SimulateArgs),
    /// Learn the signal subspace from the first N payload bytes of a log.
    Train(TrainArgs),
    /// Score every byte of a log against a trained model.
    Detect(DetectArgs),
    /// Pick the lag and threshold with the smallest detection delay.
    Tune(TuneArgs),
    /// Summarise a score file: per-attack latency and false alarms.
    Report(ReportArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Train(_) => "train",
            Command::Detect(_) => "detect",
            Command::Tune(_) => "tune",
            Command::Report(_) => "report",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackName {
    Suspension,
    Fabrication,
    Masquerade,
    Conquest,
}

#[derive(Debug, Clone, Default, Args, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateArgs {
    /// Bus schedule file; the three-ECU prototype when absent.
    #[arg(long, value_name = "FILE")]
    pub schedule: Option<PathBuf>,
    /// Simulated seconds, overriding the schedule.
    #[arg(long)]
    pub duration: Option<f64>,
    /// Add a prototype attack scenario aimed at ECU B.
    #[arg(long)]
    pub attack: Option<AttackName>,
    /// Attack onset in seconds [default: 20].
    #[arg(long)]
    pub start: Option<f64>,
    /// Attack length in seconds; open-ended when absent.
    #[arg(long)]
    pub attack_duration: Option<f64>,
    /// Injection rate multiplier for fabrication [default: 1].
    #[arg(long)]
    pub multiplier: Option<f64>,
    /// Number of attack repetitions [default: 1].
    #[arg(long)]
    pub repeat: Option<usize>,
    /// Seconds between repeated attack onsets.
    #[arg(long)]
    pub spacing: Option<f64>,
    /// Output log.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Output annotation CSV [default: next to the log, `<stem>.annotations.csv`].
    #[arg(long, value_name = "FILE")]
    pub annotations: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct TrainArgs {
    /// candump log (or its CSV variant).
    #[arg(long, value_name = "FILE")]
    pub log: Option<PathBuf>,
    /// Skip unparseable lines instead of failing.
    #[arg(long)]
    pub skip_bad_lines: bool,
    /// Monitor only these identifiers (hex, comma-separated); the whole bus by default.
    #[arg(long, value_delimiter = ',', value_name = "ID")]
    pub ids: Vec<String>,
    /// Training length N in bytes.
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub train_len: Option<usize>,
    /// Lag L.
    #[arg(long = "L")]
    #[serde(rename = "L")]
    pub lag: Option<usize>,
    /// Statistical dimension r (1 <= r < L).
    #[arg(long = "r", conflicts_with = "energy")]
    #[serde(rename = "r")]
    pub rank: Option<usize>,
    /// Choose r as the smallest rank reaching this share of the eigenvalue sum [default: 0.9].
    #[arg(long)]
    pub energy: Option<f64>,
    /// Output model file.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct DetectArgs {
    /// Model written by `train` or `tune`.
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,
    /// candump log (or its CSV variant).
    #[arg(long, value_name = "FILE")]
    pub log: Option<PathBuf>,
    /// Skip unparseable lines instead of failing.
    #[arg(long)]
    pub skip_bad_lines: bool,
    /// Monitor only these identifiers (hex, comma-separated); the whole bus by default.
    #[arg(long, value_delimiter = ',', value_name = "ID")]
    pub ids: Vec<String>,
    /// Alarm threshold.
    #[arg(long, conflicts_with_all = ["tuned", "validate"])]
    pub threshold: Option<f64>,
    /// Take the threshold from a `tune` result file.
    #[arg(long, value_name = "FILE", conflicts_with = "validate")]
    pub tuned: Option<PathBuf>,
    /// Derive the threshold from the bytes following the training prefix.
    #[arg(long)]
    pub validate: bool,
    /// Relative margin above the largest validation score [default: 0.1].
    #[arg(long)]
    pub margin: Option<f64>,
    /// Validation length in bytes [default: twice the training length].
    #[arg(long)]
    pub validation_len: Option<usize>,
    /// Score only bytes after the training (and validation) prefix.
    #[arg(long)]
    pub after_training: bool,
    /// Output score CSV.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct TuneArgs {
    /// candump log (or its CSV variant).
    #[arg(long, value_name = "FILE")]
    pub log: Option<PathBuf>,
    /// Skip unparseable lines instead of failing.
    #[arg(long)]
    pub skip_bad_lines: bool,
    /// Monitor only these identifiers (hex, comma-separated); the whole bus by default.
    #[arg(long, value_delimiter = ',', value_name = "ID")]
    pub ids: Vec<String>,
    /// Attack annotation CSV [default: `<stem>.annotations.csv` next to the log].
    #[arg(long, value_name = "FILE")]
    pub annotations: Option<PathBuf>,
    /// Training length N in bytes.
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub train_len: Option<usize>,
    /// Candidate lags, comma-separated.
    #[arg(long = "L", value_delimiter = ',')]
    #[serde(rename = "L")]
    pub lags: Vec<usize>,
    /// Statistical dimension r (1 <= r < L).
    #[arg(long = "r", conflicts_with = "energy")]
    #[serde(rename = "r")]
    pub rank: Option<usize>,
    /// Choose r as the smallest rank reaching this share of the eigenvalue sum [default: 0.9].
    #[arg(long)]
    pub energy: Option<f64>,
    /// Largest acceptable delay factor at the chosen threshold [default: 0.05].
    #[arg(long)]
    pub budget: Option<f64>,
    /// Thresholds per sweep [default: 1000].
    #[arg(long)]
    pub thresholds: Option<usize>,
    /// Directory for `curves.csv`, `result.toml` and `model.bin`.
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ReportArgs {
    /// Score CSV written by `detect`.
    #[arg(long, value_name = "FILE")]
    pub scores: Option<PathBuf>,
    /// candump log (or its CSV variant).
    #[arg(long, value_name = "FILE")]
    pub log: Option<PathBuf>,
    /// Skip unparseable lines instead of failing.
    #[arg(long)]
    pub skip_bad_lines: bool,
    /// Monitor only these identifiers (hex, comma-separated); the whole bus by default.
    #[arg(long, value_delimiter = ',', value_name = "ID")]
    pub ids: Vec<String>,
    /// Attack annotation CSV [default: `<stem>.annotations.csv` next to the log, if present].
    #[arg(long, value_name = "FILE")]
    pub annotations: Option<PathBuf>,
    /// Lag of the model behind the scores.
    #[arg(long = "L")]
    #[serde(rename = "L")]
    pub lag: Option<usize>,
    /// Re-threshold the scores instead of using their alarm column.
    #[arg(long, conflicts_with = "tuned")]
    pub threshold: Option<f64>,
    /// Take lag and threshold from a `tune` result file.
    #[arg(long, value_name = "FILE")]
    pub tuned: Option<PathBuf>,
    /// Write a downsampled `byte_index,time_s,score,alarm,in_attack` series for plotting.
    #[arg(long, value_name = "FILE")]
    pub plot_out: Option<PathBuf>,
    /// Points in the plot series [default: 2000].
    #[arg(long)]
    pub plot_points: Option<usize>,
}

/// Fills every field the command line left unset from the config file.
pub trait Merge {
    fn merge(self, file: Self) -> Self;
}

macro_rules! merge_fields {
    ($flags:ident, $file:ident; $($opt:ident),*; $($flag:ident),*; $($vec:ident),*) => {{
        $( $flags.$opt = $flags.$opt.or($file.$opt); )*
        $( $flags.$flag |= $file.$flag; )*
        $( if $flags.$vec.is_empty() { $flags.$vec = $file.$vec; } )*
        $flags
    }};
}

/// `r` and `energy` are one choice; a flag for either overrides both.
fn merge_rank(flags: (Option<usize>, Option<f64>), file: (Option<usize>, Option<f64>)) -> (Option<usize>, Option<f64>) {
    if flags.0.is_some() || flags.1.is_some() {
        flags
    } else {
        file
    }
}

impl Merge for SimulateArgs {
    fn merge(mut self, file: Self) -> Self {
        merge_fields!(self, file;
            schedule, duration, attack, start, attack_duration, multiplier, repeat, spacing, out, annotations;;)
    }
}

impl Merge for TrainArgs {
    fn merge(mut self, file: Self) -> Self {
        (self.rank, self.energy) = merge_rank((self.rank, self.energy), (file.rank, file.energy));
        merge_fields!(self, file; log, train_len, lag, out; skip_bad_lines; ids)
    }
}

impl Merge for DetectArgs {
    fn merge(mut self, file: Self) -> Self {
        // Threshold sources are one choice as well.
        if self.threshold.is_none() && self.tuned.is_none() && !self.validate {
            self.threshold = file.threshold;
            self.tuned = file.tuned;
            self.validate = file.validate;
        }
        merge_fields!(self, file; model, log, margin, validation_len, out; skip_bad_lines, after_training; ids)
    }
}

impl Merge for TuneArgs {
    fn merge(mut self, file: Self) -> Self {
        (self.rank, self.energy) = merge_rank((self.rank, self.energy), (file.rank, file.energy));
        merge_fields!(self, file; log, annotations, train_len, budget, thresholds, out_dir; skip_bad_lines; ids, lags)
    }
}

impl Merge for ReportArgs {
    fn merge(mut self, file: Self) -> Self {
        if self.threshold.is_none() && self.tuned.is_none() {
            self.threshold = file.threshold;
            self.tuned = file.tuned;
        }
        merge_fields!(self, file; scores, log, annotations, lag, plot_out, plot_points; skip_bad_lines; ids)
    }
}
