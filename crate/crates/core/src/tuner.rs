//! Threshold calibration.
//!
//! Two procedures are offered. The validation rule sets the threshold a
//! fixed margin above the largest score seen on attack-free validation
//! traffic. The delay-factor sweep scores traffic with known attack
//! intervals, measures for each candidate threshold the fraction of
//! in-attack windows that stay below it, and picks the lag whose curve has
//! the smallest area together with the largest threshold within a delay
//! budget.

use std::io::Write;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frame::{Annotation, ByteSeries};
use crate::ssa::{score_series, DepartureSeries, SsaError, SsaModel};

pub const DEFAULT_MARGIN: f64 = 0.10;
pub const DEFAULT_BUDGET: f64 = 0.05;
pub const DEFAULT_SWEEP_COUNT: usize = 1000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TunerError {
    #[error(transparent)]
    Ssa(#[from] SsaError),
    #[error("no attack instances to measure")]
    NoAttackInstances,
    #[error("invalid attack intervals: {0}")]
    InvalidIntervals(String),
    #[error("scores are constant at {0}; nothing to sweep")]
    DegenerateScores(f64),
    #[error("no curves to choose from")]
    EmptyInput,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("format error: {0}")]
    Format(String),
}

/// `(1 + margin)` times the largest departure score over `validation`.
///
/// The validation bytes are scored on their own, so the first scored window
/// ends at byte `L - 1` of the segment.
pub fn validation_threshold(model: &SsaModel, validation: &[u8], margin: f64) -> Result<f64, TunerError> {
    if !(margin.is_finite() && margin >= 0.0) {
        return Err(TunerError::InvalidParameter(format!(
            "margin {margin} must be non-negative"
        )));
    }
    let recommended = 2 * model.config().train_len;
    if validation.len() < recommended {
        log::warn!(
            "validation segment has {} bytes, fewer than twice the training length ({recommended})",
            validation.len()
        );
    }
    let scores = score_series(model, validation, None)?;
    let max = scores.max_score().unwrap_or(0.0);
    if max == 0.0 {
        log::warn!("all validation scores are zero; threshold is 0");
    }
    Ok((1.0 + margin) * max)
}

/// Scores of one experiment together with its aggregate attack window.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayFactorInput {
    scores: DepartureSeries,
    intervals: Vec<Range<usize>>,
    // In-attack scores, ascending; the delay factor is a rank query.
    attack_scores: Vec<f64>,
}

impl DelayFactorInput {
    /// `intervals` are byte indices in the scored series. They must be
    /// non-empty, pairwise disjoint and lie inside the scored range.
    pub fn new(scores: DepartureSeries, mut intervals: Vec<Range<usize>>) -> Result<Self, TunerError> {
        intervals.sort_by_key(|r| (r.start, r.end));
        let (lo, hi) = (scores.start_index, scores.end_index());
        for r in &intervals {
            if r.is_empty() {
                return Err(TunerError::InvalidIntervals(format!("empty interval {r:?}")));
            }
            if r.start < lo || r.end > hi {
                return Err(TunerError::InvalidIntervals(format!(
                    "interval {r:?} outside scored range {lo}..{hi}"
                )));
            }
        }
        if let Some(w) = intervals.windows(2).find(|w| w[0].end > w[1].start) {
            return Err(TunerError::InvalidIntervals(format!("{:?} overlaps {:?}", w[0], w[1])));
        }
        let mut attack_scores: Vec<f64> = intervals
            .iter()
            .flat_map(|r| r.clone().map(|i| scores.scores[i - lo]))
            .collect();
        if attack_scores.is_empty() {
            return Err(TunerError::NoAttackInstances);
        }
        attack_scores.sort_by(f64::total_cmp);
        Ok(DelayFactorInput {
            scores,
            intervals,
            attack_scores,
        })
    }

    pub fn scores(&self) -> &DepartureSeries {
        &self.scores
    }

    pub fn intervals(&self) -> &[Range<usize>] {
        &self.intervals
    }

    /// Total number of in-attack byte instances.
    pub fn attack_instances(&self) -> usize {
        self.attack_scores.len()
    }

    fn in_attack(&self, index: usize) -> bool {
        let k = self.intervals.partition_point(|r| r.end <= index);
        self.intervals.get(k).is_some_and(|r| r.contains(&index))
    }

    /// Scores at or above `threshold` outside every attack interval.
    pub fn false_alarms(&self, threshold: f64) -> usize {
        let lo = self.scores.start_index;
        self.scores
            .scores
            .iter()
            .enumerate()
            .filter(|&(k, &s)| s >= threshold && !self.in_attack(lo + k))
            .count()
    }
}

/// Fraction of in-attack instances scoring strictly below `threshold`.
pub fn delay_factor(input: &DelayFactorInput, threshold: f64) -> f64 {
    let below = input.attack_scores.partition_point(|&s| s < threshold);
    below as f64 / input.attack_scores.len() as f64
}

/// Delay factor over evenly spaced thresholds for one lag.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdCurve {
    pub lag: usize,
    pub rank: usize,
    pub thresholds: Vec<f64>,
    pub delays: Vec<f64>,
    /// Trapezoidal area under delay against the threshold index scaled to `[0, 1]`.
    pub auc: f64,
}

/// Sweeps `count` thresholds from the smallest to the largest score.
pub fn sweep_thresholds(
    input: &DelayFactorInput,
    lag: usize,
    rank: usize,
    count: usize,
) -> Result<ThresholdCurve, TunerError> {
    if count < 2 {
        return Err(TunerError::InvalidParameter(format!(
            "sweep needs at least 2 thresholds, got {count}"
        )));
    }
    let scores = &input.scores.scores;
    let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max.partial_cmp(&min) != Some(std::cmp::Ordering::Greater) {
        return Err(TunerError::DegenerateScores(min));
    }
    let step = (max - min) / (count - 1) as f64;
    let thresholds: Vec<f64> = (0..count)
        .map(|i| if i == count - 1 { max } else { min + step * i as f64 })
        .collect();
    let delays: Vec<f64> = thresholds.iter().map(|&t| delay_factor(input, t)).collect();
    let auc = delays.windows(2).map(|w| 0.5 * (w[0] + w[1])).sum::<f64>() / (count - 1) as f64;
    Ok(ThresholdCurve {
        lag,
        rank,
        thresholds,
        delays,
        auc,
    })
}

/// The curve with the smallest area; ties go to the smaller lag.
pub fn best_lag(curves: &[ThresholdCurve]) -> Result<&ThresholdCurve, TunerError> {
    curves
        .iter()
        .min_by(|a, b| a.auc.total_cmp(&b.auc).then(a.lag.cmp(&b.lag)))
        .ok_or(TunerError::EmptyInput)
}

/// Largest threshold whose delay factor is within `budget`. When no point
/// meets the budget, the largest threshold among those with the smallest
/// delay factor.
pub fn best_threshold_cut(curve: &ThresholdCurve, budget: f64) -> f64 {
    let pairs = curve.thresholds.iter().zip(&curve.delays);
    if let Some((&t, _)) = pairs.clone().rev().find(|(_, &d)| d <= budget) {
        return t;
    }
    let min = curve.delays.iter().copied().fold(f64::INFINITY, f64::min);
    pairs
        .rev()
        .find(|(_, &d)| d == min)
        .map(|(&t, _)| t)
        .unwrap_or(f64::NAN)
}

/// Score indices of windows touching an annotated attack.
///
/// Each annotation covers the bytes of frames inside its time span; the
/// interval is then extended by `lag - 1` so every window holding at least
/// one attack byte counts as in-attack. Overlapping intervals are merged and
/// everything is clipped to `scored`.
pub fn attack_score_intervals(
    series: &ByteSeries,
    annotations: &[Annotation],
    lag: usize,
    scored: Range<usize>,
) -> Vec<Range<usize>> {
    let mut raw: Vec<Range<usize>> = annotations
        .iter()
        .map(|a| series.byte_range(a.start_us, a.end_us))
        .filter(|r| !r.is_empty())
        .map(|r| r.start.max(scored.start)..(r.end + lag - 1).min(scored.end))
        .filter(|r| !r.is_empty())
        .collect();
    raw.sort_by_key(|r| r.start);
    let mut merged: Vec<Range<usize>> = Vec::with_capacity(raw.len());
    for r in raw {
        match merged.last_mut() {
            Some(last) if r.start <= last.end => last.end = last.end.max(r.end),
            _ => merged.push(r),
        }
    }
    merged
}

/// Writes curves as `L,r,theta,delta`, one row per threshold.
pub fn write_curves_csv<W: Write>(writer: W, curves: &[ThresholdCurve]) -> Result<(), TunerError> {
    let mut csv = csv::Writer::from_writer(writer);
    let fmt = |e: csv::Error| TunerError::Format(e.to_string());
    csv.write_record(["L", "r", "theta", "delta"]).map_err(fmt)?;
    for c in curves {
        for (t, d) in c.thresholds.iter().zip(&c.delays) {
            csv.write_record([c.lag.to_string(), c.rank.to_string(), t.to_string(), d.to_string()])
                .map_err(fmt)?;
        }
    }
    csv.flush().map_err(|e| TunerError::Format(e.to_string()))
}

/// Outcome of a tuning run, stored as a small TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub lag: usize,
    pub rank: usize,
    pub threshold: f64,
    pub auc: f64,
    pub delay: f64,
    pub budget: f64,
}

impl TuneResult {
    pub fn from_curve(curve: &ThresholdCurve, budget: f64) -> Self {
        let threshold = best_threshold_cut(curve, budget);
        let delay = curve
            .thresholds
            .iter()
            .position(|&t| t == threshold)
            .map_or(f64::NAN, |i| curve.delays[i]);
        TuneResult {
            lag: curve.lag,
            rank: curve.rank,
            threshold,
            auc: curve.auc,
            delay,
            budget,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("plain numeric fields serialize")
    }

    pub fn from_toml(text: &str) -> Result<Self, TunerError> {
        toml::from_str(text).map_err(|e| TunerError::Format(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ssa::{train, DimensionRule, LagConfig};

    fn input(scores: Vec<f64>, intervals: Vec<Range<usize>>) -> DelayFactorInput {
        DelayFactorInput::new(DepartureSeries::new(0, scores, None), intervals).unwrap()
    }

    fn curve(lag: usize, auc: f64) -> ThresholdCurve {
        ThresholdCurve {
            lag,
            rank: 1,
            thresholds: vec![0.0, 1.0],
            delays: vec![0.0, 1.0],
            auc,
        }
    }

    #[test]
    fn margin_scales_max() {
        let series: Vec<u8> = (0..400).map(|i| [3u8, 200, 17, 90][i % 4]).collect();
        let model = train(&series, LagConfig::new(200, 8, DimensionRule::Explicit(2)).unwrap()).unwrap();
        let validation: Vec<u8> = (0..400)
            .map(|i| if i == 150 { 77 } else { [3u8, 200, 17, 90][i % 4] })
            .collect();
        let max = score_series(&model, &validation, None).unwrap().max_score().unwrap();
        assert!(max > 0.0);
        let t = validation_threshold(&model, &validation, 0.10).unwrap();
        assert_eq!(t, 1.1 * max);
        assert_eq!(validation_threshold(&model, &validation, 0.0).unwrap(), max);
        assert!(validation_threshold(&model, &validation[..5], 0.1).is_err());
    }

    #[test]
    fn margin_on_stated_maximum() {
        assert!(((1.0 + 0.10) * 4.2 - 4.62f64).abs() < 1e-12);
    }

    #[test]
    fn constant_validation_gives_zero_threshold() {
        let series = vec![9u8; 400];
        let model = train(&series, LagConfig::new(200, 8, DimensionRule::Explicit(1)).unwrap()).unwrap();
        // Zero up to the rounding of the centroid itself.
        assert!(validation_threshold(&model, &series, 0.1).unwrap() < 1e-28);
    }

    #[test]
    fn three_of_ten_below() {
        let mut scores = vec![0.0; 30];
        for (i, s) in scores.iter_mut().enumerate().take(20).skip(10) {
            *s = if i < 13 { 1.0 } else { 5.0 };
        }
        let inp = input(scores, vec![10..20]);
        assert_eq!(inp.attack_instances(), 10);
        assert_eq!(delay_factor(&inp, 2.0), 0.3);
        assert_eq!(delay_factor(&inp, 1.0), 0.0);
        assert_eq!(delay_factor(&inp, 5.0), 0.3);
        assert_eq!(delay_factor(&inp, 5.1), 1.0);
    }

    #[test]
    fn interval_validation() {
        let s = DepartureSeries::new(5, vec![0.0; 10], None);
        assert!(matches!(
            DelayFactorInput::new(s.clone(), vec![]),
            Err(TunerError::NoAttackInstances)
        ));
        assert!(matches!(
            DelayFactorInput::new(s.clone(), vec![4..6]),
            Err(TunerError::InvalidIntervals(_))
        ));
        assert!(matches!(
            DelayFactorInput::new(s.clone(), vec![6..9, 8..10]),
            Err(TunerError::InvalidIntervals(_))
        ));
        assert!(DelayFactorInput::new(s, vec![12..15, 5..7]).is_ok());
    }

    #[test]
    fn false_alarms_skip_intervals() {
        let inp = input(vec![9.0, 0.0, 9.0, 9.0, 0.0, 9.0], vec![2..4]);
        assert_eq!(inp.false_alarms(1.0), 2);
        assert_eq!(inp.false_alarms(10.0), 0);
    }

    #[test]
    fn two_point_sweep_hits_endpoints() {
        let inp = input(vec![0.5, 2.0, 4.0, 1.0], vec![1..3]);
        let c = sweep_thresholds(&inp, 10, 2, 2).unwrap();
        assert_eq!(c.thresholds, vec![0.5, 4.0]);
        assert_eq!(c.delays, vec![0.0, 0.5]);
        assert_eq!(c.auc, 0.25);
        assert_eq!((c.lag, c.rank), (10, 2));
    }

    #[test]
    fn constant_scores_are_degenerate() {
        let inp = input(vec![3.0; 5], vec![0..2]);
        assert!(matches!(
            sweep_thresholds(&inp, 4, 1, 10),
            Err(TunerError::DegenerateScores(_))
        ));
        let inp = input(vec![1.0, 3.0], vec![0..2]);
        assert!(sweep_thresholds(&inp, 4, 1, 1).is_err());
    }

    #[test]
    fn best_lag_rules() {
        assert!(matches!(best_lag(&[]), Err(TunerError::EmptyInput)));
        assert_eq!(best_lag(&[curve(7, 0.9)]).unwrap().lag, 7);
        let cs = [curve(100, 0.4), curve(250, 0.2), curve(500, 0.3)];
        assert_eq!(best_lag(&cs).unwrap().lag, 250);
        let cs = [curve(300, 0.2), curve(200, 0.2)];
        assert_eq!(best_lag(&cs).unwrap().lag, 200);
    }

    #[test]
    fn cut_rules() {
        let mut c = curve(1, 0.0);
        c.thresholds = vec![1.0, 2.0, 3.0, 4.0];
        c.delays = vec![0.0; 4];
        assert_eq!(best_threshold_cut(&c, 0.05), 4.0);
        c.delays = vec![0.0, 0.04, 0.06, 0.5];
        assert_eq!(best_threshold_cut(&c, 0.05), 2.0);
        c.delays = vec![0.1, 0.1, 0.2, 0.3];
        assert_eq!(best_threshold_cut(&c, 0.05), 2.0);
    }

    #[test]
    fn intervals_from_annotations() {
        use crate::frame::{extract_byte_series, CanFrame, CanId, FrameLog};
        let frames = (0..10)
            .map(|i| CanFrame::new(i * 1000, CanId::standard(1).unwrap(), vec![i as u8; 4], "can0").unwrap())
            .collect();
        let log = FrameLog::new(frames, "t").unwrap();
        let series = extract_byte_series(&log, None).unwrap();
        let ann = |s, e| Annotation {
            label: "x".into(),
            start_us: s,
            end_us: e,
        };
        // Frames 2..4 hold bytes 8..16; extended by L - 1 = 2.
        assert_eq!(
            attack_score_intervals(&series, &[ann(2000, 4000)], 3, 2..40),
            vec![8..18]
        );
        assert_eq!(
            attack_score_intervals(&series, &[ann(2000, 4000), ann(4000, 5000)], 3, 2..40),
            vec![8..22]
        );
        assert_eq!(
            attack_score_intervals(&series, &[ann(8000, 9500)], 3, 2..35),
            vec![32..35]
        );
        assert!(attack_score_intervals(&series, &[ann(20_000, 30_000)], 3, 2..40).is_empty());
    }

    #[test]
    fn result_round_trips() {
        let mut c = curve(250, 0.125);
        c.thresholds = vec![1.0, 2.0, 3.0];
        c.delays = vec![0.0, 0.0, 0.5];
        let r = TuneResult::from_curve(&c, 0.05);
        assert_eq!(r.threshold, 2.0);
        assert_eq!(r.delay, 0.0);
        assert_eq!(TuneResult::from_toml(&r.to_toml()).unwrap(), r);
    }

    #[test]
    fn curves_csv_layout() {
        let mut buf = Vec::new();
        write_curves_csv(&mut buf, &[curve(4, 0.5)]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "L,r,theta,delta\n4,1,0,0\n4,1,1,1\n");
    }
}
