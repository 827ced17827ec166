use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{SsaError, SsaModel};

/// Departure scores aligned to byte positions.
///
/// Score `k` belongs to the window whose newest byte sits at
/// `start_index + k` in the scored series.
#[derive(Debug, Clone, PartialEq)]
pub struct DepartureSeries {
    pub start_index: usize,
    pub scores: Vec<f64>,
    threshold: Option<f64>,
}

impl DepartureSeries {
    pub fn new(start_index: usize, scores: Vec<f64>, threshold: Option<f64>) -> Self {
        DepartureSeries {
            start_index,
            scores,
            threshold,
        }
    }

    pub fn threshold(&self) -> Option<f64> {
        self.threshold
    }

    pub fn with_threshold(mut self, threshold: Option<f64>) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Byte index one past the newest byte of the last scored window.
    pub fn end_index(&self) -> usize {
        self.start_index + self.scores.len()
    }

    /// Score of the window ending at byte `index`, if scored.
    pub fn score_at(&self, index: usize) -> Option<f64> {
        index
            .checked_sub(self.start_index)
            .and_then(|k| self.scores.get(k).copied())
    }

    /// `None` when no threshold is set.
    pub fn alarms(&self) -> Option<Vec<bool>> {
        let t = self.threshold?;
        Some(self.scores.iter().map(|&s| s >= t).collect())
    }

    /// Byte indices of alarming windows.
    pub fn alarm_indices(&self) -> Vec<usize> {
        match self.threshold {
            Some(t) => self
                .scores
                .iter()
                .enumerate()
                .filter(|(_, &s)| s >= t)
                .map(|(k, _)| self.start_index + k)
                .collect(),
            None => Vec::new(),
        }
    }

    pub fn first_alarm(&self) -> Option<usize> {
        let t = self.threshold?;
        self.scores.iter().position(|&s| s >= t).map(|k| self.start_index + k)
    }

    pub fn max_score(&self) -> Option<f64> {
        self.scores.iter().copied().reduce(f64::max)
    }
}

/// Scores every window of `series` whose newest byte is at `from` or later.
/// Bytes before `from` serve only as warm-up context.
pub fn score_from(
    model: &SsaModel,
    series: &[u8],
    from: usize,
    threshold: Option<f64>,
) -> Result<DepartureSeries, SsaError> {
    let lag = model.lag();
    if series.len() < lag {
        return Err(SsaError::SeriesTooShort {
            needed: lag,
            available: series.len(),
        });
    }
    let first = from.max(lag - 1);
    let x: Vec<f64> = series[first + 1 - lag..].iter().map(|&b| f64::from(b)).collect();
    let scores = x.windows(lag).map(|w| model.score_window(w)).collect();
    Ok(DepartureSeries::new(first, scores, threshold))
}

/// Scores every window position of `series`.
pub fn score_series(model: &SsaModel, series: &[u8], threshold: Option<f64>) -> Result<DepartureSeries, SsaError> {
    score_from(model, series, 0, threshold)
}

#[derive(Debug, Serialize, Deserialize)]
struct ScoreRow {
    byte_index: usize,
    score: f64,
    alarm: u8,
}

/// Writes `byte_index,score,alarm`; `alarm` is 0 when no threshold is set.
pub fn write_scores_csv<W: Write>(writer: W, scores: &DepartureSeries) -> Result<(), SsaError> {
    let mut csv = csv::Writer::from_writer(writer);
    let threshold = scores.threshold();
    for (k, &score) in scores.scores.iter().enumerate() {
        let alarm = matches!(threshold, Some(t) if score >= t);
        csv.serialize(ScoreRow {
            byte_index: scores.start_index + k,
            score,
            alarm: u8::from(alarm),
        })
        .map_err(|e| SsaError::Format(e.to_string()))?;
    }
    csv.flush().map_err(|e| SsaError::Format(e.to_string()))
}

/// Reads a score CSV back. Rows must be contiguous in `byte_index`; the alarm
/// column is returned separately since the threshold is not stored.
pub fn read_scores_csv<R: Read>(reader: R) -> Result<(DepartureSeries, Vec<bool>), SsaError> {
    let mut csv = csv::Reader::from_reader(reader);
    let mut start = None;
    let mut scores = Vec::new();
    let mut alarms = Vec::new();
    for row in csv.deserialize::<ScoreRow>() {
        let row = row.map_err(|e| SsaError::Format(e.to_string()))?;
        let expected = *start.get_or_insert(row.byte_index) + scores.len();
        if row.byte_index != expected {
            return Err(SsaError::Format(format!(
                "byte_index {} out of sequence, expected {expected}",
                row.byte_index
            )));
        }
        scores.push(row.score);
        alarms.push(row.alarm != 0);
    }
    Ok((DepartureSeries::new(start.unwrap_or(0), scores, None), alarms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ssa::{train, DimensionRule, LagConfig};

    fn model() -> SsaModel {
        let series: Vec<u8> = (0..200u32).map(|i| ((i % 7) * 30 + (i % 3) * 5) as u8).collect();
        train(&series, LagConfig::new(200, 10, DimensionRule::Explicit(3)).unwrap()).unwrap()
    }

    #[test]
    fn alignment_and_lengths() {
        let m = model();
        let series: Vec<u8> = (0..50u8).collect();
        let s = score_series(&m, &series, None).unwrap();
        assert_eq!(s.start_index, 9);
        assert_eq!(s.len(), 41);
        assert_eq!(s.end_index(), 50);
        assert!(s.alarms().is_none());
        let tail = score_from(&m, &series, 30, None).unwrap();
        assert_eq!(tail.start_index, 30);
        assert_eq!(tail.scores[..], s.scores[21..]);
        assert!(matches!(
            score_series(&m, &series[..5], None),
            Err(SsaError::SeriesTooShort { .. })
        ));
    }

    #[test]
    fn threshold_edges() {
        let m = model();
        let series: Vec<u8> = (0..80u32).map(|i| (i * 13 % 256) as u8).collect();
        let s = score_series(&m, &series, None).unwrap();
        let max = s.max_score().unwrap();
        assert!(s.clone().with_threshold(Some(max + 1.0)).alarm_indices().is_empty());
        let zero = s.clone().with_threshold(Some(0.0));
        let first_positive = s.scores.iter().position(|&x| x > 0.0).unwrap();
        assert_eq!(zero.first_alarm(), Some(s.start_index));
        assert!(zero.alarms().unwrap()[first_positive]);
        // Counting oracle.
        for theta in [max * 0.1, max * 0.5, max] {
            let t = s.clone().with_threshold(Some(theta));
            let brute = s.scores.iter().filter(|&&x| x >= theta).count();
            assert_eq!(t.alarm_indices().len(), brute);
            assert_eq!(t.alarms().unwrap().iter().filter(|&&a| a).count(), brute);
        }
    }

    #[test]
    fn csv_round_trip() {
        let s = DepartureSeries::new(4, vec![0.5, 2.0, 1.0], Some(1.0));
        let mut buf = Vec::new();
        write_scores_csv(&mut buf, &s).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text, "byte_index,score,alarm\n4,0.5,0\n5,2.0,1\n6,1.0,1\n");
        let (back, alarms) = read_scores_csv(buf.as_slice()).unwrap();
        assert_eq!(back.start_index, 4);
        assert_eq!(back.scores, s.scores);
        assert_eq!(alarms, vec![false, true, true]);
    }
}
