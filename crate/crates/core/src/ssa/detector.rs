use std::sync::Arc;

use super::{SsaError, SsaModel};

/// Online scorer over a single byte stream.
///
/// Holds the last `L` bytes in a doubled ring buffer so the current window is
/// always one contiguous slice; each step is a single `r × L` mat-vec against
/// the model's basis.
#[derive(Debug, Clone)]
pub struct StreamDetector {
    model: Arc<SsaModel>,
    buf: Vec<f64>,
    head: usize,
    filled: usize,
    seen: u64,
}

impl StreamDetector {
    pub fn new(model: Arc<SsaModel>) -> Self {
        let lag = model.lag();
        StreamDetector {
            model,
            buf: vec![0.0; 2 * lag],
            head: 0,
            filled: 0,
            seen: 0,
        }
    }

    pub fn model(&self) -> &SsaModel {
        &self.model
    }

    /// Number of bytes consumed so far.
    pub fn bytes_seen(&self) -> u64 {
        self.seen
    }

    /// Pushes one byte; returns the weighted score once `L` bytes have arrived.
    #[inline]
    pub fn step(&mut self, byte: u8) -> Option<f64> {
        let lag = self.model.lag();
        let v = f64::from(byte);
        self.buf[self.head] = v;
        self.buf[self.head + lag] = v;
        self.head = (self.head + 1) % lag;
        self.seen += 1;
        if self.filled < lag {
            self.filled += 1;
            if self.filled < lag {
                return None;
            }
        }
        Some(self.model.score_window(&self.buf[self.head..self.head + lag]))
    }

    /// Like [`step`](Self::step) for values arriving as wider integers.
    pub fn try_step(&mut self, value: i64) -> Result<Option<f64>, SsaError> {
        let byte = u8::try_from(value).map_err(|_| SsaError::ByteOutOfRange(value))?;
        Ok(self.step(byte))
    }

    /// Forgets the window contents; the model is kept.
    pub fn reset(&mut self) {
        self.head = 0;
        self.filled = 0;
        self.seen = 0;
    }
}
