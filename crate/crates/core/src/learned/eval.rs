use crate::error::{Error, Result};
use crate::features::PathLossSample;
use crate::PathLossPredictor;

/// Number of 1 dB histogram bins.
pub const HISTOGRAM_BINS: usize = 80;
/// Histogram span; errors outside it are counted as underflow/overflow.
pub const HISTOGRAM_RANGE_DB: (f64, f64) = (-40.0, 40.0);

/// Prediction error summary. Errors are `predicted - measured`.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub mae: f64,
    pub mean_error: f64,
    pub count: usize,
    /// `histogram[i]` counts errors in `[-40 + i, -39 + i)`.
    pub histogram: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
}

impl Evaluation {
    /// Histogram normalized to a probability density (per dB).
    pub fn density(&self) -> Vec<f64> {
        let n = self.count as f64;
        self.histogram.iter().map(|&c| c as f64 / n).collect()
    }
}

pub fn evaluate<P: PathLossPredictor + ?Sized>(predictor: &P, samples: &[PathLossSample]) -> Result<Evaluation> {
    evaluate_fn(samples, |s| predictor.predict_pl(&s.features))
}

/// Like [`evaluate`], with an arbitrary prediction function.
pub fn evaluate_fn<F>(samples: &[PathLossSample], mut predict: F) -> Result<Evaluation>
where
    F: FnMut(&PathLossSample) -> f64,
{
    if samples.is_empty() {
        return Err(Error::input("cannot evaluate on an empty sample set"));
    }
    let mut eval = Evaluation {
        mae: 0.0,
        mean_error: 0.0,
        count: samples.len(),
        histogram: vec![0; HISTOGRAM_BINS],
        underflow: 0,
        overflow: 0,
    };
    let (lo, hi) = HISTOGRAM_RANGE_DB;
    for s in samples {
        let e = predict(s) - s.measured_pl;
        eval.mae += e.abs();
        eval.mean_error += e;
        if e < lo {
            eval.underflow += 1;
        } else if e >= hi {
            eval.overflow += 1;
        } else {
            eval.histogram[((e - lo).floor() as usize).min(HISTOGRAM_BINS - 1)] += 1;
        }
    }
    eval.mae /= samples.len() as f64;
    eval.mean_error /= samples.len() as f64;
    Ok(eval)
}
