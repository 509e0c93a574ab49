use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::dataset::Sample;
use super::model::{Head, Regressor};
use crate::coder::angular_distance;
use crate::error::{Error, Result};

/// Samples with `|theta|` above this are in the boundary region.
pub const BOUNDARY_THRESHOLD: f64 = FRAC_PI_2 - 0.1;

/// Thresholds for the "fraction within" aggregates, in degrees.
pub const WITHIN_DEGREES: [f64; 3] = [2.0, 5.0, 10.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleError {
    pub index: usize,
    pub theta: f64,
    pub square: bool,
    pub boundary: bool,
    /// `None` when the predicted code had no recoverable phase.
    pub predicted: Option<f64>,
    pub error: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub max: f64,
    pub within_2deg: f64,
    pub within_5deg: f64,
    pub within_10deg: f64,
}

impl ErrorSummary {
    /// Aggregates in a fixed order (sorted), so the result does not depend
    /// on the order the errors were produced in.
    pub fn from_errors(errors: impl IntoIterator<Item = f64>) -> Self {
        let mut sorted: Vec<f64> = errors.into_iter().collect();
        sorted.sort_by(f64::total_cmp);
        let count = sorted.len();
        if count == 0 {
            return Self {
                count,
                mean: f64::NAN,
                median: f64::NAN,
                max: f64::NAN,
                within_2deg: f64::NAN,
                within_5deg: f64::NAN,
                within_10deg: f64::NAN,
            };
        }
        let median = if count % 2 == 1 {
            sorted[count / 2]
        } else {
            0.5 * (sorted[count / 2 - 1] + sorted[count / 2])
        };
        let within = |deg: f64| {
            let limit = deg.to_radians();
            sorted.partition_point(|&e| e <= limit) as f64 / count as f64
        };
        let [d2, d5, d10] = WITHIN_DEGREES;
        Self {
            count,
            mean: sorted.iter().sum::<f64>() / count as f64,
            median,
            max: sorted[count - 1],
            within_2deg: within(d2),
            within_5deg: within(d5),
            within_10deg: within(d10),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub head: Head,
    pub n_step: usize,
    pub samples: Vec<SampleError>,
    pub indeterminate: usize,
    pub overall: ErrorSummary,
    pub boundary: ErrorSummary,
}

/// Runs the model over `data` and scores decoded angles.
pub fn evaluate(model: &Regressor, data: &[Sample]) -> Result<EvalReport> {
    evaluate_with(model.head, model.n_step, data, |s| {
        model.predict(&s.features)
    })
}

/// Scores an arbitrary predictor that emits raw head outputs.
///
/// Rectangles are scored modulo `pi`, square-flagged samples modulo `pi/2`.
/// Indeterminate decodes are counted, not fatal; other errors propagate.
pub fn evaluate_with<F>(
    head: Head,
    n_step: usize,
    data: &[Sample],
    predict: F,
) -> Result<EvalReport>
where
    F: Fn(&Sample) -> Result<Vec<f64>>,
{
    let samples = data
        .iter()
        .enumerate()
        .map(|(index, s)| {
            let predicted = match head.decode(&predict(s)?) {
                Ok(theta) => Some(theta),
                Err(Error::IndeterminatePhase) => None,
                Err(e) => return Err(e),
            };
            Ok(SampleError {
                index,
                theta: s.target_theta,
                square: s.square,
                boundary: s.target_theta.abs() > BOUNDARY_THRESHOLD,
                predicted,
                error: predicted.map(|p| angular_distance(p, s.target_theta, &s.symmetry())),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let indeterminate = samples.iter().filter(|s| s.error.is_none()).count();
    let overall = ErrorSummary::from_errors(samples.iter().filter_map(|s| s.error));
    let boundary = ErrorSummary::from_errors(
        samples
            .iter()
            .filter(|s| s.boundary)
            .filter_map(|s| s.error),
    );
    Ok(EvalReport {
        head,
        n_step,
        samples,
        indeterminate,
        overall,
        boundary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::dataset::generate_dataset;

    #[test]
    fn summary_basics() {
        let s = ErrorSummary::from_errors([0.3, 0.1, 0.2, 0.4]);
        assert_eq!(s.count, 4);
        assert!((s.median - 0.25).abs() < 1e-15);
        assert!((s.mean - 0.25).abs() < 1e-15);
        assert_eq!(s.max, 0.4);
        let s = ErrorSummary::from_errors([0.5, 0.01, 0.2]);
        assert_eq!(s.median, 0.2);
        // 0.01 rad = 0.57 deg; 0.2 rad = 11.5 deg
        assert!((s.within_2deg - 1.0 / 3.0).abs() < 1e-15);
        assert!((s.within_10deg - 1.0 / 3.0).abs() < 1e-15);
        assert!(ErrorSummary::from_errors([]).median.is_nan());
    }

    #[test]
    fn summary_is_order_independent() {
        let a = ErrorSummary::from_errors([0.3, 0.1, 0.2, 0.05, 0.7]);
        let b = ErrorSummary::from_errors([0.7, 0.05, 0.2, 0.1, 0.3]);
        assert_eq!(a, b);
    }

    #[test]
    fn perfect_predictions_score_zero() {
        let data = generate_dataset(300, 0.3, 0.0, 1).unwrap();
        for head in Head::ALL {
            let r = evaluate_with(head, 3, &data, |s| head.target(s.target_theta, 3)).unwrap();
            assert_eq!(r.indeterminate, 0);
            assert!(r.overall.max < 1e-9, "{head}: {}", r.overall.max);
            assert_eq!(r.overall.within_2deg, 1.0);
        }
    }

    #[test]
    fn indeterminate_is_counted() {
        let data = generate_dataset(10, 0.0, 0.0, 1).unwrap();
        let r = evaluate_with(Head::Psc, 3, &data, |_| Ok(vec![0.0; 3])).unwrap();
        assert_eq!(r.indeterminate, 10);
        assert_eq!(r.overall.count, 0);
    }

    #[test]
    fn squares_scored_modulo_quarter_turn() {
        let data = generate_dataset(50, 1.0, 0.0, 2).unwrap();
        // Predict the orientation a quarter turn away: same square.
        let r = evaluate_with(Head::Naive, 3, &data, |s| {
            Ok(vec![s.target_theta + FRAC_PI_2])
        })
        .unwrap();
        assert!(r.overall.max < 1e-12);
        assert!(r
            .samples
            .iter()
            .all(|s| s.error.unwrap() <= std::f64::consts::PI / 4.0));
    }
}
