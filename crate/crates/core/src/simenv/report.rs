//! Prediction-versus-measurement error summaries.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::estimator::SlowdownModel;
use crate::profile::JobProfile;
use crate::scalar::Scalar;
use crate::space::ConfigSpace;

use super::oracle::OracleParams;
use super::policy::{run_policy, Policy, PolicyOutcome};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorRow {
    pub set: usize,
    pub jobs: String,
    pub predicted_s: f64,
    pub measured_s: f64,
    /// `100 * (predicted - measured) / measured`.
    pub error_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    pub rows: Vec<ErrorRow>,
    pub total: ErrorRow,
}

fn signed_pct(predicted: f64, measured: f64) -> f64 {
    if predicted == measured {
        0.0
    } else {
        100.0 * (predicted - measured) / measured
    }
}

/// Schedules `queue` with `model` and compares each set's predicted time with the oracle's.
pub fn estimation_error_report<T: Scalar, M: SlowdownModel<T> + ?Sized>(
    model: &M,
    oracle: &OracleParams,
    queue: &[JobProfile<T>],
    space: &ConfigSpace,
) -> Result<ErrorReport> {
    let o: PolicyOutcome<T> = run_policy(Policy::Coschedule, queue, space, model, oracle)?;
    let rows = o
        .sets
        .iter()
        .map(|s| {
            let (p, m) = (s.predicted_s.as_f64(), s.measured_s.as_f64());
            ErrorRow {
                set: s.index,
                jobs: s.jobs.join("+"),
                predicted_s: p,
                measured_s: m,
                error_pct: signed_pct(p, m),
            }
        })
        .collect();
    let (p, m) = (o.total_predicted.as_f64(), o.total_measured.as_f64());
    Ok(ErrorReport {
        rows,
        total: ErrorRow {
            set: o.sets.len(),
            jobs: "total".into(),
            predicted_s: p,
            measured_s: m,
            error_pct: signed_pct(p, m),
        },
    })
}

impl ErrorReport {
    /// Columns `set, jobs, predicted_s, measured_s, error_pct`; the last row is the total.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in self.rows.iter().chain([&self.total]) {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Regression metrics of predictions against targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelMetrics {
    pub n: usize,
    pub mse: f64,
    pub mae: f64,
    pub max_abs_error: f64,
    /// Mean of `|predicted - target| / target`.
    pub mare: f64,
}

pub fn model_metrics(pairs: impl IntoIterator<Item = (f64, f64)>) -> ModelMetrics {
    let mut m = ModelMetrics {
        n: 0,
        mse: 0.0,
        mae: 0.0,
        max_abs_error: 0.0,
        mare: 0.0,
    };
    for (pred, target) in pairs {
        let e = (pred - target).abs();
        m.n += 1;
        m.mse += e * e;
        m.mae += e;
        m.mare += e / target.abs();
        m.max_abs_error = m.max_abs_error.max(e);
    }
    if m.n > 0 {
        let n = m.n as f64;
        m.mse /= n;
        m.mae /= n;
        m.mare /= n;
    }
    m
}
