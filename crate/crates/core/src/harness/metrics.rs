//! Per-interval metrics rows and the windowed-max summary.

use std::fmt::Write as _;

/// Evaluations averaged by [`windowed_metric`].
pub const METRIC_WINDOW: usize = 5;

pub const METRICS_HEADER: &str =
    "step,train_episode_return,eval_return_mean,loss_td,loss_inner_sum,loss_base,exploration_value";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRow {
    pub step: u64,
    /// Mean unscaled return of training episodes finished in the interval;
    /// NaN when none finished.
    pub train_episode_return: f64,
    pub eval_return_mean: f64,
    /// Losses averaged over the updates in the interval.
    pub loss_td: f64,
    pub loss_inner_sum: f64,
    pub loss_base: f64,
    pub exploration_value: f64,
}

/// Header plus one line per row. Floats use the shortest round-trip form,
/// so equal runs give byte-identical files.
pub fn metrics_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.step,
            r.train_episode_return,
            r.eval_return_mean,
            r.loss_td,
            r.loss_inner_sum,
            r.loss_base,
            r.exploration_value
        )
        .expect("writing to a String cannot fail");
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowedMetric {
    pub value: f64,
    /// Fewer evaluations than one window; `value` is their plain mean.
    pub partial: bool,
}

/// Maximum over training of the mean of [`METRIC_WINDOW`] consecutive
/// evaluation returns.
pub fn windowed_metric(eval_points: &[(u64, f64)]) -> WindowedMetric {
    let returns: Vec<f64> = eval_points.iter().map(|p| p.1).collect();
    if returns.len() < METRIC_WINDOW {
        let value = if returns.is_empty() {
            f64::NAN
        } else {
            returns.iter().sum::<f64>() / returns.len() as f64
        };
        return WindowedMetric {
            value,
            partial: true,
        };
    }
    let value = returns
        .windows(METRIC_WINDOW)
        .map(|w| w.iter().sum::<f64>() / METRIC_WINDOW as f64)
        .fold(f64::NEG_INFINITY, f64::max);
    WindowedMetric {
        value,
        partial: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn points(rs: &[f64]) -> Vec<(u64, f64)> {
        rs.iter()
            .enumerate()
            .map(|(i, &r)| ((i as u64 + 1) * 5000, r))
            .collect()
    }

    #[test]
    fn examples() {
        assert_eq!(
            windowed_metric(&points(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0])).value,
            4.0
        );
        assert_eq!(windowed_metric(&points(&[2.5; 9])).value, 2.5);
        assert_eq!(
            windowed_metric(&points(&[0.0, 0.0, 10.0, 0.0, 0.0, 0.0, 0.0])).value,
            2.0
        );
    }

    #[test]
    fn short_series_is_flagged_mean() {
        let m = windowed_metric(&points(&[1.0, 3.0]));
        assert_eq!(
            m,
            WindowedMetric {
                value: 2.0,
                partial: true
            }
        );
    }

    #[test]
    fn csv_layout() {
        let row = MetricsRow {
            step: 5000,
            train_episode_return: 0.5,
            eval_return_mean: 1.0,
            loss_td: 0.25,
            loss_inner_sum: 0.0,
            loss_base: 1e-7,
            exploration_value: 0.1,
        };
        assert_eq!(
            metrics_csv(&[row]),
            format!("{METRICS_HEADER}\n5000,0.5,1,0.25,0,0.0000001,0.1\n")
        );
    }

    proptest! {
        #[test]
        fn low_appends_do_not_change_metric(
            rs in prop::collection::vec(-10.0f64..10.0, 5..30),
            extra in prop::collection::vec(0.0f64..1.0, 1..10),
        ) {
            let before = windowed_metric(&points(&rs)).value;
            let floor = rs.iter().cloned().fold(f64::INFINITY, f64::min);
            let mut longer = rs.clone();
            // Anything at or below the smallest return cannot lift a window
            // above the best one.
            longer.extend(extra.iter().map(|e| floor - e));
            let after = windowed_metric(&points(&longer)).value;
            prop_assert!(after <= before + 1e-12);
            prop_assert!(after >= before - 1e-12);
        }
    }
}
