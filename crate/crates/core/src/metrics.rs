//! Crisp inputs for the fuzzy controllers: congestion index, effective
//! residual energy and the complementary-distance metric.

use crate::error::{ConfigError, MetricsError};
use crate::topology::{distance, Position};

/// Queue-length thresholds for the congestion index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CongestionParams {
    pub c_th_min: f64,
    pub c_th_max: f64,
    pub epsilon: f64,
}

impl CongestionParams {
    pub fn new(c_th_min: f64, c_th_max: f64, epsilon: f64) -> Result<Self, ConfigError> {
        if !(c_th_min >= 0.0 && c_th_min < c_th_max) {
            return Err(ConfigError::invalid(
                "c_th_min/c_th_max",
                format!("need 0 <= c_th_min < c_th_max, got {c_th_min} and {c_th_max}"),
            ));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(ConfigError::invalid(
                "epsilon",
                format!("must lie in (0, 1), got {epsilon}"),
            ));
        }
        Ok(Self {
            c_th_min,
            c_th_max,
            epsilon,
        })
    }
}

impl Default for CongestionParams {
    fn default() -> Self {
        Self {
            c_th_min: 10.0,
            c_th_max: 40.0,
            epsilon: 0.05,
        }
    }
}

/// Weights for the energy (`omega`) and distance (`k1`, `k2`) metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricWeights {
    pub omega: f64,
    pub k1: f64,
    pub k2: f64,
}

impl MetricWeights {
    pub fn new(omega: f64, k1: f64, k2: f64) -> Result<Self, ConfigError> {
        if !(0.0..=1.0).contains(&omega) {
            return Err(ConfigError::invalid(
                "omega",
                format!("must lie in [0, 1], got {omega}"),
            ));
        }
        if !(k1 > 0.0 && k1.is_finite()) {
            return Err(ConfigError::invalid("k1", format!("must be positive, got {k1}")));
        }
        if !(k2 > 0.0 && k2.is_finite()) {
            return Err(ConfigError::invalid("k2", format!("must be positive, got {k2}")));
        }
        Ok(Self { omega, k1, k2 })
    }
}

impl Default for MetricWeights {
    fn default() -> Self {
        Self {
            omega: 0.2,
            k1: 2.0,
            k2: 3.0,
        }
    }
}

/// Congestion index `I_k` in `[epsilon, 1]`. The linear branch is closed on
/// both thresholds, where it meets the constant branches.
pub fn congestion_index(queue_len: f64, params: &CongestionParams) -> f64 {
    let CongestionParams {
        c_th_min,
        c_th_max,
        epsilon,
    } = *params;
    if queue_len < c_th_min {
        epsilon
    } else if queue_len > c_th_max {
        1.0
    } else {
        (1.0 - epsilon) * ((queue_len - c_th_min) / (c_th_max - c_th_min)) + epsilon
    }
}

/// Complementary congestion index `1 - I_k`; high means uncongested.
pub fn cci(queue_len: f64, params: &CongestionParams) -> f64 {
    1.0 - congestion_index(queue_len, params)
}

/// `omega * e_cn + (1 - omega) * e_pnn`, normalized by the initial energy.
pub fn effective_residual_energy(e_cn: f64, e_pnn: f64, omega: f64, e_initial: f64) -> f64 {
    let e_er = omega * e_cn + (1.0 - omega) * e_pnn;
    (e_er / e_initial).clamp(0.0, 1.0)
}

/// `(d1, d2)`: hop length over radio range, and candidate-to-BS distance
/// over current-to-BS distance.
pub fn distance_ratios(
    current: Position,
    candidate: Position,
    bs: Position,
    radio_range: f64,
) -> Result<(f64, f64), MetricsError> {
    let current_to_bs = distance(current, bs);
    if current_to_bs == 0.0 {
        return Err(MetricsError::AtBaseStation);
    }
    let d1 = distance(current, candidate) / radio_range;
    let d2 = distance(candidate, bs) / current_to_bs;
    Ok((d1, d2))
}

/// Weighted mean of the complementary distances `1 - d1` and `1 - d2`.
pub fn distance_metric(d1: f64, d2: f64, k1: f64, k2: f64) -> f64 {
    (k1 * (1.0 - d1) + k2 * (1.0 - d2)) / (k1 + k2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params() -> CongestionParams {
        CongestionParams::new(10.0, 40.0, 0.05).unwrap()
    }

    #[test]
    fn congestion_index_branches() {
        let p = params();
        assert_eq!(congestion_index(2.0, &p), 0.05);
        assert_eq!(congestion_index(10.0, &p), 0.05);
        assert!((congestion_index(25.0, &p) - 0.525).abs() < 1e-12);
        assert_eq!(congestion_index(40.0, &p), 1.0);
        assert_eq!(congestion_index(41.0, &p), 1.0);
    }

    #[test]
    fn cci_examples() {
        let p = params();
        assert!((cci(0.0, &p) - 0.95).abs() < 1e-12);
        assert_eq!(cci(45.0, &p), 0.0);
        assert!((cci(25.0, &p) - 0.475).abs() < 1e-12);
    }

    #[test]
    fn energy_examples() {
        assert_eq!(effective_residual_energy(0.5, 0.5, 0.37, 0.5), 1.0);
        assert!((effective_residual_energy(0.5, 0.0, 0.2, 0.5) - 0.2).abs() < 1e-12);
        assert_eq!(effective_residual_energy(0.0, 0.0, 0.2, 0.5), 0.0);
    }

    #[test]
    fn distance_ratio_examples() {
        let bs = Position::new(100.0, 100.0);
        let cur = Position::new(100.0, 0.0);
        assert_eq!(distance_ratios(cur, cur, bs, 50.0).unwrap(), (0.0, 1.0));
        let (d1, d2) = distance_ratios(cur, Position::new(100.0, 25.0), bs, 50.0).unwrap();
        assert!((d1 - 0.5).abs() < 1e-12 && (d2 - 0.75).abs() < 1e-12);
        let (_, d2) = distance_ratios(Position::new(100.0, 60.0), bs, bs, 50.0).unwrap();
        assert_eq!(d2, 0.0);
        assert_eq!(distance_ratios(bs, cur, bs, 50.0), Err(MetricsError::AtBaseStation));
    }

    #[test]
    fn distance_metric_examples() {
        assert_eq!(distance_metric(0.0, 0.0, 2.0, 3.0), 1.0);
        assert!((distance_metric(0.5, 0.75, 2.0, 3.0) - 0.35).abs() < 1e-12);
        assert!(distance_metric(1.0, 1.0 - 1e-12, 2.0, 3.0) < 1e-11);
    }

    #[test]
    fn parameter_validation() {
        assert!(CongestionParams::new(40.0, 10.0, 0.05).is_err());
        assert!(CongestionParams::new(10.0, 40.0, 0.0).is_err());
        assert!(MetricWeights::new(1.5, 2.0, 3.0).is_err());
        assert!(MetricWeights::new(0.2, 0.0, 3.0).is_err());
    }

    proptest! {
        #[test]
        fn congestion_is_monotone_and_complemented(a in 0.0..60.0f64, b in 0.0..60.0f64) {
            let p = params();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(congestion_index(lo, &p) <= congestion_index(hi, &p));
            prop_assert_eq!(cci(a, &p) + congestion_index(a, &p), 1.0);
            let i = congestion_index(a, &p);
            prop_assert!((p.epsilon..=1.0).contains(&i));
        }

        #[test]
        fn energy_bounded_and_monotone(a in 0.0..=0.5f64, b in 0.0..=0.5f64, bump in 0.0..0.1f64, w in 0.0..=1.0f64) {
            let e = effective_residual_energy(a, b, w, 0.5);
            prop_assert!((0.0..=1.0).contains(&e));
            let a2 = (a + bump).min(0.5);
            let b2 = (b + bump).min(0.5);
            prop_assert!(effective_residual_energy(a2, b, w, 0.5) >= e - 1e-15);
            prop_assert!(effective_residual_energy(a, b2, w, 0.5) >= e - 1e-15);
        }

        #[test]
        fn distance_metric_monotone_and_scale_free(
            d1 in 0.0..=1.0f64, d2 in 0.0..1.0f64, bump in 0.0..0.5f64, scale in 0.01..100.0f64,
        ) {
            let m = distance_metric(d1, d2, 2.0, 3.0);
            prop_assert!(distance_metric((d1 + bump).min(1.0), d2, 2.0, 3.0) <= m + 1e-15);
            prop_assert!(distance_metric(d1, (d2 + bump).min(1.0), 2.0, 3.0) <= m + 1e-15);
            prop_assert!((distance_metric(d1, d2, 2.0 * scale, 3.0 * scale) - m).abs() < 1e-12);
        }
    }
}
