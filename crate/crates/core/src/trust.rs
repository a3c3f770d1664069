//! Behavioral trust: direct trust from observed metrics, indirect trust from
//! neighbor recommendations, their weighted combination, and permanent
//! blocking of nodes that fall below the trust threshold.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{ConfigError, TrustError};
use crate::topology::{NodeId, Topology};

/// Lower bound applied to the remaining-energy metric so that an honest but
/// depleted node is not annihilated by the geometric mean.
pub const ENERGY_METRIC_FLOOR: f64 = 0.01;

/// Indirect trust used when no recommender has an opinion.
pub const NEUTRAL_INDIRECT_TRUST: f64 = 0.5;

const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

/// Geometric mean of the metrics. Result is clamped to `[min, max]` of the
/// inputs so that rounding cannot push it outside.
fn geometric_mean(values: &[f64]) -> f64 {
    let product: f64 = values.iter().product();
    if product == 0.0 {
        return 0.0;
    }
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    product.powf(1.0 / values.len() as f64).clamp(lo, hi)
}

/// Direct trust: geometric mean of `k >= 1` trust metrics in `[0, 1]`.
pub fn direct_trust(metrics: &[f64]) -> Result<f64, TrustError> {
    if metrics.is_empty() {
        return Err(TrustError::NoTrustMetrics);
    }
    if let Some(&bad) = metrics.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(TrustError::OutOfRange(bad));
    }
    Ok(geometric_mean(metrics))
}

/// Indirect trust: geometric mean of recommenders' direct trusts, or the
/// neutral prior when there are none.
pub fn indirect_trust(recommendations: &[f64]) -> f64 {
    if recommendations.is_empty() {
        NEUTRAL_INDIRECT_TRUST
    } else {
        geometric_mean(recommendations)
    }
}

/// Weights of direct and indirect trust; they must sum to one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrustWeights {
    direct: f64,
    indirect: f64,
}

impl TrustWeights {
    pub fn new(direct: f64, indirect: f64) -> Result<Self, ConfigError> {
        if direct < 0.0 || indirect < 0.0 || ((direct + indirect) - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(ConfigError::invalid(
                "w_d/w_i",
                format!("weights must be non-negative and sum to 1, got {direct} + {indirect}"),
            ));
        }
        Ok(Self { direct, indirect })
    }

    pub fn direct(&self) -> f64 {
        self.direct
    }

    pub fn indirect(&self) -> f64 {
        self.indirect
    }

    pub fn combine(&self, dt: f64, it: f64) -> f64 {
        (self.direct * dt + self.indirect * it).clamp(0.0, 1.0)
    }
}

impl Default for TrustWeights {
    fn default() -> Self {
        Self {
            direct: 0.7,
            indirect: 0.3,
        }
    }
}

/// Overall trust `w_d * dt + w_i * it`.
pub fn overall_trust(dt: f64, it: f64, w_d: f64, w_i: f64) -> Result<f64, ConfigError> {
    Ok(TrustWeights::new(w_d, w_i)?.combine(dt, it))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Trusted,
    Malicious,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::Trusted => "trusted",
            Classification::Malicious => "malicious",
        })
    }
}

/// `Trusted` iff `t >= threshold`.
pub fn classify(t: f64, threshold: f64) -> Classification {
    if t >= threshold {
        Classification::Trusted
    } else {
        Classification::Malicious
    }
}

/// Watchdog counters one observer keeps about one relay over a window.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BehaviorCounters {
    /// Packets handed to the relay that it had to act on.
    pub accepted: u32,
    /// Packets the relay transmitted onward.
    pub forwarded: u32,
    /// Forwarded packets whose address fields were altered.
    pub modified: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrustMetricSample {
    pub forwarded_ratio: f64,
    pub address_integrity_ratio: f64,
    pub normalized_remaining_energy: f64,
}

impl TrustMetricSample {
    pub const PERFECT: Self = Self {
        forwarded_ratio: 1.0,
        address_integrity_ratio: 1.0,
        normalized_remaining_energy: 1.0,
    };

    /// Builds the three metrics from a window of counters and the subject's
    /// observed residual energy.
    pub fn from_observation(counters: &BehaviorCounters, residual_energy: f64, e_initial: f64) -> Self {
        let forwarded_ratio = if counters.accepted == 0 {
            1.0
        } else {
            counters.forwarded as f64 / counters.accepted as f64
        };
        let address_integrity_ratio = if counters.forwarded == 0 {
            1.0
        } else {
            1.0 - counters.modified as f64 / counters.forwarded as f64
        };
        let normalized_remaining_energy = (residual_energy / e_initial).clamp(ENERGY_METRIC_FLOOR, 1.0);
        Self {
            forwarded_ratio: forwarded_ratio.clamp(0.0, 1.0),
            address_integrity_ratio: address_integrity_ratio.clamp(0.0, 1.0),
            normalized_remaining_energy,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [
            self.forwarded_ratio,
            self.address_integrity_ratio,
            self.normalized_remaining_energy,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairTrust {
    pub sample: TrustMetricSample,
    pub direct: f64,
    pub indirect: f64,
    pub overall: f64,
    pub last_update_round: Option<u64>,
}

impl PairTrust {
    const INITIAL: Self = Self {
        sample: TrustMetricSample::PERFECT,
        direct: 1.0,
        indirect: 1.0,
        overall: 1.0,
        last_update_round: None,
    };
}

/// One line of a ledger export.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrustRecord {
    pub round: u64,
    pub observer: NodeId,
    pub subject: NodeId,
    pub direct: f64,
    pub indirect: f64,
    pub overall: f64,
    pub classification: Classification,
}

impl TrustRecord {
    pub const CSV_HEADER: &'static str = "round,observer,subject,dt,it,t,classification";
}

impl fmt::Display for TrustRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{},{},{},{}",
            self.round, self.observer, self.subject, self.direct, self.indirect, self.overall, self.classification
        )
    }
}

/// Per directed pair trust state plus the global blocked set.
#[derive(Debug, Clone)]
pub struct TrustLedger {
    pairs: BTreeMap<(NodeId, NodeId), PairTrust>,
    counters: BTreeMap<(NodeId, NodeId), BehaviorCounters>,
    weights: TrustWeights,
    threshold: f64,
    blocked: BTreeSet<NodeId>,
    blocked_round: Vec<Option<u64>>,
}

impl TrustLedger {
    /// Every neighbor pair starts fully trusted.
    pub fn new(topology: &Topology, weights: TrustWeights, threshold: f64) -> Self {
        let mut pairs = BTreeMap::new();
        for i in 0..topology.len() {
            for &j in topology.one_hop_neighbors(i) {
                pairs.insert((i, j), PairTrust::INITIAL);
            }
        }
        Self {
            pairs,
            counters: BTreeMap::new(),
            weights,
            threshold,
            blocked: BTreeSet::new(),
            blocked_round: vec![None; topology.len()],
        }
    }

    pub fn weights(&self) -> TrustWeights {
        self.weights
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Overall trust of `observer` in `subject`; 1.0 for pairs never recorded.
    pub fn trust(&self, observer: NodeId, subject: NodeId) -> f64 {
        self.pairs.get(&(observer, subject)).map_or(1.0, |p| p.overall)
    }

    pub fn pair(&self, observer: NodeId, subject: NodeId) -> Option<&PairTrust> {
        self.pairs.get(&(observer, subject))
    }

    pub fn is_blocked(&self, node: NodeId) -> bool {
        self.blocked.contains(&node)
    }

    pub fn blocked(&self) -> &BTreeSet<NodeId> {
        &self.blocked
    }

    /// Round in which `node` was blocked, if it has been.
    pub fn blocked_round(&self, node: NodeId) -> Option<u64> {
        self.blocked_round.get(node).copied().flatten()
    }

    pub fn counters(&self, observer: NodeId, subject: NodeId) -> BehaviorCounters {
        self.counters.get(&(observer, subject)).copied().unwrap_or_default()
    }

    /// Records that `relay`, handed a packet by `observer`, transmitted it
    /// onward; `modified` marks an altered address.
    pub fn record_forward(&mut self, observer: NodeId, relay: NodeId, modified: bool) {
        let c = self.counters.entry((observer, relay)).or_default();
        c.accepted += 1;
        c.forwarded += 1;
        if modified {
            c.modified += 1;
        }
    }

    /// Records that `relay` accepted a packet from `observer` and never
    /// transmitted it.
    pub fn record_drop(&mut self, observer: NodeId, relay: NodeId) {
        self.counters.entry((observer, relay)).or_default().accepted += 1;
    }

    /// Periodic trust update over the counters accumulated since the last
    /// call. Returns the nodes newly blocked in this update, ascending.
    ///
    /// Observers are alive, unblocked nodes; subjects are their alive,
    /// unblocked one-hop neighbors. Indirect trust for `(i, j)` is drawn
    /// from the direct trusts that `i`'s other qualifying neighbors computed
    /// for `j` in this same update.
    pub fn update(
        &mut self,
        topology: &Topology,
        alive: &[bool],
        residual_energy: &[f64],
        e_initial: f64,
        round: u64,
    ) -> Vec<NodeId> {
        let participates = |id: NodeId| alive[id] && !self.blocked.contains(&id);

        let mut direct: BTreeMap<(NodeId, NodeId), (TrustMetricSample, f64)> = BTreeMap::new();
        for i in (0..topology.len()).filter(|&i| participates(i)) {
            for &j in topology.one_hop_neighbors(i) {
                if !participates(j) {
                    continue;
                }
                let counters = self.counters(i, j);
                let sample = TrustMetricSample::from_observation(&counters, residual_energy[j], e_initial);
                let dt = geometric_mean(&sample.as_array());
                direct.insert((i, j), (sample, dt));
            }
        }
        self.counters.clear();

        let mut newly_blocked = BTreeSet::new();
        let mut recommendations = Vec::new();
        for (&(i, j), &(sample, dt)) in &direct {
            recommendations.clear();
            recommendations.extend(
                topology
                    .one_hop_neighbors(i)
                    .iter()
                    .filter(|&&r| r != j)
                    .filter_map(|&r| direct.get(&(r, j)).map(|&(_, dt)| dt)),
            );
            let it = indirect_trust(&recommendations);
            let overall = self.weights.combine(dt, it);
            self.pairs.insert(
                (i, j),
                PairTrust {
                    sample,
                    direct: dt,
                    indirect: it,
                    overall,
                    last_update_round: Some(round),
                },
            );
            if classify(overall, self.threshold) == Classification::Malicious {
                newly_blocked.insert(j);
            }
        }

        for &j in &newly_blocked {
            self.blocked.insert(j);
            self.blocked_round[j] = Some(round);
        }
        newly_blocked.into_iter().collect()
    }

    /// Records for pairs refreshed in `round`.
    pub fn records_for_round(&self, round: u64) -> Vec<TrustRecord> {
        self.pairs
            .iter()
            .filter(|(_, p)| p.last_update_round == Some(round))
            .map(|(&(observer, subject), p)| self.record(round, observer, subject, p))
            .collect()
    }

    /// Every stored pair, stamped with `round`.
    pub fn snapshot(&self, round: u64) -> Vec<TrustRecord> {
        self.pairs
            .iter()
            .map(|(&(observer, subject), p)| self.record(round, observer, subject, p))
            .collect()
    }

    fn record(&self, round: u64, observer: NodeId, subject: NodeId, p: &PairTrust) -> TrustRecord {
        TrustRecord {
            round,
            observer,
            subject,
            direct: p.direct,
            indirect: p.indirect,
            overall: p.overall,
            classification: classify(p.overall, self.threshold),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{Field, Position};
    use proptest::prelude::*;

    const TOL: f64 = 1e-12;

    #[test]
    fn direct_trust_examples() {
        assert_eq!(direct_trust(&[1.0, 1.0, 1.0]).unwrap(), 1.0);
        assert!((direct_trust(&[0.9, 0.4, 0.6]).unwrap() - 0.6).abs() < TOL);
        assert_eq!(direct_trust(&[0.0, 0.9, 0.9]).unwrap(), 0.0);
        assert_eq!(direct_trust(&[]), Err(TrustError::NoTrustMetrics));
        assert_eq!(direct_trust(&[1.2]), Err(TrustError::OutOfRange(1.2)));
    }

    #[test]
    fn indirect_trust_examples() {
        assert!((indirect_trust(&[0.5, 0.5]) - 0.5).abs() < TOL);
        assert!((indirect_trust(&[0.8, 0.2]) - 0.4).abs() < TOL);
        assert_eq!(indirect_trust(&[]), 0.5);
    }

    #[test]
    fn overall_trust_examples() {
        assert!((overall_trust(0.8, 0.6, 0.5, 0.5).unwrap() - 0.7).abs() < TOL);
        assert_eq!(overall_trust(0.3, 0.9, 1.0, 0.0).unwrap(), 0.3);
        assert!((overall_trust(0.42, 0.42, 0.7, 0.3).unwrap() - 0.42).abs() < TOL);
        let err = overall_trust(0.5, 0.5, 0.7, 0.4).unwrap_err();
        assert!(err.to_string().contains("w_d/w_i"));
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify(0.7, 0.5), Classification::Trusted);
        assert_eq!(classify(0.3, 0.5), Classification::Malicious);
        assert_eq!(classify(0.5, 0.5), Classification::Trusted);
    }

    #[test]
    fn sample_defaults_and_floor() {
        let s = TrustMetricSample::from_observation(&BehaviorCounters::default(), 0.5, 0.5);
        assert_eq!(s, TrustMetricSample::PERFECT);
        let depleted = TrustMetricSample::from_observation(&BehaviorCounters::default(), 0.0, 0.5);
        assert_eq!(depleted.normalized_remaining_energy, ENERGY_METRIC_FLOOR);
        let c = BehaviorCounters {
            accepted: 4,
            forwarded: 2,
            modified: 1,
        };
        let s = TrustMetricSample::from_observation(&c, 0.25, 0.5);
        assert_eq!(s.as_array(), [0.5, 0.5, 0.5]);
    }

    fn triangle() -> Topology {
        // Three mutually adjacent nodes.
        Topology::from_positions(
            vec![
                Position::new(0.0, 0.0),
                Position::new(10.0, 0.0),
                Position::new(5.0, 5.0),
            ],
            Position::new(100.0, 100.0),
            50.0,
            Field::new(200.0, 200.0),
        )
        .unwrap()
    }

    #[test]
    fn perfect_behavior_stays_trusted() {
        let topo = triangle();
        let mut ledger = TrustLedger::new(&topo, TrustWeights::default(), 0.5);
        ledger.record_forward(0, 1, false);
        let blocked = ledger.update(&topo, &[true; 3], &[0.5; 3], 0.5, 5);
        assert!(blocked.is_empty());
        let p = ledger.pair(0, 1).unwrap();
        assert_eq!(p.sample, TrustMetricSample::PERFECT);
        assert_eq!(p.direct, 1.0);
        assert_eq!(classify(p.overall, 0.5), Classification::Trusted);
    }

    #[test]
    fn total_dropper_is_blocked_permanently() {
        let topo = triangle();
        let mut ledger = TrustLedger::new(&topo, TrustWeights::default(), 0.5);
        ledger.record_drop(0, 1);
        ledger.record_drop(0, 1);
        let blocked = ledger.update(&topo, &[true; 3], &[0.5; 3], 0.5, 5);
        assert_eq!(blocked, vec![1]);
        let p = ledger.pair(0, 1).unwrap();
        assert_eq!(p.direct, 0.0);
        // The other neighbor saw nothing bad, so it recommends full trust.
        assert_eq!(p.indirect, 1.0);
        assert!((p.overall - 0.3).abs() < TOL);
        assert_eq!(ledger.blocked_round(1), Some(5));

        // A clean window later does not re-admit the node.
        let again = ledger.update(&topo, &[true; 3], &[0.5; 3], 0.5, 10);
        assert!(again.is_empty());
        assert!(ledger.is_blocked(1));
        // Blocked nodes neither observe nor are observed any more.
        assert_eq!(ledger.pair(0, 1).unwrap().last_update_round, Some(5));
        assert_eq!(ledger.pair(1, 0).unwrap().last_update_round, Some(5));
    }

    #[test]
    fn indirect_trust_without_recommenders_is_neutral() {
        let topo = Topology::from_positions(
            vec![Position::new(0.0, 0.0), Position::new(10.0, 0.0)],
            Position::new(100.0, 100.0),
            50.0,
            Field::new(200.0, 200.0),
        )
        .unwrap();
        let mut ledger = TrustLedger::new(&topo, TrustWeights::default(), 0.5);
        ledger.update(&topo, &[true; 2], &[0.5; 2], 0.5, 0);
        let p = ledger.pair(0, 1).unwrap();
        assert_eq!(p.indirect, NEUTRAL_INDIRECT_TRUST);
        assert!((p.overall - 0.85).abs() < TOL);
    }

    #[test]
    fn snapshot_lines() {
        let topo = triangle();
        let mut ledger = TrustLedger::new(&topo, TrustWeights::default(), 0.5);
        ledger.update(&topo, &[true; 3], &[0.5; 3], 0.5, 0);
        let recs = ledger.records_for_round(0);
        assert_eq!(recs.len(), 6);
        assert_eq!(recs[0].to_string(), "0,0,1,1,1,1,trusted");
    }

    proptest! {
        #[test]
        fn geometric_mean_is_bounded_and_order_free(v in prop::collection::vec(0.0..=1.0f64, 1..8), seed in any::<u64>()) {
            let g = direct_trust(&v).unwrap();
            let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(g >= lo && g <= hi);
            let mut shuffled = v.clone();
            shuffled.rotate_left((seed as usize) % v.len());
            prop_assert!((direct_trust(&shuffled).unwrap() - g).abs() < 1e-12);
        }

        #[test]
        fn overall_trust_monotone(dt in 0.0..=1.0f64, it in 0.0..=1.0f64, bump in 0.0..0.5f64, wd in 0.0..=1.0f64) {
            let w = TrustWeights::new(wd, 1.0 - wd).unwrap();
            let t = w.combine(dt, it);
            prop_assert!((0.0..=1.0).contains(&t));
            prop_assert!(w.combine((dt + bump).min(1.0), it) >= t);
            prop_assert!(w.combine(dt, (it + bump).min(1.0)) >= t);
        }
    }
}
