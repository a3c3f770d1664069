//! Next-hop selection.
//!
//! The TCEER router scores every eligible one-hop candidate with its node
//! potential and forwards to the best one. The greedy router is the
//! comparison baseline: it ignores trust, congestion and energy and simply
//! picks the candidate closest to the base station.

use std::fmt;

use crate::error::ConfigError;
use crate::flc::MetricControllers;
use crate::metrics::{self, CongestionParams, MetricWeights};
use crate::topology::{NodeId, Topology};

/// Read access to the network state that routing decisions depend on.
pub trait NetworkView {
    fn topology(&self) -> &Topology;
    fn is_alive(&self, id: NodeId) -> bool;
    fn is_blocked(&self, id: NodeId) -> bool;
    fn residual_energy(&self, id: NodeId) -> f64;
    fn queue_len(&self, id: NodeId) -> u32;
    /// Overall trust of `observer` in `subject`.
    fn trust(&self, observer: NodeId, subject: NodeId) -> f64;
}

/// Weights of EDM (`alpha`) and TCM (`beta`) in the node potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodePotentialWeights {
    pub alpha: f64,
    pub beta: f64,
}

impl NodePotentialWeights {
    pub fn new(alpha: f64, beta: f64) -> Result<Self, ConfigError> {
        if alpha < 0.0 || beta < 0.0 || ((alpha + beta) - 1.0).abs() > 1e-9 {
            return Err(ConfigError::invalid(
                "alpha/beta",
                format!("weights must be non-negative and sum to 1, got {alpha} + {beta}"),
            ));
        }
        Ok(Self { alpha, beta })
    }
}

impl Default for NodePotentialWeights {
    fn default() -> Self {
        Self { alpha: 0.3, beta: 0.7 }
    }
}

/// `(alpha * edm + beta * tcm) / (alpha + beta)`.
pub fn node_potential(edm: f64, tcm: f64, weights: &NodePotentialWeights) -> f64 {
    (weights.alpha * edm + weights.beta * tcm) / (weights.alpha + weights.beta)
}

/// Constants the TCEER scoring pipeline needs besides the controllers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoutingParams {
    pub congestion: CongestionParams,
    pub metric_weights: MetricWeights,
    pub potential_weights: NodePotentialWeights,
    pub e_initial: f64,
}

impl Default for RoutingParams {
    fn default() -> Self {
        Self {
            congestion: CongestionParams::default(),
            metric_weights: MetricWeights::default(),
            potential_weights: NodePotentialWeights::default(),
            e_initial: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NextHop {
    Node(NodeId),
    /// Base station is in range; transmit directly.
    Deliver,
    /// No eligible candidate.
    Void,
}

/// Every intermediate value behind one candidate's node potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateScore {
    pub candidate: NodeId,
    pub trust: f64,
    pub cci: f64,
    pub energy_metric: f64,
    pub distance_metric: f64,
    pub tcm: f64,
    pub edm: f64,
    pub potential: f64,
}

/// Alive, unblocked one-hop neighbors of `current` strictly closer to the
/// base station than `current`, in ascending id order.
pub fn eligible_candidates<V: NetworkView + ?Sized>(view: &V, current: NodeId) -> Vec<NodeId> {
    let topo = view.topology();
    let own = topo.distance_to_bs(current);
    topo.one_hop_neighbors(current)
        .iter()
        .copied()
        .filter(|&j| view.is_alive(j) && !view.is_blocked(j) && topo.distance_to_bs(j) < own)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RouterKind {
    Tceer,
    Greedy,
}

impl fmt::Display for RouterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RouterKind::Tceer => "tceer",
            RouterKind::Greedy => "greedy",
        })
    }
}

#[derive(Debug, Clone)]
pub struct Router {
    kind: RouterKind,
    params: RoutingParams,
    controllers: MetricControllers,
}

impl Router {
    pub fn tceer(params: RoutingParams, controllers: MetricControllers) -> Self {
        Self {
            kind: RouterKind::Tceer,
            params,
            controllers,
        }
    }

    pub fn greedy(params: RoutingParams) -> Self {
        Self {
            kind: RouterKind::Greedy,
            params,
            controllers: MetricControllers::default(),
        }
    }

    pub fn kind(&self) -> RouterKind {
        self.kind
    }

    pub fn params(&self) -> &RoutingParams {
        &self.params
    }

    /// Scores `candidate` as a next hop from `current`. The candidate must
    /// not coincide with the base station position of `current`.
    pub fn score<V: NetworkView + ?Sized>(&self, view: &V, current: NodeId, candidate: NodeId) -> CandidateScore {
        let topo = view.topology();
        let p = &self.params;
        let trust = view.trust(current, candidate);
        let cci = metrics::cci(f64::from(view.queue_len(candidate)), &p.congestion);
        let energy_metric = metrics::effective_residual_energy(
            view.residual_energy(current),
            view.residual_energy(candidate),
            p.metric_weights.omega,
            p.e_initial,
        );
        let (d1, d2) = metrics::distance_ratios(
            topo.position(current),
            topo.position(candidate),
            topo.base_station(),
            topo.radio_range(),
        )
        .unwrap_or((1.0, 1.0));
        let distance_metric = metrics::distance_metric(d1, d2, p.metric_weights.k1, p.metric_weights.k2);
        let tcm = self.controllers.tcm(trust, cci);
        let edm = self.controllers.edm(energy_metric, distance_metric);
        CandidateScore {
            candidate,
            trust,
            cci,
            energy_metric,
            distance_metric,
            tcm,
            edm,
            potential: node_potential(edm, tcm, &p.potential_weights),
        }
    }

    /// Deliver when the base station is in range; otherwise the best
    /// eligible candidate (ties to the lowest id), or `Void`.
    pub fn select_next_hop<V: NetworkView + ?Sized>(&self, view: &V, current: NodeId) -> NextHop {
        let topo = view.topology();
        if topo.bs_in_range(current) {
            return NextHop::Deliver;
        }
        let candidates = eligible_candidates(view, current);
        let best = match self.kind {
            RouterKind::Tceer => {
                let mut best: Option<(NodeId, f64)> = None;
                for &c in &candidates {
                    let np = self.score(view, current, c).potential;
                    if best.is_none_or(|(_, b)| np > b) {
                        best = Some((c, np));
                    }
                }
                best.map(|(c, _)| c)
            }
            RouterKind::Greedy => {
                let mut best: Option<(NodeId, f64)> = None;
                for &c in &candidates {
                    let d = topo.distance_to_bs(c);
                    if best.is_none_or(|(_, b)| d < b) {
                        best = Some((c, d));
                    }
                }
                best.map(|(c, _)| c)
            }
        };
        best.map_or(NextHop::Void, NextHop::Node)
    }
}
