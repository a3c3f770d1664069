//! Round-based simulation driver.
//!
//! One generator (ChaCha8, seeded from `SimConfig::seed`) drives the whole
//! run. Draws are consumed in this order:
//!
//! 1. deployment: x then y for each node, ascending id (skipped when a
//!    topology file is given);
//! 2. attacker selection when `malicious_count` is used;
//! 3. per round: the source sample, then one Bernoulli draw each time an
//!    attacker handles a packet, in routing order.
//!
//! A round routes one packet from each selected source, drains every
//! buffer by `service_rate`, charges idle energy, and runs the trust update
//! when `round % trust_interval == 0`.

use std::collections::BTreeSet;
use std::fmt;

use rand::seq::index;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{AttackKind, SimConfig};
use crate::error::{ConfigError, SimError};
use crate::radio::RadioModel;
use crate::routing::{NetworkView, NextHop, Router, RouterKind};
use crate::topology::{NodeId, Position, Topology};
use crate::trust::{TrustLedger, TrustRecord};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Behavior {
    Honest,
    Dropper { p_drop: f64 },
    Modifier { p_modify: f64 },
}

impl Behavior {
    pub fn is_malicious(&self) -> bool {
        !matches!(self, Behavior::Honest)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    pub id: NodeId,
    pub position: Position,
    pub residual_energy: f64,
    pub queue_len: u32,
    pub capacity: u32,
    pub alive: bool,
    pub behavior: Behavior,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RouteOutcome {
    Delivered,
    DroppedVoid,
    DroppedMalicious,
    DroppedOverflow,
    DroppedDeadNode,
}

impl fmt::Display for RouteOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RouteOutcome::Delivered => "delivered",
            RouteOutcome::DroppedVoid => "dropped_void",
            RouteOutcome::DroppedMalicious => "dropped_malicious",
            RouteOutcome::DroppedOverflow => "dropped_overflow",
            RouteOutcome::DroppedDeadNode => "dropped_dead_node",
        })
    }
}

/// Path of one packet. `hops` starts at the source and lists every node
/// that received the packet; a delivered packet ends at the base station.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RouteTrace {
    pub packet_id: u64,
    pub round: u64,
    pub source: NodeId,
    pub hops: Vec<NodeId>,
    pub outcome: RouteOutcome,
}

impl RouteTrace {
    /// `hop1>hop2>...>BS`
    pub fn path_string(&self) -> String {
        let mut s = self.hops.iter().map(ToString::to_string).collect::<Vec<_>>().join(">");
        if self.outcome == RouteOutcome::Delivered {
            s.push_str(">BS");
        }
        s
    }
}

impl fmt::Display for RouteTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.packet_id, self.outcome, self.path_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RoundStats {
    pub round: u64,
    pub alive: usize,
    pub dead_pct: f64,
    pub delivered: u32,
    pub dropped_void: u32,
    pub dropped_malicious: u32,
    pub dropped_overflow: u32,
    pub dropped_dead_node: u32,
    /// Cumulative energy consumed by all nodes since round 0, J.
    pub energy_j: f64,
    pub blocked: usize,
}

impl RoundStats {
    pub const CSV_HEADER: &'static str =
        "round,alive,dead_pct,delivered,dropped_void,dropped_malicious,energy_j,blocked";

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.round,
            self.alive,
            self.dead_pct,
            self.delivered,
            self.dropped_void,
            self.dropped_malicious,
            self.energy_j,
            self.blocked
        )
    }

    fn tally(&mut self, outcome: RouteOutcome) {
        match outcome {
            RouteOutcome::Delivered => self.delivered += 1,
            RouteOutcome::DroppedVoid => self.dropped_void += 1,
            RouteOutcome::DroppedMalicious => self.dropped_malicious += 1,
            RouteOutcome::DroppedOverflow => self.dropped_overflow += 1,
            RouteOutcome::DroppedDeadNode => self.dropped_dead_node += 1,
        }
    }
}

/// A running simulation.
#[derive(Debug, Clone)]
pub struct Simulation {
    config: SimConfig,
    topology: Topology,
    nodes: Vec<NodeState>,
    ledger: TrustLedger,
    router: Router,
    radio: RadioModel,
    rng: ChaCha8Rng,
    round: u64,
    next_packet_id: u64,
    energy_consumed: f64,
    death_round: Vec<Option<u64>>,
    frozen: bool,
    record_trust: bool,
    trust_log: Vec<TrustRecord>,
}

impl NetworkView for Simulation {
    fn topology(&self) -> &Topology {
        &self.topology
    }

    fn is_alive(&self, id: NodeId) -> bool {
        self.nodes[id].alive
    }

    fn is_blocked(&self, id: NodeId) -> bool {
        self.ledger.is_blocked(id)
    }

    fn residual_energy(&self, id: NodeId) -> f64 {
        self.nodes[id].residual_energy
    }

    fn queue_len(&self, id: NodeId) -> u32 {
        self.nodes[id].queue_len
    }

    fn trust(&self, observer: NodeId, subject: NodeId) -> f64 {
        self.ledger.trust(observer, subject)
    }
}

impl Simulation {
    pub fn new(config: SimConfig, kind: RouterKind) -> Result<Self, SimError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let topology = match &config.topology_file {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| SimError::Io {
                    path: path.display().to_string(),
                    source,
                })?;
                let topo = Topology::from_text(&text).map_err(ConfigError::from)?;
                if topo.len() != config.n {
                    return Err(ConfigError::invalid(
                        "n",
                        format!("topology file holds {} nodes but n = {}", topo.len(), config.n),
                    )
                    .into());
                }
                topo
            }
            None => Topology::deploy_with(
                config.n,
                config.field(),
                config.base_station(),
                config.radio_range,
                &mut rng,
            ),
        };
        Self::with_topology(config, topology, kind, rng)
    }

    /// Builds a simulation on an explicit topology. The generator is seeded
    /// from the config but no deployment draws are taken.
    pub fn from_topology(config: SimConfig, topology: Topology, kind: RouterKind) -> Result<Self, SimError> {
        config.validate()?;
        if topology.len() != config.n {
            return Err(ConfigError::invalid("n", format!("topology has {} nodes", topology.len())).into());
        }
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Self::with_topology(config, topology, kind, rng)
    }

    fn with_topology(
        config: SimConfig,
        topology: Topology,
        kind: RouterKind,
        mut rng: ChaCha8Rng,
    ) -> Result<Self, SimError> {
        let n = topology.len();
        let attackers: BTreeSet<NodeId> = if !config.malicious.ids.is_empty() {
            config.malicious.ids.iter().copied().collect()
        } else if config.malicious.count > 0 {
            index::sample(&mut rng, n, config.malicious.count).into_iter().collect()
        } else {
            BTreeSet::new()
        };
        let attack = match config.malicious.kind {
            AttackKind::Dropper => Behavior::Dropper {
                p_drop: config.malicious.p_drop,
            },
            AttackKind::Modifier => Behavior::Modifier {
                p_modify: config.malicious.p_modify,
            },
        };
        let nodes = (0..n)
            .map(|id| NodeState {
                id,
                position: topology.position(id),
                residual_energy: config.e_initial,
                queue_len: 0,
                capacity: config.buffer_capacity,
                alive: true,
                behavior: if attackers.contains(&id) {
                    attack
                } else {
                    Behavior::Honest
                },
            })
            .collect();
        let params = config.routing_params()?;
        let router = match kind {
            RouterKind::Tceer => Router::tceer(params, config.controllers.clone()),
            RouterKind::Greedy => Router::greedy(params),
        };
        let ledger = TrustLedger::new(&topology, config.trust_weights()?, config.t_th);
        Ok(Self {
            radio: config.radio(),
            config,
            topology,
            nodes,
            ledger,
            router,
            rng,
            round: 0,
            next_packet_id: 0,
            energy_consumed: 0.0,
            death_round: vec![None; n],
            frozen: false,
            record_trust: true,
            trust_log: Vec::new(),
        })
    }

    /// Freezes energy, buffers and trust: routing decisions still run but
    /// leave the state untouched.
    pub fn set_frozen(&mut self, frozen: bool) {
        self.frozen = frozen;
    }

    /// Whether trust updates are appended to the trust log.
    pub fn set_record_trust(&mut self, record: bool) {
        self.record_trust = record;
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }

    pub fn ledger(&self) -> &TrustLedger {
        &self.ledger
    }

    pub fn router(&self) -> &Router {
        &self.router
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn energy_consumed(&self) -> f64 {
        self.energy_consumed
    }

    pub fn death_round(&self, id: NodeId) -> Option<u64> {
        self.death_round[id]
    }

    pub fn alive_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.alive).count()
    }

    pub fn malicious_ids(&self) -> Vec<NodeId> {
        self.nodes
            .iter()
            .filter(|n| n.behavior.is_malicious())
            .map(|n| n.id)
            .collect()
    }

    pub fn trust_log(&self) -> &[TrustRecord] {
        &self.trust_log
    }

    fn can_source(&self, id: NodeId) -> bool {
        self.nodes[id].alive && !self.ledger.is_blocked(id)
    }

    /// Charges `amount` to `id`. Returns false when the node could not
    /// afford it; the node is then drained and dead.
    fn debit(&mut self, id: NodeId, amount: f64) -> bool {
        if self.frozen {
            return true;
        }
        let node = &mut self.nodes[id];
        let affordable = amount <= node.residual_energy;
        let spent = amount.min(node.residual_energy);
        node.residual_energy -= spent;
        self.energy_consumed += spent;
        if node.residual_energy <= 0.0 {
            node.residual_energy = 0.0;
            node.alive = false;
            node.queue_len = 0;
            self.death_round[id] = Some(self.round);
        }
        affordable
    }

    fn coin(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p)
    }

    /// Routes one packet from `source` hop by hop until it is delivered or
    /// dropped, applying energy, buffer and attacker effects along the way.
    pub fn route_packet(&mut self, source: NodeId) -> RouteTrace {
        let packet_id = self.next_packet_id;
        self.next_packet_id += 1;
        let observing = self.router.kind() == RouterKind::Tceer && !self.frozen;

        let mut hops = vec![source];
        let mut current = source;
        // (observer, relay) awaiting the relay's next transmission.
        let mut watched: Option<(NodeId, NodeId)> = None;
        let mut header_modified = false;

        let outcome = loop {
            let next = self.router.select_next_hop(self, current);
            let (receiver, distance) = match next {
                NextHop::Void => break RouteOutcome::DroppedVoid,
                NextHop::Deliver => (None, self.topology.distance_to_bs(current)),
                NextHop::Node(j) => (Some(j), self.topology.distance_between(current, j)),
            };

            if !self.debit(current, self.radio.tx_energy(distance)) {
                break RouteOutcome::DroppedDeadNode;
            }
            if let Some((observer, relay)) = watched.take() {
                if observing {
                    self.ledger.record_forward(observer, relay, header_modified);
                }
            }

            let Some(j) = receiver else {
                // The base station discards a packet with a corrupted header.
                break if header_modified {
                    RouteOutcome::DroppedMalicious
                } else {
                    RouteOutcome::Delivered
                };
            };

            if !self.debit(j, self.radio.rx_energy()) {
                break RouteOutcome::DroppedDeadNode;
            }
            hops.push(j);
            if header_modified {
                break RouteOutcome::DroppedMalicious;
            }
            if self.nodes[j].queue_len >= self.nodes[j].capacity {
                break RouteOutcome::DroppedOverflow;
            }
            match self.nodes[j].behavior {
                Behavior::Honest => {}
                Behavior::Dropper { p_drop } => {
                    if self.coin(p_drop) {
                        if observing {
                            self.ledger.record_drop(current, j);
                        }
                        break RouteOutcome::DroppedMalicious;
                    }
                }
                Behavior::Modifier { p_modify } => {
                    if self.coin(p_modify) {
                        header_modified = true;
                    }
                }
            }
            if !self.frozen {
                self.nodes[j].queue_len += 1;
            }
            watched = Some((current, j));
            current = j;
        };

        RouteTrace {
            packet_id,
            round: self.round,
            source,
            hops,
            outcome,
        }
    }

    /// End-of-round bookkeeping shared by every round kind.
    fn finish_round(&mut self, stats: &mut RoundStats) {
        if !self.frozen {
            let rate = self.config.service_rate;
            for node in &mut self.nodes {
                node.queue_len = node.queue_len.saturating_sub(rate);
            }
            if self.config.e_idle > 0.0 {
                for id in 0..self.nodes.len() {
                    if self.nodes[id].alive {
                        self.debit(id, self.config.e_idle);
                    }
                }
            }
            if self.router.kind() == RouterKind::Tceer && self.round.is_multiple_of(self.config.trust_interval) {
                let alive: Vec<bool> = self.nodes.iter().map(|n| n.alive).collect();
                let energy: Vec<f64> = self.nodes.iter().map(|n| n.residual_energy).collect();
                let newly = self
                    .ledger
                    .update(&self.topology, &alive, &energy, self.config.e_initial, self.round);
                if !newly.is_empty() {
                    log::debug!("round {}: blocked {:?}", self.round, newly);
                }
                if self.record_trust {
                    self.trust_log.extend(self.ledger.records_for_round(self.round));
                }
            }
        }

        let n = self.nodes.len();
        stats.round = self.round;
        stats.alive = self.alive_count();
        stats.dead_pct = 100.0 * (n - stats.alive) as f64 / n as f64;
        stats.energy_j = self.energy_consumed;
        stats.blocked = self.ledger.blocked().len();
        self.round += 1;
    }

    /// Runs one round with randomly drawn sources.
    pub fn step_round(&mut self) -> (RoundStats, Vec<RouteTrace>) {
        let pool: Vec<NodeId> = (0..self.nodes.len()).filter(|&id| self.can_source(id)).collect();
        let k = self.config.sources_per_round.min(pool.len());
        let sources: Vec<NodeId> = index::sample(&mut self.rng, pool.len(), k)
            .into_iter()
            .map(|i| pool[i])
            .collect();
        self.run_round_with(&sources)
    }

    /// Runs one round in which exactly `sources` (in order) each send one
    /// packet. Sources that died or were blocked earlier in the round skip.
    pub fn run_round_with(&mut self, sources: &[NodeId]) -> (RoundStats, Vec<RouteTrace>) {
        let mut stats = RoundStats::default();
        let mut traces = Vec::with_capacity(sources.len());
        for &s in sources {
            if !self.can_source(s) {
                continue;
            }
            let trace = self.route_packet(s);
            stats.tally(trace.outcome);
            traces.push(trace);
        }
        self.finish_round(&mut stats);
        (stats, traces)
    }
}

/// Everything a finished run produces.
#[derive(Debug, Clone)]
pub struct SimOutput {
    pub router: RouterKind,
    pub topology: Topology,
    pub malicious: Vec<NodeId>,
    pub rounds: Vec<RoundStats>,
    pub traces: Vec<RouteTrace>,
    /// Ledger records written at every trust update.
    pub trust_log: Vec<TrustRecord>,
    /// Every ledger pair at the end of the run.
    pub final_trust: Vec<TrustRecord>,
    pub blocked: Vec<NodeId>,
    /// Round each node was blocked in, if ever.
    pub blocked_round: Vec<Option<u64>>,
    pub death_round: Vec<Option<u64>>,
    pub final_energy: Vec<f64>,
    pub energy_consumed: f64,
}

impl SimOutput {
    pub fn lifetime(&self) -> Lifetime {
        lifetime(&self.rounds)
    }

    pub fn rounds_csv(&self) -> String {
        let mut out = String::from(RoundStats::CSV_HEADER);
        out.push('\n');
        for s in &self.rounds {
            out.push_str(&s.csv_line());
            out.push('\n');
        }
        out
    }

    pub fn routes_text(&self) -> String {
        self.traces.iter().map(|t| format!("{t}\n")).collect()
    }

    pub fn trust_csv(&self) -> String {
        let mut out = String::from(TrustRecord::CSV_HEADER);
        out.push('\n');
        for r in &self.trust_log {
            out.push_str(&r.to_string());
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Skip the per-update trust log (the final snapshot is still kept).
    pub skip_trust_log: bool,
}

fn run_with(config: &SimConfig, kind: RouterKind, options: RunOptions) -> Result<SimOutput, SimError> {
    let mut sim = Simulation::new(config.clone(), kind)?;
    sim.set_record_trust(!options.skip_trust_log);
    let mut rounds = Vec::new();
    let mut traces = Vec::new();
    while sim.round() < config.rounds && sim.alive_count() > 0 {
        let (stats, mut t) = sim.step_round();
        rounds.push(stats);
        traces.append(&mut t);
    }
    let n = sim.nodes.len();
    Ok(SimOutput {
        router: kind,
        malicious: sim.malicious_ids(),
        final_trust: sim.ledger.snapshot(sim.round),
        blocked: sim.ledger.blocked().iter().copied().collect(),
        blocked_round: (0..n).map(|id| sim.ledger.blocked_round(id)).collect(),
        death_round: sim.death_round.clone(),
        final_energy: sim.nodes.iter().map(|n| n.residual_energy).collect(),
        energy_consumed: sim.energy_consumed,
        trust_log: std::mem::take(&mut sim.trust_log),
        topology: sim.topology,
        rounds,
        traces,
    })
}

/// Runs the trust/congestion/energy-aware protocol to the horizon or until
/// every node is dead.
pub fn run(config: &SimConfig) -> Result<SimOutput, SimError> {
    run_with(config, RouterKind::Tceer, RunOptions::default())
}

/// Same run with nearest-to-BS greedy forwarding and no trust management.
pub fn run_baseline(config: &SimConfig) -> Result<SimOutput, SimError> {
    run_with(config, RouterKind::Greedy, RunOptions::default())
}

pub fn run_router(config: &SimConfig, kind: RouterKind, options: RunOptions) -> Result<SimOutput, SimError> {
    run_with(config, kind, options)
}

/// Sends `packets` packets from `source` back to back within a single
/// round. Buffers fill along the chosen relays as the burst proceeds and
/// drain only at the round's end, so later packets see congestion that
/// earlier ones created. With `frozen`, state never changes and every
/// packet takes the same path.
pub fn trace_source(
    config: &SimConfig,
    source: NodeId,
    packets: usize,
    frozen: bool,
) -> Result<Vec<RouteTrace>, SimError> {
    let mut sim = Simulation::new(config.clone(), RouterKind::Tceer)?;
    if source >= sim.nodes.len() {
        return Err(SimError::UnknownNode(source));
    }
    if !sim.nodes[source].alive {
        return Err(SimError::DeadSource(source));
    }
    if sim.ledger.is_blocked(source) {
        return Err(SimError::BlockedSource(source));
    }
    sim.set_frozen(frozen);
    let (_, traces) = sim.run_round_with(&vec![source; packets]);
    Ok(traces)
}

/// First round at which the dead percentage reaches each mark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Lifetime {
    pub first_dead: Option<u64>,
    pub half_dead: Option<u64>,
    pub all_dead: Option<u64>,
}

impl Lifetime {
    pub fn rounds_to(&self, pct: u32) -> Option<u64> {
        match pct {
            1 => self.first_dead,
            50 => self.half_dead,
            100 => self.all_dead,
            _ => None,
        }
    }
}

/// Rounds to 1 %, 50 % and 100 % dead; `None` when never reached.
pub fn lifetime(stats: &[RoundStats]) -> Lifetime {
    let first = |x: f64| stats.iter().find(|s| s.dead_pct >= x).map(|s| s.round);
    Lifetime {
        first_dead: first(1.0),
        half_dead: first(50.0),
        all_dead: first(100.0),
    }
}

/// Formats an optional round count as the number or `not reached`.
pub fn fmt_rounds(r: Option<u64>) -> String {
    r.map_or_else(|| "not reached".to_string(), |r| r.to_string())
}
