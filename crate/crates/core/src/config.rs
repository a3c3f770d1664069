//! Simulation configuration and the plain-text scenario format.
//!
//! A scenario file is a list of `key = value` lines. `#` starts a comment.
//! Keys not given take the defaults below; unknown keys are rejected.
//! Fuzzy controllers can be overridden in optional sections:
//!
//! ```text
//! [flc.tcm.input1]        # trust
//! term Low 0 0 0.5
//! ...
//! [flc.tcm.rules]
//! rule Low Low -> VeryLow
//! ...
//! ```
//!
//! Sections exist for `input1`, `input2`, `output` and `rules` of both the
//! `tcm` and `edm` controllers. A variable section replaces all terms of
//! that variable; a rules section replaces the whole table.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{ConfigError, FlcError};
use crate::flc::{FuzzyController, FuzzyVariable, MetricControllers, RuleBase, EDM_RULES, TCM_RULES};
use crate::metrics::{CongestionParams, MetricWeights};
use crate::radio::RadioModel;
use crate::routing::{NodePotentialWeights, RoutingParams};
use crate::topology::{Field, NodeId, Position};
use crate::trust::TrustWeights;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackKind {
    /// Silently discards packets it should forward.
    Dropper,
    /// Forwards packets with altered address fields.
    Modifier,
}

impl AttackKind {
    fn as_str(&self) -> &'static str {
        match self {
            AttackKind::Dropper => "dropper",
            AttackKind::Modifier => "modifier",
        }
    }
}

/// Which nodes misbehave and how.
#[derive(Debug, Clone, PartialEq)]
pub struct MaliciousSpec {
    /// Number of attackers drawn at random after deployment. Ignored when
    /// `ids` is non-empty.
    pub count: usize,
    /// Explicit attacker ids.
    pub ids: Vec<NodeId>,
    pub kind: AttackKind,
    pub p_drop: f64,
    pub p_modify: f64,
}

impl Default for MaliciousSpec {
    fn default() -> Self {
        Self {
            count: 0,
            ids: Vec::new(),
            kind: AttackKind::Dropper,
            p_drop: 0.8,
            p_modify: 0.8,
        }
    }
}

impl MaliciousSpec {
    pub fn is_empty(&self) -> bool {
        self.count == 0 && self.ids.is_empty()
    }
}

/// Every tunable of a run.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub n: usize,
    pub field_width: f64,
    pub field_height: f64,
    pub bs_x: f64,
    pub bs_y: f64,
    pub radio_range: f64,
    /// Initial energy per node, J.
    pub e_initial: f64,
    /// Round horizon.
    pub rounds: u64,
    pub sources_per_round: usize,
    pub packet_bits: f64,
    pub e_elec: f64,
    pub eps_amp: f64,
    /// Energy every alive node spends per round on listening, J.
    pub e_idle: f64,
    pub buffer_capacity: u32,
    /// Packets each node drains from its buffer at the end of a round.
    pub service_rate: u32,
    pub c_th_min: f64,
    pub c_th_max: f64,
    pub epsilon: f64,
    pub omega: f64,
    pub k1: f64,
    pub k2: f64,
    pub alpha: f64,
    pub beta: f64,
    pub w_d: f64,
    pub w_i: f64,
    pub t_th: f64,
    /// Rounds between trust updates.
    pub trust_interval: u64,
    pub malicious: MaliciousSpec,
    pub seed: u64,
    /// Load positions from this file instead of deploying at random.
    pub topology_file: Option<PathBuf>,
    pub controllers: MetricControllers,
}

impl Default for SimConfig {
    fn default() -> Self {
        let radio = RadioModel::default();
        Self {
            n: 50,
            field_width: 200.0,
            field_height: 200.0,
            bs_x: 100.0,
            bs_y: 100.0,
            radio_range: 50.0,
            e_initial: 0.5,
            rounds: 30000,
            sources_per_round: 5,
            packet_bits: radio.packet_bits,
            e_elec: radio.e_elec,
            eps_amp: radio.eps_amp,
            e_idle: 2e-5,
            buffer_capacity: 50,
            service_rate: 3,
            c_th_min: 10.0,
            c_th_max: 40.0,
            epsilon: 0.05,
            omega: 0.2,
            k1: 2.0,
            k2: 3.0,
            alpha: 0.3,
            beta: 0.7,
            w_d: 0.7,
            w_i: 0.3,
            t_th: 0.5,
            trust_interval: 5,
            malicious: MaliciousSpec::default(),
            seed: 7,
            topology_file: None,
            controllers: MetricControllers::default(),
        }
    }
}

const FLC_SECTIONS: [&str; 8] = [
    "flc.tcm.input1",
    "flc.tcm.input2",
    "flc.tcm.output",
    "flc.tcm.rules",
    "flc.edm.input1",
    "flc.edm.input2",
    "flc.edm.output",
    "flc.edm.rules",
];

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value
        .parse::<T>()
        .map_err(|_| ConfigError::invalid(key, format!("cannot parse `{value}`")))
}

impl SimConfig {
    pub fn field(&self) -> Field {
        Field::new(self.field_width, self.field_height)
    }

    pub fn base_station(&self) -> Position {
        Position::new(self.bs_x, self.bs_y)
    }

    pub fn radio(&self) -> RadioModel {
        RadioModel {
            e_elec: self.e_elec,
            eps_amp: self.eps_amp,
            packet_bits: self.packet_bits,
        }
    }

    pub fn routing_params(&self) -> Result<RoutingParams, ConfigError> {
        Ok(RoutingParams {
            congestion: CongestionParams::new(self.c_th_min, self.c_th_max, self.epsilon)?,
            metric_weights: MetricWeights::new(self.omega, self.k1, self.k2)?,
            potential_weights: NodePotentialWeights::new(self.alpha, self.beta)?,
            e_initial: self.e_initial,
        })
    }

    pub fn trust_weights(&self) -> Result<TrustWeights, ConfigError> {
        TrustWeights::new(self.w_d, self.w_i)
    }

    /// Checks every field, naming the first offender.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |field: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::invalid(field, format!("must be positive, got {v}")))
            }
        };
        let non_negative = |field: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::invalid(field, format!("must be non-negative, got {v}")))
            }
        };
        let unit = |field: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(ConfigError::invalid(field, format!("must lie in [0, 1], got {v}")))
            }
        };

        if self.n == 0 {
            return Err(ConfigError::invalid("n", "need at least one node"));
        }
        positive("field_width", self.field_width)?;
        positive("field_height", self.field_height)?;
        if !self.field().contains(self.base_station()) {
            return Err(ConfigError::invalid(
                "bs_x/bs_y",
                format!("base station ({}, {}) lies outside the field", self.bs_x, self.bs_y),
            ));
        }
        positive("radio_range", self.radio_range)?;
        positive("e_initial", self.e_initial)?;
        positive("packet_bits", self.packet_bits)?;
        non_negative("e_elec", self.e_elec)?;
        non_negative("eps_amp", self.eps_amp)?;
        non_negative("e_idle", self.e_idle)?;
        if self.buffer_capacity == 0 {
            return Err(ConfigError::invalid("buffer_capacity", "must be at least 1"));
        }
        if self.c_th_max > f64::from(self.buffer_capacity) {
            return Err(ConfigError::invalid(
                "c_th_max",
                format!("exceeds buffer_capacity {}", self.buffer_capacity),
            ));
        }
        self.routing_params()?;
        self.trust_weights()?;
        unit("t_th", self.t_th)?;
        if self.trust_interval == 0 {
            return Err(ConfigError::invalid("trust_interval", "must be at least 1 round"));
        }

        let m = &self.malicious;
        unit("p_drop", m.p_drop)?;
        unit("p_modify", m.p_modify)?;
        if !m.ids.is_empty() && m.count != 0 {
            return Err(ConfigError::invalid(
                "malicious_count/malicious_ids",
                "give either a count or explicit ids, not both",
            ));
        }
        if m.count > self.n {
            return Err(ConfigError::invalid(
                "malicious_count",
                format!("{} attackers requested among {} nodes", m.count, self.n),
            ));
        }
        if let Some(&bad) = m.ids.iter().find(|&&id| id >= self.n) {
            return Err(ConfigError::invalid(
                "malicious_ids",
                format!("node {bad} does not exist"),
            ));
        }
        Ok(())
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let key = key.trim();
        let v = value.trim();
        match key {
            "n" => self.n = parse_num(key, v)?,
            "field_width" => self.field_width = parse_num(key, v)?,
            "field_height" => self.field_height = parse_num(key, v)?,
            "bs_x" => self.bs_x = parse_num(key, v)?,
            "bs_y" => self.bs_y = parse_num(key, v)?,
            "radio_range" => self.radio_range = parse_num(key, v)?,
            "e_initial" => self.e_initial = parse_num(key, v)?,
            "rounds" => self.rounds = parse_num(key, v)?,
            "sources_per_round" => self.sources_per_round = parse_num(key, v)?,
            "packet_bits" => self.packet_bits = parse_num(key, v)?,
            "e_elec" => self.e_elec = parse_num(key, v)?,
            "eps_amp" => self.eps_amp = parse_num(key, v)?,
            "e_idle" => self.e_idle = parse_num(key, v)?,
            "buffer_capacity" => self.buffer_capacity = parse_num(key, v)?,
            "service_rate" => self.service_rate = parse_num(key, v)?,
            "c_th_min" => self.c_th_min = parse_num(key, v)?,
            "c_th_max" => self.c_th_max = parse_num(key, v)?,
            "epsilon" => self.epsilon = parse_num(key, v)?,
            "omega" => self.omega = parse_num(key, v)?,
            "k1" => self.k1 = parse_num(key, v)?,
            "k2" => self.k2 = parse_num(key, v)?,
            "alpha" => self.alpha = parse_num(key, v)?,
            "beta" => self.beta = parse_num(key, v)?,
            "w_d" => self.w_d = parse_num(key, v)?,
            "w_i" => self.w_i = parse_num(key, v)?,
            "t_th" => self.t_th = parse_num(key, v)?,
            "trust_interval" => self.trust_interval = parse_num(key, v)?,
            "malicious_count" => self.malicious.count = parse_num(key, v)?,
            "malicious_ids" => {
                self.malicious.ids = if v.is_empty() {
                    Vec::new()
                } else {
                    v.split(',')
                        .map(|s| parse_num(key, s.trim()))
                        .collect::<Result<_, _>>()?
                }
            }
            "malicious_behavior" => {
                self.malicious.kind = match v {
                    "dropper" => AttackKind::Dropper,
                    "modifier" => AttackKind::Modifier,
                    other => {
                        return Err(ConfigError::invalid(
                            key,
                            format!("expected `dropper` or `modifier`, got `{other}`"),
                        ))
                    }
                }
            }
            "p_drop" => self.malicious.p_drop = parse_num(key, v)?,
            "p_modify" => self.malicious.p_modify = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "topology_file" => self.topology_file = if v.is_empty() { None } else { Some(PathBuf::from(v)) },
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let (key, value) = assignment.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: 0,
            reason: format!("override `{assignment}` is not `key=value`"),
        })?;
        self.set(key, value)
    }

    /// Parses a scenario file body on top of the defaults and validates it.
    pub fn from_scenario_str(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = SimConfig::default();
        let mut section: Option<&'static str> = None;
        let mut section_lines: Vec<Vec<String>> = vec![Vec::new(); FLC_SECTIONS.len()];
        let mut seen = [false; FLC_SECTIONS.len()];

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim();
                let slot = FLC_SECTIONS
                    .iter()
                    .position(|s| *s == name)
                    .ok_or_else(|| ConfigError::Syntax {
                        line: line_no,
                        reason: format!("unknown section `[{name}]`"),
                    })?;
                if seen[slot] {
                    return Err(ConfigError::Syntax {
                        line: line_no,
                        reason: format!("section `[{name}]` given twice"),
                    });
                }
                seen[slot] = true;
                section = Some(FLC_SECTIONS[slot]);
                continue;
            }
            match section {
                None => {
                    let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                        line: line_no,
                        reason: format!("expected `key = value`, got `{line}`"),
                    })?;
                    cfg.set(key, value)?;
                }
                Some(name) => {
                    let slot = FLC_SECTIONS.iter().position(|s| *s == name).expect("known section");
                    section_lines[slot].push(line.to_string());
                }
            }
        }

        let lines = |slot: usize| -> Option<Vec<&str>> {
            seen[slot].then(|| section_lines[slot].iter().map(String::as_str).collect())
        };
        cfg.controllers = MetricControllers {
            tcm: build_controller(
                ["trust", "cci", "tcm"],
                TCM_RULES,
                [lines(0), lines(1), lines(2), lines(3)],
            )?,
            edm: build_controller(
                ["energy", "distance", "edm"],
                EDM_RULES,
                [lines(4), lines(5), lines(6), lines(7)],
            )?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::invalid("config", format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::from_scenario_str(&text)?;
        if let (Some(file), Some(dir)) = (&config.topology_file, path.parent()) {
            if file.is_relative() {
                config.topology_file = Some(dir.join(file));
            }
        }
        Ok(config)
    }

    /// Every resolved value in scenario syntax; parsing it back yields the
    /// same configuration.
    pub fn to_scenario_string(&self) -> String {
        let m = &self.malicious;
        let ids = m.ids.iter().map(ToString::to_string).collect::<Vec<_>>().join(",");
        let topology_file = self
            .topology_file
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_default();
        let entries: Vec<(&str, String)> = vec![
            ("n", self.n.to_string()),
            ("field_width", self.field_width.to_string()),
            ("field_height", self.field_height.to_string()),
            ("bs_x", self.bs_x.to_string()),
            ("bs_y", self.bs_y.to_string()),
            ("radio_range", self.radio_range.to_string()),
            ("e_initial", self.e_initial.to_string()),
            ("rounds", self.rounds.to_string()),
            ("sources_per_round", self.sources_per_round.to_string()),
            ("packet_bits", self.packet_bits.to_string()),
            ("e_elec", self.e_elec.to_string()),
            ("eps_amp", self.eps_amp.to_string()),
            ("e_idle", self.e_idle.to_string()),
            ("buffer_capacity", self.buffer_capacity.to_string()),
            ("service_rate", self.service_rate.to_string()),
            ("c_th_min", self.c_th_min.to_string()),
            ("c_th_max", self.c_th_max.to_string()),
            ("epsilon", self.epsilon.to_string()),
            ("omega", self.omega.to_string()),
            ("k1", self.k1.to_string()),
            ("k2", self.k2.to_string()),
            ("alpha", self.alpha.to_string()),
            ("beta", self.beta.to_string()),
            ("w_d", self.w_d.to_string()),
            ("w_i", self.w_i.to_string()),
            ("t_th", self.t_th.to_string()),
            ("trust_interval", self.trust_interval.to_string()),
            ("malicious_count", m.count.to_string()),
            ("malicious_ids", ids),
            ("malicious_behavior", m.kind.as_str().to_string()),
            ("p_drop", m.p_drop.to_string()),
            ("p_modify", m.p_modify.to_string()),
            ("seed", self.seed.to_string()),
            ("topology_file", topology_file),
        ];
        let mut out = String::new();
        for (k, v) in entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        for (prefix, c) in [("flc.tcm", &self.controllers.tcm), ("flc.edm", &self.controllers.edm)] {
            let _ = write!(out, "\n[{prefix}.input1]\n{}", c.input1().to_text());
            let _ = write!(out, "\n[{prefix}.input2]\n{}", c.input2().to_text());
            let _ = write!(out, "\n[{prefix}.output]\n{}", c.output().to_text());
            let _ = write!(
                out,
                "\n[{prefix}.rules]\n{}",
                c.rules().to_text(c.input1(), c.input2(), c.output())
            );
        }
        out
    }
}

fn build_controller(
    names: [&str; 3],
    default_rules: &[(&str, &str, &str)],
    sections: [Option<Vec<&str>>; 4],
) -> Result<FuzzyController, FlcError> {
    let [s1, s2, s3, rules] = sections;
    let in1 = match s1 {
        Some(l) => FuzzyVariable::parse(names[0], &l)?,
        None => FuzzyVariable::default_input(names[0]),
    };
    let in2 = match s2 {
        Some(l) => FuzzyVariable::parse(names[1], &l)?,
        None => FuzzyVariable::default_input(names[1]),
    };
    let out = match s3 {
        Some(l) => FuzzyVariable::parse(names[2], &l)?,
        None => FuzzyVariable::default_output(names[2]),
    };
    let rules = match rules {
        Some(l) => RuleBase::parse(&in1, &in2, &out, &l)?,
        None => RuleBase::from_labels(&in1, &in2, &out, default_rules)?,
    };
    FuzzyController::new(in1, in2, out, rules)
}
