//! Two-input Mamdani fuzzy controllers.
//!
//! Each controller fuzzifies two crisp inputs on `[0, 1]` with triangular
//! membership functions, fires every rule with `min` activation, aggregates
//! per output term with `max`, and defuzzifies by the centroid of the
//! clipped-and-aggregated output set. The centroid is integrated with the
//! trapezoidal rule on a fixed uniform grid.
//!
//! Two instances drive routing: the trust-congestion controller
//! (trust x CCI) and the energy-distance controller (energy metric x
//! distance metric).

use std::fmt::Write as _;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::OnceLock;

use crate::error::FlcError;

/// Sample count used for centroid integration unless overridden.
pub const DEFAULT_RESOLUTION: usize = 1001;

static CLAMPED_INPUTS: AtomicU64 = AtomicU64::new(0);

/// Number of crisp inputs that fell outside `[0, 1]` and were clamped,
/// process-wide.
pub fn clamped_input_count() -> u64 {
    CLAMPED_INPUTS.load(Ordering::Relaxed)
}

fn clamp_unit(x: f64) -> f64 {
    if (0.0..=1.0).contains(&x) {
        x
    } else {
        CLAMPED_INPUTS.fetch_add(1, Ordering::Relaxed);
        if x.is_nan() {
            0.0
        } else {
            x.clamp(0.0, 1.0)
        }
    }
}

/// Triangular membership function `(a, b, c)` with peak at `b`. Shoulders
/// (`a == b` or `b == c`) are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipFunction {
    label: String,
    a: f64,
    b: f64,
    c: f64,
}

impl MembershipFunction {
    pub fn triangular(label: impl Into<String>, a: f64, b: f64, c: f64) -> Result<Self, FlcError> {
        let label = label.into();
        if !(0.0 <= a && a <= b && b <= c && c <= 1.0) {
            return Err(FlcError::Variable {
                variable: label,
                reason: format!("breakpoints must satisfy 0 <= a <= b <= c <= 1, got ({a}, {b}, {c})"),
            });
        }
        Ok(Self { label, a, b, c })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn breakpoints(&self) -> (f64, f64, f64) {
        (self.a, self.b, self.c)
    }

    pub fn degree(&self, x: f64) -> f64 {
        if x < self.a || x > self.c {
            0.0
        } else if x == self.b {
            1.0
        } else if x < self.b {
            (x - self.a) / (self.b - self.a)
        } else {
            (self.c - x) / (self.c - self.b)
        }
    }
}

/// A linguistic variable on the universe `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyVariable {
    name: String,
    terms: Vec<MembershipFunction>,
}

impl FuzzyVariable {
    /// Builds a variable, rejecting duplicate labels and any gap in coverage
    /// of `[0, 1]`.
    pub fn new(name: impl Into<String>, terms: Vec<MembershipFunction>) -> Result<Self, FlcError> {
        let name = name.into();
        let err = |reason: String| FlcError::Variable {
            variable: name.clone(),
            reason,
        };
        if terms.is_empty() {
            return Err(err("no terms".into()));
        }
        for (i, t) in terms.iter().enumerate() {
            if terms[..i].iter().any(|u| u.label == t.label) {
                return Err(err(format!("duplicate term `{}`", t.label)));
            }
        }
        const PROBES: usize = 10_000;
        for k in 0..=PROBES {
            let x = k as f64 / PROBES as f64;
            if terms.iter().all(|t| t.degree(x) == 0.0) {
                return Err(err(format!("terms leave {x} uncovered")));
            }
        }
        Ok(Self { name, terms })
    }

    /// Three-term strong partition: Low(0,0,.5), Medium(0,.5,1), High(.5,1,1).
    pub fn default_input(name: impl Into<String>) -> Self {
        let terms = vec![
            tri("Low", 0.0, 0.0, 0.5),
            tri("Medium", 0.0, 0.5, 1.0),
            tri("High", 0.5, 1.0, 1.0),
        ];
        Self::new(name, terms).expect("default input partition is valid")
    }

    /// Five-term strong partition with peaks at 0, .25, .5, .75, 1.
    pub fn default_output(name: impl Into<String>) -> Self {
        let terms = vec![
            tri("VeryLow", 0.0, 0.0, 0.25),
            tri("Low", 0.0, 0.25, 0.5),
            tri("Medium", 0.25, 0.5, 0.75),
            tri("High", 0.5, 0.75, 1.0),
            tri("VeryHigh", 0.75, 1.0, 1.0),
        ];
        Self::new(name, terms).expect("default output partition is valid")
    }

    /// Parses `term NAME a b c` lines.
    pub fn parse(name: &str, lines: &[&str]) -> Result<Self, FlcError> {
        let terms = lines
            .iter()
            .map(|line| {
                let parts: Vec<&str> = line.split_whitespace().collect();
                let bad = || FlcError::Variable {
                    variable: name.to_string(),
                    reason: format!("expected `term NAME a b c`, got `{line}`"),
                };
                if parts.len() != 5 || parts[0] != "term" {
                    return Err(bad());
                }
                let nums: Vec<f64> = parts[2..]
                    .iter()
                    .map(|s| s.parse::<f64>().map_err(|_| bad()))
                    .collect::<Result<_, _>>()?;
                MembershipFunction::triangular(parts[1], nums[0], nums[1], nums[2])
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(name, terms)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn terms(&self) -> &[MembershipFunction] {
        &self.terms
    }

    pub fn term_index(&self, label: &str) -> Option<usize> {
        self.terms.iter().position(|t| t.label == label)
    }

    /// Membership degree of `x` in every term, in term order. Inputs outside
    /// `[0, 1]` are clamped and counted.
    pub fn fuzzify(&self, x: f64) -> Vec<f64> {
        let x = clamp_unit(x);
        self.terms.iter().map(|t| t.degree(x)).collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for t in &self.terms {
            let _ = writeln!(out, "term {} {} {} {}", t.label, t.a, t.b, t.c);
        }
        out
    }
}

fn tri(label: &str, a: f64, b: f64, c: f64) -> MembershipFunction {
    MembershipFunction::triangular(label, a, b, c).expect("static breakpoints are ordered")
}

/// Complete rule table over the cross product of the two input term sets.
/// Stored row-major by input-1 term, holding output term indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleBase {
    rows: usize,
    cols: usize,
    table: Vec<usize>,
}

impl RuleBase {
    /// Builds from `(input1 label, input2 label, output label)` triples; each
    /// input pair must appear exactly once.
    pub fn from_labels(
        input1: &FuzzyVariable,
        input2: &FuzzyVariable,
        output: &FuzzyVariable,
        rules: &[(&str, &str, &str)],
    ) -> Result<Self, FlcError> {
        let (rows, cols) = (input1.terms.len(), input2.terms.len());
        let mut table = vec![None; rows * cols];
        for &(l1, l2, out) in rules {
            let lookup = |v: &FuzzyVariable, l: &str| {
                v.term_index(l)
                    .ok_or_else(|| FlcError::Rules(format!("unknown term `{l}` for `{}`", v.name)))
            };
            let i = lookup(input1, l1)?;
            let j = lookup(input2, l2)?;
            let k = lookup(output, out)?;
            let slot = &mut table[i * cols + j];
            if slot.is_some() {
                return Err(FlcError::Rules(format!("duplicate rule for ({l1}, {l2})")));
            }
            *slot = Some(k);
        }
        let table = table
            .into_iter()
            .enumerate()
            .map(|(idx, k)| {
                k.ok_or_else(|| {
                    FlcError::Rules(format!(
                        "missing rule for ({}, {})",
                        input1.terms[idx / cols].label,
                        input2.terms[idx % cols].label
                    ))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { rows, cols, table })
    }

    /// Parses `rule T1 T2 -> OUT` lines.
    pub fn parse(
        input1: &FuzzyVariable,
        input2: &FuzzyVariable,
        output: &FuzzyVariable,
        lines: &[&str],
    ) -> Result<Self, FlcError> {
        let mut triples = Vec::with_capacity(lines.len());
        for line in lines {
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 5 || parts[0] != "rule" || parts[3] != "->" {
                return Err(FlcError::Rules(format!("expected `rule T1 T2 -> OUT`, got `{line}`")));
            }
            triples.push((parts[1], parts[2], parts[4]));
        }
        Self::from_labels(input1, input2, output, &triples)
    }

    pub fn output_for(&self, term1: usize, term2: usize) -> usize {
        self.table[term1 * self.cols + term2]
    }

    /// True when raising either input term never lowers the output term.
    pub fn is_monotone(&self) -> bool {
        (0..self.rows).all(|i| {
            (0..self.cols).all(|j| {
                (i + 1 == self.rows || self.output_for(i + 1, j) >= self.output_for(i, j))
                    && (j + 1 == self.cols || self.output_for(i, j + 1) >= self.output_for(i, j))
            })
        })
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..self.cols).all(|j| self.output_for(i, j) == self.output_for(j, i)))
    }

    pub fn to_text(&self, input1: &FuzzyVariable, input2: &FuzzyVariable, output: &FuzzyVariable) -> String {
        let mut out = String::new();
        for i in 0..self.rows {
            for j in 0..self.cols {
                let _ = writeln!(
                    out,
                    "rule {} {} -> {}",
                    input1.terms[i].label,
                    input2.terms[j].label,
                    output.terms[self.output_for(i, j)].label
                );
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct FuzzyController {
    input1: FuzzyVariable,
    input2: FuzzyVariable,
    output: FuzzyVariable,
    rules: RuleBase,
    grid: Vec<f64>,
    // Output membership sampled on `grid`, one row per output term.
    output_samples: Vec<Vec<f64>>,
}

impl FuzzyController {
    pub fn new(
        input1: FuzzyVariable,
        input2: FuzzyVariable,
        output: FuzzyVariable,
        rules: RuleBase,
    ) -> Result<Self, FlcError> {
        Self::with_resolution(input1, input2, output, rules, DEFAULT_RESOLUTION)
    }

    pub fn with_resolution(
        input1: FuzzyVariable,
        input2: FuzzyVariable,
        output: FuzzyVariable,
        rules: RuleBase,
        resolution: usize,
    ) -> Result<Self, FlcError> {
        if rules.rows != input1.terms.len()
            || rules.cols != input2.terms.len()
            || rules.table.iter().any(|&k| k >= output.terms.len())
        {
            return Err(FlcError::Rules("rule table does not match the variables".into()));
        }
        if resolution < 2 {
            return Err(FlcError::Rules(format!(
                "resolution must be at least 2, got {resolution}"
            )));
        }
        let step = 1.0 / (resolution - 1) as f64;
        let grid: Vec<f64> = (0..resolution).map(|s| s as f64 * step).collect();
        let output_samples = output
            .terms
            .iter()
            .map(|t| grid.iter().map(|&x| t.degree(x)).collect())
            .collect();
        Ok(Self {
            input1,
            input2,
            output,
            rules,
            grid,
            output_samples,
        })
    }

    /// Trust x CCI controller with the default partitions and rule table.
    pub fn default_tcm() -> Self {
        let trust = FuzzyVariable::default_input("trust");
        let cci = FuzzyVariable::default_input("cci");
        let out = FuzzyVariable::default_output("tcm");
        let rules = RuleBase::from_labels(&trust, &cci, &out, TCM_RULES).expect("default TCM rules are complete");
        Self::new(trust, cci, out, rules).expect("default TCM controller is valid")
    }

    /// Energy x distance controller with the default partitions and rule table.
    pub fn default_edm() -> Self {
        let energy = FuzzyVariable::default_input("energy");
        let dist = FuzzyVariable::default_input("distance");
        let out = FuzzyVariable::default_output("edm");
        let rules = RuleBase::from_labels(&energy, &dist, &out, EDM_RULES).expect("default EDM rules are complete");
        Self::new(energy, dist, out, rules).expect("default EDM controller is valid")
    }

    /// Same controller, integrated on a different grid.
    pub fn resampled(&self, resolution: usize) -> Result<Self, FlcError> {
        Self::with_resolution(
            self.input1.clone(),
            self.input2.clone(),
            self.output.clone(),
            self.rules.clone(),
            resolution,
        )
    }

    pub fn input1(&self) -> &FuzzyVariable {
        &self.input1
    }

    pub fn input2(&self) -> &FuzzyVariable {
        &self.input2
    }

    pub fn output(&self) -> &FuzzyVariable {
        &self.output
    }

    pub fn rules(&self) -> &RuleBase {
        &self.rules
    }

    pub fn resolution(&self) -> usize {
        self.grid.len()
    }

    /// Firing strength of each output term for crisp inputs `(x1, x2)`.
    pub fn activations(&self, x1: f64, x2: f64) -> Vec<f64> {
        let mu1 = self.input1.fuzzify(x1);
        let mu2 = self.input2.fuzzify(x2);
        let mut act = vec![0.0f64; self.output.terms.len()];
        for (i, &m1) in mu1.iter().enumerate().filter(|(_, m)| **m > 0.0) {
            for (j, &m2) in mu2.iter().enumerate().filter(|(_, m)| **m > 0.0) {
                let k = self.rules.output_for(i, j);
                act[k] = act[k].max(m1.min(m2));
            }
        }
        act
    }

    /// Crisp output in `[0, 1]`.
    pub fn infer(&self, x1: f64, x2: f64) -> f64 {
        let act = self.activations(x1, x2);
        let active: Vec<(f64, &[f64])> = act
            .iter()
            .zip(&self.output_samples)
            .filter(|(a, _)| **a > 0.0)
            .map(|(&a, s)| (a, s.as_slice()))
            .collect();

        let last = self.grid.len() - 1;
        let (mut num, mut den) = (0.0, 0.0);
        for (s, &x) in self.grid.iter().enumerate() {
            let m = active.iter().fold(0.0f64, |m, (a, row)| m.max(a.min(row[s])));
            let w = if s == 0 || s == last { 0.5 } else { 1.0 };
            num += w * x * m;
            den += w * m;
        }
        if den > 0.0 {
            (num / den).clamp(0.0, 1.0)
        } else {
            // Unreachable with covering partitions; fall back to mid-universe.
            0.5
        }
    }
}

/// Default trust x CCI rules.
pub const TCM_RULES: &[(&str, &str, &str)] = &[
    ("Low", "Low", "VeryLow"),
    ("Low", "Medium", "VeryLow"),
    ("Low", "High", "Low"),
    ("Medium", "Low", "Low"),
    ("Medium", "Medium", "Medium"),
    ("Medium", "High", "High"),
    ("High", "Low", "Low"),
    ("High", "Medium", "High"),
    ("High", "High", "VeryHigh"),
];

/// Default energy x distance rules.
pub const EDM_RULES: &[(&str, &str, &str)] = &[
    ("Low", "Low", "VeryLow"),
    ("Low", "Medium", "Low"),
    ("Low", "High", "Medium"),
    ("Medium", "Low", "Low"),
    ("Medium", "Medium", "Medium"),
    ("Medium", "High", "High"),
    ("High", "Low", "Medium"),
    ("High", "Medium", "High"),
    ("High", "High", "VeryHigh"),
];

/// The two controllers used when scoring next-hop candidates.
#[derive(Debug, Clone)]
pub struct MetricControllers {
    pub tcm: FuzzyController,
    pub edm: FuzzyController,
}

impl MetricControllers {
    pub fn tcm(&self, trust: f64, cci: f64) -> f64 {
        self.tcm.infer(trust, cci)
    }

    pub fn edm(&self, energy_metric: f64, distance_metric: f64) -> f64 {
        self.edm.infer(energy_metric, distance_metric)
    }
}

impl Default for MetricControllers {
    fn default() -> Self {
        Self {
            tcm: FuzzyController::default_tcm(),
            edm: FuzzyController::default_edm(),
        }
    }
}

fn defaults() -> &'static MetricControllers {
    static DEFAULTS: OnceLock<MetricControllers> = OnceLock::new();
    DEFAULTS.get_or_init(MetricControllers::default)
}

/// Trust-congestion metric with the default controller.
pub fn tcm(trust: f64, cci: f64) -> f64 {
    defaults().tcm(trust, cci)
}

/// Energy-distance metric with the default controller.
pub fn edm(energy_metric: f64, distance_metric: f64) -> f64 {
    defaults().edm(energy_metric, distance_metric)
}
