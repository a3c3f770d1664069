//! Node deployment, Euclidean geometry and radio-range neighbor queries.
//!
//! A [`Topology`] is immutable once built. Neighbor lists are computed at
//! construction so that routing can query them without rescanning all pairs.

use std::fmt::Write as _;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::TopologyError;

/// Dense node identifier, `0..n`.
pub type NodeId = usize;

/// A point in the sensor field, in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        distance(*self, *other)
    }
}

/// Euclidean distance between two positions.
pub fn distance(a: Position, b: Position) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

/// Rectangular deployment area anchored at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Field {
    pub width: f64,
    pub height: f64,
}

impl Field {
    pub const fn new(width: f64, height: f64) -> Self {
        Self { width, height }
    }

    pub fn contains(&self, p: Position) -> bool {
        (0.0..=self.width).contains(&p.x) && (0.0..=self.height).contains(&p.y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    positions: Vec<Position>,
    base_station: Position,
    radio_range: f64,
    field: Field,
    neighbors: Vec<Vec<NodeId>>,
}

impl Topology {
    /// Deploys `n` nodes uniformly over `field` using a ChaCha8 generator
    /// seeded with `seed`.
    pub fn deploy(n: usize, field: Field, base_station: Position, radio_range: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::deploy_with(n, field, base_station, radio_range, &mut rng)
    }

    /// Deploys `n` nodes drawing from `rng`. Each node consumes two uniform
    /// draws, x then y, in ascending id order.
    pub fn deploy_with<R: Rng + ?Sized>(
        n: usize,
        field: Field,
        base_station: Position,
        radio_range: f64,
        rng: &mut R,
    ) -> Self {
        let positions = (0..n)
            .map(|_| {
                let x = rng.gen_range(0.0..=field.width);
                let y = rng.gen_range(0.0..=field.height);
                Position::new(x, y)
            })
            .collect();
        Self::build(positions, base_station, radio_range, field)
    }

    /// Builds a topology from explicit positions, validating bounds.
    pub fn from_positions(
        positions: Vec<Position>,
        base_station: Position,
        radio_range: f64,
        field: Field,
    ) -> Result<Self, TopologyError> {
        if !radio_range.is_finite() || radio_range <= 0.0 {
            return Err(TopologyError::InvalidRange(radio_range));
        }
        if !(field.width > 0.0 && field.height > 0.0) {
            return Err(TopologyError::InvalidField {
                width: field.width,
                height: field.height,
            });
        }
        if positions.is_empty() {
            return Err(TopologyError::Empty);
        }
        if let Some((id, p)) = positions.iter().enumerate().find(|(_, p)| !field.contains(**p)) {
            return Err(TopologyError::OutOfField { id, x: p.x, y: p.y });
        }
        Ok(Self::build(positions, base_station, radio_range, field))
    }

    fn build(positions: Vec<Position>, base_station: Position, radio_range: f64, field: Field) -> Self {
        let n = positions.len();
        let mut neighbors = vec![Vec::new(); n];
        for i in 0..n {
            for j in (i + 1)..n {
                if positions[i].distance(&positions[j]) <= radio_range {
                    neighbors[i].push(j);
                    neighbors[j].push(i);
                }
            }
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        Self {
            positions,
            base_station,
            radio_range,
            field,
            neighbors,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Position] {
        &self.positions
    }

    pub fn position(&self, id: NodeId) -> Position {
        self.positions[id]
    }

    pub fn base_station(&self) -> Position {
        self.base_station
    }

    pub fn radio_range(&self) -> f64 {
        self.radio_range
    }

    pub fn field(&self) -> Field {
        self.field
    }

    /// Nodes within radio range of `id`, excluding `id`, in ascending order.
    pub fn one_hop_neighbors(&self, id: NodeId) -> &[NodeId] {
        &self.neighbors[id]
    }

    pub fn distance_between(&self, a: NodeId, b: NodeId) -> f64 {
        self.positions[a].distance(&self.positions[b])
    }

    pub fn distance_to_bs(&self, id: NodeId) -> f64 {
        self.positions[id].distance(&self.base_station)
    }

    pub fn bs_in_range(&self, id: NodeId) -> bool {
        self.distance_to_bs(id) <= self.radio_range
    }

    /// Serializes as a header line `bs,<x>,<y>,<range>,<width>,<height>`
    /// followed by one `id,x,y` line per node. Floats use the shortest
    /// representation that round-trips exactly.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let bs = self.base_station;
        let _ = writeln!(
            out,
            "bs,{},{},{},{},{}",
            bs.x, bs.y, self.radio_range, self.field.width, self.field.height
        );
        for (id, p) in self.positions.iter().enumerate() {
            let _ = writeln!(out, "{id},{},{}", p.x, p.y);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, TopologyError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let (line_no, header) = lines.next().ok_or(TopologyError::Empty)?;
        let fields: Vec<&str> = header.split(',').map(str::trim).collect();
        if fields.len() != 6 || fields[0] != "bs" {
            return Err(TopologyError::Parse {
                line: line_no,
                reason: "expected header `bs,<x>,<y>,<range>,<width>,<height>`".into(),
            });
        }
        let nums = parse_floats(&fields[1..], line_no)?;
        let base_station = Position::new(nums[0], nums[1]);
        let radio_range = nums[2];
        let field = Field::new(nums[3], nums[4]);

        let mut positions = Vec::new();
        for (line_no, line) in lines {
            let parts: Vec<&str> = line.split(',').map(str::trim).collect();
            if parts.len() != 3 {
                return Err(TopologyError::Parse {
                    line: line_no,
                    reason: "expected `id,x,y`".into(),
                });
            }
            let id: usize = parts[0].parse().map_err(|_| TopologyError::Parse {
                line: line_no,
                reason: format!("bad node id `{}`", parts[0]),
            })?;
            if id != positions.len() {
                return Err(TopologyError::Parse {
                    line: line_no,
                    reason: format!(
                        "node ids must be dense and ordered; expected {}, got {id}",
                        positions.len()
                    ),
                });
            }
            let xy = parse_floats(&parts[1..], line_no)?;
            positions.push(Position::new(xy[0], xy[1]));
        }
        Self::from_positions(positions, base_station, radio_range, field)
    }
}

fn parse_floats(parts: &[&str], line: usize) -> Result<Vec<f64>, TopologyError> {
    parts
        .iter()
        .map(|s| {
            s.parse::<f64>().map_err(|_| TopologyError::Parse {
                line,
                reason: format!("bad number `{s}`"),
            })
        })
        .collect()
}
