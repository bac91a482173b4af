//! Arena geometry, device placement and the spatial activation law.
//!
//! A device at distance `d` from an event epicenter detects the event with
//! probability `e^{−d}` (if it is sensing at the time). Only devices within
//! the relevance radius contribute useful information about the event; the
//! radius is a closed ball, so a device exactly at `R_max` counts.

use std::io::Read;
use std::path::Path;

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpatialError {
    #[error("distance must be non-negative, got {0}")]
    NegativeDistance(f64),
    #[error("invalid arena: {0}")]
    InvalidArena(String),
    #[error("position {index} ({x}, {y}) lies outside the arena")]
    OutsideArena { index: usize, x: f64, y: f64 },
    #[error("placement must contain at least one device")]
    EmptyPlacement,
    #[error("placement file: {0}")]
    PlacementFile(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Mean of a set of points, `None` when empty.
    pub fn centroid(points: impl IntoIterator<Item = Point>) -> Option<Point> {
        let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
        for p in points {
            sx += p.x;
            sy += p.y;
            n += 1;
        }
        (n > 0).then(|| Point::new(sx / n as f64, sy / n as f64))
    }
}

/// Rectangular arena `[0, width] × [0, height]` with the relevance radius
/// used to decide which devices can report on an event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arena {
    width: f64,
    height: f64,
    relevance_radius: f64,
}

impl Arena {
    pub fn new(width: f64, height: f64, relevance_radius: f64) -> Result<Self, SpatialError> {
        for (name, v) in [("width", width), ("height", height), ("relevance_radius", relevance_radius)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(SpatialError::InvalidArena(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        Ok(Self { width, height, relevance_radius })
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn relevance_radius(&self) -> f64 {
        self.relevance_radius
    }

    pub fn diagonal(&self) -> f64 {
        self.width.hypot(self.height)
    }

    pub fn contains(&self, p: &Point) -> bool {
        (0.0..=self.width).contains(&p.x) && (0.0..=self.height).contains(&p.y)
    }

    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        Point::new(rng.random::<f64>() * self.width, rng.random::<f64>() * self.height)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventEpicenter {
    position: Point,
    onset_slot: u64,
}

impl EventEpicenter {
    pub fn new(arena: &Arena, position: Point, onset_slot: u64) -> Result<Self, SpatialError> {
        if !arena.contains(&position) {
            return Err(SpatialError::OutsideArena { index: 0, x: position.x, y: position.y });
        }
        Ok(Self { position, onset_slot })
    }

    pub fn position(&self) -> Point {
        self.position
    }

    pub fn onset_slot(&self) -> u64 {
        self.onset_slot
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DevicePlacement {
    positions: Vec<Point>,
}

impl DevicePlacement {
    pub fn new(arena: &Arena, positions: Vec<Point>) -> Result<Self, SpatialError> {
        if positions.is_empty() {
            return Err(SpatialError::EmptyPlacement);
        }
        if let Some((index, p)) = positions.iter().enumerate().find(|(_, p)| !arena.contains(p)) {
            return Err(SpatialError::OutsideArena { index, x: p.x, y: p.y });
        }
        Ok(Self { positions })
    }

    /// `n` devices placed independently and uniformly over the arena.
    pub fn uniform<R: Rng + ?Sized>(arena: &Arena, n: usize, rng: &mut R) -> Result<Self, SpatialError> {
        Self::new(arena, (0..n).map(|_| arena.sample_point(rng)).collect())
    }

    /// `n` devices on the cell centres of a `⌈√n⌉`-column grid, row-major.
    pub fn grid(arena: &Arena, n: usize) -> Result<Self, SpatialError> {
        if n == 0 {
            return Err(SpatialError::EmptyPlacement);
        }
        let cols = crate::ceil_sqrt(n);
        let rows = n.div_ceil(cols);
        let (dx, dy) = (arena.width / cols as f64, arena.height / rows as f64);
        let positions =
            (0..n).map(|i| Point::new((i % cols) as f64 * dx + dx / 2.0, (i / cols) as f64 * dy + dy / 2.0)).collect();
        Self::new(arena, positions)
    }

    /// Reads `device_id,x,y` rows (with header). Ids must be exactly
    /// `0..n` in any order.
    pub fn from_csv<Rd: Read>(arena: &Arena, reader: Rd) -> Result<Self, SpatialError> {
        let err = |m: String| SpatialError::PlacementFile(m);
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(|e| err(e.to_string()))?.clone();
        if headers.iter().collect::<Vec<_>>() != ["device_id", "x", "y"] {
            return Err(err(format!(
                "expected header `device_id,x,y`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut rows: Vec<(usize, Point)> = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| err(e.to_string()))?;
            let line = i + 2;
            let field = |j: usize| rec.get(j).unwrap_or("");
            let id: usize = field(0).parse().map_err(|_| err(format!("line {line}: bad device_id `{}`", field(0))))?;
            let x: f64 = field(1).parse().map_err(|_| err(format!("line {line}: bad x `{}`", field(1))))?;
            let y: f64 = field(2).parse().map_err(|_| err(format!("line {line}: bad y `{}`", field(2))))?;
            rows.push((id, Point::new(x, y)));
        }
        rows.sort_by_key(|(id, _)| *id);
        if let Some((pos, (id, _))) = rows.iter().enumerate().find(|(pos, (id, _))| pos != id) {
            return Err(err(format!(
                "device ids must be 0..{} without gaps or repeats; found {id} at position {pos}",
                rows.len()
            )));
        }
        Self::new(arena, rows.into_iter().map(|(_, p)| p).collect())
    }

    pub fn load_csv(arena: &Arena, path: &Path) -> Result<Self, SpatialError> {
        let file =
            std::fs::File::open(path).map_err(|e| SpatialError::PlacementFile(format!("{}: {e}", path.display())))?;
        Self::from_csv(arena, file)
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// `e^{−d}`.
pub fn activation_probability(d: f64) -> Result<f64, SpatialError> {
    if d.is_nan() || d < 0.0 {
        return Err(SpatialError::NegativeDistance(d));
    }
    Ok((-d).exp())
}

/// Devices that detect the event, each independently with probability
/// `e^{−d}`. Only devices passing `gate` (typically: currently sensing) are
/// considered, and only those consume randomness.
pub fn sample_activations<R: Rng + ?Sized>(
    epicenter: &EventEpicenter,
    placement: &DevicePlacement,
    gate: impl Fn(usize) -> bool,
    rng: &mut R,
) -> Vec<usize> {
    let center = epicenter.position;
    placement
        .positions
        .iter()
        .enumerate()
        .filter(|(i, _)| gate(*i))
        .filter_map(|(i, p)| {
            let prob = (-p.distance(&center)).exp();
            (rng.random::<f64>() < prob).then_some(i)
        })
        .collect()
}

/// Devices within `r_max` (inclusive) of the epicenter.
pub fn relevant_devices(epicenter: &EventEpicenter, placement: &DevicePlacement, r_max: f64) -> Vec<usize> {
    let center = epicenter.position;
    placement.positions.iter().enumerate().filter(|(_, p)| p.distance(&center) <= r_max).map(|(i, _)| i).collect()
}
