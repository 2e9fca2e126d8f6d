//! Virtual cell geometry.
//!
//! A square cell holds a centered block of square buildings on a regular
//! grid (Manhattan streets between them). Office buildings are further
//! partitioned into square offices by light interior walls; hotspot halls
//! have no partitions. Every point is either outdoor or inside exactly one
//! building (and, for offices, exactly one office).

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SimRng;

pub const DEFAULT_BS_HEIGHT: f64 = 25.0;
pub const DEFAULT_MS_HEIGHT: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum Environment {
    Office,
    Hotspot,
}

impl Environment {
    pub fn as_str(&self) -> &'static str {
        match self {
            Environment::Office => "office",
            Environment::Hotspot => "hotspot",
        }
    }

    pub fn building_side(&self) -> f64 {
        match self {
            Environment::Office => 50.0,
            Environment::Hotspot => 100.0,
        }
    }

    pub fn street_width(&self) -> f64 {
        match self {
            Environment::Office => 10.0,
            Environment::Hotspot => 20.0,
        }
    }

    pub fn office_side(&self) -> Option<f64> {
        match self {
            Environment::Office => Some(6.2),
            Environment::Hotspot => None,
        }
    }
}

impl std::fmt::Display for Environment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Environment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "office" => Ok(Environment::Office),
            "hotspot" => Ok(Environment::Hotspot),
            other => Err(Error::InvalidParameter(format!("unknown environment '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
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
}

/// Building grid coordinates (column, row).
pub type BuildingIndex = (u32, u32);
/// Office coordinates inside a building (column, row).
pub type OfficeIndex = (u32, u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Outdoor,
    Indoor {
        building: BuildingIndex,
        /// `None` in hotspot halls (no partitions).
        office: Option<OfficeIndex>,
    },
}

impl Location {
    pub fn is_indoor(&self) -> bool {
        matches!(self, Location::Indoor { .. })
    }

    pub fn building(&self) -> Option<BuildingIndex> {
        match self {
            Location::Indoor { building, .. } => Some(*building),
            Location::Outdoor => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Rect {
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellLayout {
    pub environment: Environment,
    pub cell_side: f64,
    pub building_side: f64,
    pub street_width: f64,
    pub office_side: Option<f64>,
    pub bs_position: Point,
    pub bs_height: f64,
    pub ms_height: f64,
    buildings_per_axis: u32,
    margin: f64,
}

impl CellLayout {
    /// Default layout for `environment` in a square cell of side `cell_side`.
    pub fn new(environment: Environment, cell_side: f64) -> Result<Self> {
        Self::with_dimensions(
            environment,
            cell_side,
            environment.building_side(),
            environment.street_width(),
            environment.office_side(),
        )
    }

    pub fn with_dimensions(
        environment: Environment,
        cell_side: f64,
        building_side: f64,
        street_width: f64,
        office_side: Option<f64>,
    ) -> Result<Self> {
        if !(cell_side > 0.0) || !(building_side > 0.0) || !(street_width >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "cell_side={cell_side}, building_side={building_side}, street_width={street_width}"
            )));
        }
        if let Some(o) = office_side {
            if !(o > 0.0) {
                return Err(Error::InvalidParameter(format!("office_side={o}")));
            }
        }
        let pitch = building_side + street_width;
        let k = (cell_side / pitch).floor() as u32;
        let block = if k == 0 {
            0.0
        } else {
            k as f64 * building_side + (k - 1) as f64 * street_width
        };
        Ok(Self {
            environment,
            cell_side,
            building_side,
            street_width,
            office_side,
            bs_position: Point::new(cell_side / 2.0, cell_side / 2.0),
            bs_height: DEFAULT_BS_HEIGHT,
            ms_height: DEFAULT_MS_HEIGHT,
            buildings_per_axis: k,
            margin: (cell_side - block) / 2.0,
        })
    }

    pub fn buildings_per_axis(&self) -> u32 {
        self.buildings_per_axis
    }

    pub fn building_count(&self) -> usize {
        (self.buildings_per_axis as usize).pow(2)
    }

    fn pitch(&self) -> f64 {
        self.building_side + self.street_width
    }

    fn building_rect(&self, b: BuildingIndex) -> Rect {
        let x0 = self.margin + b.0 as f64 * self.pitch();
        let y0 = self.margin + b.1 as f64 * self.pitch();
        Rect {
            x0,
            y0,
            x1: x0 + self.building_side,
            y1: y0 + self.building_side,
        }
    }

    fn axis_building(&self, v: f64) -> Option<(u32, f64)> {
        let rel = v - self.margin;
        if rel < 0.0 {
            return None;
        }
        let idx = (rel / self.pitch()).floor();
        if idx >= self.buildings_per_axis as f64 {
            return None;
        }
        let offset = rel - idx * self.pitch();
        (offset < self.building_side).then_some((idx as u32, offset))
    }

    fn office_axis(&self, offset: f64, side: f64) -> u32 {
        let last = ((self.building_side / side).ceil() as u32).saturating_sub(1);
        ((offset / side).floor() as u32).min(last)
    }

    pub fn classify_point(&self, p: Point) -> Location {
        match (self.axis_building(p.x), self.axis_building(p.y)) {
            (Some((bx, ox)), Some((by, oy))) => Location::Indoor {
                building: (bx, by),
                office: self
                    .office_side
                    .map(|s| (self.office_axis(ox, s), self.office_axis(oy, s))),
            },
            _ => Location::Outdoor,
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        (0.0..=self.cell_side).contains(&p.x) && (0.0..=self.cell_side).contains(&p.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlacementMode {
    Grid,
    UniformRandom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodePlacement {
    pub positions: Vec<Point>,
    pub locations: Vec<Location>,
    pub mode: PlacementMode,
    pub seed: u64,
}

impl NodePlacement {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn is_indoor(&self, node: usize) -> bool {
        self.locations[node].is_indoor()
    }
}

pub fn place_nodes(
    layout: &CellLayout,
    n: usize,
    mode: PlacementMode,
    seed: u64,
) -> Result<NodePlacement> {
    if n == 0 {
        return Err(Error::InvalidParameter("node count must be at least 1".into()));
    }
    let positions: Vec<Point> = match mode {
        PlacementMode::Grid => {
            let k = (n as f64).sqrt().round() as usize;
            if k * k != n {
                return Err(Error::NonSquareGrid(n));
            }
            let pitch = layout.cell_side / k as f64;
            (0..n)
                .map(|i| {
                    let (col, row) = (i % k, i / k);
                    Point::new((col as f64 + 0.5) * pitch, (row as f64 + 0.5) * pitch)
                })
                .collect()
        }
        PlacementMode::UniformRandom => {
            let mut rng = SimRng::seed_from_u64(seed);
            let side = layout.cell_side;
            (0..n)
                .map(|_| Point::new(rng.random::<f64>() * side, rng.random::<f64>() * side))
                .collect()
        }
    };
    let locations = positions.iter().map(|&p| layout.classify_point(p)).collect();
    Ok(NodePlacement {
        positions,
        locations,
        mode,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Indoor to indoor.
    IndoorA1,
    /// Indoor transmitter to outdoor receiver.
    IndoorToOutdoorA2,
    /// Outdoor to outdoor.
    OutdoorB1,
    /// Outdoor transmitter to indoor receiver.
    OutdoorToIndoorB4,
    /// Base station to an outdoor device.
    BsOutdoorC2,
    /// Base station to an indoor device.
    BsIndoorC4,
}

impl Scenario {
    pub fn is_bs(&self) -> bool {
        matches!(self, Scenario::BsOutdoorC2 | Scenario::BsIndoorC4)
    }

    /// Scenarios whose signal crosses an exterior building wall.
    pub fn crosses_exterior_wall(&self) -> bool {
        matches!(
            self,
            Scenario::IndoorToOutdoorA2 | Scenario::OutdoorToIndoorB4 | Scenario::BsIndoorC4
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Endpoint {
    Device(Point),
    BaseStation,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGeometry {
    pub distance: f64,
    pub scenario: Scenario,
    /// Interior light partitions crossed (indoor office links only).
    pub n_w: u32,
    /// Length of the segment inside the indoor endpoint's building.
    pub d_in: f64,
    /// Cosine of the incidence angle on the exterior wall (1 = normal).
    pub cos_theta: f64,
}

/// Entry parameter and wall-normal cosine of the segment `from -> to`,
/// where `to` lies inside `rect`.
fn wall_entry(rect: &Rect, from: Point, to: Point) -> Option<(f64, f64)> {
    let (dx, dy) = (to.x - from.x, to.y - from.y);
    let len = dx.hypot(dy);
    if len == 0.0 {
        return None;
    }
    let slab = |a: f64, d: f64, lo: f64, hi: f64| -> f64 {
        if d == 0.0 {
            f64::NEG_INFINITY
        } else {
            ((lo - a) / d).min((hi - a) / d)
        }
    };
    let tx = slab(from.x, dx, rect.x0, rect.x1);
    let ty = slab(from.y, dy, rect.y0, rect.y1);
    let (t, cos) = if tx >= ty {
        (tx, dx.abs() / len)
    } else {
        (ty, dy.abs() / len)
    };
    (t > 0.0).then_some((t, cos))
}

fn nearest_wall_distance(rect: &Rect, p: Point) -> f64 {
    (p.x - rect.x0)
        .min(rect.x1 - p.x)
        .min(p.y - rect.y0)
        .min(rect.y1 - p.y)
        .max(0.0)
}

/// Indoor portion and wall-incidence cosine for a segment from `outer` to
/// the indoor point `inner` in building `b`.
fn indoor_portion(layout: &CellLayout, b: BuildingIndex, outer: Point, inner: Point) -> (f64, f64) {
    let rect = layout.building_rect(b);
    let distance = outer.distance(&inner);
    match wall_entry(&rect, outer, inner) {
        Some((t, cos)) => (((1.0 - t) * distance).clamp(0.0, distance), cos),
        // Outer endpoint above or inside the footprint (rooftop base station).
        None => (nearest_wall_distance(&rect, inner).min(distance), 1.0),
    }
}

fn partitions_crossed(a: &Location, b: &Location) -> u32 {
    match (a, b) {
        (
            Location::Indoor {
                office: Some(oa), ..
            },
            Location::Indoor {
                office: Some(ob), ..
            },
        ) => oa.0.abs_diff(ob.0) + oa.1.abs_diff(ob.1),
        _ => 0,
    }
}

/// Classifies the link from transmitter `a` to receiver `b`.
pub fn classify_link(layout: &CellLayout, a: Endpoint, b: Endpoint) -> LinkGeometry {
    match (a, b) {
        (Endpoint::Device(pa), Endpoint::Device(pb)) => {
            classify_d2d(layout, pa, layout.classify_point(pa), pb, layout.classify_point(pb))
        }
        (Endpoint::BaseStation, Endpoint::Device(p)) | (Endpoint::Device(p), Endpoint::BaseStation) => {
            classify_bs(layout, p, layout.classify_point(p))
        }
        (Endpoint::BaseStation, Endpoint::BaseStation) => LinkGeometry {
            distance: 0.0,
            scenario: Scenario::BsOutdoorC2,
            n_w: 0,
            d_in: 0.0,
            cos_theta: 1.0,
        },
    }
}

/// Like [`classify_link`] with precomputed endpoint locations.
pub fn classify_d2d(
    layout: &CellLayout,
    tx: Point,
    tx_loc: Location,
    rx: Point,
    rx_loc: Location,
) -> LinkGeometry {
    let distance = tx.distance(&rx);
    let plain = |scenario, n_w| LinkGeometry {
        distance,
        scenario,
        n_w,
        d_in: 0.0,
        cos_theta: 1.0,
    };
    match (tx_loc.building(), rx_loc.building()) {
        (None, None) => plain(Scenario::OutdoorB1, 0),
        (Some(bt), Some(br)) if bt == br => {
            plain(Scenario::IndoorA1, partitions_crossed(&tx_loc, &rx_loc))
        }
        // Different buildings: indoor-to-outdoor over the whole distance,
        // exit portion measured in the transmitter's building.
        (Some(bt), Some(_)) => {
            let (d_in, cos_theta) = indoor_portion(layout, bt, rx, tx);
            LinkGeometry {
                distance,
                scenario: Scenario::IndoorToOutdoorA2,
                n_w: 0,
                d_in,
                cos_theta,
            }
        }
        (Some(bt), None) => {
            let (d_in, cos_theta) = indoor_portion(layout, bt, rx, tx);
            LinkGeometry {
                distance,
                scenario: Scenario::IndoorToOutdoorA2,
                n_w: 0,
                d_in,
                cos_theta,
            }
        }
        (None, Some(br)) => {
            let (d_in, cos_theta) = indoor_portion(layout, br, tx, rx);
            LinkGeometry {
                distance,
                scenario: Scenario::OutdoorToIndoorB4,
                n_w: 0,
                d_in,
                cos_theta,
            }
        }
    }
}

/// Base-station link to a device at `p`.
pub fn classify_bs(layout: &CellLayout, p: Point, loc: Location) -> LinkGeometry {
    let distance = layout.bs_position.distance(&p);
    match loc.building() {
        None => LinkGeometry {
            distance,
            scenario: Scenario::BsOutdoorC2,
            n_w: 0,
            d_in: 0.0,
            cos_theta: 1.0,
        },
        Some(b) => {
            let (d_in, cos_theta) = indoor_portion(layout, b, layout.bs_position, p);
            LinkGeometry {
                distance,
                scenario: Scenario::BsIndoorC4,
                n_w: 0,
                d_in,
                cos_theta,
            }
        }
    }
}
