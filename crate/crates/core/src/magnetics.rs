//! Biot–Savart fields of filamentary straight segments, square loops and a
//! square Helmholtz pair.
//!
//! Coordinate convention: the pair axis is `z`, loops are centred on it at
//! `z = ±spacing/2` with sides parallel to `x`/`y`. Everything is SI.

use std::f64::consts::PI;
use std::io::{self, Write};
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Vacuum permeability, T·m/A (classical exact value).
pub const MU0: f64 = 4.0e-7 * PI;

/// Perpendicular distance below which a query point counts as on the wire.
pub const WIRE_GUARD_M: f64 = 1e-12;

/// Centre-field magnitude below which uniformity is undefined.
pub const MIN_CENTER_FIELD_T: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum MagneticsError {
    #[error("query point ({}, {}, {}) m lies on a wire", .0.x, .0.y, .0.z)]
    PointOnWire(Point),
    #[error("field at the pair centre is below {MIN_CENTER_FIELD_T} T; uniformity undefined")]
    ZeroCenterField,
    #[error("invalid geometry: {0}")]
    InvalidGeometry(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Point) -> Point {
        Point::new(self.y * o.z - self.z * o.y, self.z * o.x - self.x * o.z, self.x * o.y - self.y * o.x)
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

/// Magnetic flux density in tesla.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FieldVector {
    pub bx: f64,
    pub by: f64,
    pub bz: f64,
}

impl FieldVector {
    pub const ZERO: FieldVector = FieldVector { bx: 0.0, by: 0.0, bz: 0.0 };

    pub const fn new(bx: f64, by: f64, bz: f64) -> Self {
        Self { bx, by, bz }
    }

    pub fn magnitude(self) -> f64 {
        (self.bx * self.bx + self.by * self.by + self.bz * self.bz).sqrt()
    }
}

impl Add for FieldVector {
    type Output = FieldVector;
    fn add(self, o: FieldVector) -> FieldVector {
        FieldVector::new(self.bx + o.bx, self.by + o.by, self.bz + o.bz)
    }
}

impl AddAssign for FieldVector {
    fn add_assign(&mut self, o: FieldVector) {
        *self = *self + o;
    }
}

impl Neg for FieldVector {
    type Output = FieldVector;
    fn neg(self) -> FieldVector {
        FieldVector::new(-self.bx, -self.by, -self.bz)
    }
}

impl Mul<f64> for FieldVector {
    type Output = FieldVector;
    fn mul(self, k: f64) -> FieldVector {
        FieldVector::new(self.bx * k, self.by * k, self.bz * k)
    }
}

/// A straight filament carrying `current` from `start` to `end`, wound
/// `turns` times (coincident filaments).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: Point,
    pub end: Point,
    pub current: f64,
    pub turns: u32,
}

/// Square loop in the plane `z = z_offset`, centred on the z-axis.
/// Positive current circulates counter-clockwise seen from `+z`, giving `+z`
/// field at the centre.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquareLoop {
    pub side: f64,
    pub z_offset: f64,
    pub current: f64,
    pub turns: u32,
}

/// Two identical series-aiding square loops at `z = ±spacing/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HelmholtzPair {
    pub side: f64,
    pub spacing: f64,
    pub turns: u32,
    pub current: f64,
}

impl HelmholtzPair {
    /// The prototype testbed coil: 840.4 mm side, 457.6 mm apart,
    /// 24 turns, 2.94 A.
    pub const TESTBED: HelmholtzPair = HelmholtzPair { side: 0.8404, spacing: 0.4576, turns: 24, current: 2.94 };

    pub fn validate(&self) -> Result<(), MagneticsError> {
        if !(self.side > 0.0 && self.side.is_finite()) {
            return Err(MagneticsError::InvalidGeometry("side must be positive"));
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(MagneticsError::InvalidGeometry("spacing must be positive"));
        }
        if self.turns == 0 {
            return Err(MagneticsError::InvalidGeometry("turns must be at least 1"));
        }
        if !self.current.is_finite() {
            return Err(MagneticsError::InvalidGeometry("current must be finite"));
        }
        Ok(())
    }

    /// Lower (`z = -d/2`) and upper (`z = +d/2`) loops.
    pub fn loops(&self) -> [SquareLoop; 2] {
        let h = 0.5 * self.spacing;
        [-h, h].map(|z_offset| SquareLoop { side: self.side, z_offset, current: self.current, turns: self.turns })
    }

    /// Side/spacing ratio `n` with `L = n·d`.
    pub fn ratio(&self) -> f64 {
        self.side / self.spacing
    }
}

impl SquareLoop {
    /// The four sides, traversed head-to-tail counter-clockwise from `+z`.
    pub fn segments(&self) -> [Segment; 4] {
        let h = 0.5 * self.side;
        let z = self.z_offset;
        let c = [Point::new(h, -h, z), Point::new(h, h, z), Point::new(-h, h, z), Point::new(-h, -h, z)];
        std::array::from_fn(|i| Segment { start: c[i], end: c[(i + 1) % 4], current: self.current, turns: self.turns })
    }
}

/// Field of a finite straight segment:
/// `N·μ0·I/(4π·a)·(cosθ1 + cosθ2)` along `l × r1`, where `a` is the
/// perpendicular distance to the segment's line and θ1, θ2 are the angles
/// subtended at the two ends.
pub fn segment_field(seg: &Segment, q: Point) -> Result<FieldVector, MagneticsError> {
    // Evaluate in a canonical endpoint order so that reversing a segment
    // negates its field bit-for-bit.
    let key = |p: Point| (p.x, p.y, p.z);
    if key(seg.end) < key(seg.start) {
        let flipped = Segment { start: seg.end, end: seg.start, current: -seg.current, turns: seg.turns };
        return segment_field(&flipped, q);
    }
    let l = seg.end - seg.start;
    let r1 = q - seg.start;
    let r2 = q - seg.end;
    let l_len = l.norm();
    if l_len == 0.0 {
        return Err(MagneticsError::InvalidGeometry("segment start equals end"));
    }
    let c = l.cross(r1);
    let c2 = c.dot(c);
    let a = c2.sqrt() / l_len;
    if a <= WIRE_GUARD_M {
        return Err(MagneticsError::PointOnWire(q));
    }
    // cosθ1 + cosθ2 = l̂·r1/|r1| − l̂·r2/|r2|; folding 1/(a·|l|) into c/|c|².
    let angular = l.dot(r1) / r1.norm() - l.dot(r2) / r2.norm();
    let k = f64::from(seg.turns) * MU0 * seg.current / (4.0 * PI) * angular / c2;
    Ok(FieldVector::new(c.x * k, c.y * k, c.z * k))
}

pub fn square_loop_field(lp: &SquareLoop, q: Point) -> Result<FieldVector, MagneticsError> {
    let mut b = FieldVector::ZERO;
    for seg in &lp.segments() {
        b += segment_field(seg, q)?;
    }
    Ok(b)
}

pub fn pair_field(pair: &HelmholtzPair, q: Point) -> Result<FieldVector, MagneticsError> {
    let [lower, upper] = pair.loops();
    Ok(square_loop_field(&lower, q)? + square_loop_field(&upper, q)?)
}

/// Closed-form z-field on the pair axis.
pub fn onaxis_field(pair: &HelmholtzPair, z: f64) -> f64 {
    let h = 0.5 * pair.side;
    let h2 = h * h;
    let prefactor = 2.0 * f64::from(pair.turns) * MU0 * pair.current / PI;
    let single = |dz: f64| {
        let dz2 = dz * dz;
        prefactor * h2 / ((h2 + dz2) * (2.0 * h2 + dz2).sqrt())
    };
    let half = 0.5 * pair.spacing;
    single(z - half) + single(z + half)
}

/// Which field quantity the uniformity ratio compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UniformityMode {
    /// `|bz|` only — the quantity the single-axis testbed controls.
    #[default]
    ZComponent,
    /// Full vector magnitude (exploratory).
    Magnitude,
}

impl UniformityMode {
    fn measure(self, b: FieldVector) -> f64 {
        match self {
            UniformityMode::ZComponent => b.bz.abs(),
            UniformityMode::Magnitude => b.magnitude(),
        }
    }
}

/// Percent deviation of the z-field at `q` from the centre value.
pub fn uniformity(pair: &HelmholtzPair, q: Point) -> Result<f64, MagneticsError> {
    uniformity_with(pair, q, UniformityMode::ZComponent)
}

pub fn uniformity_with(pair: &HelmholtzPair, q: Point, mode: UniformityMode) -> Result<f64, MagneticsError> {
    let b0 = mode.measure(pair_field(pair, Point::ORIGIN)?);
    if b0 < MIN_CENTER_FIELD_T {
        return Err(MagneticsError::ZeroCenterField);
    }
    let bq = mode.measure(pair_field(pair, q)?);
    Ok(100.0 * (bq - b0) / b0)
}

/// Evenly spaced samples from `min` to `max` inclusive; `count == 1` gives
/// `min` alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl GridAxis {
    pub const fn fixed(v: f64) -> Self {
        Self { min: v, max: v, count: 1 }
    }

    pub fn value(&self, i: usize) -> f64 {
        if self.count <= 1 {
            self.min
        } else {
            self.min + (self.max - self.min) * i as f64 / (self.count - 1) as f64
        }
    }
}

/// Rectangular sampling grid, row-major with `z` varying fastest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x: GridAxis,
    pub y: GridAxis,
    pub z: GridAxis,
}

impl GridSpec {
    pub fn len(&self) -> usize {
        self.x.count * self.y.count * self.z.count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, index: usize) -> Point {
        let iz = index % self.z.count;
        let iy = (index / self.z.count) % self.y.count;
        let ix = index / (self.z.count * self.y.count);
        Point::new(self.x.value(ix), self.y.value(iy), self.z.value(iz))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub point: Point,
    pub field: FieldVector,
    pub uniformity_pct: f64,
}

/// Field and z-uniformity at every grid point, in grid order.
pub fn field_map(pair: &HelmholtzPair, grid: &GridSpec) -> Result<Vec<FieldSample>, MagneticsError> {
    pair.validate()?;
    let b0 = pair_field(pair, Point::ORIGIN)?.bz.abs();
    if b0 < MIN_CENTER_FIELD_T {
        return Err(MagneticsError::ZeroCenterField);
    }
    (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let point = grid.point(i);
            let field = pair_field(pair, point)?;
            let uniformity_pct = 100.0 * (field.bz.abs() - b0) / b0;
            Ok(FieldSample { point, field, uniformity_pct })
        })
        .collect()
}

pub const FIELD_MAP_HEADER: &str = "x_m,y_m,z_m,bx_T,by_T,bz_T,uniformity_pct";

pub fn write_field_map_csv<W: Write>(mut out: W, samples: &[FieldSample]) -> io::Result<()> {
    writeln!(out, "{FIELD_MAP_HEADER}")?;
    for s in samples {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            s.point.x, s.point.y, s.point.z, s.field.bx, s.field.by, s.field.bz, s.uniformity_pct
        )?;
    }
    Ok(())
}
