//! Planar vector geometry: coordinates, rings, polygons, regions and the
//! primitive computations every other module builds on.
//!
//! All values are immutable once constructed. Constructors normalize legacy
//! input (auto-closing rings, collapsing repeated vertices, fixing ring
//! orientation) and reject what cannot be repaired.

mod wkt;

pub use wkt::{format_number, from_wkt, to_wkt};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Coordinate equality and boundary snapping tolerance, in CRS units.
pub const EPS_COORD: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("geometry is empty")]
    EmptyGeometry,
    #[error("non-finite coordinate ({x}, {y})")]
    NonFinite { x: f64, y: f64 },
    #[error("degenerate ring: {0}")]
    DegenerateRing(String),
    #[error("ring boundaries {0} and {1} cross")]
    CrossingRings(usize, usize),
    #[error("hole {0} is not inside its outer ring")]
    HoleOutsideShell(usize),
    #[error("invalid geometry: {0}")]
    Invalid(String),
    #[error("WKT syntax error at {position}: {message}")]
    WktSyntax { position: usize, message: String },
}

pub type Result<T, E = GeometryError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coord {
    pub x: f64,
    pub y: f64,
}

impl Coord {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub(crate) fn check_finite(self) -> Result<Self> {
        if self.is_finite() {
            Ok(self)
        } else {
            Err(GeometryError::NonFinite { x: self.x, y: self.y })
        }
    }

    /// Chebyshev closeness, the metric used for vertex welding.
    pub fn approx_eq(&self, other: &Coord, eps: f64) -> bool {
        (self.x - other.x).abs() <= eps && (self.y - other.y).abs() <= eps
    }

    pub fn distance(&self, other: &Coord) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl From<(f64, f64)> for Coord {
    fn from((x, y): (f64, f64)) -> Self {
        Self { x, y }
    }
}

/// Axis-aligned bounding box. Intersection tests are closed: touching boxes intersect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Envelope {
    pub fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Self {
        debug_assert!(min_x <= max_x && min_y <= max_y);
        Self { min_x, min_y, max_x, max_y }
    }

    pub fn try_new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Result<Self> {
        let finite = [min_x, min_y, max_x, max_y].iter().all(|v| v.is_finite());
        if !finite || min_x > max_x || min_y > max_y {
            return Err(GeometryError::Invalid(format!(
                "invalid envelope ({min_x}, {min_y}, {max_x}, {max_y})"
            )));
        }
        Ok(Self { min_x, min_y, max_x, max_y })
    }

    pub fn of_point(c: Coord) -> Self {
        Self { min_x: c.x, min_y: c.y, max_x: c.x, max_y: c.y }
    }

    pub fn from_coords<'a>(coords: impl IntoIterator<Item = &'a Coord>) -> Option<Self> {
        let mut iter = coords.into_iter();
        let first = iter.next()?;
        let mut env = Self::of_point(*first);
        for c in iter {
            env.expand_to(*c);
        }
        Some(env)
    }

    pub fn expand_to(&mut self, c: Coord) {
        self.min_x = self.min_x.min(c.x);
        self.min_y = self.min_y.min(c.y);
        self.max_x = self.max_x.max(c.x);
        self.max_y = self.max_y.max(c.y);
    }

    pub fn union(&self, other: &Envelope) -> Envelope {
        Envelope {
            min_x: self.min_x.min(other.min_x),
            min_y: self.min_y.min(other.min_y),
            max_x: self.max_x.max(other.max_x),
            max_y: self.max_y.max(other.max_y),
        }
    }

    pub fn intersects(&self, other: &Envelope) -> bool {
        self.min_x <= other.max_x
            && other.min_x <= self.max_x
            && self.min_y <= other.max_y
            && other.min_y <= self.max_y
    }

    pub fn intersection(&self, other: &Envelope) -> Option<Envelope> {
        self.intersects(other).then(|| Envelope {
            min_x: self.min_x.max(other.min_x),
            min_y: self.min_y.max(other.min_y),
            max_x: self.max_x.min(other.max_x),
            max_y: self.max_y.min(other.max_y),
        })
    }

    pub fn contains(&self, other: &Envelope) -> bool {
        self.min_x <= other.min_x
            && self.min_y <= other.min_y
            && self.max_x >= other.max_x
            && self.max_y >= other.max_y
    }

    pub fn contains_coord(&self, c: &Coord) -> bool {
        c.x >= self.min_x && c.x <= self.max_x && c.y >= self.min_y && c.y <= self.max_y
    }

    pub fn buffered(&self, d: f64) -> Envelope {
        Envelope {
            min_x: self.min_x - d,
            min_y: self.min_y - d,
            max_x: self.max_x + d,
            max_y: self.max_y + d,
        }
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Coord {
        Coord::new(0.5 * (self.min_x + self.max_x), 0.5 * (self.min_y + self.max_y))
    }
}

/// Closed linear ring. The first coordinate is repeated at the end.
#[derive(Debug, Clone, PartialEq)]
pub struct Ring {
    coords: Vec<Coord>,
}

impl Ring {
    /// Builds a ring from legacy input: repeated consecutive vertices are
    /// collapsed and a missing closure is appended. Rings with fewer than three
    /// distinct vertices or (near) zero area are rejected.
    pub fn new(coords: Vec<Coord>) -> Result<Self> {
        let mut out: Vec<Coord> = Vec::with_capacity(coords.len() + 1);
        for c in coords {
            let c = c.check_finite()?;
            if out.last().is_some_and(|l| l.approx_eq(&c, EPS_COORD)) {
                continue;
            }
            out.push(c);
        }
        while out.len() > 1 && out[out.len() - 1].approx_eq(&out[0], EPS_COORD) {
            out.pop();
        }
        if out.len() < 3 {
            return Err(GeometryError::DegenerateRing(format!(
                "{} distinct vertices",
                out.len()
            )));
        }
        out.push(out[0]);
        let ring = Ring { coords: out };
        let area = ring.area_signed();
        if area.abs() < EPS_COORD * EPS_COORD {
            return Err(GeometryError::DegenerateRing(format!("area {area:e}")));
        }
        Ok(ring)
    }

    /// Builds a ring that must already be explicitly closed.
    pub fn closed(coords: Vec<Coord>) -> Result<Self> {
        match (coords.first(), coords.last()) {
            (Some(f), Some(l)) if coords.len() >= 2 && f.approx_eq(l, EPS_COORD) => Ring::new(coords),
            _ => Err(GeometryError::DegenerateRing("ring is not closed".into())),
        }
    }

    pub fn coords(&self) -> &[Coord] {
        &self.coords
    }

    /// Number of distinct vertices (closure not counted).
    pub fn vertex_count(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn edges(&self) -> impl Iterator<Item = (Coord, Coord)> + '_ {
        self.coords.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn area_signed(&self) -> f64 {
        ring_area_signed(self)
    }

    pub fn is_ccw(&self) -> bool {
        self.area_signed() > 0.0
    }

    pub fn reversed(&self) -> Ring {
        let mut coords = self.coords.clone();
        coords.reverse();
        Ring { coords }
    }

    fn oriented(self, ccw: bool) -> Ring {
        if self.is_ccw() == ccw {
            self
        } else {
            self.reversed()
        }
    }

    pub fn envelope(&self) -> Envelope {
        Envelope::from_coords(&self.coords).expect("ring has coordinates")
    }

    pub fn locate(&self, p: Coord) -> Location {
        locate_in_rings(p, std::slice::from_ref(self))
    }

    pub fn approx_eq(&self, other: &Ring, eps: f64) -> bool {
        self.coords.len() == other.coords.len()
            && self.coords.iter().zip(&other.coords).all(|(a, b)| a.approx_eq(b, eps))
    }
}

/// Shoelace signed area; positive for counter-clockwise rings.
pub fn ring_area_signed(ring: &Ring) -> f64 {
    signed_area(ring.coords())
}

/// Shoelace over a closed coordinate sequence. The sum is always taken in a
/// canonical traversal (from the lexicographically smallest vertex, towards
/// its smaller neighbour, relative to that vertex), so reversing a ring
/// negates the result exactly.
pub(crate) fn signed_area(coords: &[Coord]) -> f64 {
    let n = coords.len().saturating_sub(1);
    if n < 3 {
        return 0.0;
    }
    let lex = |a: &Coord, b: &Coord| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y));
    let start = (0..n).min_by(|&i, &j| lex(&coords[i], &coords[j])).unwrap();
    let next = coords[(start + 1) % n];
    let prev = coords[(start + n - 1) % n];
    let forward = lex(&next, &prev) != std::cmp::Ordering::Greater;
    let origin = coords[start];
    let at = |i: usize| {
        let k = if forward { (start + i) % n } else { (start + n - i % n) % n };
        let c = coords[k];
        (c.x - origin.x, c.y - origin.y)
    };
    let mut sum = 0.0;
    for i in 1..n - 1 {
        let (ax, ay) = at(i);
        let (bx, by) = at(i + 1);
        sum += ax * by - bx * ay;
    }
    if forward {
        0.5 * sum
    } else {
        -0.5 * sum
    }
}

/// Point location relative to an areal geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Location {
    Inside,
    Boundary,
    Outside,
}

/// Outer ring counter-clockwise, holes clockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    outer: Ring,
    holes: Vec<Ring>,
}

impl Polygon {
    pub fn new(outer: Ring, holes: Vec<Ring>) -> Result<Self> {
        let outer = outer.oriented(true);
        let mut oriented = Vec::with_capacity(holes.len());
        for (i, hole) in holes.into_iter().enumerate() {
            if hole.coords().iter().any(|c| outer.locate(*c) == Location::Outside) {
                return Err(GeometryError::HoleOutsideShell(i));
            }
            oriented.push(hole.oriented(false));
        }
        Ok(Polygon { outer, holes: oriented })
    }

    /// Rings already oriented and nested by construction.
    pub(crate) fn from_oriented(outer: Ring, holes: Vec<Ring>) -> Self {
        Polygon { outer, holes }
    }

    pub fn from_exterior(outer: Ring) -> Self {
        Polygon { outer: outer.oriented(true), holes: Vec::new() }
    }

    /// Axis-aligned rectangle; corner order does not matter.
    pub fn rect(x1: f64, y1: f64, x2: f64, y2: f64) -> Result<Self> {
        let (ax, bx) = (x1.min(x2), x1.max(x2));
        let (ay, by) = (y1.min(y2), y1.max(y2));
        let ring = Ring::new(vec![
            Coord::new(ax, ay),
            Coord::new(bx, ay),
            Coord::new(bx, by),
            Coord::new(ax, by),
        ])?;
        Ok(Polygon::from_exterior(ring))
    }

    pub fn outer(&self) -> &Ring {
        &self.outer
    }

    pub fn holes(&self) -> &[Ring] {
        &self.holes
    }

    pub fn rings(&self) -> impl Iterator<Item = &Ring> {
        std::iter::once(&self.outer).chain(self.holes.iter())
    }

    pub fn area(&self) -> f64 {
        self.rings().map(Ring::area_signed).sum()
    }

    pub fn envelope(&self) -> Envelope {
        self.outer.envelope()
    }

    pub fn locate(&self, p: Coord) -> Location {
        point_in_polygon(p, self)
    }

    pub fn approx_eq(&self, other: &Polygon, eps: f64) -> bool {
        self.holes.len() == other.holes.len()
            && self.rings().zip(other.rings()).all(|(a, b)| a.approx_eq(b, eps))
    }
}

/// Distance from `p` to the segment `a`-`b`.
pub fn point_segment_distance(p: Coord, a: Coord, b: Coord) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return p.distance(&a);
    }
    let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
    p.distance(&Coord::new(a.x + t * dx, a.y + t * dy))
}

/// Even-odd location over a set of rings, with an `EPS_COORD` boundary band.
pub(crate) fn locate_in_rings<'a>(p: Coord, rings: impl IntoIterator<Item = &'a Ring>) -> Location {
    let mut inside = false;
    for ring in rings {
        for (a, b) in ring.edges() {
            if point_segment_distance(p, a, b) <= EPS_COORD {
                return Location::Boundary;
            }
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
    }
    if inside {
        Location::Inside
    } else {
        Location::Outside
    }
}

pub fn point_in_polygon(p: Coord, poly: &Polygon) -> Location {
    if !poly.envelope().buffered(EPS_COORD).contains_coord(&p) {
        return Location::Outside;
    }
    locate_in_rings(p, poly.rings())
}

/// One or more non-overlapping polygons. May be empty as the result of an overlay.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Region {
    polygons: Vec<Polygon>,
}

impl Region {
    pub fn new(polygons: Vec<Polygon>) -> Self {
        Region { polygons }
    }

    pub fn empty() -> Self {
        Region::default()
    }

    pub fn polygons(&self) -> &[Polygon] {
        &self.polygons
    }

    pub fn into_polygons(self) -> Vec<Polygon> {
        self.polygons
    }

    pub fn is_empty(&self) -> bool {
        self.polygons.is_empty()
    }

    pub fn area(&self) -> f64 {
        self.polygons.iter().map(Polygon::area).sum()
    }

    pub fn rings(&self) -> impl Iterator<Item = &Ring> {
        self.polygons.iter().flat_map(Polygon::rings)
    }

    pub fn envelope(&self) -> Option<Envelope> {
        self.polygons.iter().map(Polygon::envelope).reduce(|a, b| a.union(&b))
    }

    pub fn locate(&self, p: Coord) -> Location {
        let mut result = Location::Outside;
        for poly in &self.polygons {
            match poly.locate(p) {
                Location::Boundary => return Location::Boundary,
                Location::Inside => result = Location::Inside,
                Location::Outside => {}
            }
        }
        result
    }

    pub fn hole_count(&self) -> usize {
        self.polygons.iter().map(|p| p.holes().len()).sum()
    }

    pub fn approx_eq(&self, other: &Region, eps: f64) -> bool {
        self.polygons.len() == other.polygons.len()
            && self.polygons.iter().zip(&other.polygons).all(|(a, b)| a.approx_eq(b, eps))
    }
}

impl From<Polygon> for Region {
    fn from(p: Polygon) -> Self {
        Region { polygons: vec![p] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GeometryKind {
    Point,
    MultiPoint,
    PolyLine,
    Region,
    None,
}

/// Payload arity (one point, at least one part of at least two vertices,
/// at least one polygon) is enforced by the constructors and parsers.
#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    Point(Coord),
    MultiPoint(Vec<Coord>),
    PolyLine(Vec<Vec<Coord>>),
    Region(Region),
    None,
}

impl Geometry {
    pub fn point(x: f64, y: f64) -> Result<Self> {
        Ok(Geometry::Point(Coord::new(x, y).check_finite()?))
    }

    pub fn multi_point(coords: Vec<Coord>) -> Result<Self> {
        if coords.is_empty() {
            return Err(GeometryError::Invalid("multipoint needs at least one point".into()));
        }
        for c in &coords {
            c.check_finite()?;
        }
        Ok(Geometry::MultiPoint(coords))
    }

    pub fn polyline(parts: Vec<Vec<Coord>>) -> Result<Self> {
        if parts.is_empty() {
            return Err(GeometryError::Invalid("polyline needs at least one part".into()));
        }
        for part in &parts {
            if part.len() < 2 {
                return Err(GeometryError::Invalid("polyline part needs two vertices".into()));
            }
            for c in part {
                c.check_finite()?;
            }
        }
        Ok(Geometry::PolyLine(parts))
    }

    pub fn region(region: Region) -> Result<Self> {
        if region.is_empty() {
            return Err(GeometryError::EmptyGeometry);
        }
        Ok(Geometry::Region(region))
    }

    /// Region geometry, or `None` when the region is empty.
    pub fn from_region(region: Region) -> Self {
        if region.is_empty() {
            Geometry::None
        } else {
            Geometry::Region(region)
        }
    }

    pub fn kind(&self) -> GeometryKind {
        match self {
            Geometry::Point(_) => GeometryKind::Point,
            Geometry::MultiPoint(_) => GeometryKind::MultiPoint,
            Geometry::PolyLine(_) => GeometryKind::PolyLine,
            Geometry::Region(_) => GeometryKind::Region,
            Geometry::None => GeometryKind::None,
        }
    }

    pub fn envelope(&self) -> Result<Envelope> {
        envelope(self)
    }

    pub fn as_region(&self) -> Option<&Region> {
        match self {
            Geometry::Region(r) => Some(r),
            _ => None,
        }
    }

    /// All vertices, ring closures included.
    pub fn coords(&self) -> Box<dyn Iterator<Item = &Coord> + '_> {
        match self {
            Geometry::Point(c) => Box::new(std::iter::once(c)),
            Geometry::MultiPoint(cs) => Box::new(cs.iter()),
            Geometry::PolyLine(parts) => Box::new(parts.iter().flatten()),
            Geometry::Region(r) => Box::new(r.rings().flat_map(|ring| ring.coords().iter())),
            Geometry::None => Box::new(std::iter::empty()),
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.coords().count()
    }

    pub fn part_count(&self) -> usize {
        match self {
            Geometry::Point(_) => 1,
            Geometry::MultiPoint(cs) => cs.len(),
            Geometry::PolyLine(parts) => parts.len(),
            Geometry::Region(r) => r.polygons().len(),
            Geometry::None => 0,
        }
    }

    pub fn hole_count(&self) -> usize {
        self.as_region().map_or(0, Region::hole_count)
    }

    pub fn area(&self) -> f64 {
        self.as_region().map_or(0.0, Region::area)
    }

    /// Maps every coordinate and rebuilds the geometry, re-normalizing ring
    /// orientation. The callback receives the running vertex index.
    pub fn try_map_coords<E>(
        &self,
        mut f: impl FnMut(usize, Coord) -> std::result::Result<Coord, E>,
    ) -> std::result::Result<Geometry, E>
    where
        E: From<GeometryError>,
    {
        let mut idx = 0usize;
        let mut map = |c: &Coord| -> std::result::Result<Coord, E> {
            let out = f(idx, *c)?;
            idx += 1;
            Ok(out)
        };
        Ok(match self {
            Geometry::Point(c) => Geometry::Point(map(c)?),
            Geometry::MultiPoint(cs) => {
                Geometry::MultiPoint(cs.iter().map(&mut map).collect::<std::result::Result<_, _>>()?)
            }
            Geometry::PolyLine(parts) => Geometry::PolyLine(
                parts
                    .iter()
                    .map(|p| p.iter().map(&mut map).collect())
                    .collect::<std::result::Result<_, _>>()?,
            ),
            Geometry::Region(r) => {
                let mut polys = Vec::with_capacity(r.polygons().len());
                for poly in r.polygons() {
                    let mut map_ring = |ring: &Ring| -> std::result::Result<Ring, E> {
                        let coords = ring.coords().iter().map(&mut map).collect::<std::result::Result<_, _>>()?;
                        Ok(Ring::new(coords)?)
                    };
                    let outer = map_ring(poly.outer())?;
                    let holes = poly.holes().iter().map(&mut map_ring).collect::<std::result::Result<_, _>>()?;
                    polys.push(Polygon::new(outer, holes)?);
                }
                Geometry::Region(Region::new(polys))
            }
            Geometry::None => Geometry::None,
        })
    }

    pub fn approx_eq(&self, other: &Geometry, eps: f64) -> bool {
        let close = |a: &[Coord], b: &[Coord]| {
            a.len() == b.len() && a.iter().zip(b).all(|(p, q)| p.approx_eq(q, eps))
        };
        match (self, other) {
            (Geometry::Point(a), Geometry::Point(b)) => a.approx_eq(b, eps),
            (Geometry::MultiPoint(a), Geometry::MultiPoint(b)) => close(a, b),
            (Geometry::PolyLine(a), Geometry::PolyLine(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(p, q)| close(p, q))
            }
            (Geometry::Region(a), Geometry::Region(b)) => a.approx_eq(b, eps),
            (Geometry::None, Geometry::None) => true,
            _ => false,
        }
    }
}

pub fn envelope(geom: &Geometry) -> Result<Envelope> {
    Envelope::from_coords(geom.coords()).ok_or(GeometryError::EmptyGeometry)
}

/// Groups rings into polygons by even-odd containment depth: rings at even
/// depth become outers and rings at odd depth become holes of their
/// immediate container. Orientation of the input does not matter.
pub fn classify_rings(rings: Vec<Ring>) -> Result<Vec<Polygon>> {
    let envs: Vec<Envelope> = rings.iter().map(Ring::envelope).collect();
    for i in 0..rings.len() {
        for j in (i + 1)..rings.len() {
            if envs[i].intersects(&envs[j]) && rings_cross(&rings[i], &rings[j]) {
                return Err(GeometryError::CrossingRings(i, j));
            }
        }
    }

    // contained_by[i] = rings that strictly contain ring i
    let mut contained_by: Vec<Vec<usize>> = vec![Vec::new(); rings.len()];
    for i in 0..rings.len() {
        for j in 0..rings.len() {
            if i != j && envs[j].contains(&envs[i]) && ring_inside(&rings[i], &rings[j]) {
                contained_by[i].push(j);
            }
        }
    }
    let depth: Vec<usize> = contained_by.iter().map(Vec::len).collect();

    let mut holes_of: Vec<Vec<usize>> = vec![Vec::new(); rings.len()];
    for i in 0..rings.len() {
        if depth[i] % 2 == 1 {
            let parent = contained_by[i]
                .iter()
                .copied()
                .max_by_key(|&j| depth[j])
                .expect("odd depth implies a container");
            holes_of[parent].push(i);
        }
    }

    let mut polygons = Vec::new();
    for i in 0..rings.len() {
        if depth[i] % 2 == 0 {
            let holes = holes_of[i].iter().map(|&h| rings[h].clone()).collect();
            polygons.push(Polygon::new(rings[i].clone(), holes)?);
        }
    }
    Ok(polygons)
}

/// Whether `inner` lies inside `outer`, assuming the boundaries do not cross.
fn ring_inside(inner: &Ring, outer: &Ring) -> bool {
    let mids = inner.edges().map(|(a, b)| Coord::new(0.5 * (a.x + b.x), 0.5 * (a.y + b.y)));
    for p in inner.coords().iter().copied().chain(mids) {
        match outer.locate(p) {
            Location::Inside => return true,
            Location::Outside => return false,
            Location::Boundary => continue,
        }
    }
    false
}

fn rings_cross(a: &Ring, b: &Ring) -> bool {
    for (p1, p2) in a.edges() {
        let ea = Envelope::from_coords(&[p1, p2]).unwrap();
        for (q1, q2) in b.edges() {
            let eb = Envelope::from_coords(&[q1, q2]).unwrap();
            if ea.intersects(&eb) && segments_cross_properly(p1, p2, q1, q2) {
                return true;
            }
        }
    }
    false
}

pub(crate) fn orient(a: Coord, b: Coord, c: Coord) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// True when the open interiors of the two segments cross at a single point.
/// Contacts within `EPS_COORD` of an endpoint do not count.
pub(crate) fn segments_cross_properly(p1: Coord, p2: Coord, q1: Coord, q2: Coord) -> bool {
    let near = |p: Coord, a: Coord, b: Coord| point_segment_distance(p, a, b) <= EPS_COORD;
    if near(p1, q1, q2) || near(p2, q1, q2) || near(q1, p1, p2) || near(q2, p1, p2) {
        return false;
    }
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    (d1 > 0.0) != (d2 > 0.0) && (d3 > 0.0) != (d4 > 0.0) && d1 != 0.0 && d2 != 0.0 && d3 != 0.0 && d4 != 0.0
}
