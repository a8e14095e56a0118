use super::{union_all, GeoprocessingError};
use crate::geometry::{Coord, Geometry, Polygon, Region, Ring};
use std::f64::consts::PI;

/// Unit vectors at `k * pi / (2q)` for `k` in `0..=4q`.
fn directions(q: u32) -> Vec<(f64, f64)> {
    let step = PI / (2.0 * q as f64);
    (0..=4 * q).map(|k| {
        let a = step * k as f64;
        (a.cos(), a.sin())
    })
    .collect()
}

fn polygon(coords: Vec<Coord>) -> Option<Region> {
    Ring::new(coords).ok().map(|r| Region::from(Polygon::from_exterior(r)))
}

fn disk(c: Coord, r: f64, dirs: &[(f64, f64)]) -> Option<Region> {
    let n = dirs.len() - 1;
    polygon(dirs[..n].iter().map(|&(dx, dy)| Coord::new(c.x + r * dx, c.y + r * dy)).collect())
}

/// Segment swept by a disk: two half-disk caps joined by straight flanks.
/// Cap vertices start at the perpendicular, so the caps of edges meeting at a
/// right angle share their vertices exactly.
fn stadium(a: Coord, b: Coord, r: f64, dirs: &[(f64, f64)]) -> Option<Region> {
    let len = a.distance(&b);
    if len == 0.0 {
        return disk(a, r, dirs);
    }
    let (ux, uy) = ((b.x - a.x) / len, (b.y - a.y) / len);
    // right-hand normal, rotated counter-clockwise through each cap
    let (rx, ry) = (uy, -ux);
    let half = (dirs.len() - 1) / 2;
    let rotate = |(c, s): (f64, f64), (vx, vy): (f64, f64)| (vx * c - vy * s, vx * s + vy * c);
    let mut coords = Vec::with_capacity(2 * half + 2);
    for &d in &dirs[..=half] {
        let (vx, vy) = rotate(d, (rx, ry));
        coords.push(Coord::new(b.x + r * vx, b.y + r * vy));
    }
    for &d in &dirs[..=half] {
        let (vx, vy) = rotate(d, (-rx, -ry));
        coords.push(Coord::new(a.x + r * vx, a.y + r * vy));
    }
    polygon(coords)
}

/// Expands `geom` by `distance`. Arcs are approximated by `q` vertices per
/// quadrant placed on the true circle.
pub fn buffer(geom: &Geometry, distance: f64, q: u32) -> Result<Region, GeoprocessingError> {
    if !(distance.is_finite() && distance > 0.0) {
        return Err(GeoprocessingError::NonPositiveDistance(distance));
    }
    if q == 0 {
        return Err(GeoprocessingError::InvalidSegments(q));
    }
    let dirs = directions(q);
    let pieces: Vec<Region> = match geom {
        Geometry::None => return Err(GeoprocessingError::EmptyGeometry),
        Geometry::Point(c) => return Ok(disk(*c, distance, &dirs).unwrap_or_default()),
        Geometry::MultiPoint(pts) => pts.iter().filter_map(|c| disk(*c, distance, &dirs)).collect(),
        Geometry::PolyLine(parts) => parts
            .iter()
            .flat_map(|part| part.windows(2))
            .filter_map(|w| stadium(w[0], w[1], distance, &dirs))
            .collect(),
        Geometry::Region(region) => std::iter::once(region.clone())
            .chain(region.rings().flat_map(|ring| ring.edges()).filter_map(|(a, b)| stadium(a, b, distance, &dirs)))
            .collect(),
    };
    Ok(union_all(pieces))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inscribed(q: u32, r: f64) -> f64 {
        2.0 * q as f64 * r * r * (PI / (2.0 * q as f64)).sin()
    }

    #[test]
    fn point_buffer_is_inscribed_polygon() {
        let b = buffer(&Geometry::point(3.0, -2.0).unwrap(), 1.0, 8).unwrap();
        assert_eq!(b.polygons()[0].outer().vertex_count(), 32);
        assert!((b.area() - 16.0 * (PI / 16.0).sin()).abs() < 1e-12);
    }

    #[test]
    fn square_buffer() {
        let sq = Geometry::from_region(Region::from(Polygon::rect(0.0, 0.0, 1.0, 1.0).unwrap()));
        let b = buffer(&sq, 1.0, 8).unwrap();
        assert_eq!(b.polygons().len(), 1);
        assert_eq!(b.hole_count(), 0);
        let want = 1.0 + 4.0 + inscribed(8, 1.0);
        assert!(((b.area() - want) / want).abs() < 1e-9, "{} vs {want}", b.area());
    }

    #[test]
    fn segment_buffer() {
        let seg = Geometry::polyline(vec![vec![Coord::new(0.0, 0.0), Coord::new(2.0, 0.0)]]).unwrap();
        let b = buffer(&seg, 0.5, 8).unwrap();
        let want = 2.0 * 2.0 * 0.5 + inscribed(8, 0.5);
        assert!(((b.area() - want) / want).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_arguments() {
        let p = Geometry::point(0.0, 0.0).unwrap();
        assert!(matches!(buffer(&p, 0.0, 8), Err(GeoprocessingError::NonPositiveDistance(_))));
        assert!(matches!(buffer(&p, -1.0, 8), Err(GeoprocessingError::NonPositiveDistance(_))));
        assert!(matches!(buffer(&p, 1.0, 0), Err(GeoprocessingError::InvalidSegments(0))));
        assert!(matches!(buffer(&Geometry::None, 1.0, 8), Err(GeoprocessingError::EmptyGeometry)));
    }
}
