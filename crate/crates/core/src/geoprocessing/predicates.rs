use super::intersect;
use crate::geometry::{point_segment_distance, segments_cross_properly, Coord, Envelope, Geometry, Location, Region, EPS_COORD};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpatialPredicate {
    Intersects,
    Contains,
    Within,
}

impl SpatialPredicate {
    pub fn as_str(&self) -> &'static str {
        match self {
            SpatialPredicate::Intersects => "intersects",
            SpatialPredicate::Contains => "contains",
            SpatialPredicate::Within => "within",
        }
    }

    /// Whether `a <pred> b` holds.
    pub fn evaluate(&self, a: &Geometry, b: &Geometry) -> bool {
        match self {
            SpatialPredicate::Intersects => intersects(a, b),
            SpatialPredicate::Contains => contains(a, b),
            SpatialPredicate::Within => contains(b, a),
        }
    }
}

impl fmt::Display for SpatialPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SpatialPredicate {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "intersects" => Ok(SpatialPredicate::Intersects),
            "contains" => Ok(SpatialPredicate::Contains),
            "within" => Ok(SpatialPredicate::Within),
            _ => Err(format!("unknown predicate {s:?}")),
        }
    }
}

/// Points, segments and area of a geometry, plus one vertex per connected
/// part for containment probes.
struct Parts<'a> {
    points: Vec<Coord>,
    segments: Vec<(Coord, Coord)>,
    probes: Vec<Coord>,
    region: Option<&'a Region>,
}

fn parts(g: &Geometry) -> Parts<'_> {
    let mut p = Parts { points: Vec::new(), segments: Vec::new(), probes: Vec::new(), region: None };
    match g {
        Geometry::None => {}
        Geometry::Point(c) => p.points.push(*c),
        Geometry::MultiPoint(cs) => p.points.extend_from_slice(cs),
        Geometry::PolyLine(lines) => {
            for line in lines {
                p.probes.push(line[0]);
                p.segments.extend(line.windows(2).map(|w| (w[0], w[1])));
            }
        }
        Geometry::Region(r) => {
            for ring in r.rings() {
                p.probes.push(ring.coords()[0]);
                p.segments.extend(ring.edges());
            }
            p.region = Some(r);
        }
    }
    p
}

fn near_envelopes(a: &Geometry, b: &Geometry) -> Option<(Envelope, Envelope)> {
    let (ea, eb) = (a.envelope().ok()?, b.envelope().ok()?);
    ea.buffered(EPS_COORD).intersects(&eb).then_some((ea, eb))
}

fn segments_touch(p1: Coord, p2: Coord, q1: Coord, q2: Coord) -> bool {
    point_segment_distance(q1, p1, p2) <= EPS_COORD
        || point_segment_distance(q2, p1, p2) <= EPS_COORD
        || point_segment_distance(p1, q1, q2) <= EPS_COORD
        || point_segment_distance(p2, q1, q2) <= EPS_COORD
        || segments_cross_properly(p1, p2, q1, q2)
}

fn point_hits(c: Coord, p: &Parts<'_>) -> bool {
    p.points.iter().any(|q| q.approx_eq(&c, EPS_COORD))
        || p.segments.iter().any(|&(a, b)| point_segment_distance(c, a, b) <= EPS_COORD)
        || p.region.is_some_and(|r| r.locate(c) != Location::Outside)
}

/// Point-set intersection test; touching boundaries count.
pub fn intersects(a: &Geometry, b: &Geometry) -> bool {
    if near_envelopes(a, b).is_none() {
        return false;
    }
    let (pa, pb) = (parts(a), parts(b));
    pa.points.iter().chain(&pa.probes).any(|&c| point_hits(c, &pb))
        || pb.points.iter().chain(&pb.probes).any(|&c| point_hits(c, &pa))
        || pa.segments.iter().any(|&(p1, p2)| pb.segments.iter().any(|&(q1, q2)| segments_touch(p1, p2, q1, q2)))
}

/// Parameters along `p`-`q` where segments of `others` touch or cross it.
fn cut_params(p: Coord, q: Coord, others: &[(Coord, Coord)]) -> Vec<f64> {
    let (dx, dy) = (q.x - p.x, q.y - p.y);
    let len2 = dx * dx + dy * dy;
    let t = |c: Coord| ((c.x - p.x) * dx + (c.y - p.y) * dy) / len2;
    let mut ts = vec![0.0, 1.0];
    for &(a, b) in others {
        for c in [a, b] {
            if point_segment_distance(c, p, q) <= EPS_COORD {
                ts.push(t(c).clamp(0.0, 1.0));
            }
        }
        if segments_cross_properly(p, q, a, b) {
            let (sx, sy) = (b.x - a.x, b.y - a.y);
            let denom = dx * sy - dy * sx;
            ts.push((((a.x - p.x) * sy - (a.y - p.y) * sx) / denom).clamp(0.0, 1.0));
        }
    }
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    ts
}

fn lerp(p: Coord, q: Coord, t: f64) -> Coord {
    Coord::new(p.x + t * (q.x - p.x), p.y + t * (q.y - p.y))
}

/// Whether segment `p`-`q` lies inside or on `region`.
fn segment_in_region(p: Coord, q: Coord, region: &Region, boundary: &[(Coord, Coord)]) -> bool {
    let ts = cut_params(p, q, boundary);
    region.locate(p) != Location::Outside
        && region.locate(q) != Location::Outside
        && ts.windows(2).all(|w| region.locate(lerp(p, q, 0.5 * (w[0] + w[1]))) != Location::Outside)
}

/// Whether segment `p`-`q` is covered by the union of `lines`.
fn segment_on_lines(p: Coord, q: Coord, lines: &[(Coord, Coord)]) -> bool {
    let len = p.distance(&q);
    if len == 0.0 {
        return lines.iter().any(|&(a, b)| point_segment_distance(p, a, b) <= EPS_COORD);
    }
    let (dx, dy) = ((q.x - p.x) / len, (q.y - p.y) / len);
    let mut spans: Vec<(f64, f64)> = lines
        .iter()
        .filter(|&&(a, b)| {
            let off = |c: Coord| ((c.x - p.x) * dy - (c.y - p.y) * dx).abs();
            off(a) <= EPS_COORD && off(b) <= EPS_COORD
        })
        .map(|&(a, b)| {
            let s = |c: Coord| (c.x - p.x) * dx + (c.y - p.y) * dy;
            let (sa, sb) = (s(a), s(b));
            (sa.min(sb), sa.max(sb))
        })
        .collect();
    spans.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut reach = 0.0;
    for (lo, hi) in spans {
        if lo > reach + EPS_COORD {
            break;
        }
        reach = f64::max(reach, hi);
    }
    reach >= len - EPS_COORD
}

/// Whether `b` lies entirely inside or on `a`.
pub fn contains(a: &Geometry, b: &Geometry) -> bool {
    let Some((ea, eb)) = near_envelopes(a, b) else {
        return false;
    };
    if !ea.buffered(EPS_COORD).contains(&eb) {
        return false;
    }
    let (pa, pb) = (parts(a), parts(b));
    match pa.region {
        Some(ra) => match pb.region {
            Some(rb) => {
                let perimeter: f64 = pb.segments.iter().map(|(p, q)| p.distance(q)).sum();
                let lost = rb.area() - intersect(ra, rb).area();
                lost <= EPS_COORD * perimeter + 1e-12 * rb.area()
            }
            None => {
                pb.points.iter().all(|&c| ra.locate(c) != Location::Outside)
                    && pb.segments.iter().all(|&(p, q)| segment_in_region(p, q, ra, &pa.segments))
            }
        },
        None => {
            pb.region.is_none()
                && pb.points.iter().all(|&c| point_hits(c, &pa))
                && (pb.segments.is_empty() || pa.points.is_empty())
                && pb.segments.iter().all(|&(p, q)| segment_on_lines(p, q, &pa.segments))
        }
    }
}
