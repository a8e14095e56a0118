//! Boolean overlay of regions by edge noding and classification.
//!
//! Both operands are broken into directed edges (interior on the left), noded
//! against each other, and every sub-edge is classified against the other
//! operand. The kept edges are linked back into rings taking the sharpest
//! left turn at every vertex, which separates rings that only touch at a point.

use crate::geometry::{
    orient, point_segment_distance, segments_cross_properly, Coord, Location, Polygon, Region, Ring, EPS_COORD,
};
use std::collections::{HashMap, HashSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    Intersection,
    Union,
}

pub fn intersect(a: &Region, b: &Region) -> Region {
    match (a.envelope(), b.envelope()) {
        (Some(ea), Some(eb)) if ea.buffered(EPS_COORD).intersects(&eb) => overlay(a, b, Op::Intersection),
        _ => Region::empty(),
    }
}

pub fn union(a: &Region, b: &Region) -> Region {
    match (a.envelope(), b.envelope()) {
        (None, _) => b.clone(),
        (_, None) => a.clone(),
        (Some(ea), Some(eb)) if !ea.buffered(EPS_COORD).intersects(&eb) => {
            let mut polygons = a.polygons().to_vec();
            polygons.extend_from_slice(b.polygons());
            Region::new(polygons)
        }
        _ => overlay(a, b, Op::Union),
    }
}

/// Union of many regions, merged pairwise as a balanced tree.
pub fn union_all(mut regions: Vec<Region>) -> Region {
    regions.retain(|r| !r.is_empty());
    while regions.len() > 1 {
        let mut next = Vec::with_capacity(regions.len() / 2 + 1);
        let mut iter = regions.into_iter();
        while let Some(first) = iter.next() {
            match iter.next() {
                Some(second) => next.push(union(&first, &second)),
                None => next.push(first),
            }
        }
        regions = next;
    }
    regions.pop().unwrap_or_default()
}

/// Welded point table: coordinates within `EPS_COORD` share one id.
struct Points {
    coords: Vec<Coord>,
    grid: HashMap<(i64, i64), Vec<usize>>,
}

const CELL: f64 = 4.0 * EPS_COORD;

impl Points {
    fn new() -> Self {
        Self { coords: Vec::new(), grid: HashMap::new() }
    }

    fn cell(c: Coord) -> (i64, i64) {
        ((c.x / CELL).floor() as i64, (c.y / CELL).floor() as i64)
    }

    fn weld(&mut self, c: Coord) -> usize {
        let (kx, ky) = Self::cell(c);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(ids) = self.grid.get(&(kx + dx, ky + dy)) {
                    if let Some(&id) = ids.iter().find(|&&id| self.coords[id].approx_eq(&c, EPS_COORD)) {
                        return id;
                    }
                }
            }
        }
        let id = self.coords.len();
        self.coords.push(c);
        self.grid.entry((kx, ky)).or_default().push(id);
        id
    }
}

struct Segment {
    a: usize,
    b: usize,
    operand: usize,
    splits: Vec<(f64, usize)>,
}

fn param(c: Coord, p: Coord, q: Coord) -> f64 {
    let (dx, dy) = (q.x - p.x, q.y - p.y);
    ((c.x - p.x) * dx + (c.y - p.y) * dy) / (dx * dx + dy * dy)
}

fn crossing_point(p1: Coord, p2: Coord, q1: Coord, q2: Coord) -> Coord {
    let (rx, ry) = (p2.x - p1.x, p2.y - p1.y);
    let (sx, sy) = (q2.x - q1.x, q2.y - q1.y);
    let denom = rx * sy - ry * sx;
    let t = ((q1.x - p1.x) * sy - (q1.y - p1.y) * sx) / denom;
    Coord::new(p1.x + t * rx, p1.y + t * ry)
}

fn build_segments(points: &mut Points, regions: [&Region; 2]) -> Vec<Segment> {
    let mut segments = Vec::new();
    for (operand, region) in regions.into_iter().enumerate() {
        for ring in region.rings() {
            for (p, q) in ring.edges() {
                let (a, b) = (points.weld(p), points.weld(q));
                if a != b {
                    segments.push(Segment { a, b, operand, splits: Vec::new() });
                }
            }
        }
    }
    segments
}

fn node(points: &mut Points, segments: &mut [Segment]) {
    let bounds: Vec<(f64, f64, f64, f64)> = segments
        .iter()
        .map(|s| {
            let (p, q) = (points.coords[s.a], points.coords[s.b]);
            (p.x.min(q.x), p.x.max(q.x), p.y.min(q.y), p.y.max(q.y))
        })
        .collect();
    let mut order: Vec<usize> = (0..segments.len()).collect();
    order.sort_by(|&i, &j| bounds[i].0.total_cmp(&bounds[j].0));

    for (k, &i) in order.iter().enumerate() {
        let bi = bounds[i];
        for &j in &order[k + 1..] {
            let bj = bounds[j];
            if bj.0 > bi.1 + EPS_COORD {
                break;
            }
            if bj.2 > bi.3 + EPS_COORD || bi.2 > bj.3 + EPS_COORD {
                continue;
            }
            node_pair(points, segments, i, j);
        }
    }
}

fn node_pair(points: &mut Points, segments: &mut [Segment], i: usize, j: usize) {
    let (ia, ib, ja, jb) = (segments[i].a, segments[i].b, segments[j].a, segments[j].b);
    let (p1, p2, q1, q2) = (points.coords[ia], points.coords[ib], points.coords[ja], points.coords[jb]);
    let mut touched = false;
    for (id, c) in [(ja, q1), (jb, q2)] {
        if id != ia && id != ib && point_segment_distance(c, p1, p2) <= EPS_COORD {
            segments[i].splits.push((param(c, p1, p2), id));
            touched = true;
        }
    }
    for (id, c) in [(ia, p1), (ib, p2)] {
        if id != ja && id != jb && point_segment_distance(c, q1, q2) <= EPS_COORD {
            segments[j].splits.push((param(c, q1, q2), id));
            touched = true;
        }
    }
    if !touched && segments_cross_properly(p1, p2, q1, q2) {
        let x = crossing_point(p1, p2, q1, q2);
        let id = points.weld(x);
        if id != ia && id != ib {
            segments[i].splits.push((param(x, p1, p2), id));
        }
        if id != ja && id != jb {
            segments[j].splits.push((param(x, q1, q2), id));
        }
    }
}

struct Edge {
    a: usize,
    b: usize,
    operand: usize,
}

fn split_segments(segments: Vec<Segment>) -> Vec<Edge> {
    let mut edges = Vec::new();
    for mut s in segments {
        s.splits.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut prev = s.a;
        for id in s.splits.iter().map(|&(_, id)| id).chain(std::iter::once(s.b)) {
            if id != prev {
                edges.push(Edge { a: prev, b: id, operand: s.operand });
                prev = id;
            }
        }
    }
    edges
}

fn keep_edge(op: Op, points: &Points, edge: &Edge, other: &Region, other_edges: &HashSet<(usize, usize)>) -> bool {
    if other_edges.contains(&(edge.a, edge.b)) {
        return edge.operand == 0;
    }
    if other_edges.contains(&(edge.b, edge.a)) {
        return false;
    }
    let (p, q) = (points.coords[edge.a], points.coords[edge.b]);
    let mid = Coord::new(0.5 * (p.x + q.x), 0.5 * (p.y + q.y));
    match (op, other.locate(mid)) {
        (Op::Intersection, Location::Inside) | (Op::Union, Location::Outside) => true,
        (Op::Intersection, Location::Outside) | (Op::Union, Location::Inside) => false,
        (_, Location::Boundary) => {
            // near-coincident but unmatched edges: probe just off each side
            let len = p.distance(&q);
            let delta = (len * 1e-3).max(1e3 * EPS_COORD);
            let (nx, ny) = (-(q.y - p.y) / len * delta, (q.x - p.x) / len * delta);
            match op {
                Op::Intersection => other.locate(Coord::new(mid.x + nx, mid.y + ny)) == Location::Inside,
                Op::Union => other.locate(Coord::new(mid.x - nx, mid.y - ny)) == Location::Outside,
            }
        }
    }
}

fn overlay(a: &Region, b: &Region, op: Op) -> Region {
    let mut points = Points::new();
    let mut segments = build_segments(&mut points, [a, b]);
    node(&mut points, &mut segments);
    let edges = split_segments(segments);

    let mut by_operand: [HashSet<(usize, usize)>; 2] = [HashSet::new(), HashSet::new()];
    for e in &edges {
        by_operand[e.operand].insert((e.a, e.b));
    }
    let operands = [a, b];
    let mut counts: HashMap<(usize, usize), i32> = HashMap::new();
    let mut kept_order = Vec::new();
    for e in &edges {
        let other = 1 - e.operand;
        if keep_edge(op, &points, e, operands[other], &by_operand[other]) {
            let n = counts.entry((e.a, e.b)).or_insert(0);
            if *n == 0 {
                kept_order.push((e.a, e.b));
            }
            *n += 1;
        }
    }
    let kept: Vec<(usize, usize)> = kept_order
        .into_iter()
        .filter(|&(u, v)| counts[&(u, v)] > counts.get(&(v, u)).copied().unwrap_or(0))
        .collect();

    build_region(&points.coords, &kept)
}

/// Links directed edges into rings and nests the rings into polygons.
fn build_region(coords: &[Coord], edges: &[(usize, usize)]) -> Region {
    let mut outgoing: HashMap<usize, Vec<usize>> = HashMap::new();
    for (i, &(u, _)) in edges.iter().enumerate() {
        outgoing.entry(u).or_default().push(i);
    }
    let next = |e: usize| -> Option<usize> {
        let (u, v) = edges[e];
        let (cu, cv) = (coords[u], coords[v]);
        let (dx, dy) = (cv.x - cu.x, cv.y - cu.y);
        outgoing.get(&v)?.iter().copied().max_by(|&x, &y| {
            let turn = |k: usize| {
                let w = coords[edges[k].1];
                let (ox, oy) = (w.x - cv.x, w.y - cv.y);
                (dx * oy - dy * ox).atan2(dx * ox + dy * oy)
            };
            turn(x).total_cmp(&turn(y))
        })
    };

    let mut used = vec![false; edges.len()];
    let mut outers: Vec<(Ring, f64)> = Vec::new();
    let mut holes: Vec<Ring> = Vec::new();
    for start in 0..edges.len() {
        if used[start] {
            continue;
        }
        let mut ring = vec![coords[edges[start].0]];
        let mut e = start;
        let closed = loop {
            used[e] = true;
            ring.push(coords[edges[e].1]);
            match next(e) {
                Some(n) if n == start => break true,
                Some(n) if !used[n] => e = n,
                _ => break false,
            }
        };
        if !closed {
            continue;
        }
        let ring = simplify(ring);
        let Ok(ring) = Ring::new(ring) else { continue };
        let area = ring.area_signed();
        if area > 0.0 {
            outers.push((ring, area));
        } else {
            holes.push(ring);
        }
    }

    let mut assigned: Vec<Vec<Ring>> = vec![Vec::new(); outers.len()];
    for hole in holes {
        let probe = hole_probe(&hole);
        let host = outers
            .iter()
            .enumerate()
            .filter(|(_, (outer, _))| outer.envelope().contains_coord(&probe) && outer.locate(probe) == Location::Inside)
            .min_by(|x, y| x.1 .1.total_cmp(&y.1 .1))
            .map(|(i, _)| i);
        if let Some(i) = host {
            assigned[i].push(hole);
        }
    }
    let mut polygons: Vec<Polygon> =
        outers.into_iter().zip(assigned).map(|((outer, _), holes)| Polygon::from_oriented(outer, holes)).collect();
    polygons.sort_by(|p, q| {
        let (ep, eq) = (p.envelope(), q.envelope());
        ep.min_x.total_cmp(&eq.min_x).then(ep.min_y.total_cmp(&eq.min_y))
    });
    Region::new(polygons)
}

/// A point strictly inside the area enclosed by a hole ring, close to its boundary.
fn hole_probe(hole: &Ring) -> Coord {
    let (p, q) = hole.edges().next().expect("ring has edges");
    Coord::new(0.5 * (p.x + q.x), 0.5 * (p.y + q.y))
}

/// Drops vertices lying on the straight line between their neighbours.
fn simplify(mut ring: Vec<Coord>) -> Vec<Coord> {
    ring.pop();
    let mut changed = true;
    while changed && ring.len() > 3 {
        changed = false;
        let n = ring.len();
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let (prev, cur, next) = (ring[(i + n - 1) % n], ring[i], ring[(i + 1) % n]);
            let forward = (cur.x - prev.x) * (next.x - cur.x) + (cur.y - prev.y) * (next.y - cur.y) > 0.0;
            let straight = orient(prev, cur, next) == 0.0 || point_segment_distance(cur, prev, next) <= EPS_COORD * 1e-3;
            if forward && straight && out.len() + (n - i) > 3 {
                changed = true;
                continue;
            }
            out.push(cur);
        }
        ring = out;
    }
    ring
}
