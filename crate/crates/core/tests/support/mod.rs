//! Generators and brute-force oracles shared by the integration tests and the
//! workspace acceptance suite.
#![allow(dead_code)]

pub mod mif_tables;

use parcel_forge::geometry::{point_segment_distance, Coord, Envelope, Polygon, Region, Ring};
use parcel_forge::projection::{AffineTransform, ControlPoint};
use parcel_forge::title::TitleKey;
use rand::Rng;
use std::f64::consts::TAU;

/// Star-shaped simple ring around `c`, radii in `[lo, hi] * r`.
pub fn star(rng: &mut impl Rng, c: Coord, r: f64, lo: f64, hi: f64, n: usize) -> Ring {
    let mut angles: Vec<f64> = (0..n).map(|i| (i as f64 + rng.gen_range(0.1..0.9)) * TAU / n as f64).collect();
    angles.sort_by(f64::total_cmp);
    let coords = angles
        .iter()
        .map(|a| {
            let rr = r * rng.gen_range(lo..hi);
            Coord::new(c.x + rr * a.cos(), c.y + rr * a.sin())
        })
        .collect();
    Ring::new(coords).unwrap()
}

/// One or two star polygons, some with a star hole near the centre.
pub fn random_region(rng: &mut impl Rng) -> Region {
    let parts = rng.gen_range(1..=2);
    let mut polys = Vec::new();
    for k in 0..parts {
        let c = Coord::new(rng.gen_range(-0.5..0.5) + 5.0 * k as f64, rng.gen_range(-1.0..1.0));
        let r = rng.gen_range(0.5..1.5);
        let n = rng.gen_range(5..16);
        let outer = star(rng, c, r, 0.5, 1.0, n);
        let holes = if rng.gen_bool(0.3) {
            let m = rng.gen_range(3..8);
            vec![star(rng, c, r, 0.05, 0.25, m)]
        } else {
            vec![]
        };
        polys.push(Polygon::new(outer, holes).unwrap());
    }
    Region::new(polys)
}

/// Even-odd point classifier over an edge soup, bucketed into horizontal
/// slabs so large sample counts stay cheap.
pub struct ParityIndex {
    y0: f64,
    dy: f64,
    slabs: Vec<Vec<(Coord, Coord)>>,
    band: f64,
}

impl ParityIndex {
    pub fn new<'a>(rings: impl IntoIterator<Item = &'a Ring>, band: f64) -> Self {
        let edges: Vec<(Coord, Coord)> = rings.into_iter().flat_map(|r| r.edges()).collect();
        let (lo, hi) = edges.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (a, b)| {
            (lo.min(a.y).min(b.y), hi.max(a.y).max(b.y))
        });
        let n = (edges.len() * 2).clamp(1, 4096);
        let (y0, dy) = (lo - band, ((hi - lo + 2.0 * band) / n as f64).max(f64::MIN_POSITIVE));
        let mut slabs = vec![Vec::new(); n];
        for &(a, b) in &edges {
            let s0 = (((a.y.min(b.y) - band - y0) / dy).floor().max(0.0) as usize).min(n - 1);
            let s1 = (((a.y.max(b.y) + band - y0) / dy).floor().max(0.0) as usize).min(n - 1);
            for slab in &mut slabs[s0..=s1] {
                slab.push((a, b));
            }
        }
        ParityIndex { y0, dy, slabs, band }
    }

    fn slab(&self, p: Coord) -> &[(Coord, Coord)] {
        let i = (p.y - self.y0) / self.dy;
        if i < 0.0 || i as usize >= self.slabs.len() {
            &[]
        } else {
            &self.slabs[i as usize]
        }
    }

    pub fn inside(&self, p: Coord) -> bool {
        let mut inside = false;
        for (a, b) in self.slab(p) {
            if (a.y > p.y) != (b.y > p.y) && p.x < a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x) {
                inside = !inside;
            }
        }
        inside
    }

    /// Within the band of some edge.
    pub fn near(&self, p: Coord) -> bool {
        self.slab(p).iter().any(|&(a, b)| point_segment_distance(p, a, b) <= self.band)
    }
}

/// Plain ray casting over every edge, no boundary handling.
pub fn ray_cast(rings: &[&Ring], p: Coord) -> bool {
    let mut inside = false;
    for ring in rings {
        for (a, b) in ring.edges() {
            if (a.y > p.y) != (b.y > p.y) && p.x < a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x) {
                inside = !inside;
            }
        }
    }
    inside
}

pub fn random_point_in(rng: &mut impl Rng, env: &Envelope) -> Coord {
    Coord::new(rng.gen_range(env.min_x..=env.max_x), rng.gen_range(env.min_y..=env.max_y))
}

fn digits(rng: &mut impl Rng, min: usize, max: usize) -> String {
    let n = rng.gen_range(min..=max);
    (0..n).map(|_| char::from(b'0' + rng.gen_range(0..10))).collect()
}

/// Valid title key: optional 1-3 digit conservation, any nature letter,
/// number and index with occasional leading zeros.
pub fn random_title_key(rng: &mut impl Rng) -> TitleKey {
    let conservation = rng.gen_bool(0.6).then(|| digits(rng, 1, 3));
    let nature = char::from(b'A' + rng.gen_range(0..26));
    let number = loop {
        let mut n = digits(rng, 1, 7);
        if rng.gen_bool(0.2) {
            n.insert(0, '0');
        }
        if n.trim_start_matches('0') != "" {
            break n;
        }
    };
    let index = digits(rng, 1, 4);
    TitleKey::new(conservation.as_deref(), nature, &number, &index).unwrap()
}

pub fn random_affine(rng: &mut impl Rng) -> AffineTransform {
    loop {
        let t = AffineTransform {
            a: rng.gen_range(-50.0..50.0),
            b: rng.gen_range(-5.0..5.0),
            c: rng.gen_range(-1e6..1e6),
            d: rng.gen_range(-5.0..5.0),
            e: rng.gen_range(-50.0..50.0),
            f: rng.gen_range(-1e6..1e6),
        };
        if t.determinant().abs() > 1e-2 {
            return t;
        }
    }
}

pub fn control_points(rng: &mut impl Rng, t: &AffineTransform, n: usize, noise: f64) -> Vec<ControlPoint> {
    (0..n)
        .map(|_| {
            let (col, row) = (rng.gen_range(0.0..4000.0), rng.gen_range(0.0..4000.0));
            let w = t.apply(col, row);
            let (nx, ny) = if noise > 0.0 { (rng.gen_range(-noise..noise), rng.gen_range(-noise..noise)) } else { (0.0, 0.0) };
            ControlPoint::new(col, row, w.x + nx, w.y + ny)
        })
        .collect()
}

fn det3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Least-squares affine through the normal equations, solved by Cramer's
/// rule on pixel coordinates centred at their mean.
pub fn normal_equations_fit(points: &[ControlPoint]) -> AffineTransform {
    let n = points.len() as f64;
    let mc = points.iter().map(|p| p.col).sum::<f64>() / n;
    let mr = points.iter().map(|p| p.row).sum::<f64>() / n;
    let mut m = [[0.0; 3]; 3];
    let (mut rx, mut ry) = ([0.0; 3], [0.0; 3]);
    for p in points {
        let v = [p.col - mc, p.row - mr, 1.0];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += v[i] * v[j];
            }
            rx[i] += v[i] * p.x;
            ry[i] += v[i] * p.y;
        }
    }
    let solve = |rhs: [f64; 3]| -> [f64; 3] {
        let d = det3(m);
        let mut out = [0.0; 3];
        for (k, o) in out.iter_mut().enumerate() {
            let mut mk = m;
            for i in 0..3 {
                mk[i][k] = rhs[i];
            }
            *o = det3(mk) / d;
        }
        out
    };
    let [a, b, c0] = solve(rx);
    let [d, e, f0] = solve(ry);
    AffineTransform { a, b, c: c0 - a * mc - b * mr, d, e, f: f0 - d * mc - e * mr }
}

pub fn rms(t: &AffineTransform, points: &[ControlPoint]) -> f64 {
    let ss: f64 = points.iter().map(|p| t.apply(p.col, p.row).distance(&Coord::new(p.x, p.y)).powi(2)).sum();
    (ss / points.len() as f64).sqrt()
}
