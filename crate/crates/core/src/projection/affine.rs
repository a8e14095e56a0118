//! Pixel-to-world affine transforms fitted from ground control points.

use super::{ProjectionError, Result};
use crate::geometry::Coord;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// `world = (a*col + b*row + c, d*col + e*row + f)`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineTransform {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
}

impl AffineTransform {
    pub const IDENTITY: AffineTransform = AffineTransform { a: 1.0, b: 0.0, c: 0.0, d: 0.0, e: 1.0, f: 0.0 };

    pub fn determinant(&self) -> f64 {
        self.a * self.e - self.b * self.d
    }

    pub fn is_invertible(&self) -> bool {
        let det = self.determinant();
        det.is_finite() && det != 0.0
    }

    pub fn apply(&self, col: f64, row: f64) -> Coord {
        Coord::new(self.a * col + self.b * row + self.c, self.d * col + self.e * row + self.f)
    }

    pub fn inverse(&self) -> Option<AffineTransform> {
        if !self.is_invertible() {
            return None;
        }
        let det = self.determinant();
        let (a, b, d, e) = (self.e / det, -self.b / det, -self.d / det, self.a / det);
        Some(AffineTransform { a, b, c: -(a * self.c + b * self.f), d, e, f: -(d * self.c + e * self.f) })
    }

    pub fn coefficients(&self) -> [f64; 6] {
        [self.a, self.b, self.c, self.d, self.e, self.f]
    }

    /// World-file layout: a, d, b, e, c, f, one value per line.
    pub fn to_world_file(&self) -> String {
        [self.a, self.d, self.b, self.e, self.c, self.f].iter().map(|v| format!("{v}\n")).collect()
    }

    pub fn from_world_file(text: &str) -> Option<AffineTransform> {
        let vals: Vec<f64> = text.lines().filter(|l| !l.trim().is_empty()).map(|l| l.trim().parse().ok()).collect::<Option<_>>()?;
        match vals[..] {
            [a, d, b, e, c, f] => Some(AffineTransform { a, b, c, d, e, f }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlPoint {
    pub col: f64,
    pub row: f64,
    pub x: f64,
    pub y: f64,
}

impl ControlPoint {
    pub fn new(col: f64, row: f64, x: f64, y: f64) -> Self {
        Self { col, row, x, y }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AffineFit {
    pub transform: AffineTransform,
    /// Euclidean distance between each control point's world position and its fitted image.
    pub residuals: Vec<f64>,
    pub rms: f64,
}

/// Relative threshold on the normal matrix eigenvalue ratio.
const SINGULAR_REL: f64 = 1e-12;

/// Least-squares fit of `world ≈ T(pixel)`; exact interpolation with three points.
pub fn fit_affine(points: &[ControlPoint]) -> Result<AffineFit> {
    let n = points.len();
    if n < 3 {
        return Err(ProjectionError::TooFewPoints(n));
    }
    if points.iter().any(|p| ![p.col, p.row, p.x, p.y].iter().all(|v| v.is_finite())) {
        return Err(ProjectionError::InvalidParams("non-finite control point".into()));
    }
    // Center and scale pixel coordinates so conditioning does not depend on raster size.
    let mc = points.iter().map(|p| p.col).sum::<f64>() / n as f64;
    let mr = points.iter().map(|p| p.row).sum::<f64>() / n as f64;
    let sc = points.iter().map(|p| (p.col - mc).abs()).fold(0.0, f64::max).max(1.0);
    let sr = points.iter().map(|p| (p.row - mr).abs()).fold(0.0, f64::max).max(1.0);

    let design = DMatrix::from_fn(n, 3, |i, j| match j {
        0 => (points[i].col - mc) / sc,
        1 => (points[i].row - mr) / sr,
        _ => 1.0,
    });
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smax > 0.0) || (smin / smax).powi(2) < SINGULAR_REL {
        return Err(ProjectionError::DegenerateConfiguration);
    }
    let solve = |rhs: DVector<f64>| -> Result<DVector<f64>> {
        svd.solve(&rhs, 0.0).map_err(|_| ProjectionError::DegenerateConfiguration)
    };
    let sx = solve(DVector::from_iterator(n, points.iter().map(|p| p.x)))?;
    let sy = solve(DVector::from_iterator(n, points.iter().map(|p| p.y)))?;

    let (a, b) = (sx[0] / sc, sx[1] / sr);
    let (d, e) = (sy[0] / sc, sy[1] / sr);
    let transform = AffineTransform { a, b, c: sx[2] - a * mc - b * mr, d, e, f: sy[2] - d * mc - e * mr };
    if !transform.is_invertible() {
        return Err(ProjectionError::DegenerateConfiguration);
    }
    let residuals: Vec<f64> = points
        .iter()
        .map(|p| transform.apply(p.col, p.row).distance(&Coord::new(p.x, p.y)))
        .collect();
    let rms = (residuals.iter().map(|r| r * r).sum::<f64>() / n as f64).sqrt();
    Ok(AffineFit { transform, residuals, rms })
}

pub fn apply_affine(t: &AffineTransform, col: f64, row: f64) -> Coord {
    t.apply(col, row)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_from_three_points() {
        let pts = [ControlPoint::new(0., 0., 0., 0.), ControlPoint::new(1., 0., 1., 0.), ControlPoint::new(0., 1., 0., 1.)];
        let fit = fit_affine(&pts).unwrap();
        for (got, want) in fit.transform.coefficients().iter().zip(AffineTransform::IDENTITY.coefficients()) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!(fit.rms < 1e-12);
    }

    #[test]
    fn translation_recovered() {
        let pts: Vec<_> = [(0., 0.), (10., 0.), (0., 10.), (7., 3.)]
            .iter()
            .map(|&(c, r)| ControlPoint::new(c, r, c + 100.0, r - 50.0))
            .collect();
        let fit = fit_affine(&pts).unwrap();
        let t = fit.transform;
        assert!((t.c - 100.0).abs() < 1e-9 && (t.f + 50.0).abs() < 1e-9);
        assert!((t.a - 1.0).abs() < 1e-9 && t.b.abs() < 1e-9 && t.d.abs() < 1e-9 && (t.e - 1.0).abs() < 1e-9);
        assert!(fit.rms < 1e-9);
    }

    #[test]
    fn collinear_is_degenerate() {
        let pts: Vec<_> = (0..5).map(|i| ControlPoint::new(i as f64, 2.0 * i as f64, 1.0, 2.0)).collect();
        assert_eq!(fit_affine(&pts), Err(ProjectionError::DegenerateConfiguration));
        assert_eq!(fit_affine(&pts[..2]), Err(ProjectionError::TooFewPoints(2)));
    }

    #[test]
    fn apply_examples() {
        assert_eq!(apply_affine(&AffineTransform::IDENTITY, 7., 9.), Coord::new(7., 9.));
        let scale = AffineTransform { a: 2.0, e: 2.0, ..AffineTransform::IDENTITY };
        assert_eq!(apply_affine(&scale, 3., 4.), Coord::new(6., 8.));
    }

    #[test]
    fn world_file_order() {
        let t = AffineTransform { a: 0.5, b: 0.1, c: 300000.0, d: -0.2, e: -0.5, f: 400000.0 };
        assert_eq!(t.to_world_file(), "0.5\n-0.2\n0.1\n-0.5\n300000\n400000\n");
        assert_eq!(AffineTransform::from_world_file(&t.to_world_file()), Some(t));
    }

    #[test]
    fn inverse_round_trip() {
        let t = AffineTransform { a: 0.5, b: 0.1, c: 300000.0, d: -0.2, e: -0.5, f: 400000.0 };
        let inv = t.inverse().unwrap();
        let w = t.apply(12.0, 34.0);
        let p = inv.apply(w.x, w.y);
        assert!((p.x - 12.0).abs() < 1e-6 && (p.y - 34.0).abs() < 1e-6);
    }
}
