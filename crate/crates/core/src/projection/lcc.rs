//! Lambert Conformal Conic, one standard parallel, ellipsoidal form.

use super::{GeoCoord, LccParams, ProjectionError, Result};
use crate::geometry::Coord;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

const MAX_ITERATIONS: usize = 25;
const CONVERGENCE_RAD: f64 = 1e-12;

/// Precomputed cone constants for one parameter set.
#[derive(Debug, Clone)]
pub struct LambertConic {
    params: LccParams,
    e: f64,
    /// cone constant, sin(lat_0)
    n: f64,
    /// a * F * k_0
    scale: f64,
    rho0: f64,
}

impl LambertConic {
    pub fn new(params: &LccParams) -> Result<Self> {
        params.validate()?;
        let e = params.ellipsoid.eccentricity();
        let phi0 = params.lat_0.to_radians();
        let n = phi0.sin();
        let m0 = msfn(phi0, e);
        let t0 = tsfn(phi0, e);
        let f = m0 / (n * t0.powf(n));
        let scale = params.ellipsoid.a * f * params.k_0;
        let rho0 = scale * t0.powf(n);
        Ok(Self { params: *params, e, n, scale, rho0 })
    }

    pub fn params(&self) -> &LccParams {
        &self.params
    }

    pub fn forward(&self, g: GeoCoord) -> Result<Coord> {
        let out_of_domain = || ProjectionError::OutOfDomain { lon: g.lon, lat: g.lat };
        if !g.is_valid() {
            return Err(out_of_domain());
        }
        let phi = g.lat.to_radians();
        let rho = if (phi.abs() - FRAC_PI_2).abs() < 1e-12 {
            if phi * self.n <= 0.0 {
                return Err(out_of_domain());
            }
            0.0
        } else {
            self.scale * tsfn(phi, self.e).powf(self.n)
        };
        if !rho.is_finite() {
            return Err(out_of_domain());
        }
        let theta = self.n * wrap_degrees(g.lon - self.params.lon_0).to_radians();
        Ok(Coord::new(
            self.params.false_easting + rho * theta.sin(),
            self.params.false_northing + self.rho0 - rho * theta.cos(),
        ))
    }

    pub fn inverse(&self, c: Coord) -> Result<GeoCoord> {
        if !c.is_finite() {
            return Err(ProjectionError::OutOfDomain { lon: c.x, lat: c.y });
        }
        let dx = c.x - self.params.false_easting;
        let dy = self.rho0 - (c.y - self.params.false_northing);
        let sign = self.n.signum();
        let rho = sign * dx.hypot(dy);
        let theta = (sign * dx).atan2(sign * dy);
        if rho == 0.0 {
            return Ok(GeoCoord::new(self.params.lon_0, 90.0 * sign));
        }
        let t = (rho / self.scale).powf(1.0 / self.n);

        // spherical closed form as the starting guess
        let mut phi = FRAC_PI_2 - 2.0 * t.atan();
        let half_e = 0.5 * self.e;
        let mut converged = false;
        for _ in 0..MAX_ITERATIONS {
            let es = self.e * phi.sin();
            let next = FRAC_PI_2 - 2.0 * (t * ((1.0 - es) / (1.0 + es)).powf(half_e)).atan();
            let delta = (next - phi).abs();
            phi = next;
            if delta < CONVERGENCE_RAD {
                converged = true;
                break;
            }
        }
        if !converged || !phi.is_finite() {
            return Err(ProjectionError::NoConvergence(MAX_ITERATIONS));
        }
        let lon = wrap_degrees((theta / self.n).to_degrees() + self.params.lon_0);
        Ok(GeoCoord::new(lon, phi.to_degrees()))
    }
}

fn msfn(phi: f64, e: f64) -> f64 {
    let s = phi.sin();
    phi.cos() / (1.0 - e * e * s * s).sqrt()
}

/// Conformal-latitude function t(phi).
fn tsfn(phi: f64, e: f64) -> f64 {
    let es = e * phi.sin();
    (FRAC_PI_4 - 0.5 * phi).tan() / ((1.0 - es) / (1.0 + es)).powf(0.5 * e)
}

fn wrap_degrees(d: f64) -> f64 {
    if (-180.0..=180.0).contains(&d) {
        d
    } else {
        let w = (d + 180.0).rem_euclid(360.0) - 180.0;
        if w == -180.0 && d > 0.0 {
            180.0
        } else {
            w
        }
    }
}

impl LccParams {
    /// Equivalent one-parallel parameters for a two-standard-parallel definition
    /// (false origin at `lat_origin`/`lon_origin`). The cone constant fixes the
    /// equivalent origin latitude, the scale follows from matching radii, and the
    /// false northing absorbs the shift between the two origins.
    pub fn from_two_parallels(
        ellipsoid: super::Ellipsoid,
        lat_origin: f64,
        lon_origin: f64,
        lat_1: f64,
        lat_2: f64,
        false_easting: f64,
        false_northing: f64,
    ) -> Result<LccParams> {
        ellipsoid.validate()?;
        let e = ellipsoid.eccentricity();
        let (p1, p2, pf) = (lat_1.to_radians(), lat_2.to_radians(), lat_origin.to_radians());
        if (p1 + p2).abs() < 1e-10 || p1.abs() >= FRAC_PI_2 || p2.abs() >= FRAC_PI_2 {
            return Err(ProjectionError::InvalidParams(format!("standard parallels {lat_1}, {lat_2}")));
        }
        let (m1, t1) = (msfn(p1, e), tsfn(p1, e));
        let n = if (p1 - p2).abs() < 1e-12 {
            p1.sin()
        } else {
            (m1.ln() - msfn(p2, e).ln()) / (t1.ln() - tsfn(p2, e).ln())
        };
        let f = m1 / (n * t1.powf(n));
        let r_origin = ellipsoid.a * f * tsfn(pf, e).powf(n);

        let pc = n.asin();
        let tc = tsfn(pc, e);
        let f1 = msfn(pc, e) / (n * tc.powf(n));
        let k_0 = f / f1;
        let r_c = ellipsoid.a * f * tc.powf(n);
        let params = LccParams {
            ellipsoid,
            lat_0: pc.to_degrees(),
            lon_0: lon_origin,
            k_0,
            false_easting,
            false_northing: false_northing + r_origin - r_c,
        };
        params.validate()?;
        Ok(params)
    }
}

pub fn lcc_forward(g: GeoCoord, p: &LccParams) -> Result<Coord> {
    LambertConic::new(p)?.forward(g)
}

pub fn lcc_inverse(c: Coord, p: &LccParams) -> Result<GeoCoord> {
    LambertConic::new(p)?.inverse(c)
}
