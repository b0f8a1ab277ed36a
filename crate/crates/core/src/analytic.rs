//! Closed-form RIS phase profiles.
//!
//! Far-field designs act on UPAs through the spatial frequencies `β_y, β_z`
//! of [`crate::grcs::beta`]. Near-field designs take element positions and
//! reference all path lengths to the RIS centroid `c`, so that
//! `ω_n = −κ Σ_{p∈{t,r}} (‖u_p − u_n‖ − ‖u_p − c‖)`. With the RIS centered at
//! the origin the reference is `‖u_p‖`.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{phase_delta_expanded, Angles, ArrayGeometry, Position3, UpaLayout, Wavelength};
use crate::grcs::beta;
use crate::profile::PhaseProfile;

pub use crate::profile::wrap_phase;

/// Coefficients of the separable quadratic profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticCoeffs {
    pub alpha_y: f64,
    pub gamma_y: f64,
    pub alpha_z: f64,
    pub gamma_z: f64,
}

impl QuadraticCoeffs {
    pub fn profile(&self, layout: &UpaLayout, wl: Wavelength) -> PhaseProfile {
        let k = wl.kappa();
        let omegas = (0..layout.len())
            .map(|n| {
                let (iy, iz) = layout.indices(n);
                let (y, z) = (iy as f64, iz as f64);
                -k * (self.alpha_y * y * y + self.gamma_y * y) - k * (self.alpha_z * z * z + self.gamma_z * z)
            })
            .collect();
        PhaseProfile::new(omegas).expect("finite coefficients give finite phases")
    }
}

fn require_upa(geom: &ArrayGeometry) -> Result<&UpaLayout> {
    geom.upa().ok_or(Error::InvalidParameter { name: "geometry", reason: "far-field designs need a UPA".into() })
}

/// Beamforming `ω_n = −κ(β_y n_y + β_z n_z)` for one angle pair.
pub fn linear_profile(geom: &ArrayGeometry, t: Angles, r: Angles, wl: Wavelength) -> Result<PhaseProfile> {
    let layout = require_upa(geom)?;
    let (by, bz) = beta(layout, t, r);
    Ok(QuadraticCoeffs { alpha_y: 0.0, gamma_y: by, alpha_z: 0.0, gamma_z: bz }.profile(layout, wl))
}

/// Wide far-field beam whose phase gradient sweeps the `β` range of `A_t × A_r`.
///
/// `γ_s = min β_s` and `α_s = (max β_s − γ_s) / (2N_s)`, extremized over the given samples.
pub fn quadratic_profile(geom: &ArrayGeometry, a_t: &[Angles], a_r: &[Angles], wl: Wavelength) -> Result<(PhaseProfile, QuadraticCoeffs)> {
    let layout = require_upa(geom)?;
    if a_t.is_empty() || a_r.is_empty() {
        return Err(Error::EmptyTargets);
    }
    let (mut y_lo, mut y_hi, mut z_lo, mut z_hi) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &t in a_t {
        for &r in a_r {
            let (by, bz) = beta(layout, t, r);
            y_lo = y_lo.min(by);
            y_hi = y_hi.max(by);
            z_lo = z_lo.min(bz);
            z_hi = z_hi.max(bz);
        }
    }
    let c = QuadraticCoeffs {
        alpha_y: (y_hi - y_lo) / (2.0 * layout.ny as f64),
        gamma_y: y_lo,
        alpha_z: (z_hi - z_lo) / (2.0 * layout.nz as f64),
        gamma_z: z_lo,
    };
    Ok((c.profile(layout, wl), c))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FocusVariant {
    Exact,
    /// Linear and quadratic terms of the path-length expansion about the RIS centroid.
    QuadraticApprox,
}

fn centroid(positions: &[Position3]) -> Result<Position3> {
    if positions.is_empty() {
        return Err(Error::InvalidParameter { name: "positions", reason: "RIS has no elements".into() });
    }
    Ok(positions.iter().fold(Position3::zeros(), |a, p| a + p) / positions.len() as f64)
}

/// `κ(‖u_p − u_n‖ − ‖u_p − c‖)` or its quadratic approximation.
fn relative_path_phase(u_p: &Position3, u_n: &Position3, c: &Position3, wl: Wavelength, variant: FocusVariant) -> Result<f64> {
    let d = (u_p - u_n).norm();
    if d == 0.0 {
        return Err(Error::Domain("focus point coincides with an RIS element".into()));
    }
    match variant {
        FocusVariant::Exact => Ok(wl.kappa() * (d - (u_p - c).norm())),
        FocusVariant::QuadraticApprox => {
            let e = phase_delta_expanded(&(u_p - c), &(c - u_n), wl)?;
            Ok(e.linear + e.quadratic)
        }
    }
}

/// Spherical-wavefront focusing from `u_t` onto `u_r`.
pub fn focusing_profile(positions: &[Position3], u_t: Position3, u_r: Position3, wl: Wavelength, variant: FocusVariant) -> Result<PhaseProfile> {
    let c = centroid(positions)?;
    let omegas = positions
        .iter()
        .map(|u| Ok(-(relative_path_phase(&u_t, u, &c, wl, variant)? + relative_path_phase(&u_r, u, &c, wl, variant)?)))
        .collect::<Result<Vec<_>>>()?;
    PhaseProfile::new(omegas)
}

/// Assigns each RIS point the target point it should focus on.
pub trait RegionMapping {
    fn map(&self, u: &Position3) -> Position3;
}

/// Rectangle map for a RIS in the y–z plane and a target area in the x–y plane:
/// RIS z covers the area's x-extent and RIS y its y-extent,
/// `M(u) = u_c + [R_x/L_z · (z − c_z), R_y/L_y · (y − c_y), 0]`.
///
/// `L_y`, `L_z` are the spans of element centers, so corner elements map to
/// area corners. A zero RIS span along an axis collapses that area axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectangleMapping {
    pub ris_center: Position3,
    pub span_y: f64,
    pub span_z: f64,
    pub u_c: Position3,
    pub r_x: f64,
    pub r_y: f64,
}

impl RectangleMapping {
    pub fn new(positions: &[Position3], u_c: Position3, r_x: f64, r_y: f64) -> Result<Self> {
        if !(r_x >= 0.0 && r_y >= 0.0 && r_x.is_finite() && r_y.is_finite()) {
            return Err(Error::InvalidParameter { name: "region", reason: format!("extents must be ≥ 0, got {r_x} x {r_y}") });
        }
        let c = centroid(positions)?;
        let lo = positions.iter().fold(Vector3::repeat(f64::INFINITY), |a, p| a.inf(p));
        let hi = positions.iter().fold(Vector3::repeat(f64::NEG_INFINITY), |a, p| a.sup(p));
        Ok(Self { ris_center: c, span_y: hi.y - lo.y, span_z: hi.z - lo.z, u_c, r_x, r_y })
    }
}

impl RegionMapping for RectangleMapping {
    fn map(&self, u: &Position3) -> Position3 {
        let d = u - self.ris_center;
        let sx = if self.span_z > 0.0 { self.r_x / self.span_z * d.z } else { 0.0 };
        let sy = if self.span_y > 0.0 { self.r_y / self.span_y * d.y } else { 0.0 };
        self.u_c + Position3::new(sx, sy, 0.0)
    }
}

/// Wide near-field illumination: element `n` focuses from `u_t` onto `M(u_n)`.
pub fn wide_near_profile(positions: &[Position3], u_t: Position3, mapping: &dyn RegionMapping, wl: Wavelength) -> Result<PhaseProfile> {
    let c = centroid(positions)?;
    let omegas = positions
        .iter()
        .map(|u| {
            let target = mapping.map(u);
            Ok(-(relative_path_phase(&u_t, u, &c, wl, FocusVariant::Exact)?
                + relative_path_phase(&target, u, &c, wl, FocusVariant::Exact)?))
        })
        .collect::<Result<Vec<_>>>()?;
    PhaseProfile::new(omegas)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{far_field_distance, quadratic_near_field_distance, upa_geometry};
    use crate::grcs::{linspace, response_far, response_near, worst_case_normalized, TargetSet};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn wl() -> Wavelength {
        Wavelength::from_ghz(28.0).unwrap()
    }

    fn half(wl: Wavelength) -> f64 {
        wl.meters() / 2.0
    }

    #[test]
    fn linear_zero_beta_is_flat() {
        let wl = wl();
        let g = upa_geometry(4, 3, half(wl), half(wl)).unwrap();
        let a = Angles::new(0.2, 0.4);
        let p = linear_profile(&g, a, a, wl).unwrap();
        assert!(p.omegas().iter().all(|&w| w == 0.0));
        let generic = ArrayGeometry::from_positions(g.positions().to_vec()).unwrap();
        assert!(linear_profile(&generic, a, a, wl).is_err());
    }

    #[test]
    fn quadratic_singleton_reduces_to_linear() {
        let wl = wl();
        let g = upa_geometry(5, 4, half(wl), half(wl)).unwrap();
        let (t, r) = (Angles::new(0.1, -0.3), Angles::new(-0.2, 0.6));
        let (q, c) = quadratic_profile(&g, &[t], &[r], wl).unwrap();
        assert_eq!(c.alpha_y, 0.0);
        assert_eq!(c.alpha_z, 0.0);
        assert_eq!(q, linear_profile(&g, t, r, wl).unwrap());
    }

    #[test]
    fn quadratic_coefficients_match_grid_extremization() {
        let wl = wl();
        let h = half(wl);
        let g = upa_geometry(20, 1, h, h).unwrap();
        let t = Angles::from_degrees(0.0, 200.0);
        let a_r: Vec<_> = linspace(-10.0, 10.0, 21).into_iter().map(|p| Angles::from_degrees(0.0, p)).collect();
        let (_, c) = quadratic_profile(&g, &[t], &a_r, wl).unwrap();
        // β_y = d_y (sin φ_t − sin φ_r) at θ = 0; sin is monotone on [−10°, 10°].
        let st = 200f64.to_radians().sin();
        let lo = h * (st - 10f64.to_radians().sin());
        let hi = h * (st + 10f64.to_radians().sin());
        assert!((c.gamma_y - lo).abs() < 1e-15);
        assert!((c.alpha_y - (hi - lo) / 40.0).abs() < 1e-15);
        assert_eq!(c.alpha_z, 0.0);
    }

    #[test]
    fn quadratic_gradient_covers_beta_range() {
        let wl = wl();
        let h = half(wl);
        let g = upa_geometry(30, 1, h, h).unwrap();
        let t = Angles::from_degrees(0.0, 180.0 + 20.0);
        let a_r: Vec<_> = linspace(-30.0, 10.0, 9).into_iter().map(|p| Angles::from_degrees(0.0, p)).collect();
        let (p, c) = quadratic_profile(&g, &[t], &a_r, wl).unwrap();
        let hi = c.gamma_y + 2.0 * c.alpha_y * 30.0;
        let grads: Vec<f64> = p.omegas().windows(2).map(|w| -(w[1] - w[0]) / wl.kappa()).collect();
        let (gmin, gmax) = grads.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        assert!(gmin >= c.gamma_y - 1e-15 && gmax <= hi + 1e-15);
        assert!(gmin - c.gamma_y <= 2.0 * c.alpha_y + 1e-15);
        assert!(hi - gmax <= 4.0 * c.alpha_y + 1e-15);
    }

    #[test]
    fn quadratic_beats_linear_over_a_far_field_region() {
        let wl = wl();
        let h = half(wl);
        let g = upa_geometry(100, 1, h, h).unwrap().centered_at(Position3::zeros());
        // Planar frame: RIS along y with normal +x.
        let u_bs = Position3::new(80.0, 30.0, 0.0);
        let t = Angles::from_direction(&(-u_bs)).unwrap();
        let pts: Vec<Position3> = linspace(60.0, 80.0, 7)
            .into_iter()
            .flat_map(|x| linspace(-10.0, 10.0, 7).into_iter().map(move |y| Position3::new(x, y, 0.0)))
            .collect();
        let a_r: Vec<Angles> = pts.iter().map(|p| Angles::from_direction(p).unwrap()).collect();
        let q = TargetSet::far_field(&g, &[t], &a_r, PI, wl).unwrap();
        let (quad, _) = quadratic_profile(&g, &[t], &a_r, wl).unwrap();
        let lin = linear_profile(&g, t, Angles::from_direction(&Position3::new(70.0, 0.0, 0.0)).unwrap(), wl).unwrap();
        let wq = worst_case_normalized(&q, &quad).unwrap();
        let wl_ = worst_case_normalized(&q, &lin).unwrap();
        assert!(wq > wl_, "quadratic {wq} vs linear {wl_}");
    }

    #[test]
    fn exact_focusing_is_matched() {
        let wl = wl();
        let h = half(wl);
        let g = upa_geometry(12, 9, h, h).unwrap().centered_at(Position3::new(0.0, 0.1, -0.2));
        let ut = Position3::new(5.0, 3.0, 1.0);
        let ur = Position3::new(2.0, -1.0, -0.5);
        let p = focusing_profile(g.positions(), ut, ur, wl, FocusVariant::Exact).unwrap();
        let q = TargetSet::new(vec![response_near(g.positions(), ut, ur, PI, wl).unwrap()], "s").unwrap();
        assert!((worst_case_normalized(&q, &p).unwrap() - 1.0).abs() < 1e-9);
        let on = g.positions()[3];
        assert!(focusing_profile(g.positions(), on, ur, wl, FocusVariant::Exact).is_err());
    }

    #[test]
    fn far_focusing_matches_linear_beam() {
        let wl = wl();
        let h = half(wl);
        let g = upa_geometry(8, 8, h, h).unwrap().centered_at(Position3::zeros());
        let p0 = 2.0 * far_field_distance(g.aperture(), wl);
        let ut = Position3::new(0.8, 0.5, 0.2).normalize() * p0;
        let ur = Position3::new(0.9, -0.3, -0.1).normalize() * p0;
        let f = focusing_profile(g.positions(), ut, ur, wl, FocusVariant::Exact).unwrap();
        let t = Angles::from_direction(&(-ut)).unwrap();
        let r = Angles::from_direction(&ur).unwrap();
        let l = linear_profile(&g, t, r, wl).unwrap();
        assert!(f.max_phase_error_modulo_global(&l).unwrap() < PI / 8.0);
    }

    #[test]
    fn quadratic_approx_error_at_boundary_is_about_pi_over_eight() {
        let wl = wl();
        let h = half(wl);
        let g = upa_geometry(200, 1, h, h).unwrap().centered_at(Position3::zeros());
        let d = g.largest_dimension();
        let dq = quadratic_near_field_distance(d, wl);
        // The far end element sits at p = [0, D/2, 0] from the center; place the
        // receiver so that cos ψ between p0 and −p equals −1/√3.
        let psi = PI - (1.0 / 3f64.sqrt()).acos();
        let m = -Position3::new(0.0, d / 2.0, 0.0).normalize();
        let perp = Position3::x();
        let ur = (m * psi.cos() + perp * psi.sin()) * dq;
        let ut = Position3::new(1e7, 0.0, 0.0);
        let e = focusing_profile(g.positions(), ut, ur, wl, FocusVariant::Exact).unwrap();
        let a = focusing_profile(g.positions(), ut, ur, wl, FocusVariant::QuadraticApprox).unwrap();
        let err = e.omegas().iter().zip(a.omegas()).map(|(x, y)| wrap_phase(x - y).abs()).fold(0.0, f64::max);
        assert!((err - PI / 8.0).abs() / (PI / 8.0) < 0.15, "max error {err}");
    }

    #[test]
    fn quadratic_approx_within_pi_over_eight_beyond_boundary() {
        let wl = wl();
        let h = half(wl);
        let g = upa_geometry(20, 20, h, h).unwrap().centered_at(Position3::zeros());
        let dq = quadratic_near_field_distance(g.largest_dimension(), wl);
        for (dt, dr) in [(1.2, 1.0), (3.0, 1.5), (10.0, 2.0)] {
            let ut = Position3::new(0.6, 0.7, 0.3).normalize() * (dq * dt);
            let ur = Position3::new(0.5, -0.8, -0.2).normalize() * (dq * dr);
            let e = focusing_profile(g.positions(), ut, ur, wl, FocusVariant::Exact).unwrap();
            let a = focusing_profile(g.positions(), ut, ur, wl, FocusVariant::QuadraticApprox).unwrap();
            let err = e.omegas().iter().zip(a.omegas()).map(|(x, y)| wrap_phase(x - y).abs()).fold(0.0, f64::max);
            assert!(err < PI / 8.0, "error {err} at {dt}, {dr}");
        }
    }

    #[test]
    fn rectangle_mapping_center_and_corners() {
        let wl = wl();
        let h = half(wl);
        let g = upa_geometry(10, 6, h, h).unwrap().centered_at(Position3::zeros());
        let uc = Position3::new(7.0, 1.0, -2.0);
        let m = RectangleMapping::new(g.positions(), uc, 3.0, 2.0).unwrap();
        assert!((m.map(&Position3::zeros()) - uc).norm() < 1e-12);
        let l = g.upa().unwrap();
        let corner = l.position(l.ny - 1, l.nz - 1);
        assert!((m.map(&corner) - (uc + Position3::new(1.5, 1.0, 0.0))).norm() < 1e-12);
        let corner = l.position(0, l.nz - 1);
        assert!((m.map(&corner) - (uc + Position3::new(1.5, -1.0, 0.0))).norm() < 1e-12);
        assert!(RectangleMapping::new(g.positions(), uc, -1.0, 0.0).is_err());
    }

    #[test]
    fn zero_region_reduces_to_focusing() {
        let wl = wl();
        let h = half(wl);
        let g = upa_geometry(9, 7, h, h).unwrap().centered_at(Position3::zeros());
        let ut = Position3::new(30.0, 80.0, 5.0);
        let uc = Position3::new(7.0, 0.0, 0.0);
        let m = RectangleMapping::new(g.positions(), uc, 0.0, 0.0).unwrap();
        let wide = wide_near_profile(g.positions(), ut, &m, wl).unwrap();
        let foc = focusing_profile(g.positions(), ut, uc, wl, FocusVariant::Exact).unwrap();
        assert_eq!(wide, foc);
    }

    #[test]
    fn wide_near_covers_more_of_the_region_than_focusing() {
        let wl = wl();
        let h = half(wl);
        let g = upa_geometry(300, 1, h, h).unwrap().centered_at(Position3::zeros());
        let ut = Position3::new(80.0, 30.0, 0.0);
        let uc = Position3::new(7.0, 0.0, 0.0);
        let region: Vec<Position3> = linspace(-1.5, 1.5, 7).into_iter().map(|y| uc + Position3::new(0.0, y, 0.0)).collect();
        let q = TargetSet::near_field(g.positions(), &[ut], &region, PI, wl).unwrap();
        let m = RectangleMapping::new(g.positions(), uc, 3.0, 3.0).unwrap();
        let wide = wide_near_profile(g.positions(), ut, &m, wl).unwrap();
        let foc = focusing_profile(g.positions(), ut, uc, wl, FocusVariant::Exact).unwrap();
        assert!(worst_case_normalized(&q, &wide).unwrap() > 10.0 * worst_case_normalized(&q, &foc).unwrap());
    }

    proptest! {
        #[test]
        fn profiles_are_unit_modulus_and_linear_is_matched(tt in -1.2f64..1.2, tp in -3.0f64..3.0, rt in -1.2f64..1.2, rp in -3.0f64..3.0) {
            let wl = wl();
            let g = upa_geometry(6, 5, half(wl), half(wl)).unwrap();
            let (t, r) = (Angles::new(tt, tp), Angles::new(rt, rp));
            let p = linear_profile(&g, t, r, wl).unwrap();
            prop_assert!(p.weights().iter().all(|w| (w.norm() - 1.0).abs() < 1e-15));
            let q = TargetSet::new(vec![response_far(&g, t, r, PI, wl)], "s").unwrap();
            prop_assert!((worst_case_normalized(&q, &p).unwrap() - 1.0).abs() < 1e-9);
        }
    }
}
