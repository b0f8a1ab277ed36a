//! Array manifolds, wavefront phase expansion and propagation-regime distances.
//!
//! Conventions used across the crate:
//!
//! * Planar arrays lie in the y–z plane. Element `(ny, nz)` of a UPA sits at
//!   `origin + [0, ny·dy, nz·dz]` and has flat index `ny + Ny·nz` (ny fastest).
//! * A direction `(θ, φ)` maps to the unit vector
//!   `[cos θ cos φ, cos θ sin φ, sin θ]`: θ is the elevation out of the x–y
//!   plane and φ the azimuth measured from +x towards +y. Angles are radians.

use nalgebra::{DVector, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

pub type Position3 = Vector3<f64>;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Carrier wavelength together with its wave number `κ = 2π/λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wavelength {
    lambda_m: f64,
    kappa: f64,
}

impl Wavelength {
    pub fn new(lambda_m: f64) -> Result<Self> {
        if !(lambda_m.is_finite() && lambda_m > 0.0) {
            return Err(Error::InvalidParameter {
                name: "wavelength",
                reason: format!("must be positive and finite, got {lambda_m}"),
            });
        }
        Ok(Self { lambda_m, kappa: 2.0 * PI / lambda_m })
    }

    pub fn from_frequency_hz(freq_hz: f64) -> Result<Self> {
        if !(freq_hz.is_finite() && freq_hz > 0.0) {
            return Err(Error::InvalidParameter {
                name: "frequency",
                reason: format!("must be positive and finite, got {freq_hz}"),
            });
        }
        Self::new(SPEED_OF_LIGHT / freq_hz)
    }

    pub fn from_ghz(freq_ghz: f64) -> Result<Self> {
        Self::from_frequency_hz(freq_ghz * 1e9)
    }

    pub fn meters(&self) -> f64 {
        self.lambda_m
    }

    /// Wave number in rad/m.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }
}

/// Elevation/azimuth pair in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Angles {
    pub theta: f64,
    pub phi: f64,
}

impl Angles {
    pub fn new(theta: f64, phi: f64) -> Self {
        Self { theta, phi }
    }

    pub fn from_degrees(theta_deg: f64, phi_deg: f64) -> Self {
        Self::new(theta_deg.to_radians(), phi_deg.to_radians())
    }

    /// Unit vector `d(Ψ)`.
    pub fn direction(&self) -> Position3 {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        Position3::new(ct * cp, ct * sp, st)
    }

    /// Angles of the direction of `v` (need not be normalized).
    pub fn from_direction(v: &Position3) -> Result<Self> {
        let norm = v.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Domain("direction vector has zero length".into()));
        }
        let u = v / norm;
        Ok(Self::new(u.z.clamp(-1.0, 1.0).asin(), u.y.atan2(u.x)))
    }
}

/// Index layout of a uniform planar array in the y–z plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpaLayout {
    pub ny: usize,
    pub nz: usize,
    pub dy: f64,
    pub dz: f64,
    /// Position of element `(0, 0)`.
    pub origin: Position3,
}

impl UpaLayout {
    pub fn len(&self) -> usize {
        self.ny * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(ny, nz)` of flat index `n`.
    pub fn indices(&self, n: usize) -> (usize, usize) {
        (n % self.ny, n / self.ny)
    }

    pub fn position(&self, ny: usize, nz: usize) -> Position3 {
        self.origin + Position3::new(0.0, ny as f64 * self.dy, nz as f64 * self.dz)
    }

    /// Physical side lengths `(L_y, L_z) = (Ny·dy, Nz·dz)`, counting one cell per element.
    pub fn side_lengths(&self) -> (f64, f64) {
        (self.ny as f64 * self.dy, self.nz as f64 * self.dz)
    }

    /// Span of element centers along y and z.
    pub fn element_span(&self) -> (f64, f64) {
        (
            self.ny.saturating_sub(1) as f64 * self.dy,
            self.nz.saturating_sub(1) as f64 * self.dz,
        )
    }

    pub fn center(&self) -> Position3 {
        let (sy, sz) = self.element_span();
        self.origin + Position3::new(0.0, sy / 2.0, sz / 2.0)
    }
}

/// Ordered element positions of an antenna array or RIS.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    positions: Vec<Position3>,
    upa: Option<UpaLayout>,
}

impl ArrayGeometry {
    pub fn from_positions(positions: Vec<Position3>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::InvalidParameter {
                name: "positions",
                reason: "array geometry needs at least one element".into(),
            });
        }
        Ok(Self { positions, upa: None })
    }

    /// A single element at `p`.
    pub fn point(p: Position3) -> Self {
        Self { positions: vec![p], upa: None }
    }

    pub fn positions(&self) -> &[Position3] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn upa(&self) -> Option<&UpaLayout> {
        self.upa.as_ref()
    }

    /// Maximum distance between any two elements.
    pub fn largest_dimension(&self) -> f64 {
        if let Some(l) = &self.upa {
            let (sy, sz) = l.element_span();
            return sy.hypot(sz);
        }
        let mut best = 0.0_f64;
        for (i, a) in self.positions.iter().enumerate() {
            for b in &self.positions[i + 1..] {
                best = best.max((a - b).norm());
            }
        }
        best
    }

    /// Aperture diagonal `sqrt(L_y² + L_z²)` used for the regime distances.
    ///
    /// For a UPA each element occupies a `dy × dz` cell, so the physical side
    /// is `Ny·dy`. Arbitrary geometries fall back to [`Self::largest_dimension`].
    pub fn aperture(&self) -> f64 {
        match &self.upa {
            Some(l) => {
                let (ly, lz) = l.side_lengths();
                ly.hypot(lz)
            }
            None => self.largest_dimension(),
        }
    }

    pub fn centroid(&self) -> Position3 {
        let sum = self.positions.iter().fold(Position3::zeros(), |acc, p| acc + p);
        sum / self.positions.len() as f64
    }

    pub fn translated(&self, offset: Position3) -> Self {
        Self {
            positions: self.positions.iter().map(|p| p + offset).collect(),
            upa: self.upa.map(|mut l| {
                l.origin += offset;
                l
            }),
        }
    }

    /// Same array shifted so that its centroid is at `center`.
    pub fn centered_at(&self, center: Position3) -> Self {
        self.translated(center - self.centroid())
    }
}

/// Uniform planar array in the y–z plane with element `(0,0)` at the origin.
pub fn upa_geometry(ny: usize, nz: usize, dy: f64, dz: f64) -> Result<ArrayGeometry> {
    if ny == 0 || nz == 0 {
        return Err(Error::InvalidParameter {
            name: "upa size",
            reason: format!("Ny and Nz must be at least 1, got {ny}x{nz}"),
        });
    }
    let layout = UpaLayout { ny, nz, dy, dz, origin: Position3::zeros() };
    let positions = (0..ny * nz)
        .map(|n| {
            let (iy, iz) = layout.indices(n);
            layout.position(iy, iz)
        })
        .collect();
    Ok(ArrayGeometry { positions, upa: Some(layout) })
}

/// Propagation regime at a given distance from an aperture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    ReactiveNearField,
    GeneralNearField,
    QuadraticNearField,
    FarField,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Regime::ReactiveNearField => "reactive-near-field",
            Regime::GeneralNearField => "general-near-field",
            Regime::QuadraticNearField => "quadratic-near-field",
            Regime::FarField => "far-field",
        };
        f.write_str(s)
    }
}

/// Rayleigh distance `2D²/λ`.
pub fn far_field_distance(d: f64, wl: Wavelength) -> f64 {
    2.0 * d * d / wl.meters()
}

/// Distance beyond which the cubic phase term stays below π/8: `sqrt(2D³ / (3√3 λ))`.
pub fn quadratic_near_field_distance(d: f64, wl: Wavelength) -> f64 {
    (2.0 * d.powi(3) / (3.0 * 3f64.sqrt() * wl.meters())).sqrt()
}

pub fn classify_regime(p0: f64, d: f64, wl: Wavelength) -> Regime {
    if p0 < wl.meters() {
        Regime::ReactiveNearField
    } else if p0 >= far_field_distance(d, wl) {
        Regime::FarField
    } else if p0 >= quadratic_near_field_distance(d, wl) {
        Regime::QuadraticNearField
    } else {
        Regime::GeneralNearField
    }
}

/// Phase change across a receive aperture split into its leading power-series terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseExpansion {
    pub linear: f64,
    pub quadratic: f64,
    pub cubic: f64,
    pub exact: f64,
}

impl PhaseExpansion {
    pub fn truncated(&self) -> f64 {
        self.linear + self.quadratic + self.cubic
    }

    pub fn remainder(&self) -> f64 {
        self.exact - self.truncated()
    }
}

/// `κ(‖p0 + p‖ − ‖p0‖)`: phase at offset `p` relative to the aperture center `p0`.
pub fn phase_delta_exact(p0: &Position3, p: &Position3, wl: Wavelength) -> Result<f64> {
    let r0 = p0.norm();
    if r0 == 0.0 {
        return Err(Error::Domain("reference point p0 has zero length".into()));
    }
    Ok(wl.kappa() * ((p0 + p).norm() - r0))
}

/// Linear, quadratic and cubic terms of the phase change in powers of `‖p‖/‖p0‖`.
pub fn phase_delta_expanded(p0: &Position3, p: &Position3, wl: Wavelength) -> Result<PhaseExpansion> {
    let r0 = p0.norm();
    let r = p.norm();
    if r0 == 0.0 || r >= r0 {
        return Err(Error::Domain(format!(
            "expansion needs ‖p‖ < ‖p0‖ (got ‖p‖ = {r}, ‖p0‖ = {r0})"
        )));
    }
    let exact = phase_delta_exact(p0, p, wl)?;
    if r == 0.0 {
        return Ok(PhaseExpansion { linear: 0.0, quadratic: 0.0, cubic: 0.0, exact });
    }
    let cos_psi = (p0.dot(p) / (r0 * r)).clamp(-1.0, 1.0);
    let sin2_psi = 1.0 - cos_psi * cos_psi;
    let t = r / r0;
    let scale = wl.kappa() * r0;
    Ok(PhaseExpansion {
        linear: scale * cos_psi * t,
        quadratic: scale * sin2_psi / 2.0 * t * t,
        cubic: -scale * cos_psi * sin2_psi / 2.0 * t.powi(3),
        exact,
    })
}

/// `[a(Ψ)]_n = exp(jκ d(Ψ)ᵀu_n)` for an arbitrary array manifold.
pub fn steering_vector(geom: &ArrayGeometry, angles: Angles, wl: Wavelength) -> DVector<Complex64> {
    let d = angles.direction();
    let k = wl.kappa();
    DVector::from_iterator(
        geom.len(),
        geom.positions().iter().map(|u| Complex64::from_polar(1.0, k * d.dot(u))),
    )
}

/// Closed-form UPA steering vector `exp(jκ[dy cos θ sin φ ny + dz sin θ nz])`,
/// times the constant phase of the layout origin.
pub fn steering_vector_upa(layout: &UpaLayout, angles: Angles, wl: Wavelength) -> DVector<Complex64> {
    let k = wl.kappa();
    let base = k * angles.direction().dot(&layout.origin);
    let gy = layout.dy * angles.theta.cos() * angles.phi.sin();
    let gz = layout.dz * angles.theta.sin();
    DVector::from_fn(layout.len(), |n, _| {
        let (iy, iz) = layout.indices(n);
        Complex64::from_polar(1.0, base + k * (gy * iy as f64 + gz * iz as f64))
    })
}
