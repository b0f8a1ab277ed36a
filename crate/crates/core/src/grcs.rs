//! Reflection response vectors and the normalized gain (GRCS) of a phase profile.
//!
//! For a target pair `q` the RIS gain is `g = f_q^H w` with `|f_n| = Ω`, so
//! `|g| ≤ ΩN`. All reported values are `|g|² / (ΩN)²` in linear scale.
//!
//! Far-field angles follow the convention that makes [`response_far`] the
//! limit of [`response_near`]: `Ψ_t` is the direction the incident wave
//! travels (from the transmitter towards the RIS) and `Ψ_r` the direction
//! the reflected wave travels (from the RIS towards the receiver).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{dims, Error, Result};
use crate::geometry::{Angles, ArrayGeometry, Position3, UpaLayout, Wavelength};
use crate::profile::PhaseProfile;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ResponseTag {
    FarField { t: Angles, r: Angles },
    NearField { t: Position3, r: Position3 },
}

impl ResponseTag {
    fn same_kind(&self, other: &Self) -> bool {
        matches!(
            (self, other),
            (ResponseTag::FarField { .. }, ResponseTag::FarField { .. })
                | (ResponseTag::NearField { .. }, ResponseTag::NearField { .. })
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResponseVector {
    pub f: DVector<Complex64>,
    pub tag: ResponseTag,
    /// Common entry magnitude Ω.
    pub omega: f64,
}

impl ResponseVector {
    pub fn len(&self) -> usize {
        self.f.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f.is_empty()
    }

    pub fn g_max(&self) -> f64 {
        self.omega * self.f.len() as f64
    }

    /// The unit-modulus profile that attains `g_max` for this target.
    pub fn matched_profile(&self) -> PhaseProfile {
        PhaseProfile::new(self.f.iter().map(|z| z.arg()).collect()).expect("finite phases")
    }
}

/// Spatial-frequency offsets `(β_y, β_z)` of a far-field reflection on a UPA.
pub fn beta(layout: &UpaLayout, t: Angles, r: Angles) -> (f64, f64) {
    let by = layout.dy * (t.theta.cos() * t.phi.sin() - r.theta.cos() * r.phi.sin());
    let bz = layout.dz * (t.theta.sin() - r.theta.sin());
    (by, bz)
}

/// `[f]_n = Ω e^{−jκ(d(Ψ_t) − d(Ψ_r))ᵀu_n}`.
pub fn response_far(geom: &ArrayGeometry, t: Angles, r: Angles, omega: f64, wl: Wavelength) -> ResponseVector {
    let diff = t.direction() - r.direction();
    let k = wl.kappa();
    let f = DVector::from_iterator(
        geom.len(),
        geom.positions().iter().map(|u| Complex64::from_polar(omega, -k * diff.dot(u))),
    );
    ResponseVector { f, tag: ResponseTag::FarField { t, r }, omega }
}

/// UPA closed form `Ω e^{−jκ(β_y n_y + β_z n_z)}`, times the constant phase of the layout origin.
pub fn response_far_upa(layout: &UpaLayout, t: Angles, r: Angles, omega: f64, wl: Wavelength) -> ResponseVector {
    let k = wl.kappa();
    let (by, bz) = beta(layout, t, r);
    let base = -k * (t.direction() - r.direction()).dot(&layout.origin);
    let f = DVector::from_fn(layout.len(), |n, _| {
        let (iy, iz) = layout.indices(n);
        Complex64::from_polar(omega, base - k * (by * iy as f64 + bz * iz as f64))
    });
    ResponseVector { f, tag: ResponseTag::FarField { t, r }, omega }
}

/// `[f]_n = Ω e^{−jκ(‖u_t − u_n‖ + ‖u_r − u_n‖)}`.
pub fn response_near(positions: &[Position3], t: Position3, r: Position3, omega: f64, wl: Wavelength) -> Result<ResponseVector> {
    let k = wl.kappa();
    let mut f = DVector::zeros(positions.len());
    for (n, u) in positions.iter().enumerate() {
        let dt = (t - u).norm();
        let dr = (r - u).norm();
        if dt == 0.0 || dr == 0.0 {
            return Err(Error::Domain(format!("target point coincides with RIS element {n}")));
        }
        f[n] = Complex64::from_polar(omega, -k * (dt + dr));
    }
    Ok(ResponseVector { f, tag: ResponseTag::NearField { t, r }, omega })
}

/// `g = f^H w`.
pub fn grcs_value(f: &ResponseVector, w: &PhaseProfile) -> Result<Complex64> {
    if f.len() != w.len() {
        return Err(dims("grcs_value", f.len(), w.len()));
    }
    Ok(f.f.iter().zip(w.omegas()).map(|(fn_, &om)| fn_.conj() * Complex64::from_polar(1.0, om)).sum())
}

/// Discretized set of target pairs a design must serve.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSet {
    entries: Vec<ResponseVector>,
    provenance: String,
}

impl TargetSet {
    pub fn new(entries: Vec<ResponseVector>, provenance: impl Into<String>) -> Result<Self> {
        let first = entries.first().ok_or(Error::EmptyTargets)?;
        let (n, tag) = (first.len(), first.tag);
        for e in &entries {
            if e.len() != n {
                return Err(dims("target set vector length", n, e.len()));
            }
            if !e.tag.same_kind(&tag) {
                return Err(Error::InvalidParameter { name: "targets", reason: "mixes far- and near-field entries".into() });
            }
        }
        Ok(Self { entries, provenance: provenance.into() })
    }

    /// All pairs of `A_t × A_r`, transmit index outermost.
    pub fn far_field(geom: &ArrayGeometry, a_t: &[Angles], a_r: &[Angles], omega: f64, wl: Wavelength) -> Result<Self> {
        let mut v = Vec::with_capacity(a_t.len() * a_r.len());
        for &t in a_t {
            for &r in a_r {
                v.push(response_far(geom, t, r, omega, wl));
            }
        }
        Self::new(v, format!("far-field grid {}x{}", a_t.len(), a_r.len()))
    }

    /// All pairs of `U_t × U_r`, transmit index outermost.
    pub fn near_field(positions: &[Position3], u_t: &[Position3], u_r: &[Position3], omega: f64, wl: Wavelength) -> Result<Self> {
        let mut v = Vec::with_capacity(u_t.len() * u_r.len());
        for &t in u_t {
            for &r in u_r {
                v.push(response_near(positions, t, r, omega, wl)?);
            }
        }
        Self::new(v, format!("near-field grid {}x{}", u_t.len(), u_r.len()))
    }

    pub fn entries(&self) -> &[ResponseVector] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of RIS elements.
    pub fn dim(&self) -> usize {
        self.entries[0].len()
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    /// Response vectors divided by their `g_max`, as the columns of an `N × |Q|` matrix.
    pub fn normalized_matrix(&self) -> DMatrix<Complex64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, self.len());
        for (q, e) in self.entries.iter().enumerate() {
            let s = 1.0 / e.g_max();
            for i in 0..n {
                m[(i, q)] = e.f[i] * s;
            }
        }
        m
    }
}

/// `|f_q^H w|² / (ΩN)²` for every target.
pub fn normalized_values(q: &TargetSet, w: &PhaseProfile) -> Result<Vec<f64>> {
    q.entries()
        .iter()
        .map(|f| Ok(grcs_value(f, w)?.norm_sqr() / f.g_max().powi(2)))
        .collect()
}

/// `min_q |f_q^H w|² / (ΩN)²`.
pub fn worst_case_normalized(q: &TargetSet, w: &PhaseProfile) -> Result<f64> {
    Ok(normalized_values(q, w)?.into_iter().fold(f64::INFINITY, f64::min))
}

pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.max(1e-30).log10()
}

/// Evenly spaced points on `[lo, hi]`; a single point sits at the midpoint.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![(lo + hi) / 2.0],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Planar grid `origin + a·dir1 + b·dir2` for `a ∈ axis1`, `b ∈ axis2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRegion {
    pub origin: Position3,
    pub dir1: Position3,
    pub dir2: Position3,
    pub axis1: Vec<f64>,
    pub axis2: Vec<f64>,
}

impl ScanRegion {
    /// Rectangle centered at `center`, spanned by unit directions `dir1`, `dir2`
    /// with full extents `ext1`, `ext2` and `n1 × n2` samples.
    pub fn rectangle(center: Position3, dir1: Position3, dir2: Position3, ext: (f64, f64), n: (usize, usize)) -> Self {
        Self {
            origin: center,
            dir1,
            dir2,
            axis1: linspace(-ext.0 / 2.0, ext.0 / 2.0, n.0),
            axis2: linspace(-ext.1 / 2.0, ext.1 / 2.0, n.1),
        }
    }

    pub fn point(&self, i: usize, j: usize) -> Position3 {
        self.origin + self.dir1 * self.axis1[i] + self.dir2 * self.axis2[j]
    }

    pub fn points(&self) -> Vec<Position3> {
        let mut v = Vec::with_capacity(self.axis1.len() * self.axis2.len());
        for i in 0..self.axis1.len() {
            for j in 0..self.axis2.len() {
                v.push(self.point(i, j));
            }
        }
        v
    }
}

/// Normalized GRCS sampled on a 2-D grid; `values[(i, j)]` belongs to `(axis1[i], axis2[j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrcsField {
    pub axis1: Vec<f64>,
    pub axis2: Vec<f64>,
    pub values: DMatrix<f64>,
}

impl GrcsField {
    pub fn argmax(&self) -> (usize, usize) {
        self.values.iamax_full()
    }

    pub fn max(&self) -> f64 {
        self.values.max()
    }
}

/// Normalized GRCS at every point of `scan`, with the source fixed at `u_t`.
pub fn grcs_field(
    scan: &ScanRegion,
    u_t: Position3,
    w: &PhaseProfile,
    positions: &[Position3],
    omega: f64,
    wl: Wavelength,
) -> Result<GrcsField> {
    if scan.axis1.is_empty() || scan.axis2.is_empty() {
        return Err(Error::InvalidParameter { name: "scan", reason: "grid must be nonempty".into() });
    }
    if positions.len() != w.len() {
        return Err(dims("grcs_field", positions.len(), w.len()));
    }
    let gmax = omega * w.len() as f64;
    let mut values = DMatrix::zeros(scan.axis1.len(), scan.axis2.len());
    for i in 0..scan.axis1.len() {
        for j in 0..scan.axis2.len() {
            let f = response_near(positions, u_t, scan.point(i, j), omega, wl)?;
            values[(i, j)] = grcs_value(&f, w)?.norm_sqr() / (gmax * gmax);
        }
    }
    Ok(GrcsField { axis1: scan.axis1.clone(), axis2: scan.axis2.clone(), values })
}
