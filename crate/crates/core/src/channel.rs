//! Far- and near-field MIMO channel constructors.
//!
//! All matrices are `N_rx × N_tx` complex amplitude gains. Random generators
//! take an explicit RNG so callers control seeding.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{dims, Error, Result};
use crate::geometry::{steering_vector, Angles, ArrayGeometry, Position3, Wavelength};
use crate::linalg::psd_sqrt;
use crate::profile::PhaseProfile;

pub type ChannelMatrix = DMatrix<Complex64>;

/// Eigenvalues of correlation matrices above `-PSD_CLIP_TOL` are clipped to zero.
pub const PSD_CLIP_TOL: f64 = 1e-9;

/// Rician factor and diffuse power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RicianSpec {
    /// Linear LOS-to-diffuse power ratio; `f64::INFINITY` means pure LOS.
    pub k: f64,
    pub sigma_c2: f64,
}

impl RicianSpec {
    pub fn new(k: f64, sigma_c2: f64) -> Result<Self> {
        if k.is_nan() || k < 0.0 {
            return Err(Error::InvalidParameter { name: "K", reason: format!("must be ≥ 0, got {k}") });
        }
        if !(sigma_c2.is_finite() && sigma_c2 >= 0.0) {
            return Err(Error::InvalidParameter { name: "sigma_c2", reason: format!("must be ≥ 0, got {sigma_c2}") });
        }
        Ok(Self { k, sigma_c2 })
    }
}

/// One plane-wave component of a scattering cluster.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Subpath {
    pub phase: f64,
    pub tx: Angles,
    pub rx: Angles,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterCluster {
    pub g: Complex64,
    pub subpaths: Vec<Subpath>,
}

/// Angular sector from which cluster centers are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngularSector {
    pub theta: (f64, f64),
    pub phi: (f64, f64),
}

impl Default for AngularSector {
    /// Front half-space of an array in the y–z plane.
    fn default() -> Self {
        Self { theta: (-PI / 2.0, PI / 2.0), phi: (-PI / 2.0, PI / 2.0) }
    }
}

/// Parameters for drawing random scattering clusters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterSpec {
    pub clusters: usize,
    pub subpaths: usize,
    /// Standard deviation of subpath angles around the cluster center, rad.
    pub angular_spread: f64,
    pub tx_sector: AngularSector,
    pub rx_sector: AngularSector,
}

impl ClusterSpec {
    pub fn new(clusters: usize, subpaths: usize) -> Self {
        Self {
            clusters,
            subpaths,
            angular_spread: 5f64.to_radians(),
            tx_sector: AngularSector::default(),
            rx_sector: AngularSector::default(),
        }
    }
}

/// Infinite planar reflector described by a point and a unit normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReflectorPlane {
    point: Position3,
    normal: Position3,
    pub c_r: Complex64,
}

impl ReflectorPlane {
    /// `normal` is normalized here; it must be nonzero.
    pub fn new(point: Position3, normal: Position3, c_r: Complex64) -> Result<Self> {
        let n = normal.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidParameter { name: "normal", reason: "must be a nonzero vector".into() });
        }
        Ok(Self { point, normal: normal / n, c_r })
    }

    pub fn point(&self) -> Position3 {
        self.point
    }

    pub fn normal(&self) -> Position3 {
        self.normal
    }

    pub fn signed_distance(&self, p: &Position3) -> f64 {
        (p - self.point).dot(&self.normal)
    }

    /// Mirror image `p − 2((p − p_0)·n)n`.
    pub fn mirror(&self, p: &Position3) -> Position3 {
        p - 2.0 * self.signed_distance(p) * self.normal
    }
}

/// Which array is replaced by its mirror image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MirrorSide {
    Tx,
    Rx,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointScatterer {
    pub position: Position3,
    pub c_s: Complex64,
}

impl PointScatterer {
    /// Scatterer whose attenuation follows the double path loss
    /// `c_s = strength / (d_tx,s · d_s,rx)`, evaluated at the array centers.
    pub fn with_double_path_loss(position: Position3, tx_center: &Position3, rx_center: &Position3, strength: Complex64) -> Result<Self> {
        let d1 = (position - tx_center).norm();
        let d2 = (position - rx_center).norm();
        if d1 == 0.0 || d2 == 0.0 {
            return Err(Error::Domain("scatterer coincides with an array center".into()));
        }
        Ok(Self { position, c_s: strength / (d1 * d2) })
    }
}

/// Free-space style path loss `h_0 (d_0 / d)^ε` in power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathLossModel {
    pub h0_db: f64,
    pub d0_m: f64,
    pub exponent: f64,
}

impl Default for PathLossModel {
    fn default() -> Self {
        Self { h0_db: -61.0, d0_m: 1.0, exponent: 2.0 }
    }
}

impl PathLossModel {
    pub fn power_db(&self, d: f64) -> f64 {
        self.h0_db - 10.0 * self.exponent * (d / self.d0_m).log10()
    }

    /// Amplitude gain `sqrt(h_0 (d_0/d)^ε)`.
    pub fn amplitude(&self, d: f64) -> f64 {
        10f64.powf(self.power_db(d) / 20.0)
    }
}

/// Unit-cell factor `Ω = 4π A_uc / λ²`.
pub fn unit_cell_factor(a_uc: f64, wl: Wavelength) -> f64 {
    4.0 * PI * a_uc / (wl.meters() * wl.meters())
}

/// Ω for the default λ/2 × λ/2 unit cell, equal to π.
pub fn default_unit_cell_factor(wl: Wavelength) -> f64 {
    unit_cell_factor(wl.meters() * wl.meters() / 4.0, wl)
}

pub(crate) fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * s, im * s)
}

/// Far-field LOS `c · a_rx(Ψ_rx) a_tx(Ψ_tx)^H`.
///
/// Matches [`los_near`] when both angle pairs describe the propagation
/// direction from the transmitter to the receiver.
pub fn los_far(
    geom_tx: &ArrayGeometry,
    geom_rx: &ArrayGeometry,
    angles_tx: Angles,
    angles_rx: Angles,
    c: Complex64,
    wl: Wavelength,
) -> ChannelMatrix {
    let a_tx = steering_vector(geom_tx, angles_tx, wl);
    let a_rx = steering_vector(geom_rx, angles_rx, wl);
    (a_rx * a_tx.adjoint()) * c
}

/// Spherical-wavefront LOS `[H]_{m,n} = c · e^{jκ‖u_rx,m − u_tx,n‖}`.
pub fn los_near(tx: &[Position3], rx: &[Position3], c: Complex64, wl: Wavelength) -> Result<ChannelMatrix> {
    let k = wl.kappa();
    let mut h = ChannelMatrix::zeros(rx.len(), tx.len());
    for (n, ut) in tx.iter().enumerate() {
        for (m, ur) in rx.iter().enumerate() {
            let d = (ur - ut).norm();
            if d == 0.0 {
                return Err(Error::Domain(format!("tx element {n} coincides with rx element {m}")));
            }
            h[(m, n)] = c * Complex64::from_polar(1.0, k * d);
        }
    }
    Ok(h)
}

/// Spatial correlation `[R]_{m,n} = sinc(κ‖u_m − u_n‖)` of an isotropic scattering field.
pub fn correlation_matrix(geom: &ArrayGeometry, wl: Wavelength) -> DMatrix<f64> {
    let p = geom.positions();
    let k = wl.kappa();
    DMatrix::from_fn(p.len(), p.len(), |m, n| sinc(k * (p[m] - p[n]).norm()))
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Kronecker-correlated Rayleigh generator with the square-root factors precomputed.
#[derive(Debug, Clone)]
pub struct CorrelatedRayleigh {
    sqrt_tx: DMatrix<Complex64>,
    sqrt_rx: DMatrix<Complex64>,
}

impl CorrelatedRayleigh {
    pub fn new(r_tx: &DMatrix<f64>, r_rx: &DMatrix<f64>) -> Result<Self> {
        let to_c = |m: DMatrix<f64>| m.map(|v| Complex64::new(v, 0.0));
        Ok(Self {
            sqrt_tx: to_c(psd_sqrt(r_tx, PSD_CLIP_TOL)?),
            sqrt_rx: to_c(psd_sqrt(r_rx, PSD_CLIP_TOL)?),
        })
    }

    /// Uncorrelated generator (`R_tx = R_rx = I`).
    pub fn iid(n_tx: usize, n_rx: usize) -> Self {
        Self { sqrt_tx: DMatrix::identity(n_tx, n_tx), sqrt_rx: DMatrix::identity(n_rx, n_rx) }
    }

    pub fn sample<R: Rng + ?Sized>(&self, sigma_c2: f64, rng: &mut R) -> ChannelMatrix {
        let (nr, nt) = (self.sqrt_rx.nrows(), self.sqrt_tx.nrows());
        let h_iid = ChannelMatrix::from_fn(nr, nt, |_, _| complex_normal(rng, sigma_c2));
        &self.sqrt_rx * h_iid * &self.sqrt_tx
    }
}

/// One draw of `R̄_rx H_iid R̄_tx` with `H_iid` i.i.d. `CN(0, σ_c²)`.
pub fn correlated_rayleigh<R: Rng + ?Sized>(
    r_tx: &DMatrix<f64>,
    r_rx: &DMatrix<f64>,
    sigma_c2: f64,
    rng: &mut R,
) -> Result<ChannelMatrix> {
    Ok(CorrelatedRayleigh::new(r_tx, r_rx)?.sample(sigma_c2, rng))
}

/// Sum of plane-wave subpaths, normalized by the square root of the total subpath count.
pub fn clustered_nlos(
    clusters: &[ScatterCluster],
    geom_tx: &ArrayGeometry,
    geom_rx: &ArrayGeometry,
    wl: Wavelength,
) -> Result<ChannelMatrix> {
    if clusters.is_empty() {
        return Err(Error::InvalidParameter { name: "clusters", reason: "need at least one cluster".into() });
    }
    if let Some(v) = clusters.iter().position(|c| c.subpaths.is_empty()) {
        return Err(Error::InvalidParameter { name: "clusters", reason: format!("cluster {v} has no subpaths") });
    }
    let total: usize = clusters.iter().map(|c| c.subpaths.len()).sum();
    let mut h = ChannelMatrix::zeros(geom_rx.len(), geom_tx.len());
    for cl in clusters {
        for sp in &cl.subpaths {
            let a_tx = steering_vector(geom_tx, sp.tx, wl);
            let a_rx = steering_vector(geom_rx, sp.rx, wl);
            let coef = cl.g * Complex64::from_polar(1.0, sp.phase);
            h.gerc(coef, &a_rx, &a_tx, Complex64::new(1.0, 0.0));
        }
    }
    Ok(h.unscale((total as f64).sqrt()))
}

/// Random clusters with uniform center angles in the given sectors, Gaussian
/// subpath spread and uniform subpath phases.
pub fn random_clusters<R: Rng + ?Sized>(spec: &ClusterSpec, gains: &[Complex64], rng: &mut R) -> Result<Vec<ScatterCluster>> {
    if spec.clusters == 0 || spec.subpaths == 0 {
        return Err(Error::InvalidParameter { name: "clusters", reason: "V and R must be at least 1".into() });
    }
    if gains.len() != spec.clusters {
        return Err(dims("cluster gains", spec.clusters, gains.len()));
    }
    let uniform = |rng: &mut R, (lo, hi): (f64, f64)| lo + (hi - lo) * rng.random::<f64>();
    let mut out = Vec::with_capacity(spec.clusters);
    for &g in gains {
        let ct = Angles::new(uniform(rng, spec.tx_sector.theta), uniform(rng, spec.tx_sector.phi));
        let cr = Angles::new(uniform(rng, spec.rx_sector.theta), uniform(rng, spec.rx_sector.phi));
        let jitter = |a: Angles, rng: &mut R| {
            let dt: f64 = StandardNormal.sample(rng);
            let dp: f64 = StandardNormal.sample(rng);
            Angles::new(a.theta + spec.angular_spread * dt, a.phi + spec.angular_spread * dp)
        };
        let subpaths = (0..spec.subpaths)
            .map(|_| Subpath { phase: 2.0 * PI * rng.random::<f64>(), tx: jitter(ct, rng), rx: jitter(cr, rng) })
            .collect();
        out.push(ScatterCluster { g, subpaths });
    }
    Ok(out)
}

/// Specular path off a planar reflector, via image theory.
pub fn reflector_nlos(tx: &[Position3], rx: &[Position3], plane: &ReflectorPlane, wl: Wavelength) -> Result<ChannelMatrix> {
    reflector_nlos_with(tx, rx, plane, wl, MirrorSide::Rx)
}

/// As [`reflector_nlos`], choosing which array is mirrored; both choices give the same matrix.
pub fn reflector_nlos_with(
    tx: &[Position3],
    rx: &[Position3],
    plane: &ReflectorPlane,
    wl: Wavelength,
    side: MirrorSide,
) -> Result<ChannelMatrix> {
    for p in tx.iter().chain(rx) {
        if plane.signed_distance(p).abs() < 1e-12 {
            return Err(Error::Domain("array element lies on the reflector plane".into()));
        }
    }
    match side {
        MirrorSide::Rx => {
            let img: Vec<_> = rx.iter().map(|p| plane.mirror(p)).collect();
            los_near(tx, &img, plane.c_r, wl)
        }
        MirrorSide::Tx => {
            let img: Vec<_> = tx.iter().map(|p| plane.mirror(p)).collect();
            los_near(&img, rx, plane.c_r, wl)
        }
    }
}

/// Path through an isotropic point scatterer: `c_s e^{jκ(‖u_rx,m − u_s‖ + ‖u_s − u_tx,n‖)}`.
pub fn point_scatter_nlos(tx: &[Position3], rx: &[Position3], s: &PointScatterer, wl: Wavelength) -> Result<ChannelMatrix> {
    let k = wl.kappa();
    let leg = |pts: &[Position3]| -> Result<DVector<Complex64>> {
        let mut v = DVector::zeros(pts.len());
        for (i, p) in pts.iter().enumerate() {
            let d = (p - s.position).norm();
            if d == 0.0 {
                return Err(Error::Domain("scatterer coincides with an array element".into()));
            }
            v[i] = Complex64::from_polar(1.0, k * d);
        }
        Ok(v)
    };
    let a_rx = leg(rx)?;
    let a_tx = leg(tx)?;
    Ok((a_rx * a_tx.transpose()) * s.c_s)
}

/// `sqrt(K/(1+K)) H_LOS + sqrt(1/(1+K)) H_nLOS`; `K = ∞` returns `H_LOS`.
pub fn rician_combine(h_los: &ChannelMatrix, h_nlos: &ChannelMatrix, k: f64) -> Result<ChannelMatrix> {
    if h_los.shape() != h_nlos.shape() {
        return Err(dims("rician_combine", format!("{:?}", h_los.shape()), format!("{:?}", h_nlos.shape())));
    }
    if k.is_nan() || k < 0.0 {
        return Err(Error::InvalidParameter { name: "K", reason: format!("must be ≥ 0, got {k}") });
    }
    if k.is_infinite() {
        return Ok(h_los.clone());
    }
    if k == 0.0 {
        return Ok(h_nlos.clone());
    }
    Ok(h_los.scale((k / (1.0 + k)).sqrt()) + h_nlos.scale((1.0 / (1.0 + k)).sqrt()))
}

/// `H_d + H_r diag(Ω e^{jω}) H_t`.
pub fn end_to_end(
    h_d: &ChannelMatrix,
    h_t: &ChannelMatrix,
    h_r: &ChannelMatrix,
    omega: f64,
    w: &PhaseProfile,
) -> Result<ChannelMatrix> {
    let n = w.len();
    if h_t.nrows() != n || h_r.ncols() != n {
        return Err(dims("end_to_end RIS dimension", n, format!("H_t rows {}, H_r cols {}", h_t.nrows(), h_r.ncols())));
    }
    if h_d.shape() != (h_r.nrows(), h_t.ncols()) {
        return Err(dims("end_to_end direct link", format!("{}x{}", h_r.nrows(), h_t.ncols()), format!("{:?}", h_d.shape())));
    }
    let mut scaled_t = h_t.clone();
    for (i, wn) in w.weights().iter().enumerate() {
        let coef = wn * omega;
        scaled_t.row_mut(i).iter_mut().for_each(|x| *x *= coef);
    }
    Ok(h_d + h_r * scaled_t)
}
