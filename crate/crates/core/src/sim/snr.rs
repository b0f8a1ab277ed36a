//! SNR versus Rician K-factor with LOS blockage, a ground reflection and
//! clustered point scatterers.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::analytic::{focusing_profile, FocusVariant};
use crate::channel::{end_to_end, los_near, reflector_nlos, ChannelMatrix, ReflectorPlane};
use crate::error::{dims, Error, Result};
use crate::geometry::{Position3, Wavelength};
use crate::linalg::hermitian_eigen;
use crate::profile::PhaseProfile;

use super::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BenchmarkId {
    FullCsi,
    LosFocusing,
    ProposedBestPath,
    RandomPhases,
    SpecularReflection,
}

impl BenchmarkId {
    pub const ALL: [BenchmarkId; 5] = [
        BenchmarkId::FullCsi,
        BenchmarkId::LosFocusing,
        BenchmarkId::ProposedBestPath,
        BenchmarkId::RandomPhases,
        BenchmarkId::SpecularReflection,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BenchmarkId::FullCsi => "full-csi",
            BenchmarkId::LosFocusing => "los-focusing",
            BenchmarkId::ProposedBestPath => "proposed-best-path",
            BenchmarkId::RandomPhases => "random-phases",
            BenchmarkId::SpecularReflection => "specular-reflection",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|b| b.name() == s)
    }
}

impl std::fmt::Display for BenchmarkId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Single-antenna-MU link: `h_d` (1×M), `h_t` (N×M), `h_r` (1×N).
#[derive(Debug, Clone, PartialEq)]
pub struct LinkChannels {
    pub h_d: ChannelMatrix,
    pub h_t: ChannelMatrix,
    pub h_r: ChannelMatrix,
}

impl LinkChannels {
    pub fn end_to_end(&self, omega: f64, w: &PhaseProfile) -> Result<ChannelMatrix> {
        end_to_end(&self.h_d, &self.h_t, &self.h_r, omega, w)
    }

    /// `(P_t/σ_n²) ‖h_e2e‖²`, the SNR under maximum-ratio transmission.
    pub fn snr(&self, omega: f64, w: &PhaseProfile, tx_snr: f64) -> Result<f64> {
        Ok(tx_snr * self.end_to_end(omega, w)?.norm_squared())
    }

    /// Per-element phase alignment alternated with MRT. Exact for a
    /// single-antenna BS; a local optimum otherwise.
    pub fn full_csi_profile(&self, omega: f64) -> Result<PhaseProfile> {
        let (n, m) = self.h_t.shape();
        if self.h_r.shape() != (1, n) || self.h_d.shape() != (1, m) {
            return Err(dims("full CSI link shapes", format!("1x{n}, 1x{m}"), format!("{:?}, {:?}", self.h_r.shape(), self.h_d.shape())));
        }
        // Start from the precoder that maximizes the incoherent RIS power.
        let g = DMatrix::from_fn(n, m, |i, j| self.h_r[(0, i)] * self.h_t[(i, j)]);
        let mut p = if m == 1 { DVector::from_element(1, Complex64::new(1.0, 0.0)) } else { hermitian_eigen(&(g.adjoint() * &g))?.principal_vector() };
        let mut w = PhaseProfile::zeros(n);
        let mut last = f64::NEG_INFINITY;
        for _ in 0..20 {
            let gp = &g * &p;
            let d = (&self.h_d * &p)[(0, 0)];
            let reference = if d.norm() > 0.0 { d.arg() } else { 0.0 };
            w = PhaseProfile::new(gp.iter().map(|a| if a.norm() > 0.0 { reference - a.arg() } else { 0.0 }).collect())?;
            let h = self.end_to_end(omega, &w)?;
            let gain = h.norm_squared();
            if !(gain > 0.0) {
                break;
            }
            p = h.adjoint().unscale(gain.sqrt()).column(0).into_owned();
            if gain <= last * (1.0 + 1e-12) {
                break;
            }
            last = gain;
        }
        Ok(w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathKind {
    Los,
    Ground,
    Scatterer(usize),
}

/// One propagation path on either side of the RIS. `apparent` is the point
/// the RIS sees the wave come from (BS side) or go to (MU side): the array
/// itself, its ground image, or the scatterer.
#[derive(Debug, Clone, PartialEq)]
pub struct PathComponent {
    pub kind: PathKind,
    pub apparent: Position3,
    pub channel: ChannelMatrix,
}

/// Path-resolved channels of one realization. BS-side components are N×M,
/// MU-side components 1×N; non-LOS components are ordered ground first.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialChannels {
    pub h_d: ChannelMatrix,
    pub bs_side: Vec<PathComponent>,
    pub mu_side: Vec<PathComponent>,
}

impl TrialChannels {
    pub fn link(&self) -> LinkChannels {
        let sum = |c: &[PathComponent]| c.iter().skip(1).fold(c[0].channel.clone(), |a, p| a + &p.channel);
        LinkChannels { h_d: self.h_d.clone(), h_t: sum(&self.bs_side), h_r: sum(&self.mu_side) }
    }

    /// LOS plus the first `v_est` non-LOS components on each side.
    pub fn restricted(&self, v_est: usize) -> Self {
        Self {
            h_d: self.h_d.clone(),
            bs_side: self.bs_side.iter().take(1 + v_est).cloned().collect(),
            mu_side: self.mu_side.iter().take(1 + v_est).cloned().collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BestPath {
    pub profile: PhaseProfile,
    pub bs: PathKind,
    pub mu: PathKind,
    /// SNR predicted from the known components.
    pub snr: f64,
}

/// Focuses from each BS-side apparent source onto each MU-side apparent
/// destination and keeps the pair with the largest SNR on the known
/// channel. Falls back to the LOS pair when no pair carries any power.
pub fn select_best_path(known: &TrialChannels, ris: &[Position3], wl: Wavelength, omega: f64, tx_snr: f64) -> Result<BestPath> {
    if known.bs_side.is_empty() || known.mu_side.is_empty() {
        return Err(Error::InvalidParameter { name: "paths", reason: "LOS components are required on both sides".into() });
    }
    let link = known.link();
    let mut best: Option<BestPath> = None;
    for b in &known.bs_side {
        for m in &known.mu_side {
            let profile = focusing_profile(ris, b.apparent, m.apparent, wl, FocusVariant::Exact)?;
            let snr = link.snr(omega, &profile, tx_snr)?;
            if best.as_ref().is_none_or(|x| snr > x.snr) {
                best = Some(BestPath { profile, bs: b.kind, mu: m.kind, snr });
            }
        }
    }
    let best = best.expect("nonempty candidate set");
    if best.snr > 0.0 {
        return Ok(best);
    }
    let (b, m) = (&known.bs_side[0], &known.mu_side[0]);
    let profile = focusing_profile(ris, b.apparent, m.apparent, wl, FocusVariant::Exact)?;
    let snr = link.snr(omega, &profile, tx_snr)?;
    Ok(BestPath { profile, bs: PathKind::Los, mu: PathKind::Los, snr })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrPoint {
    pub k_db: f64,
    pub benchmark: BenchmarkId,
    /// `10 log10` of the trial-mean linear SNR.
    pub mean_snr_db: f64,
    /// Delta-method standard error of `mean_snr_db`; `None` for one trial.
    pub std_err_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrResult {
    pub trials: usize,
    pub points: Vec<SnrPoint>,
}

impl SnrResult {
    pub fn get(&self, k_db: f64, b: BenchmarkId) -> Option<&SnrPoint> {
        self.points.iter().find(|p| p.k_db == k_db && p.benchmark == b)
    }
}

/// Unit-power geometry of one trial; K only rescales the non-LOS parts.
struct TrialDraw {
    mu: Position3,
    blocked: bool,
    ground_fluct_db: [f64; 2],
    scatterers: [Vec<Cluster>; 2],
    random: PhaseProfile,
}

struct Cluster {
    center: Position3,
    subs: Vec<(Position3, f64)>,
}

fn draw_trial(s: &Scenario, n: usize, rng: &mut ChaCha8Rng) -> Result<TrialDraw> {
    let c = s.target_center();
    let [sx, sy] = s.target.size_m;
    let mu = c + Position3::new(sx * (rng.random::<f64>() - 0.5), sy * (rng.random::<f64>() - 0.5), 0.0);
    let blocked = rng.random::<f64>() < s.link.self_blockage_prob;
    let mp = &s.multipath;
    let fluct = Normal::new(0.0, mp.ground_fluctuation_db).map_err(|e| Error::Domain(e.to_string()))?;
    let ground_fluct_db = [fluct.sample(rng), fluct.sample(rng)];
    let lo = Position3::from(mp.scatterer_box_min_m);
    let hi = Position3::from(mp.scatterer_box_max_m);
    let draw_side = |rng: &mut ChaCha8Rng| -> Vec<Cluster> {
        (0..mp.scatterers)
            .map(|_| {
                let center = lo + (hi - lo).component_mul(&Position3::from_fn(|_, _| rng.random::<f64>()));
                let subs = (0..mp.subpaths)
                    .map(|_| {
                        let off = Position3::from_fn(|_, _| StandardNormal.sample(rng)) * mp.scatterer_spread_m;
                        (center + off, 2.0 * PI * rng.random::<f64>())
                    })
                    .collect();
                Cluster { center, subs }
            })
            .collect()
    };
    let scatterers = [draw_side(rng), draw_side(rng)];
    let random = PhaseProfile::new((0..n).map(|_| 2.0 * PI * rng.random::<f64>()).collect())?;
    Ok(TrialDraw { mu, blocked, ground_fluct_db, scatterers, random })
}

/// Sum over sub-scatterers of `e^{jφ_i} a_rx,i a_tx,i^T`, each leg `e^{jκ‖·‖}`.
fn cluster_channel(tx: &[Position3], rx: &[Position3], cl: &Cluster, amp: f64, k: f64) -> ChannelMatrix {
    let mut h = ChannelMatrix::zeros(rx.len(), tx.len());
    for (p, phase) in &cl.subs {
        let a_rx = DVector::from_iterator(rx.len(), rx.iter().map(|u| Complex64::from_polar(1.0, k * (u - p).norm())));
        let a_tx = DVector::from_iterator(tx.len(), tx.iter().map(|u| Complex64::from_polar(1.0, k * (u - p).norm())));
        h.ger(Complex64::from_polar(amp, *phase), &a_rx, &a_tx, Complex64::new(1.0, 0.0));
    }
    h
}

/// Components at unit non-LOS scale: ground at LOS power, each scatterer
/// cluster at LOS power.
fn unit_channels(s: &Scenario, ris: &[Position3], bs: &[Position3], d: &TrialDraw) -> Result<TrialChannels> {
    let wl = s.wavelength()?;
    let k = wl.kappa();
    let pl = s.link.path_loss;
    let u_bs = s.bs_nominal();
    let c_t = pl.amplitude(u_bs.norm());
    let c_r = pl.amplitude(d.mu.norm());
    let c_d = pl.amplitude((d.mu - u_bs).norm()) * 10f64.powf(-s.link.direct_blockage_db / 20.0);
    let mu = [d.mu];
    let h_d = los_near(bs, &mu, Complex64::new(c_d, 0.0), wl)?;
    let mut bs_side = vec![PathComponent { kind: PathKind::Los, apparent: u_bs, channel: los_near(bs, ris, Complex64::new(c_t, 0.0), wl)? }];
    let mut h_r_los = los_near(ris, &mu, Complex64::new(c_r, 0.0), wl)?;
    if d.blocked {
        h_r_los.fill(Complex64::new(0.0, 0.0));
    }
    let mut mu_side = vec![PathComponent { kind: PathKind::Los, apparent: d.mu, channel: h_r_los }];
    if let Some(z) = s.multipath.ground_height_m {
        let fl = |x: f64| 10f64.powf(x / 20.0);
        let plane = |c: f64| ReflectorPlane::new(Position3::new(0.0, 0.0, z), Position3::z(), Complex64::new(c, 0.0));
        let pt = plane(c_t * fl(d.ground_fluct_db[0]))?;
        bs_side.push(PathComponent { kind: PathKind::Ground, apparent: pt.mirror(&u_bs), channel: reflector_nlos(bs, ris, &pt, wl)? });
        let pr = plane(c_r * fl(d.ground_fluct_db[1]))?;
        mu_side.push(PathComponent { kind: PathKind::Ground, apparent: pr.mirror(&d.mu), channel: reflector_nlos(ris, &mu, &pr, wl)? });
    }
    let sub_amp = 1.0 / (s.multipath.subpaths as f64).sqrt();
    for (v, cl) in d.scatterers[0].iter().enumerate() {
        bs_side.push(PathComponent { kind: PathKind::Scatterer(v), apparent: cl.center, channel: cluster_channel(bs, ris, cl, c_t * sub_amp, k) });
    }
    for (v, cl) in d.scatterers[1].iter().enumerate() {
        mu_side.push(PathComponent { kind: PathKind::Scatterer(v), apparent: cl.center, channel: cluster_channel(ris, &mu, cl, c_r * sub_amp, k) });
    }
    Ok(TrialChannels { h_d, bs_side, mu_side })
}

/// Non-LOS power budget `1/K` relative to LOS: the ground path takes its
/// mean loss (or the whole budget if that is smaller), the scatterers share
/// the rest equally. Returns amplitude scales `(ground, per scatterer)`.
fn nlos_scales(s: &Scenario, k_db: f64) -> (f64, f64) {
    let mp = &s.multipath;
    let budget = if k_db == f64::INFINITY { 0.0 } else { 10f64.powf(-k_db / 10.0) };
    let ground = if mp.ground_height_m.is_some() { budget.min(10f64.powf(-mp.ground_loss_db / 10.0)) } else { 0.0 };
    let scat = if mp.scatterers > 0 { (budget - ground) / mp.scatterers as f64 } else { 0.0 };
    (ground.sqrt(), scat.sqrt())
}

fn scaled(unit: &TrialChannels, g: f64, sc: f64) -> TrialChannels {
    let scale = |c: &PathComponent| {
        let f = match c.kind {
            PathKind::Los => 1.0,
            PathKind::Ground => g,
            PathKind::Scatterer(_) => sc,
        };
        PathComponent { kind: c.kind, apparent: c.apparent, channel: c.channel.scale(f) }
    };
    TrialChannels {
        h_d: unit.h_d.clone(),
        bs_side: unit.bs_side.iter().map(scale).collect(),
        mu_side: unit.mu_side.iter().map(scale).collect(),
    }
}

/// Linear SNR of each benchmark for one trial at each K.
fn trial_snrs(s: &Scenario, ris: &[Position3], bs: &[Position3], trial: usize, k_db: &[f64], benchmarks: &[BenchmarkId]) -> Result<Vec<Vec<f64>>> {
    let wl = s.wavelength()?;
    let omega = s.omega()?;
    let tx = s.link.tx_snr();
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed.wrapping_add(trial as u64));
    let draw = draw_trial(s, ris.len(), &mut rng)?;
    let unit = unit_channels(s, ris, bs, &draw)?;
    let los_profile = focusing_profile(ris, s.bs_nominal(), draw.mu, wl, FocusVariant::Exact)?;
    let zeros = PhaseProfile::zeros(ris.len());
    k_db.iter()
        .map(|&k| {
            let (g, sc) = nlos_scales(s, k);
            let ch = scaled(&unit, g, sc);
            let link = ch.link();
            benchmarks
                .iter()
                .map(|b| match b {
                    BenchmarkId::FullCsi => link.snr(omega, &link.full_csi_profile(omega)?, tx),
                    BenchmarkId::LosFocusing => link.snr(omega, &los_profile, tx),
                    BenchmarkId::ProposedBestPath => {
                        let best = select_best_path(&ch.restricted(s.multipath.v_est), ris, wl, omega, tx)?;
                        link.snr(omega, &best.profile, tx)
                    }
                    BenchmarkId::RandomPhases => link.snr(omega, &draw.random, tx),
                    BenchmarkId::SpecularReflection => link.snr(omega, &zeros, tx),
                })
                .collect()
        })
        .collect()
}

/// Mean SNR over `s.trials` MU placements and channel draws for every
/// (K, benchmark). Trial `t` uses the seed `s.seed + t` for all K values.
pub fn run_snr_vs_k(s: &Scenario, k_db: &[f64], benchmarks: &[BenchmarkId]) -> Result<SnrResult> {
    s.validate()?;
    if k_db.is_empty() || benchmarks.is_empty() {
        return Err(Error::InvalidParameter { name: "k_db", reason: "need at least one K value and one benchmark".into() });
    }
    let ris = s.ris_geometry()?;
    let bs = s.bs_geometry()?;
    let per_trial: Vec<Vec<Vec<f64>>> = (0..s.trials)
        .into_par_iter()
        .map(|t| trial_snrs(s, ris.positions(), bs.positions(), t, k_db, benchmarks))
        .collect::<Result<_>>()?;
    let mut points = Vec::with_capacity(k_db.len() * benchmarks.len());
    for (ki, &k) in k_db.iter().enumerate() {
        for (bi, &b) in benchmarks.iter().enumerate() {
            let xs: Vec<f64> = per_trial.iter().map(|t| t[ki][bi]).collect();
            let (mean_snr_db, std_err_db) = mean_db_with_se(&xs);
            points.push(SnrPoint { k_db: k, benchmark: b, mean_snr_db, std_err_db });
        }
    }
    Ok(SnrResult { trials: s.trials, points })
}

/// `10 log10(mean)` and its delta-method standard error `(10/ln 10)·SE/mean`.
pub fn mean_db_with_se(xs: &[f64]) -> (f64, Option<f64>) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let db = 10.0 * mean.max(1e-300).log10();
    if xs.len() < 2 {
        return (db, None);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();
    (db, Some(10.0 / std::f64::consts::LN_10 * se / mean.max(1e-300)))
}
