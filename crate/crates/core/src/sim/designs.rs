//! Convergence traces, illumination maps and region-size sweeps.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{focusing_profile, linear_profile, quadratic_profile, wide_near_profile, FocusVariant};
use crate::error::{Error, Result};
use crate::geometry::{Angles, ArrayGeometry};
use crate::grcs::{grcs_field, linspace, normalized_values, to_db, GrcsField, TargetSet};
use crate::optimizer::{penalty_sca, LiftedVariable, ScaOutcome};
use crate::profile::PhaseProfile;

use super::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DesignId {
    LinearFF,
    QuadraticFF,
    FocusNF,
    WideNF,
    OptimizedFF,
    OptimizedNF,
}

impl DesignId {
    pub const ALL: [DesignId; 6] = [
        DesignId::LinearFF,
        DesignId::QuadraticFF,
        DesignId::FocusNF,
        DesignId::WideNF,
        DesignId::OptimizedFF,
        DesignId::OptimizedNF,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DesignId::LinearFF => "linear-ff",
            DesignId::QuadraticFF => "quadratic-ff",
            DesignId::FocusNF => "focus-nf",
            DesignId::WideNF => "wide-nf",
            DesignId::OptimizedFF => "optimized-ff",
            DesignId::OptimizedNF => "optimized-nf",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.name() == s)
    }

    pub fn is_far_field(self) -> bool {
        matches!(self, DesignId::LinearFF | DesignId::QuadraticFF | DesignId::OptimizedFF)
    }
}

impl std::fmt::Display for DesignId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Angle sets `A_t × A_r` for the far-field designs.
///
/// `A_t` holds the directions of the possible BS positions. `A_r` is a
/// uniform grid in (θ, φ) spanning the angular extent of the target grid,
/// with as many samples as the spatial grid (a single direction for a point).
pub fn far_field_angles(s: &Scenario) -> Result<(Vec<Angles>, Vec<Angles>)> {
    let a_t = s.bs_points().iter().map(|b| Angles::from_direction(&(-b))).collect::<Result<Vec<_>>>()?;
    let pts = s.region_points();
    if s.is_single_point() {
        return Ok((a_t, vec![Angles::from_direction(&s.target_center())?]));
    }
    let ang = pts.iter().map(Angles::from_direction).collect::<Result<Vec<_>>>()?;
    let range = |f: fn(&Angles) -> f64| {
        ang.iter().map(f).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    };
    let (t_lo, t_hi) = range(|a| a.theta);
    let (p_lo, p_hi) = range(|a| a.phi);
    let [gx, gy] = s.target.grid;
    let flat = t_hi - t_lo < 1e-12;
    let (nt, np) = if flat { (1, gx * gy) } else { (gx, gy) };
    let a_r = linspace(t_lo, t_hi, nt)
        .into_iter()
        .flat_map(|t| linspace(p_lo, p_hi, np).into_iter().map(move |p| Angles::new(t, p)))
        .collect();
    Ok((a_t, a_r))
}

pub fn far_field_targets(s: &Scenario, geom: &ArrayGeometry) -> Result<TargetSet> {
    let (a_t, a_r) = far_field_angles(s)?;
    TargetSet::far_field(geom, &a_t, &a_r, s.omega()?, s.wavelength()?)
}

/// Spatial targets: every possible BS position × every target grid point.
pub fn near_field_targets(s: &Scenario, geom: &ArrayGeometry) -> Result<TargetSet> {
    TargetSet::near_field(geom.positions(), &s.bs_points(), &s.region_points(), s.omega()?, s.wavelength()?)
}

#[derive(Debug, Clone)]
pub struct Design {
    pub id: DesignId,
    pub profile: PhaseProfile,
    /// Present for the optimized designs.
    pub sca: Option<ScaOutcome>,
}

/// Builds one design. Optimized designs start from their analytic
/// counterpart (quadratic for far field, wide near-field for near field).
pub fn design(s: &Scenario, id: DesignId) -> Result<Design> {
    let geom = s.ris_geometry()?;
    let wl = s.wavelength()?;
    let analytic = |id: DesignId| -> Result<PhaseProfile> {
        Ok(match id {
            DesignId::LinearFF => {
                let t = Angles::from_direction(&(-s.bs_nominal()))?;
                let r = Angles::from_direction(&s.target_center())?;
                linear_profile(&geom, t, r, wl)?
            }
            DesignId::QuadraticFF => {
                let (a_t, a_r) = far_field_angles(s)?;
                quadratic_profile(&geom, &a_t, &a_r, wl)?.0
            }
            DesignId::FocusNF => focusing_profile(geom.positions(), s.bs_nominal(), s.target_center(), wl, FocusVariant::Exact)?,
            DesignId::WideNF => wide_near_profile(geom.positions(), s.bs_nominal(), &s.region_mapping(&geom)?, wl)?,
            DesignId::OptimizedFF | DesignId::OptimizedNF => unreachable!(),
        })
    };
    match id {
        DesignId::OptimizedFF | DesignId::OptimizedNF => {
            let (q, init) = if id == DesignId::OptimizedFF {
                (far_field_targets(s, &geom)?, analytic(DesignId::QuadraticFF)?)
            } else {
                (near_field_targets(s, &geom)?, analytic(DesignId::WideNF)?)
            };
            let out = penalty_sca(&q, &LiftedVariable::from_profile(&init, &q)?, &s.optimizer)?;
            Ok(Design { id, profile: out.profile.clone(), sca: Some(out) })
        }
        _ => Ok(Design { id, profile: analytic(id)?, sca: None }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitKind {
    Analytic,
    Random { seed: u64 },
}

impl std::fmt::Display for InitKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InitKind::Analytic => f.write_str("analytic"),
            InitKind::Random { seed } => write!(f, "random-{seed}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConvergenceRun {
    pub init: InitKind,
    pub outcome: ScaOutcome,
}

/// Penalty/SCA on the far-field target set from the quadratic analytic
/// profile and from `random_inits` random starts seeded `seed, seed+1, …`.
pub fn run_convergence(s: &Scenario, random_inits: usize, seed: u64) -> Result<Vec<ConvergenceRun>> {
    s.validate()?;
    let geom = s.ris_geometry()?;
    let q = far_field_targets(s, &geom)?;
    let init = design(s, DesignId::QuadraticFF)?.profile;
    let kinds: Vec<InitKind> = std::iter::once(InitKind::Analytic)
        .chain((0..random_inits as u64).map(|i| InitKind::Random { seed: seed.wrapping_add(i) }))
        .collect();
    kinds
        .into_par_iter()
        .map(|kind| {
            let w0 = match kind {
                InitKind::Analytic => LiftedVariable::from_profile(&init, &q)?,
                InitKind::Random { seed } => LiftedVariable::random(&q, &mut ChaCha8Rng::seed_from_u64(seed))?,
            };
            Ok(ConvergenceRun { init: kind, outcome: penalty_sca(&q, &w0, &s.optimizer)? })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IlluminationSummary {
    /// Worst and best normalized GRCS over the spatial target set, dB.
    pub min_in_region_db: f64,
    pub max_in_region_db: f64,
    /// Largest scan value outside the target rectangle (grown by one scan step), dB.
    pub leakage_db: f64,
    pub peak_db: f64,
    pub peak_m: [f64; 3],
}

#[derive(Debug, Clone)]
pub struct Illumination {
    pub design: Design,
    pub field: GrcsField,
    pub summary: IlluminationSummary,
}

/// Normalized GRCS of `profile` over the spatial target set, dB.
pub fn region_values_db(s: &Scenario, profile: &PhaseProfile) -> Result<Vec<f64>> {
    let geom = s.ris_geometry()?;
    Ok(normalized_values(&near_field_targets(s, &geom)?, profile)?.into_iter().map(to_db).collect())
}

pub fn worst_case_db(s: &Scenario, profile: &PhaseProfile) -> Result<f64> {
    Ok(region_values_db(s, profile)?.into_iter().fold(f64::INFINITY, f64::min))
}

/// Designs a profile and maps its normalized GRCS over the scan grid, with
/// the source at the nominal BS position.
pub fn run_illumination(s: &Scenario, id: DesignId) -> Result<Illumination> {
    s.validate()?;
    let d = design(s, id)?;
    illuminate_profile(s, d)
}

/// Maps an existing design over the scan grid.
pub fn illuminate_profile(s: &Scenario, d: Design) -> Result<Illumination> {
    let (field, summary) = illumination_map(s, &d.profile)?;
    Ok(Illumination { design: d, field, summary })
}

/// Scan-grid map and summary of any profile sized for the scenario's RIS.
pub fn illumination_map(s: &Scenario, profile: &PhaseProfile) -> Result<(GrcsField, IlluminationSummary)> {
    let geom = s.ris_geometry()?;
    if profile.len() != geom.len() {
        return Err(crate::error::dims("profile length", geom.len(), profile.len()));
    }
    let scan = s.scan_region();
    let field = grcs_field(&scan, s.bs_nominal(), profile, geom.positions(), s.omega()?, s.wavelength()?)?;
    let vals = region_values_db(s, profile)?;
    let step = |a: &[f64]| if a.len() > 1 { (a[1] - a[0]).abs() } else { 0.0 };
    let half_x = s.target.size_m[0] / 2.0 + step(&scan.axis1);
    let half_y = s.target.size_m[1] / 2.0 + step(&scan.axis2);
    let c = s.target_center();
    let mut leakage = f64::NEG_INFINITY;
    for i in 0..scan.axis1.len() {
        for j in 0..scan.axis2.len() {
            let p = scan.point(i, j);
            if (p.x - c.x).abs() > half_x + 1e-9 || (p.y - c.y).abs() > half_y + 1e-9 {
                leakage = leakage.max(to_db(field.values[(i, j)]));
            }
        }
    }
    let (pi, pj) = field.argmax();
    let summary = IlluminationSummary {
        min_in_region_db: vals.iter().copied().fold(f64::INFINITY, f64::min),
        max_in_region_db: vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        leakage_db: leakage,
        peak_db: to_db(field.max()),
        peak_m: scan.point(pi, pj).into(),
    };
    Ok((field, summary))
}

/// Designs compared by the region-size sweep.
pub const SWEEP_DESIGNS: [DesignId; 4] = [DesignId::QuadraticFF, DesignId::WideNF, DesignId::OptimizedFF, DesignId::OptimizedNF];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub r_m: f64,
    pub design: DesignId,
    /// Worst case over all possible BS positions × target grid points, dB.
    pub min_grcs_db: f64,
}

/// Worst-case normalized GRCS of each design on `R × R` target areas.
pub fn run_region_sweep(s: &Scenario, r_values: &[f64]) -> Result<Vec<SweepRow>> {
    s.validate()?;
    if r_values.is_empty() {
        return Err(Error::InvalidParameter { name: "r_values", reason: "need at least one area length".into() });
    }
    if let Some(r) = r_values.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
        return Err(Error::InvalidParameter { name: "r_values", reason: format!("area lengths must be > 0, got {r}") });
    }
    let jobs: Vec<(f64, DesignId)> = r_values.iter().flat_map(|&r| SWEEP_DESIGNS.into_iter().map(move |d| (r, d))).collect();
    jobs.into_par_iter()
        .map(|(r, id)| {
            let sr = s.with_region_size(r);
            let d = design(&sr, id)?;
            Ok(SweepRow { r_m: r, design: id, min_grcs_db: worst_case_db(&sr, &d.profile)? })
        })
        .collect()
}
