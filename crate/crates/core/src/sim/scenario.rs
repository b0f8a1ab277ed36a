//! Scenario description shared by all experiments.
//!
//! The RIS is centered at the origin in the y–z plane with boresight +x.
//! Planar (2-D) scenarios use a linear RIS along y (`nz = 1`) and keep every
//! point at z = 0.

use serde::{Deserialize, Serialize};

use crate::analytic::RectangleMapping;
use crate::channel::{default_unit_cell_factor, PathLossModel};
use crate::error::{Error, Result};
use crate::geometry::{far_field_distance, quadratic_near_field_distance, upa_geometry, ArrayGeometry, Position3, Wavelength};
use crate::io::RegimeRow;
use crate::grcs::{linspace, ScanRegion};
use crate::optimizer::ScaParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub freq_ghz: f64,
    pub ris: RisSpec,
    pub bs: BsSpec,
    pub target: TargetSpec,
    #[serde(default)]
    pub scan: Option<ScanSpec>,
    #[serde(default)]
    pub optimizer: ScaParams,
    #[serde(default)]
    pub multipath: MultipathSpec,
    #[serde(default)]
    pub link: LinkBudget,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub experiments: ExperimentSpec,
}

pub const DEFAULT_SEED: u64 = 20_240_101;

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_trials() -> usize {
    100
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RisSpec {
    pub ny: usize,
    #[serde(default = "one")]
    pub nz: usize,
    #[serde(default = "half")]
    pub spacing_wavelengths: f64,
}

fn one() -> usize {
    1
}

fn half() -> f64 {
    0.5
}

/// BS array center, antenna grid, and a segment of possible true positions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BsSpec {
    pub position_m: [f64; 3],
    /// `[ny, nz]` half-wavelength UPA in the y–z plane.
    #[serde(default = "single_antenna")]
    pub antennas: [usize; 2],
    /// Half-width vector of the position uncertainty segment.
    #[serde(default)]
    pub uncertainty_m: [f64; 3],
    #[serde(default = "one")]
    pub uncertainty_points: usize,
}

fn single_antenna() -> [usize; 2] {
    [1, 1]
}

/// Rectangular illumination area in the x–y plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    pub center_m: [f64; 3],
    /// `[R_x, R_y]`; zero extents give a single point.
    #[serde(default)]
    pub size_m: [f64; 2],
    /// Samples along x and y.
    #[serde(default = "single_point")]
    pub grid: [usize; 2],
}

fn single_point() -> [usize; 2] {
    [1, 1]
}

/// Heat-map grid in the x–y plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    pub center_m: [f64; 3],
    pub size_m: [f64; 2],
    pub points: [usize; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MultipathSpec {
    pub k_db: Vec<f64>,
    /// Point scatterers per link.
    pub scatterers: usize,
    pub subpaths: usize,
    /// Standard deviation of sub-scatterer offsets around each scatterer.
    pub scatterer_spread_m: f64,
    pub scatterer_box_min_m: [f64; 3],
    pub scatterer_box_max_m: [f64; 3],
    /// Ground plane height; `None` disables the ground reflection.
    pub ground_height_m: Option<f64>,
    pub ground_loss_db: f64,
    pub ground_fluctuation_db: f64,
    /// Non-LOS components known to the best-path scheme, ground first.
    pub v_est: usize,
}

impl Default for MultipathSpec {
    fn default() -> Self {
        Self {
            k_db: vec![-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0],
            scatterers: 5,
            subpaths: 20,
            scatterer_spread_m: 1.0,
            scatterer_box_min_m: [5.0, -20.0, -5.0],
            scatterer_box_max_m: [60.0, 90.0, 10.0],
            ground_height_m: Some(-6.0),
            ground_loss_db: 8.0,
            ground_fluctuation_db: 3.0,
            v_est: 6,
        }
    }
}

impl MultipathSpec {
    /// `V`: ground reflection (if any) plus point scatterers.
    pub fn nlos_paths(&self) -> usize {
        self.scatterers + usize::from(self.ground_height_m.is_some())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkBudget {
    pub pt_dbm: f64,
    pub bandwidth_hz: f64,
    pub noise_psd_dbm_hz: f64,
    pub noise_figure_db: f64,
    /// Extra attenuation of the direct BS–MU link.
    pub direct_blockage_db: f64,
    pub self_blockage_prob: f64,
    pub path_loss: PathLossModel,
}

impl Default for LinkBudget {
    fn default() -> Self {
        Self {
            pt_dbm: 20.0,
            bandwidth_hz: 20e6,
            noise_psd_dbm_hz: -174.0,
            noise_figure_db: 6.0,
            direct_blockage_db: 40.0,
            self_blockage_prob: 0.5,
            path_loss: PathLossModel::default(),
        }
    }
}

impl LinkBudget {
    /// `σ_n² = W N_0 N_f` in dBm.
    pub fn noise_dbm(&self) -> f64 {
        self.noise_psd_dbm_hz + 10.0 * self.bandwidth_hz.log10() + self.noise_figure_db
    }

    /// `P_t / σ_n²`, linear.
    pub fn tx_snr(&self) -> f64 {
        10f64.powf((self.pt_dbm - self.noise_dbm()) / 10.0)
    }
}

/// Sweep axes of the batch experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    /// Carrier frequencies of the regime table; empty means `freq_ghz`.
    pub regime_freqs_ghz: Vec<f64>,
    /// Side lengths of square apertures (`D = √2·L`); empty means the RIS.
    pub regime_side_m: Vec<f64>,
    /// Area lengths `R` of the region sweep.
    pub sweep_r_m: Vec<f64>,
    /// Random initializations next to the analytic one.
    pub random_inits: usize,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self { regime_freqs_ghz: Vec::new(), regime_side_m: Vec::new(), sweep_r_m: Vec::new(), random_inits: 2 }
    }
}

fn bad(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}

fn finite3(v: &[f64; 3]) -> bool {
    v.iter().all(|x| x.is_finite())
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.freq_ghz > 0.0 && self.freq_ghz.is_finite()) {
            return Err(bad("freq_ghz", format!("must be > 0, got {}", self.freq_ghz)));
        }
        if self.ris.ny == 0 || self.ris.nz == 0 {
            return Err(bad("ris.ny/ris.nz", "must be ≥ 1"));
        }
        if !(self.ris.spacing_wavelengths > 0.0 && self.ris.spacing_wavelengths.is_finite()) {
            return Err(bad("ris.spacing_wavelengths", "must be > 0"));
        }
        if !finite3(&self.bs.position_m) || !finite3(&self.bs.uncertainty_m) {
            return Err(bad("bs.position_m", "coordinates must be finite"));
        }
        if self.bs.antennas.contains(&0) {
            return Err(bad("bs.antennas", "must be ≥ 1 along each axis"));
        }
        if self.bs.uncertainty_points == 0 {
            return Err(bad("bs.uncertainty_points", "must be ≥ 1"));
        }
        if !finite3(&self.target.center_m) {
            return Err(bad("target.center_m", "coordinates must be finite"));
        }
        if self.target.size_m.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return Err(bad("target.size_m", "extents must be ≥ 0"));
        }
        if self.target.grid.contains(&0) {
            return Err(bad("target.grid", "must be ≥ 1 along each axis"));
        }
        if let Some(scan) = &self.scan {
            if scan.points.contains(&0) || scan.size_m.iter().any(|s| !(*s >= 0.0)) || !finite3(&scan.center_m) {
                return Err(bad("scan", "needs finite center, extents ≥ 0 and ≥ 1 point per axis"));
            }
        }
        self.optimizer.validate()?;
        let mp = &self.multipath;
        if mp.k_db.iter().any(|k| k.is_nan()) {
            return Err(bad("multipath.k_db", "values must not be NaN"));
        }
        if mp.subpaths == 0 {
            return Err(bad("multipath.subpaths", "must be ≥ 1"));
        }
        if !(mp.scatterer_spread_m >= 0.0) || !(mp.ground_fluctuation_db >= 0.0) {
            return Err(bad("multipath", "spreads must be ≥ 0"));
        }
        if (0..3).any(|i| !(mp.scatterer_box_min_m[i] <= mp.scatterer_box_max_m[i])) {
            return Err(bad("multipath.scatterer_box_min_m", "must not exceed scatterer_box_max_m"));
        }
        if mp.v_est > mp.nlos_paths() {
            return Err(bad("multipath.v_est", format!("must be ≤ V = {}, got {}", mp.nlos_paths(), mp.v_est)));
        }
        let l = &self.link;
        if !(l.bandwidth_hz > 0.0 && l.bandwidth_hz.is_finite()) {
            return Err(bad("link.bandwidth_hz", format!("must be > 0, got {}", l.bandwidth_hz)));
        }
        if !(0.0..=1.0).contains(&l.self_blockage_prob) {
            return Err(bad("link.self_blockage_prob", format!("must be in [0, 1], got {}", l.self_blockage_prob)));
        }
        if !(l.path_loss.d0_m > 0.0) {
            return Err(bad("link.path_loss.d0_m", "must be > 0"));
        }
        if self.trials == 0 {
            return Err(bad("trials", "must be ≥ 1"));
        }
        let e = &self.experiments;
        if e.regime_freqs_ghz.iter().any(|f| !(*f > 0.0 && f.is_finite())) {
            return Err(bad("experiments.regime_freqs_ghz", "frequencies must be > 0"));
        }
        if e.regime_side_m.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(bad("experiments.regime_side_m", "side lengths must be > 0"));
        }
        if e.sweep_r_m.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(bad("experiments.sweep_r_m", "area lengths must be > 0"));
        }
        Ok(())
    }

    pub fn wavelength(&self) -> Result<Wavelength> {
        Wavelength::from_ghz(self.freq_ghz)
    }

    /// Unit-cell factor of a `λ/2 × λ/2` cell.
    pub fn omega(&self) -> Result<f64> {
        Ok(default_unit_cell_factor(self.wavelength()?))
    }

    pub fn ris_geometry(&self) -> Result<ArrayGeometry> {
        let d = self.ris.spacing_wavelengths * self.wavelength()?.meters();
        Ok(upa_geometry(self.ris.ny, self.ris.nz, d, d)?.centered_at(Position3::zeros()))
    }

    pub fn bs_nominal(&self) -> Position3 {
        Position3::from(self.bs.position_m)
    }

    pub fn bs_geometry(&self) -> Result<ArrayGeometry> {
        let h = self.wavelength()?.meters() / 2.0;
        Ok(upa_geometry(self.bs.antennas[0], self.bs.antennas[1], h, h)?.centered_at(self.bs_nominal()))
    }

    /// Possible true BS positions, evenly spaced over the uncertainty segment.
    pub fn bs_points(&self) -> Vec<Position3> {
        let c = self.bs_nominal();
        let h = Position3::from(self.bs.uncertainty_m);
        linspace(-1.0, 1.0, self.bs.uncertainty_points).into_iter().map(|s| c + h * s).collect()
    }

    pub fn target_center(&self) -> Position3 {
        Position3::from(self.target.center_m)
    }

    /// Target grid, x outer and y inner.
    pub fn region_points(&self) -> Vec<Position3> {
        let c = self.target_center();
        let [sx, sy] = self.target.size_m;
        let xs = linspace(-sx / 2.0, sx / 2.0, self.target.grid[0]);
        let ys = linspace(-sy / 2.0, sy / 2.0, self.target.grid[1]);
        xs.iter().flat_map(|&x| ys.iter().map(move |&y| c + Position3::new(x, y, 0.0))).collect()
    }

    pub fn is_single_point(&self) -> bool {
        self.target.size_m == [0.0, 0.0] || self.target.grid == [1, 1]
    }

    pub fn region_mapping(&self, geom: &ArrayGeometry) -> Result<RectangleMapping> {
        RectangleMapping::new(geom.positions(), self.target_center(), self.target.size_m[0], self.target.size_m[1])
    }

    /// The configured scan grid, or a 61 × 61 grid over three times the
    /// target extent (at least 30 % of the target distance) around it.
    pub fn scan_region(&self) -> ScanRegion {
        let spec = self.scan.unwrap_or_else(|| {
            let c = self.target_center();
            let floor = 0.3 * c.norm();
            let [sx, sy] = self.target.size_m;
            ScanSpec { center_m: self.target.center_m, size_m: [(3.0 * sx).max(floor), (3.0 * sy).max(floor)], points: [61, 61] }
        });
        ScanRegion::rectangle(
            Position3::from(spec.center_m),
            Position3::x(),
            Position3::y(),
            (spec.size_m[0], spec.size_m[1]),
            (spec.points[0], spec.points[1]),
        )
    }

    /// Far-field and quadratic near-field distances for every configured
    /// (frequency, aperture) pair, frequency outer.
    pub fn regime_rows(&self) -> Result<Vec<RegimeRow>> {
        let e = &self.experiments;
        let freqs = if e.regime_freqs_ghz.is_empty() { vec![self.freq_ghz] } else { e.regime_freqs_ghz.clone() };
        let apertures: Vec<f64> = if e.regime_side_m.is_empty() {
            vec![self.ris_geometry()?.largest_dimension()]
        } else {
            e.regime_side_m.iter().map(|l| l * std::f64::consts::SQRT_2).collect()
        };
        let mut rows = Vec::with_capacity(freqs.len() * apertures.len());
        for &f in &freqs {
            let wl = Wavelength::from_ghz(f)?;
            for &d in &apertures {
                rows.push(RegimeRow { freq_ghz: f, d_m: d, d_ff_m: far_field_distance(d, wl), d_qnf_m: quadratic_near_field_distance(d, wl) });
            }
        }
        Ok(rows)
    }

    /// Copy with an `R × R` target area.
    pub fn with_region_size(&self, r: f64) -> Self {
        let mut s = self.clone();
        s.target.size_m = [r, r];
        s
    }
}
