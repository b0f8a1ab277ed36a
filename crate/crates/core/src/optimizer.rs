//! Max-min GRCS design by semidefinite lifting with a rank-one penalty.
//!
//! With `W = ww^H` the design problem becomes
//!
//! ```text
//! maximize γ  s.t.  f̂_q^H W f̂_q ≥ γ ∀q,  diag(W) = 1,  W ⪰ 0,  rank(W) = 1
//! ```
//!
//! where `f̂_q = f_q / (ΩN)`, so `γ` is the normalized worst-case GRCS. The
//! rank constraint is replaced by the penalty `η(‖W‖_* − ‖W‖_2)`. For a PSD
//! `W` with unit diagonal `‖W‖_* = N`, and the spectral norm is linearized
//! at the previous iterate through its principal eigenvector `v`, giving the
//! convex inner problem
//!
//! ```text
//! maximize γ − η(N − v^H W v)  s.t. the constraints above without the rank.
//! ```
//!
//! The inner problem is solved by ADMM on the splitting
//! `{affine constraints} ∩ {PSD cone × nonnegative slacks}`; the affine
//! step has a closed form through a `|Q| × |Q|` system factored once.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::channel::complex_normal;
use crate::error::{Error, Result};
use crate::grcs::{worst_case_normalized, TargetSet};
use crate::linalg::{gemm, hermitian_eigen, hermitize, project_psd, rank_residual_from_values, HermitianEigen, Op};
use crate::profile::PhaseProfile;

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Parameters of the penalty/SCA loop and its inner solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScaParams {
    pub eta0: f64,
    pub alpha: f64,
    pub eta_max: f64,
    pub i_max: usize,
    /// Rank-residual threshold; `None` means `1e-4 · N`.
    pub rank_tol: Option<f64>,
    pub inner_tol: f64,
    pub inner_max_iter: usize,
    /// Return the best extracted profile seen (including the initial point)
    /// rather than the one from the last iterate.
    pub keep_incumbent: bool,
    /// Fail when the inner solver hits its iteration cap instead of
    /// continuing with the (feasible) inexact point.
    pub strict_inner: bool,
}

impl Default for ScaParams {
    fn default() -> Self {
        Self {
            eta0: 1e-3,
            alpha: 5.0,
            eta_max: 5000.0,
            i_max: 10,
            rank_tol: None,
            inner_tol: 1e-5,
            inner_max_iter: 1500,
            keep_incumbent: true,
            strict_inner: false,
        }
    }
}

impl ScaParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, reason: String| Err(Error::InvalidParameter { name, reason });
        if !(self.eta0 > 0.0 && self.eta0.is_finite()) {
            return bad("eta0", format!("must be > 0, got {}", self.eta0));
        }
        if !(self.alpha > 1.0 && self.alpha.is_finite()) {
            return bad("alpha", format!("must be > 1, got {}", self.alpha));
        }
        if !(self.eta_max >= self.eta0) {
            return bad("eta_max", format!("must be ≥ eta0, got {}", self.eta_max));
        }
        if self.i_max == 0 {
            return bad("i_max", "must be ≥ 1".into());
        }
        if let Some(t) = self.rank_tol {
            if !(t > 0.0) {
                return bad("rank_tol", format!("must be > 0, got {t}"));
            }
        }
        if !(self.inner_tol > 0.0) {
            return bad("inner_tol", format!("must be > 0, got {}", self.inner_tol));
        }
        if self.inner_max_iter == 0 {
            return bad("inner_max_iter", "must be ≥ 1".into());
        }
        Ok(())
    }

    pub fn rank_tol_for(&self, n: usize) -> f64 {
        self.rank_tol.unwrap_or(1e-4 * n as f64)
    }
}

/// Lifted design variable `W` with its worst-case value `γ = min_q f̂_q^H W f̂_q`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedVariable {
    pub w: DMatrix<Complex64>,
    pub gamma: f64,
}

impl LiftedVariable {
    /// `W = ww^H` for a phase profile.
    pub fn from_profile(p: &PhaseProfile, q: &TargetSet) -> Result<Self> {
        let w = p.weights();
        Self::evaluated(&w * w.adjoint(), q)
    }

    /// Random full-rank start: `GG^H` with i.i.d. Gaussian `G`, scaled to unit diagonal.
    pub fn random<R: Rng + ?Sized>(q: &TargetSet, rng: &mut R) -> Result<Self> {
        let n = q.dim();
        let g = DMatrix::from_fn(n, n, |_, _| complex_normal(rng, 1.0));
        let mut w = DMatrix::zeros(n, n);
        gemm(&mut w, false, &g, Op::N, &g, Op::H, ONE);
        Self::evaluated(unit_diagonal(&w)?, q)
    }

    pub fn evaluated(mut w: DMatrix<Complex64>, q: &TargetSet) -> Result<Self> {
        if w.nrows() != q.dim() || w.ncols() != q.dim() {
            return Err(crate::error::dims("lifted variable", q.dim(), format!("{}x{}", w.nrows(), w.ncols())));
        }
        hermitize(&mut w);
        let gamma = lifted_values(q, &w).into_iter().fold(f64::INFINITY, f64::min);
        Ok(Self { w, gamma })
    }

    pub fn rank_residual(&self) -> Result<f64> {
        crate::linalg::rank_residual(&self.w)
    }
}

/// `f̂_q^H W f̂_q` for every target.
pub fn lifted_values(q: &TargetSet, w: &DMatrix<Complex64>) -> Vec<f64> {
    let f = q.normalized_matrix();
    let mut t = DMatrix::zeros(f.nrows(), f.ncols());
    gemm(&mut t, false, w, Op::N, &f, Op::N, ONE);
    (0..f.ncols()).map(|j| f.column(j).dotc(&t.column(j)).re).collect()
}

fn unit_diagonal(w: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let n = w.nrows();
    let mut s = vec![0.0; n];
    for i in 0..n {
        let d = w[(i, i)].re;
        if !(d > 1e-14) {
            return Err(Error::Solver { status: format!("diagonal entry {i} vanished ({d:e})"), iterations: 0 });
        }
        s[i] = 1.0 / d.sqrt();
    }
    let mut out = DMatrix::from_fn(n, n, |i, j| w[(i, j)] * (s[i] * s[j]));
    for i in 0..n {
        out[(i, i)] = ONE;
    }
    hermitize(&mut out);
    Ok(out)
}

/// How an inner solve ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InnerStatus {
    /// The starting point of the loop, not an inner solve.
    Init,
    Solved,
    /// Iteration cap reached; the returned point is feasible but not certified optimal.
    Inexact,
    /// The solve did not improve the surrogate objective; the previous iterate is kept.
    Kept,
}

impl fmt::Display for InnerStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InnerStatus::Init => "init",
            InnerStatus::Solved => "solved",
            InnerStatus::Inexact => "inexact",
            InnerStatus::Kept => "kept",
        })
    }
}

#[derive(Debug, Clone)]
pub struct InnerSolution {
    pub lifted: LiftedVariable,
    pub status: InnerStatus,
    pub iterations: usize,
    /// Surrogate objective `γ − η(N − v^H W v)` at the returned point.
    pub objective: f64,
}

/// Reusable inner solver for one target set: holds the factored affine system
/// and the ADMM state for warm starts.
pub struct InnerSolver {
    f: DMatrix<Complex64>,
    /// `√N f̂_q`: unit-norm columns keep the linking constraints on the same
    /// scale as the unit diagonal.
    fs: DMatrix<Complex64>,
    d: DMatrix<f64>,
    d_colsum: DVector<f64>,
    chol: Cholesky<f64, Dyn>,
    minv_one: DVector<f64>,
    one_minv_one: f64,
    params: ScaParams,
    state: Option<AdmmState>,
}

struct AdmmState {
    x: DMatrix<Complex64>,
    u: DMatrix<Complex64>,
    t: DVector<f64>,
    ut: DVector<f64>,
    rho: f64,
}

impl InnerSolver {
    pub fn new(q: &TargetSet, params: &ScaParams) -> Result<Self> {
        params.validate()?;
        let f = q.normalized_matrix();
        let (n, nq) = f.shape();
        let fs = f.scale((n as f64).sqrt());
        let d = DMatrix::from_fn(n, nq, |i, j| fs[(i, j)].norm_sqr());
        let d_colsum = DVector::from_fn(nq, |j, _| d.column(j).sum());
        let mut gram = DMatrix::zeros(nq, nq);
        gemm(&mut gram, false, &fs, Op::H, &fs, Op::N, ONE);
        let m = DMatrix::from_fn(nq, nq, |a, b| gram[(a, b)].norm_sqr()) - d.transpose() * &d + DMatrix::identity(nq, nq);
        let m = (&m + m.transpose()) * 0.5;
        let chol = Cholesky::new(m).ok_or(Error::Solver { status: "affine system is not positive definite".into(), iterations: 0 })?;
        let minv_one = chol.solve(&DVector::from_element(nq, 1.0));
        let one_minv_one = minv_one.sum();
        Ok(Self { f, fs, d, d_colsum, chol, minv_one, one_minv_one, params: *params, state: None })
    }

    pub fn dim(&self) -> usize {
        self.f.nrows()
    }

    fn values(&self, w: &DMatrix<Complex64>) -> DVector<f64> {
        let mut t = DMatrix::zeros(self.f.nrows(), self.f.ncols());
        gemm(&mut t, false, w, Op::N, &self.f, Op::N, ONE);
        DVector::from_fn(self.f.ncols(), |j, _| self.f.column(j).dotc(&t.column(j)).re)
    }

    fn surrogate(&self, w: &DMatrix<Complex64>, v: &DVector<Complex64>, eta: f64) -> (f64, f64) {
        let gamma = self.values(w).min();
        let vwv = (v.adjoint() * w * v)[(0, 0)].re;
        (gamma, gamma - eta * (self.dim() as f64 - vwv))
    }

    /// Solves the linearized problem around `prev` with penalty `eta`.
    pub fn solve(&mut self, prev: &LiftedVariable, eta: f64) -> Result<InnerSolution> {
        let n = self.dim();
        let nq = self.f.ncols();
        let eig = hermitian_eigen(&prev.w)?;
        let v = eig.principal_vector();
        let (_, prev_obj) = self.surrogate(&prev.w, &v, eta);

        let mut st = match self.state.take() {
            Some(s) => s,
            None => AdmmState {
                x: prev.w.clone(),
                u: DMatrix::zeros(n, n),
                t: DVector::zeros(nq),
                ut: DVector::zeros(nq),
                rho: 1.0,
            },
        };
        let tol = self.params.inner_tol;
        let scale = ((n * n + nq) as f64).sqrt();
        let mut w = DMatrix::<Complex64>::zeros(n, n);
        let mut tmp = DMatrix::<Complex64>::zeros(n, nq);
        // In the scaled variables γ̃ = Nγ, so the objective weight on γ̃ is 1/N.
        let c_gamma = 1.0 / n as f64;
        let relax = 1.6;
        let mut converged = false;
        let mut iters = 0;
        while iters < self.params.inner_max_iter {
            iters += 1;
            let rho = st.rho;
            // Affine step.
            let mut y0 = &st.x - &st.u;
            let c = Complex64::new(eta / rho, 0.0);
            y0.gerc(c, &v, &v, ONE);
            let s0 = &st.t - &st.ut;
            gemm(&mut tmp, false, &y0, Op::N, &self.fs, Op::N, ONE);
            let ydiag = DVector::from_fn(n, |i, _| y0[(i, i)].re);
            let mut r = DVector::zeros(nq);
            for j in 0..nq {
                let full = self.fs.column(j).dotc(&tmp.column(j)).re;
                let diag_part = self.d.column(j).dot(&ydiag);
                r[j] = full - diag_part + self.d_colsum[j] - s0[j];
            }
            let y = self.chol.solve(&r);
            let gamma = (y.sum() + c_gamma / rho) / self.one_minv_one;
            let nu = (&y - &self.minv_one * gamma) * rho;
            let dnu = &self.d * &nu;
            for j in 0..nq {
                for i in 0..n {
                    tmp[(i, j)] = self.fs[(i, j)] * nu[j];
                }
            }
            w.copy_from(&y0);
            gemm(&mut w, true, &tmp, Op::N, &self.fs, Op::H, Complex64::new(-1.0 / rho, 0.0));
            for i in 0..n {
                let mu = rho * (ydiag[i] - 1.0) - dnu[i];
                w[(i, i)] -= Complex64::new(mu / rho, 0.0);
            }
            hermitize(&mut w);
            let s = &s0 + &nu / rho;

            // Cone step on the over-relaxed point.
            let w_hat = w.scale(relax) + st.x.scale(1.0 - relax);
            let s_hat = s.scale(relax) + st.t.scale(1.0 - relax);
            let (x_new, _) = project_psd(&(&w_hat + &st.u))?;
            let t_new = (&s_hat + &st.ut).map(|x| x.max(0.0));

            let r_pri = ((&w - &x_new).norm_squared() + (&s - &t_new).norm_squared()).sqrt();
            let r_dual = rho * ((&x_new - &st.x).norm_squared() + (&t_new - &st.t).norm_squared()).sqrt();
            st.u += &w_hat - &x_new;
            st.ut += &s_hat - &t_new;
            st.x = x_new;
            st.t = t_new;

            let eps_pri = scale * tol + tol * w.norm().max(st.x.norm());
            let eps_dual = scale * tol + tol * rho * st.u.norm();
            if r_pri <= eps_pri && r_dual <= eps_dual {
                converged = true;
                break;
            }
            if iters % 20 == 0 {
                if r_pri > 10.0 * r_dual {
                    st.rho *= 2.0;
                    st.u /= Complex64::new(2.0, 0.0);
                    st.ut /= 2.0;
                } else if r_dual > 10.0 * r_pri {
                    st.rho /= 2.0;
                    st.u *= Complex64::new(2.0, 0.0);
                    st.ut *= 2.0;
                }
            }
        }
        if !converged && self.params.strict_inner {
            self.state = Some(st);
            return Err(Error::Solver { status: "ADMM iteration cap reached".into(), iterations: iters });
        }
        let candidate = unit_diagonal(&st.x)?;
        self.state = Some(st);
        let (gamma, obj) = self.surrogate(&candidate, &v, eta);
        if obj < prev_obj - tol * prev_obj.abs().max(1.0) {
            return Ok(InnerSolution { lifted: prev.clone(), status: InnerStatus::Kept, iterations: iters, objective: prev_obj });
        }
        let status = if converged { InnerStatus::Solved } else { InnerStatus::Inexact };
        Ok(InnerSolution { lifted: LiftedVariable { w: candidate, gamma }, status, iterations: iters, objective: obj })
    }
}

/// One-shot inner solve; see [`InnerSolver::solve`].
pub fn solve_inner(q: &TargetSet, prev: &LiftedVariable, eta: f64, params: &ScaParams) -> Result<InnerSolution> {
    InnerSolver::new(q, params)?.solve(prev, eta)
}

/// Penalized objective `γ − η(‖W‖_* − ‖W‖_2)` from a precomputed eigendecomposition.
pub fn penalized_objective(gamma: f64, eig: &HermitianEigen, eta: f64) -> f64 {
    gamma - eta * rank_residual_from_values(eig.values.as_slice())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaRecord {
    pub iter: usize,
    /// Relaxed worst-case value `min_q f̂_q^H W f̂_q`, linear.
    pub gamma: f64,
    pub rank_residual: f64,
    pub eta: f64,
    pub status: InnerStatus,
    pub inner_iterations: usize,
    /// Worst-case normalized GRCS of the profile extracted from this iterate.
    pub extracted: f64,
    /// Penalized objective at this `η`, before and after the solve.
    pub penalized_before: f64,
    pub penalized_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaTrace {
    pub initial: ScaRecord,
    pub records: Vec<ScaRecord>,
}

impl ScaTrace {
    /// Initial point followed by one record per iteration.
    pub fn rows(&self) -> impl Iterator<Item = &ScaRecord> {
        std::iter::once(&self.initial).chain(self.records.iter())
    }

    pub fn last(&self) -> &ScaRecord {
        self.records.last().unwrap_or(&self.initial)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScaQuality {
    /// Final iterate is numerically rank one.
    Converged,
    /// Iteration cap reached with the rank residual above tolerance.
    Degraded,
}

#[derive(Debug, Clone)]
pub struct ScaOutcome {
    pub profile: PhaseProfile,
    /// Worst-case normalized GRCS of `profile`.
    pub value: f64,
    pub trace: ScaTrace,
    pub lifted: LiftedVariable,
    pub quality: ScaQuality,
    /// Trace row (0 = initial point) whose extracted profile was returned.
    pub selected_iter: usize,
}

/// Penalty/SCA loop: solve the linearized problem, grow `η ← min(αη, η_max)`,
/// stop once the rank residual is below tolerance and `γ` has settled
/// (relative change < 1e-5 twice in a row), or after `i_max` iterations.
pub fn penalty_sca(q: &TargetSet, w0: &LiftedVariable, params: &ScaParams) -> Result<ScaOutcome> {
    params.validate()?;
    let n = q.dim();
    let rank_tol = params.rank_tol_for(n);
    let mut solver = InnerSolver::new(q, params)?;

    let eig0 = hermitian_eigen(&w0.w)?;
    let p0 = extract_from_eigen(&eig0, &w0.w)?;
    let v0 = worst_case_normalized(q, &p0)?;
    let res0 = rank_residual_from_values(eig0.values.as_slice());
    let pen0 = penalized_objective(w0.gamma, &eig0, params.eta0);
    let initial = ScaRecord {
        iter: 0,
        gamma: w0.gamma,
        rank_residual: res0,
        eta: params.eta0,
        status: InnerStatus::Init,
        inner_iterations: 0,
        extracted: v0,
        penalized_before: pen0,
        penalized_after: pen0,
    };
    let mut best = (p0, v0, 0usize);
    let mut last_profile = best.0.clone();
    let mut cur = w0.clone();
    let mut cur_eig = eig0;
    let mut records = Vec::with_capacity(params.i_max);
    let mut eta = params.eta0;
    let mut settled = 0;
    for i in 1..=params.i_max {
        let before = penalized_objective(cur.gamma, &cur_eig, eta);
        let sol = solver.solve(&cur, eta)?;
        let eig = hermitian_eigen(&sol.lifted.w)?;
        let residual = rank_residual_from_values(eig.values.as_slice());
        let after = penalized_objective(sol.lifted.gamma, &eig, eta);
        let profile = extract_from_eigen(&eig, &sol.lifted.w)?;
        let value = worst_case_normalized(q, &profile)?;
        if value > best.1 {
            best = (profile.clone(), value, i);
        }
        last_profile = profile;
        let rel = (sol.lifted.gamma - cur.gamma).abs() / cur.gamma.abs().max(1e-12);
        settled = if rel < 1e-5 { settled + 1 } else { 0 };
        records.push(ScaRecord {
            iter: i,
            gamma: sol.lifted.gamma,
            rank_residual: residual,
            eta,
            status: sol.status,
            inner_iterations: sol.iterations,
            extracted: value,
            penalized_before: before,
            penalized_after: after,
        });
        cur = sol.lifted;
        cur_eig = eig;
        if residual < rank_tol && settled >= 2 {
            break;
        }
        eta = (eta * params.alpha).min(params.eta_max);
    }
    let trace = ScaTrace { initial, records };
    let quality = if trace.last().rank_residual < rank_tol { ScaQuality::Converged } else { ScaQuality::Degraded };
    let (profile, value, selected_iter) = if params.keep_incumbent {
        best
    } else {
        let v = worst_case_normalized(q, &last_profile)?;
        (last_profile, v, trace.last().iter)
    };
    Ok(ScaOutcome { profile, value, trace, lifted: cur, quality, selected_iter })
}

fn extract_from_eigen(eig: &HermitianEigen, w: &DMatrix<Complex64>) -> Result<PhaseProfile> {
    let tr: f64 = (0..w.nrows()).map(|i| w[(i, i)].re).sum();
    if !(tr > 0.0) || eig.max_value() <= 0.0 {
        return Err(Error::Domain("cannot extract a profile from a zero matrix".into()));
    }
    let w = eig.principal_vector() * Complex64::new(tr.sqrt(), 0.0);
    PhaseProfile::from_weights(&w)
}

/// `w = sqrt(tr W) · λ_max(W)`, then each entry projected to unit modulus.
pub fn extract_rank_one(w: &DMatrix<Complex64>) -> Result<PhaseProfile> {
    extract_from_eigen(&hermitian_eigen(w)?, w)
}

/// Brute-force max-min over `L` uniformly spaced phase levels per element.
///
/// The first element is fixed at phase 0, which loses nothing because the
/// objective is invariant to a common phase. Requires `L^N ≤ 10^8`.
pub fn exhaustive_oracle(q: &TargetSet, levels: usize) -> Result<(PhaseProfile, f64)> {
    let n = q.dim();
    if levels == 0 {
        return Err(Error::InvalidParameter { name: "levels", reason: "must be ≥ 1".into() });
    }
    let total = (levels as f64).powi(n as i32);
    if total > 1e8 {
        return Err(Error::TooLarge(format!("{levels}^{n} profiles exceed 1e8")));
    }
    let step = 2.0 * std::f64::consts::PI / levels as f64;
    let phasors: Vec<Complex64> = (0..levels).map(|l| Complex64::from_polar(1.0, step * l as f64)).collect();
    let f = q.normalized_matrix();
    let nq = f.ncols();
    // Conjugated contribution of element i at level l to every target.
    let contrib: Vec<Vec<Vec<Complex64>>> = (0..n)
        .map(|i| (0..levels).map(|l| (0..nq).map(|j| f[(i, j)].conj() * phasors[l]).collect()).collect())
        .collect();
    let mut idx = vec![0usize; n];
    let mut best_val = -1.0;
    let mut best_idx = idx.clone();
    // partial[i] holds the target sums over elements 0..=i.
    let mut partial = vec![vec![Complex64::new(0.0, 0.0); nq]; n];
    partial[0].clone_from(&contrib[0][0]);
    for i in 1..n {
        for j in 0..nq {
            partial[i][j] = partial[i - 1][j] + contrib[i][0][j];
        }
    }
    loop {
        let val = partial[n - 1].iter().map(|g| g.norm_sqr()).fold(f64::INFINITY, f64::min);
        if val > best_val {
            best_val = val;
            best_idx.clone_from(&idx);
        }
        // Odometer increment over elements 1..n.
        let mut k = n - 1;
        loop {
            if k == 0 {
                let omegas = best_idx.iter().map(|&l| step * l as f64).collect();
                return Ok((PhaseProfile::new(omegas)?, best_val));
            }
            idx[k] += 1;
            if idx[k] < levels {
                break;
            }
            idx[k] = 0;
            k -= 1;
        }
        for i in k..n {
            for j in 0..nq {
                let base = partial[i - 1][j];
                partial[i][j] = base + contrib[i][idx[i]][j];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{upa_geometry, Angles, Position3, Wavelength};
    use crate::grcs::{response_far, response_near, ResponseTag, ResponseVector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn wl() -> Wavelength {
        Wavelength::from_ghz(28.0).unwrap()
    }

    fn far_set(n_side: usize, pairs: &[(Angles, Angles)]) -> TargetSet {
        let wl = wl();
        let g = upa_geometry(n_side, 1, wl.meters() / 2.0, wl.meters() / 2.0).unwrap();
        TargetSet::new(pairs.iter().map(|&(t, r)| response_far(&g, t, r, PI, wl)).collect(), "test").unwrap()
    }

    fn db(x: f64) -> f64 {
        10.0 * x.log10()
    }

    #[test]
    fn params_validation() {
        assert!(ScaParams::default().validate().is_ok());
        assert!(ScaParams { eta0: 0.0, ..Default::default() }.validate().is_err());
        assert!(ScaParams { alpha: 1.0, ..Default::default() }.validate().is_err());
        assert!(ScaParams { i_max: 0, ..Default::default() }.validate().is_err());
        assert_eq!(ScaParams::default().rank_tol_for(100), 0.01);
    }

    #[test]
    fn singleton_matched_start_is_optimal() {
        let q = far_set(8, &[(Angles::new(0.0, 3.5), Angles::new(0.0, 0.3))]);
        let p = q.entries()[0].matched_profile();
        let w0 = LiftedVariable::from_profile(&p, &q).unwrap();
        assert!((w0.gamma - 1.0).abs() < 1e-12);
        let sol = solve_inner(&q, &w0, 0.0, &ScaParams::default()).unwrap();
        assert!((sol.lifted.gamma - 1.0).abs() < 1e-6, "gamma {}", sol.lifted.gamma);
        for i in 0..8 {
            assert!((sol.lifted.w[(i, i)].re - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn inner_solution_is_feasible_hermitian_and_improving() {
        let pairs: Vec<_> = (0..6).map(|k| (Angles::new(0.0, 3.6), Angles::new(0.0, -0.3 + 0.1 * k as f64))).collect();
        let q = far_set(12, &pairs);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w0 = LiftedVariable::random(&q, &mut rng).unwrap();
        let params = ScaParams::default();
        let mut solver = InnerSolver::new(&q, &params).unwrap();
        let mut cur = w0;
        for eta in [1e-3, 5e-3, 2.5e-2] {
            let eig = hermitian_eigen(&cur.w).unwrap();
            let v = eig.principal_vector();
            let (_, before) = solver.surrogate(&cur.w, &v, eta);
            let sol = solver.solve(&cur, eta).unwrap();
            assert!(sol.objective >= before - params.inner_tol * before.abs().max(1.0));
            let w = &sol.lifted.w;
            assert!((w - w.adjoint()).norm() / w.norm() < 1e-8);
            for i in 0..12 {
                assert!((w[(i, i)].re - 1.0).abs() < 1e-6);
            }
            assert!(hermitian_eigen(w).unwrap().min_value() > -1e-7);
            cur = sol.lifted;
        }
    }

    #[test]
    fn two_orthogonal_targets_on_two_elements() {
        let mk = |f: [Complex64; 2]| ResponseVector {
            f: DVector::from_row_slice(&f),
            tag: ResponseTag::FarField { t: Angles::default(), r: Angles::default() },
            omega: 1.0,
        };
        let one = Complex64::new(1.0, 0.0);
        let q = TargetSet::new(vec![mk([one, one]), mk([one, -one])], "orthogonal").unwrap();
        let start = LiftedVariable::evaluated(DMatrix::identity(2, 2), &q).unwrap();
        let sol = solve_inner(&q, &start, 0.0, &ScaParams::default()).unwrap();
        // |f_q^H w|² ≤ (Ω·2)²/2 for at least one q whenever the f's are orthogonal.
        assert!(sol.lifted.gamma <= 0.5 + 1e-6);
        let (_, oracle) = exhaustive_oracle(&q, 64).unwrap();
        assert!((sol.lifted.gamma - 0.5).abs() < 1e-5, "lifted {}", sol.lifted.gamma);
        assert!((oracle - 0.5).abs() < 1e-9, "oracle {oracle}");
    }

    #[test]
    fn extraction_examples() {
        let p = PhaseProfile::new(vec![0.3, -1.2, 2.0, 0.7, -2.9]).unwrap();
        let w = p.weights();
        let got = extract_rank_one(&(&w * w.adjoint())).unwrap();
        assert!(got.max_phase_error_modulo_global(&p).unwrap() < 1e-6);

        let id = DMatrix::<Complex64>::identity(4, 4);
        let deg = extract_rank_one(&id).unwrap();
        assert_eq!(deg.len(), 4);
        assert!((crate::linalg::rank_residual(&id).unwrap() - 3.0).abs() < 1e-12);
        assert!(extract_rank_one(&DMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn near_rank_one_extraction_tracks_lifted_value() {
        let q = far_set(16, &[(Angles::new(0.0, 3.3), Angles::new(0.0, 0.1)), (Angles::new(0.0, 3.3), Angles::new(0.0, 0.15))]);
        let (p, _) = crate::analytic::quadratic_profile(
            &upa_geometry(16, 1, wl().meters() / 2.0, wl().meters() / 2.0).unwrap(),
            &[Angles::new(0.0, 3.3)],
            &[Angles::new(0.0, 0.1), Angles::new(0.0, 0.15)],
            wl(),
        )
        .unwrap();
        let w = p.weights();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let z = DVector::from_fn(16, |_, _| complex_normal(&mut rng, 1.0));
        let z = &z - &w * (w.dotc(&z) / 16.0);
        let z = &z * Complex64::new(4.0 / z.norm(), 0.0);
        // σ2/σ1 = 1e-3 with σ1 = N = 16.
        let big = &w * w.adjoint() + &z * z.adjoint() * Complex64::new(1e-3, 0.0);
        let lifted = LiftedVariable::evaluated(unit_diagonal(&big).unwrap(), &q).unwrap();
        let eig = hermitian_eigen(&lifted.w).unwrap();
        assert!((eig.values[1] / eig.values[0] - 1e-3).abs() < 2e-4);
        let extracted = worst_case_normalized(&q, &extract_rank_one(&lifted.w).unwrap()).unwrap();
        assert!((db(extracted) - db(lifted.gamma)).abs() < 0.1, "{} vs {}", db(extracted), db(lifted.gamma));
    }

    #[test]
    fn oracle_examples() {
        let q1 = far_set(1, &[(Angles::new(0.0, 3.0), Angles::new(0.0, 0.2))]);
        let (_, v) = exhaustive_oracle(&q1, 8).unwrap();
        assert!((v - 1.0).abs() < 1e-12);

        let q = far_set(4, &[(Angles::new(0.0, 3.4), Angles::new(0.0, 0.37))]);
        let (_, v) = exhaustive_oracle(&q, 16).unwrap();
        assert!(v >= (PI / 16.0).cos().powi(2));
        assert!(matches!(exhaustive_oracle(&q, 200), Err(Error::TooLarge(_))));
    }

    #[test]
    fn oracle_matches_naive_enumeration() {
        let q = far_set(3, &[(Angles::new(0.0, 3.4), Angles::new(0.0, 0.37)), (Angles::new(0.0, 3.3), Angles::new(0.0, -0.5))]);
        let (_, fast) = exhaustive_oracle(&q, 6).unwrap();
        let mut best = 0.0f64;
        for a in 0..6 {
            for b in 0..6 {
                for c in 0..6 {
                    let p = PhaseProfile::new(vec![a as f64, b as f64, c as f64].iter().map(|l| l * PI / 3.0).collect()).unwrap();
                    best = best.max(worst_case_normalized(&q, &p).unwrap());
                }
            }
        }
        assert!((fast - best).abs() < 1e-12);
    }

    #[test]
    fn sca_singleton_converges_to_matched_beam() {
        let q = far_set(10, &[(Angles::new(0.0, 3.5), Angles::new(0.0, 0.4))]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w0 = LiftedVariable::random(&q, &mut rng).unwrap();
        let out = penalty_sca(&q, &w0, &ScaParams::default()).unwrap();
        assert!(out.value >= 0.99, "value {}", out.value);
        assert_eq!(out.quality, ScaQuality::Converged);
        assert!(out.trace.records.len() <= 10);
    }

    #[test]
    fn sca_is_within_one_db_of_oracle_on_small_instance() {
        let q = far_set(4, &[(Angles::new(0.0, 3.4), Angles::new(0.0, 0.2)), (Angles::new(0.0, 3.4), Angles::new(0.0, 0.9))]);
        let (_, oracle) = exhaustive_oracle(&q, 16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w0 = LiftedVariable::random(&q, &mut rng).unwrap();
        let out = penalty_sca(&q, &w0, &ScaParams::default()).unwrap();
        assert!(db(out.value) >= db(oracle) - 1.0, "sca {} oracle {}", db(out.value), db(oracle));
    }

    #[test]
    fn penalized_objective_is_monotone_at_fixed_eta() {
        let wl = wl();
        let g = upa_geometry(24, 1, wl.meters() / 2.0, wl.meters() / 2.0).unwrap().centered_at(Position3::zeros());
        let ut = Position3::new(80.0, 30.0, 0.0);
        let ur: Vec<_> = (0..5).map(|k| Position3::new(6.0, -1.0 + 0.5 * k as f64, 0.0)).collect();
        let q = TargetSet::near_field(g.positions(), &[ut], &ur, PI, wl).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w0 = LiftedVariable::random(&q, &mut rng).unwrap();
        let params = ScaParams::default();
        let out = penalty_sca(&q, &w0, &params).unwrap();
        for r in &out.trace.records {
            let tol = params.inner_tol * r.penalized_before.abs().max(1.0);
            assert!(r.penalized_after >= r.penalized_before - tol, "iter {}: {} < {}", r.iter, r.penalized_after, r.penalized_before);
            assert!(r.rank_residual >= 0.0);
        }
    }

    #[test]
    fn sca_is_deterministic() {
        let q = far_set(12, &[(Angles::new(0.0, 3.5), Angles::new(0.0, 0.1)), (Angles::new(0.0, 3.5), Angles::new(0.0, 0.3))]);
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let w0 = LiftedVariable::random(&q, &mut rng).unwrap();
            penalty_sca(&q, &w0, &ScaParams::default()).unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a.profile, b.profile);
        assert_eq!(a.trace, b.trace);
    }

    #[test]
    fn near_field_targets_work_end_to_end() {
        let wl = wl();
        let g = upa_geometry(4, 4, wl.meters() / 2.0, wl.meters() / 2.0).unwrap();
        let q = TargetSet::new(
            vec![response_near(g.positions(), Position3::new(3.0, 1.0, 0.0), Position3::new(2.0, -1.0, 0.5), PI, wl).unwrap()],
            "nf",
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let out = penalty_sca(&q, &LiftedVariable::random(&q, &mut rng).unwrap(), &ScaParams::default()).unwrap();
        assert!(out.value > 0.99);
    }
}
