//! Iterative least-squares minimization of the Beltrami energy with
//! boundaries constrained to the circles of a punctured disk, optionally
//! updating the circles themselves.

use std::f64::consts::TAU;
use std::time::Instant;

use num_complex::Complex64 as C64;

use crate::beltrami::{derivatives_with, mu_values, stencils, BeltramiField, GradientStencil};
use crate::conformal_module::{initial_module, ConformalModule, ModuleUpdate};
use crate::diagnostics::mean_std;
use crate::error::{Error, Result};
use crate::mesh::{flip_count, TriMesh};
use crate::operator::{
    assemble_constraints, assemble_weighted_operator, OperatorMatrix, StackedVector,
};
use crate::sparse::{damp_diagonal, gram, matvec_transpose, max_diagonal, product, shift_diagonal, solve_spd, SpMat, TripletBuilder};

/// Tikhonov shift, relative to the largest diagonal entry, used when the
/// normal equations cannot be factorized as given.
const TIKHONOV: f64 = 1e-10;

/// Relative energy increase tolerated before a step is damped.
const DESCENT_RTOL: f64 = 1e-12;
/// First nonzero Levenberg-Marquardt damping, relative to the diagonal.
const MIN_DAMPING: f64 = 1e-4;
const MAX_DAMPING_TRIES: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Threshold on the area-weighted mean of |mu_n - mu_{n-1}|.
    pub epsilon: f64,
    pub max_iter: usize,
    /// Step factor applied to the map and module updates.
    pub step: f64,
    pub fixed_module: bool,
    /// Energy exponent; only 2 is supported.
    pub p: u32,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { epsilon: 1e-4, max_iter: 200, step: 0.5, fixed_module: false, p: 2 }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(self.step > 0.0 && self.step <= 1.0) {
            return Err(Error::Config(format!("step must lie in (0, 1], got {}", self.step)));
        }
        if self.p != 2 {
            return Err(Error::Config(format!("only p = 2 is supported, got {}", self.p)));
        }
        Ok(())
    }
}

/// Snapshot of the iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamState {
    pub map: Vec<C64>,
    pub module: ConformalModule,
    pub mu_current: BeltramiField,
    pub iteration: usize,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolveWarning {
    NotConverged { iterations: usize, last_mu_diff: f64 },
    Flips(usize),
    ClampSaturation { clamp_events: usize, iterations: usize },
}

impl std::fmt::Display for SolveWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SolveWarning::NotConverged { iterations, last_mu_diff } => {
                write!(f, "not converged after {iterations} iterations (mu change {last_mu_diff:.3e})")
            }
            SolveWarning::Flips(n) => write!(f, "{n} flipped faces in the final map"),
            SolveWarning::ClampSaturation { clamp_events, iterations } => write!(
                f,
                "module clamped {clamp_events} times in {iterations} iterations; instance may be ill-posed"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    /// Energy of the initial map followed by one entry per iteration.
    pub energy_trace: Vec<f64>,
    /// Area-weighted mean |mu_n - mu_{n-1}| per iteration.
    pub mu_diff_trace: Vec<f64>,
    pub mu_error_mean: f64,
    pub mu_error_std: f64,
    pub flips: usize,
    pub final_module: ConformalModule,
    pub iterations_used: usize,
    pub clamp_events: usize,
    pub converged: bool,
    pub time_seconds: f64,
    pub warnings: Vec<SolveWarning>,
}

/// Sum over faces of area * |f_zbar - mu f_z|^2.
pub fn beltrami_energy(mesh: &TriMesh, map: &[C64], mu_target: &BeltramiField) -> Result<f64> {
    check_target(mesh, mu_target)?;
    let st = stencils(mesh)?;
    if map.len() != mesh.vertex_count() {
        return Err(Error::Mismatch("map length differs from vertex count".into()));
    }
    Ok(energy_with(&st, &mesh.face_areas(), mesh.faces(), map, mu_target))
}

fn energy_with(
    st: &[GradientStencil],
    areas: &[f64],
    faces: &[[usize; 3]],
    map: &[C64],
    mu: &BeltramiField,
) -> f64 {
    let d = derivatives_with(st, faces, map);
    (0..faces.len())
        .map(|j| areas[j] * (d.fzbar[j] - mu.values()[j] * d.fz[j]).norm_sqr())
        .sum()
}

fn check_target(mesh: &TriMesh, mu: &BeltramiField) -> Result<()> {
    if mu.len() != mesh.face_count() {
        return Err(Error::Mismatch(format!(
            "target has {} values for {} faces",
            mu.len(),
            mesh.face_count()
        )));
    }
    if mu.sup_norm() >= 1.0 {
        return Err(Error::InvalidMu(format!("target sup-norm {} >= 1", mu.sup_norm())));
    }
    Ok(())
}

/// Cotangent-weight Laplacian (positive semidefinite stiffness form).
pub(crate) fn cotan_laplacian(mesh: &TriMesh) -> Result<SpMat> {
    let pts = mesh.positions();
    let n = mesh.vertex_count();
    let mut b = TripletBuilder::new(n, n);
    for f in mesh.faces() {
        for k in 0..3 {
            let (i, j, o) = (f[(k + 1) % 3], f[(k + 2) % 3], f[k]);
            let u = pts[i] - pts[o];
            let v = pts[j] - pts[o];
            let cross = (u.re * v.im - u.im * v.re).abs();
            let cot = (u.re * v.re + u.im * v.im) / cross;
            let w = 0.5 * cot;
            b.push(i, j, -w);
            b.push(j, i, -w);
            b.push(i, i, w);
            b.push(j, j, w);
        }
    }
    b.build()
}

/// Solves the Dirichlet problem `L u = 0` in the interior with the given
/// boundary values (entries for interior vertices are ignored).
pub(crate) fn harmonic_extension(mesh: &TriMesh, lap: &SpMat, values: &[C64]) -> Result<Vec<C64>> {
    let n = mesh.vertex_count();
    let interior = mesh.interior_vertices();
    let mut slot = vec![usize::MAX; n];
    for (i, &v) in interior.iter().enumerate() {
        slot[v] = i;
    }
    let mut out = values.to_vec();
    for &v in &interior {
        out[v] = C64::new(0.0, 0.0);
    }
    if interior.is_empty() {
        return Ok(out);
    }
    let r = interior.len();
    let mut b = TripletBuilder::new(r, r);
    let mut rhs_re = vec![0.0; r];
    let mut rhs_im = vec![0.0; r];
    for col in 0..n {
        for (row, w) in crate::sparse::column(lap, col) {
            if slot[row] == usize::MAX {
                continue;
            }
            if slot[col] != usize::MAX {
                b.push(slot[row], slot[col], w);
            } else {
                rhs_re[slot[row]] -= w * values[col].re;
                rhs_im[slot[row]] -= w * values[col].im;
            }
        }
    }
    let sol = solve_spd(&b.build()?, &[rhs_re, rhs_im])
        .map_err(|e| Error::Solver(format!("harmonic map: {e}")))?;
    for (i, &v) in interior.iter().enumerate() {
        out[v] = C64::new(sol[0][i], sol[1][i]);
    }
    Ok(out)
}

/// Places every boundary loop on its circle by arc length and extends
/// harmonically (cotangent weights) to the interior.
///
/// The outer loop runs counterclockwise and inner loops clockwise, matching
/// the orientation of boundary loops of a counterclockwise mesh. Each loop
/// starts at the angle its first vertex makes with the loop's centroid.
pub fn harmonic_initial_map(mesh: &TriMesh, module: &ConformalModule) -> Result<Vec<C64>> {
    if module.len() != mesh.inner_loop_count() {
        return Err(Error::Mismatch(format!(
            "module has {} circles, mesh has {} inner loops",
            module.len(),
            mesh.inner_loop_count()
        )));
    }
    let pts = mesh.positions();
    let mut values = vec![C64::new(0.0, 0.0); mesh.vertex_count()];
    for (k, lp) in mesh.boundary_loops().iter().enumerate() {
        let circle = module.circle(k);
        let centroid = lp.iter().map(|&v| pts[v]).sum::<C64>() / lp.len() as f64;
        let start = (pts[lp[0]] - centroid).arg();
        let mut s = vec![0.0; lp.len()];
        for i in 1..lp.len() {
            s[i] = s[i - 1] + (pts[lp[i]] - pts[lp[i - 1]]).norm();
        }
        let total = s[lp.len() - 1] + (pts[lp[0]] - pts[lp[lp.len() - 1]]).norm();
        let sign = if k == 0 { 1.0 } else { -1.0 };
        for (i, &v) in lp.iter().enumerate() {
            let theta = start + sign * TAU * s[i] / total;
            values[v] = circle.center + circle.radius * C64::from_polar(1.0, theta);
        }
    }
    harmonic_extension(mesh, &cotan_laplacian(mesh)?, &values)
}

/// Precomputed per-mesh data reused across iterations.
struct Context<'a> {
    mesh: &'a TriMesh,
    mu_target: &'a BeltramiField,
    stencils: Vec<GradientStencil>,
    areas: Vec<f64>,
    total_area: f64,
    operator: OperatorMatrix,
}

impl<'a> Context<'a> {
    fn new(mesh: &'a TriMesh, mu_target: &'a BeltramiField) -> Result<Self> {
        check_target(mesh, mu_target)?;
        let areas = mesh.face_areas();
        Ok(Context {
            mesh,
            mu_target,
            stencils: stencils(mesh)?,
            total_area: areas.iter().sum(),
            areas,
            operator: assemble_weighted_operator(mesh, mu_target)?,
        })
    }

    fn energy(&self, map: &[C64]) -> f64 {
        energy_with(&self.stencils, &self.areas, self.mesh.faces(), map, self.mu_target)
    }

    /// Beltrami coefficient of an iterate. Values with |mu| >= 1 (flipped
    /// faces) are kept so the iteration can recover.
    fn mu(&self, map: &[C64]) -> Result<Vec<C64>> {
        mu_values(&derivatives_with(&self.stencils, self.mesh.faces(), map))
    }

    fn state(&self, map: Vec<C64>, module: ConformalModule, iteration: usize) -> Result<ParamState> {
        let mu = self.mu(&map)?;
        let energy = self.energy(&map);
        Ok(ParamState { map, module, mu_current: unchecked_field(mu), iteration, energy })
    }

    fn mean_abs_diff(&self, a: &[C64], b: &[C64]) -> f64 {
        a.iter().zip(b).zip(&self.areas).map(|((x, y), w)| w * (x - y).norm()).sum::<f64>() / self.total_area
    }

    /// Solves the normal equations, damped by `lambda` when positive.
    fn solve_normal(&self, normal: &SpMat, rhs: &[f64], lambda: f64) -> Result<Vec<f64>> {
        let damped;
        let m = if lambda > 0.0 {
            damped = damp_diagonal(normal, lambda)?;
            &damped
        } else {
            normal
        };
        match solve_spd(m, &[rhs.to_vec()]) {
            Ok(mut x) => Ok(x.remove(0)),
            Err(_) => {
                let shift = TIKHONOV * max_diagonal(m).max(f64::MIN_POSITIVE);
                let reg = shift_diagonal(m, shift)?;
                Ok(solve_spd(&reg, &[rhs.to_vec()])
                    .map_err(|e| Error::Solver(format!("normal equations are singular: {e}")))?
                    .remove(0))
            }
        }
    }

    /// One step. The plain Gauss-Newton solve is tried first (from the
    /// damping `lambda` carried over from the previous step); if the
    /// projected iterate has higher energy, damping is increased until it
    /// does not. Returns the new state, the module update, the clamp count
    /// and the damping to start the next step with.
    fn step(
        &self,
        state: &ParamState,
        config: &SolverConfig,
        lambda: f64,
    ) -> Result<(ParamState, ModuleUpdate, usize, f64)> {
        let augment = !config.fixed_module && !state.module.is_empty();
        let k = assemble_constraints(self.mesh, &state.map, &state.module, augment)?;
        let residual = self.operator.apply(&StackedVector::from_complex(&state.map));
        let ak = product(&self.operator.matrix, &k.matrix);
        let normal = gram(&ak)?;
        let rhs: Vec<f64> = matvec_transpose(&ak, &residual).into_iter().map(|v| -v).collect();

        let t = config.step;
        let mut lambda = lambda;
        let mut best: Option<(ParamState, ModuleUpdate, usize)> = None;
        for _ in 0..MAX_DAMPING_TRIES {
            let reduced = self.solve_normal(&normal, &rhs, lambda)?;
            let delta = k.expand(&reduced).to_complex();
            let mut map: Vec<C64> = state.map.iter().zip(&delta).map(|(g, d)| g + t * d).collect();
            let update = k.module_update(&reduced);
            let (module, clamps) = if augment {
                state.module.apply_update(&update, t)
            } else {
                (state.module.clone(), 0)
            };
            project_boundary(self.mesh, &mut map, &module);
            let next = self.state(map, module, state.iteration + 1)?;
            if next.energy <= state.energy * (1.0 + DESCENT_RTOL) {
                let relaxed = if lambda > MIN_DAMPING { lambda / 10.0 } else { 0.0 };
                return Ok((next, update, clamps, relaxed));
            }
            if best.as_ref().is_none_or(|b| next.energy < b.0.energy) {
                best = Some((next, update, clamps));
            }
            lambda = if lambda > 0.0 { lambda * 10.0 } else { MIN_DAMPING };
        }
        let (next, update, clamps) = best.expect("at least one damping trial");
        Ok((next, update, clamps, lambda))
    }
}

// flipped iterates have |mu| >= 1; they are stored as-is for diagnostics
fn unchecked_field(values: Vec<C64>) -> BeltramiField {
    BeltramiField::from_raw(values)
}

/// Radially rescales every boundary vertex onto its loop's circle.
pub fn project_boundary(mesh: &TriMesh, map: &mut [C64], module: &ConformalModule) {
    for (k, lp) in mesh.boundary_loops().iter().enumerate() {
        let c = module.circle(k);
        for &v in lp {
            let d = map[v] - c.center;
            let len = d.norm();
            if len > 0.0 {
                map[v] = c.center + d * (c.radius / len);
            }
        }
    }
}

/// One constrained least-squares step from `state`, damped if needed so
/// that the energy does not increase.
pub fn descent_step(
    mesh: &TriMesh,
    state: &ParamState,
    mu_target: &BeltramiField,
    config: &SolverConfig,
) -> Result<(ParamState, ModuleUpdate)> {
    config.validate()?;
    let ctx = Context::new(mesh, mu_target)?;
    let (s, u, _, _) = ctx.step(state, config, 0.0)?;
    Ok((s, u))
}

/// Iterates with the circles held fixed.
pub fn solve_fixed_module(
    mesh: &TriMesh,
    mu_target: &BeltramiField,
    module: &ConformalModule,
    config: &SolverConfig,
) -> Result<(ParamState, SolveReport)> {
    let cfg = SolverConfig { fixed_module: true, ..config.clone() };
    run(mesh, mu_target, module.clone(), &cfg)
}

/// Full parameterization: fits initial circles, then iterates updating the
/// map and, unless `config.fixed_module`, the circles.
pub fn solve_qcmc(
    mesh: &TriMesh,
    mu_target: &BeltramiField,
    config: &SolverConfig,
) -> Result<(ParamState, SolveReport)> {
    config.validate()?;
    check_target(mesh, mu_target)?;
    let module = initial_module(mesh)?;
    run(mesh, mu_target, module, config)
}

fn run(
    mesh: &TriMesh,
    mu_target: &BeltramiField,
    module: ConformalModule,
    config: &SolverConfig,
) -> Result<(ParamState, SolveReport)> {
    config.validate()?;
    module.validate()?;
    let started = Instant::now();
    let ctx = Context::new(mesh, mu_target)?;
    let map = harmonic_initial_map(mesh, &module)?;
    let mut state = ctx.state(map, module, 0)?;
    let mut energy_trace = vec![state.energy];
    let mut mu_diff_trace = Vec::new();
    let mut clamp_events = 0;
    let mut converged = false;
    let mut lambda = 0.0;
    for _ in 0..config.max_iter {
        let (next, _, clamps, damping) = ctx.step(&state, config, lambda)?;
        lambda = damping;
        clamp_events += clamps;
        let diff = ctx.mean_abs_diff(next.mu_current.values(), state.mu_current.values());
        energy_trace.push(next.energy);
        mu_diff_trace.push(diff);
        state = next;
        if diff < config.epsilon {
            converged = true;
            break;
        }
    }
    let time_seconds = started.elapsed().as_secs_f64();

    let errors: Vec<f64> = state
        .mu_current
        .values()
        .iter()
        .zip(mu_target.values())
        .map(|(a, b)| (a - b).norm())
        .collect();
    let (mu_error_mean, mu_error_std) = mean_std(&errors);
    let flips = flip_count(mesh, &state.map);
    let iterations_used = state.iteration;

    let mut warnings = Vec::new();
    if !converged {
        warnings.push(SolveWarning::NotConverged {
            iterations: iterations_used,
            last_mu_diff: mu_diff_trace.last().copied().unwrap_or(f64::NAN),
        });
    }
    if flips > 0 {
        warnings.push(SolveWarning::Flips(flips));
    }
    if iterations_used > 0 && 2 * clamp_events > iterations_used {
        warnings.push(SolveWarning::ClampSaturation { clamp_events, iterations: iterations_used });
    }
    let report = SolveReport {
        energy_trace,
        mu_diff_trace,
        mu_error_mean,
        mu_error_std,
        flips,
        final_module: state.module.clone(),
        iterations_used,
        clamp_events,
        converged,
        time_seconds,
        warnings,
    };
    Ok((state, report))
}

/// Initial state for a given map and module, with energy and mu filled in.
pub fn initial_state(
    mesh: &TriMesh,
    map: Vec<C64>,
    module: ConformalModule,
    mu_target: &BeltramiField,
) -> Result<ParamState> {
    Context::new(mesh, mu_target)?.state(map, module, 0)
}
