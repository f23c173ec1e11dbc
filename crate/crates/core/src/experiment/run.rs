//! Time loop of the corrected DG scheme with per-step entropy audit.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dg::{cell_means, discrete_total_entropy, total_conserved, DgState, Mesh1D};
use crate::error::SolverError;
use crate::limiter::{CorrectedScheme, CorrectionReport};
use crate::physics::Conserved;
use crate::time::{clip_step, compute_dt, sample_time, step};

use super::output::{DiagnosticRow, EntropySample, SnapshotRow};
use super::problems::ProblemConfig;

/// What to record besides the entropy history.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    /// Keep nodal snapshots at t = 0, every sample time and t_end.
    pub snapshots: bool,
    /// Record per-cell correction diagnostics every this many steps (0 disables).
    pub diagnostics_every: usize,
    /// Abort when the total entropy exceeds its initial value by more than this.
    pub entropy_growth_limit: Option<f64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            snapshots: true,
            diagnostics_every: 0,
            entropy_growth_limit: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub rows: Vec<SnapshotRow>,
}

impl Snapshot {
    pub fn of(state: &DgState, scheme: &CorrectedScheme) -> Self {
        let rows = state
            .node_positions(&scheme.element)
            .into_iter()
            .zip(&state.values)
            .map(|(x, u)| SnapshotRow {
                x,
                rho: u.rho,
                rho_v: u.rho_v,
                energy: u.energy,
            })
            .collect();
        Self { t: state.time, rows }
    }
}

/// Aggregates over a whole run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub steps: usize,
    pub final_time: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub initial_entropy: f64,
    pub final_entropy: f64,
    /// Largest `violation_pos` over all stages of all steps.
    pub max_violation: f64,
    /// Stage evaluations in which some cell hit the `lambda_max` cap.
    pub capped_evaluations: usize,
    pub truncation_fallbacks: usize,
    pub initial_totals: Conserved,
    pub final_totals: Conserved,
    pub filter_t_star: f64,
    pub filter_spectral_radius: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub config: ProblemConfig,
    pub final_state: DgState,
    pub entropy: Vec<EntropySample>,
    pub diagnostics: Vec<DiagnosticRow>,
    pub snapshots: Vec<Snapshot>,
    pub summary: RunSummary,
}

impl RunOutput {
    /// Cell means of the density at the final time.
    pub fn density_means(&self, scheme: &CorrectedScheme) -> Vec<f64> {
        cell_means(&self.final_state, &scheme.element).iter().map(|u| u.rho).collect()
    }
}

/// A failed run with the place it failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunError {
    pub time: f64,
    pub step: usize,
    pub cell: Option<usize>,
    pub message: String,
    #[serde(skip)]
    pub source: SolverError,
}

impl RunError {
    pub fn from_solver(time: f64, step: usize, source: SolverError) -> Self {
        Self {
            time,
            step,
            cell: source.cell(),
            message: source.to_string(),
            source,
        }
    }

    /// True for configuration problems, false for blow-ups during the run.
    pub fn is_setup(&self) -> bool {
        matches!(self.source, SolverError::Setup(_))
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "step {} at t = {}: {}", self.step, self.time, self.message)
    }
}

impl std::error::Error for RunError {}

pub fn build_scheme(config: &ProblemConfig) -> Result<CorrectedScheme, SolverError> {
    config.validate()?;
    let mut scheme = CorrectedScheme::new(config.degree, config.params(), config.truncation_policy())?;
    scheme.correction_enabled = config.correction;
    Ok(scheme)
}

pub fn initial_state(config: &ProblemConfig, scheme: &CorrectedScheme) -> Result<DgState, SolverError> {
    let mesh = Mesh1D::new(config.cells, config.x_left, config.x_right, config.boundary)?;
    let state = DgState::interpolate(mesh, &scheme.element, |x| config.initial(x));
    state.check_admissible(&scheme.params)?;
    Ok(state)
}

fn audit(reports: &[CorrectionReport]) -> (f64, f64) {
    reports.iter().fold((0.0f64, f64::INFINITY), |(v, r), rep| {
        (v.max(rep.violation_pos()), r.min(rep.residual_min()))
    })
}

pub fn run_problem(config: &ProblemConfig, opts: &RunOptions) -> Result<RunOutput, RunError> {
    let scheme = build_scheme(config).map_err(|e| RunError::from_solver(0.0, 0, e))?;
    run_with_scheme(config, &scheme, opts)
}

/// Runs with a prebuilt scheme (the filter is the expensive part to set up).
pub fn run_with_scheme(
    config: &ProblemConfig,
    scheme: &CorrectedScheme,
    opts: &RunOptions,
) -> Result<RunOutput, RunError> {
    let params = scheme.params;
    let mut state = initial_state(config, scheme).map_err(|e| RunError::from_solver(0.0, 0, e))?;
    let cfl = config.cfl_number();
    let t_end = config.t_end;
    let sample_dt = config.sample_dt.unwrap_or(f64::INFINITY);

    let entropy_of = |s: &DgState, step: usize| {
        discrete_total_entropy(s, &scheme.element, &params).map_err(|e| RunError::from_solver(s.time, step, e))
    };
    let e0 = entropy_of(&state, 0)?;
    let initial_totals = total_conserved(&state, &scheme.element);

    let mut entropy = Vec::new();
    let mut diagnostics = Vec::new();
    let mut snapshots = Vec::new();
    if opts.snapshots {
        snapshots.push(Snapshot::of(&state, scheme));
    }

    let mut steps = 0usize;
    let (mut dt_min, mut dt_max) = (f64::INFINITY, 0.0f64);
    let (mut max_violation, mut capped, mut fallbacks) = (0.0f64, 0usize, 0usize);
    let mut e_now = e0;
    let mut sample_index = 1;

    while state.time < t_end {
        let t = state.time;
        let fail = |e| RunError::from_solver(t, steps, e);
        let dt_cfl = compute_dt(&state, &params, cfl).map_err(fail)?;
        let target = sample_time(0.0, sample_dt, sample_index, t_end);
        let dt = clip_step(t, dt_cfl, target);
        let lambda_max = 1.0 / dt;

        let mut reports = Vec::with_capacity(12);
        let mut next = step(config.scheme, &state, dt, |s: &DgState| {
            let (rhs, report) = scheme.rhs(s, lambda_max)?;
            reports.push(report);
            Ok(DgState::new(s.mesh.clone(), s.degree(), rhs.dudt, s.time))
        })
        .map_err(fail)?;

        let (violation, residual_min) = audit(&reports);
        entropy.push(EntropySample {
            t,
            e_total: e_now,
            violation_pos: violation,
            residual_min,
        });
        max_violation = max_violation.max(violation);
        capped += reports.iter().filter(|r| r.capped_cells() > 0).count();
        fallbacks += reports.iter().map(|r| r.truncation_fallbacks).sum::<usize>();
        if opts.diagnostics_every > 0 && steps % opts.diagnostics_every == 0 {
            let first = &reports[0];
            diagnostics.extend((0..config.cells).map(|k| DiagnosticRow {
                t,
                cell: k,
                lambda_ed: first.lambda_ed[k],
                lambda_er: first.lambda_er_of_cell(k),
                residual: first.residual[k],
            }));
        }

        next.time = if dt == target - t { target } else { t + dt };
        steps += 1;
        dt_min = dt_min.min(dt);
        dt_max = dt_max.max(dt);
        let fail = |e| RunError::from_solver(next.time, steps, e);
        next.check_admissible(&params).map_err(fail)?;
        e_now = entropy_of(&next, steps)?;
        if let Some(limit) = opts.entropy_growth_limit {
            if !(e_now <= e0 + limit) {
                return Err(fail(SolverError::BlowUp {
                    time: next.time,
                    cell: None,
                    reason: format!("total entropy grew from {e0} to {e_now}"),
                }));
            }
        }
        state = next;
        if state.time >= target {
            if opts.snapshots {
                snapshots.push(Snapshot::of(&state, scheme));
            }
            sample_index += 1;
        }
    }

    // closing row: rates at the final state
    let (_, report) = scheme
        .rhs(&state, 1.0 / dt_max.max(f64::MIN_POSITIVE))
        .map_err(|e| RunError::from_solver(state.time, steps, e))?;
    entropy.push(EntropySample {
        t: state.time,
        e_total: e_now,
        violation_pos: report.violation_pos(),
        residual_min: report.residual_min(),
    });
    if opts.snapshots && snapshots.last().is_none_or(|s| s.t != state.time) {
        snapshots.push(Snapshot::of(&state, scheme));
    }

    let summary = RunSummary {
        steps,
        final_time: state.time,
        dt_min: if steps == 0 { 0.0 } else { dt_min },
        dt_max,
        initial_entropy: e0,
        final_entropy: e_now,
        max_violation,
        capped_evaluations: capped,
        truncation_fallbacks: fallbacks,
        initial_totals,
        final_totals: total_conserved(&state, &scheme.element),
        filter_t_star: scheme.filter.t_star,
        filter_spectral_radius: scheme.filter.spectral_radius,
    };
    Ok(RunOutput {
        config: config.clone(),
        final_state: state,
        entropy,
        diagnostics,
        snapshots,
        summary,
    })
}
