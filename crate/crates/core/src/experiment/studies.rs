//! Studies assembled from several runs: entropy against the finite-volume
//! reference, grid convergence on the smooth wave, and the largest stable step.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dg::DgState;
use crate::element::{gauss_legendre, ReferenceElement};
use crate::fv::{run_reference, FvState, ReferenceRun};
use crate::error::SolverError;
use crate::physics::Conserved;
use crate::time::compute_dt;

use super::output::{CompareRow, ConvergenceRow, MaxDtTrial, ReferenceSample};
use super::problems::ProblemConfig;
use super::run::{build_scheme, initial_state, run_with_scheme, RunError, RunOptions, RunOutput};

/// Sampling interval used when the config does not set one.
pub const DEFAULT_SAMPLE_DT: f64 = 0.1;

/// Cell averages of the problem's initial data on `cells` finite-volume cells.
pub fn reference_initial(config: &ProblemConfig, cells: usize) -> Result<FvState<Conserved>, SolverError> {
    Ok(FvState::from_function(
        cells,
        config.x_left,
        config.x_right,
        config.boundary,
        |x| config.initial(x),
    )?)
}

/// Runs the Lax-Friedrichs reference for `config` on `cells` cells.
pub fn reference_run(config: &ProblemConfig, cells: usize) -> Result<ReferenceRun<Conserved>, SolverError> {
    config.validate()?;
    let initial = reference_initial(config, cells)?;
    let sample_dt = config.sample_dt.unwrap_or(DEFAULT_SAMPLE_DT);
    run_reference(&config.params(), initial, config.t_end, sample_dt)
}

pub fn reference_samples(run: &ReferenceRun<Conserved>) -> Vec<ReferenceSample> {
    run.samples
        .iter()
        .map(|&(t, e_total)| ReferenceSample { t, e_total })
        .collect()
}

/// Paired entropy histories and the verdict of `E_DG <= E_ref + tol`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyComparison {
    pub rows: Vec<CompareRow>,
    /// `0.01 |E_ref(0) - E_ref(t_end)|`.
    pub tolerance: f64,
    /// Largest `E_DG - E_ref` over the samples.
    pub max_excess: f64,
    /// Sample times at which the inequality fails.
    pub failures: Vec<f64>,
}

impl EntropyComparison {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Relative tolerance of the comparison, as a fraction of the reference entropy drop.
pub const COMPARISON_TOLERANCE: f64 = 0.01;

/// Pairs the DG entropy history with the reference at the reference sample times.
pub fn compare_histories(dg: &RunOutput, reference: &ReferenceRun<Conserved>) -> EntropyComparison {
    let scale = |t: f64| 1e-9 * t.abs().max(1.0);
    let rows: Vec<CompareRow> = reference
        .samples
        .iter()
        .filter_map(|&(t, e_ref)| {
            dg.entropy
                .iter()
                .find(|s| (s.t - t).abs() <= scale(t))
                .map(|s| CompareRow { t, e_dg: s.e_total, e_ref })
        })
        .collect();
    let (first, last) = (reference.samples[0].1, reference.samples[reference.samples.len() - 1].1);
    // round-off floor for histories that barely move
    let tolerance = (COMPARISON_TOLERANCE * (first - last).abs()).max(1e-12 * first.abs().max(1.0));
    let max_excess = rows.iter().map(|r| r.e_dg - r.e_ref).fold(f64::NEG_INFINITY, f64::max);
    let failures = rows
        .iter()
        .filter(|r| !(r.e_dg <= r.e_ref + tolerance))
        .map(|r| r.t)
        .collect();
    EntropyComparison {
        rows,
        tolerance,
        max_excess,
        failures,
    }
}

/// Runs the DG scheme and the reference on the same problem and compares the
/// entropy histories. A failed inequality is reported in the result, not as an error.
pub fn entropy_comparison(
    config: &ProblemConfig,
    reference_cells: usize,
) -> Result<(EntropyComparison, RunOutput, ReferenceRun<Conserved>), RunError> {
    let mut config = config.clone();
    config.sample_dt = Some(config.sample_dt.unwrap_or(DEFAULT_SAMPLE_DT));
    let opts = RunOptions {
        snapshots: false,
        ..RunOptions::default()
    };
    let (dg, reference) = rayon::join(
        || super::run::run_problem(&config, &opts),
        || reference_run(&config, reference_cells),
    );
    let dg = dg?;
    let reference = reference.map_err(|e| RunError::from_solver(0.0, 0, e))?;
    Ok((compare_histories(&dg, &reference), dg, reference))
}

/// `L1` and `L2` errors of the density against the exact smooth-wave solution,
/// by Gauss quadrature with `2(p + 1)` points per cell.
pub fn density_errors(state: &DgState, element: &ReferenceElement, config: &ProblemConfig) -> (f64, f64) {
    let (xq, wq) = gauss_legendre(2 * (element.degree() + 1));
    let basis: Vec<Vec<f64>> = xq.iter().map(|&x| element.basis_at(x)).collect();
    let half_dx = 0.5 * state.mesh.dx();
    let (mut l1, mut l2) = (0.0, 0.0);
    for k in 0..state.mesh.cells() {
        let cell = state.cell(k);
        for ((&xi, w), b) in xq.iter().zip(&wq).zip(&basis) {
            let rho: f64 = b.iter().zip(cell).map(|(b, u)| b * u.rho).sum();
            let exact = config.exact_density(state.mesh.to_physical(k, xi), state.time);
            let err = rho - exact;
            l1 += half_dx * w * err.abs();
            l2 += half_dx * w * err * err;
        }
    }
    (l1, l2.sqrt())
}

/// `log(e_coarse / e_fine) / log(N_fine / N_coarse)`.
pub fn observed_order(n_coarse: usize, e_coarse: f64, n_fine: usize, e_fine: f64) -> f64 {
    (e_coarse / e_fine).ln() / (n_fine as f64 / n_coarse as f64).ln()
}

/// Density errors at `t_end` for each mesh size, with observed orders between
/// successive entries. Runs are independent and execute in parallel.
pub fn convergence_study(config: &ProblemConfig, cells: &[usize]) -> Result<Vec<ConvergenceRow>, RunError> {
    let scheme = build_scheme(config).map_err(|e| RunError::from_solver(0.0, 0, e))?;
    let opts = RunOptions {
        snapshots: false,
        ..RunOptions::default()
    };
    let errors = cells
        .par_iter()
        .map(|&n| {
            let mut c = config.clone();
            c.cells = n;
            let out = run_with_scheme(&c, &scheme, &opts)?;
            Ok((n, density_errors(&out.final_state, &scheme.element, &c)))
        })
        .collect::<Result<Vec<_>, RunError>>()?;
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(errors.len());
    for (i, &(n, (l1, l2))) in errors.iter().enumerate() {
        let (order_l1, order_l2) = match i.checked_sub(1).map(|j| errors[j]) {
            Some((m, (p1, p2))) => (Some(observed_order(m, p1, n, l1)), Some(observed_order(m, p2, n, l2))),
            None => (None, None),
        };
        rows.push(ConvergenceRow {
            cells: n,
            l1,
            l2,
            order_l1,
            order_l2,
        });
    }
    Ok(rows)
}

/// Bracket and iteration count of the time-step search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchSettings {
    pub lower: f64,
    pub upper: f64,
    pub iterations: usize,
    /// A run counts as blown up once its total entropy exceeds the initial value by this much.
    pub entropy_growth: f64,
}

impl Default for SearchSettings {
    fn default() -> Self {
        Self {
            lower: 1.0,
            upper: 64.0,
            iterations: 12,
            entropy_growth: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxDtResult {
    /// Largest multiplier of the default CFL number found stable; `None` if even the lower end fails.
    pub multiplier: Option<f64>,
    /// First time step of the run at that multiplier.
    pub dt: Option<f64>,
    /// Every multiplier tried, in order, including the certificate run at twice the result.
    pub trials: Vec<MaxDtTrial>,
    /// Whether twice the returned multiplier blows up.
    pub doubled_unstable: Option<bool>,
    /// Set when the bracket end itself is stable, so the true limit lies beyond it.
    pub upper_stable: bool,
}

/// True if the run reaches `t_end` without an inadmissible state, a non-finite
/// value, or an entropy increase above the allowance.
pub fn is_stable(config: &ProblemConfig, scheme: &crate::limiter::CorrectedScheme, growth: f64) -> bool {
    let opts = RunOptions {
        snapshots: false,
        diagnostics_every: 0,
        entropy_growth_limit: Some(growth),
    };
    run_with_scheme(config, scheme, &opts).is_ok()
}

/// Bisection (geometric, since the bracket spans decades) on the CFL multiplier.
pub fn max_timestep_search(config: &ProblemConfig, settings: &SearchSettings) -> Result<MaxDtResult, RunError> {
    let scheme = build_scheme(config).map_err(|e| RunError::from_solver(0.0, 0, e))?;
    let mut trials = Vec::new();
    let mut trial = |m: f64| {
        let mut c = config.clone();
        c.cfl_multiplier = m;
        let stable = is_stable(&c, &scheme, settings.entropy_growth);
        trials.push(MaxDtTrial { multiplier: m, stable });
        stable
    };

    let (mut lo, mut hi) = (settings.lower, settings.upper);
    let mut upper_stable = false;
    let multiplier = if !trial(lo) {
        None
    } else if trial(hi) {
        upper_stable = true;
        Some(hi)
    } else {
        for _ in 0..settings.iterations {
            let mid = (lo * hi).sqrt();
            if trial(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(lo)
    };
    let doubled_unstable = multiplier.map(|m| !trial(2.0 * m));

    let dt = match multiplier {
        Some(m) => {
            let state = initial_state(config, &scheme).map_err(|e| RunError::from_solver(0.0, 0, e))?;
            let cfl = config.cfl.unwrap_or_else(|| crate::time::default_cfl(config.degree)) * m;
            Some(compute_dt(&state, &scheme.params, cfl).map_err(|e| RunError::from_solver(0.0, 0, e))?)
        }
        None => None,
    };
    Ok(MaxDtResult {
        multiplier,
        dt,
        trials,
        doubled_unstable,
        upper_stable,
    })
}

/// Averages of a fine grid over groups of `factor` consecutive cells.
pub fn restrict_averages(fine: &[f64], factor: usize) -> Vec<f64> {
    assert!(factor > 0 && fine.len() % factor == 0, "grid sizes must nest");
    fine.chunks(factor)
        .map(|c| c.iter().sum::<f64>() / factor as f64)
        .collect()
}

/// `dx sum |a_k - b_k|` between coarse cell averages and a nested fine-grid solution.
pub fn l1_to_reference(coarse: &[f64], fine: &[f64], x_left: f64, x_right: f64) -> f64 {
    let factor = fine.len() / coarse.len();
    let restricted = restrict_averages(fine, factor);
    let dx = (x_right - x_left) / coarse.len() as f64;
    coarse.iter().zip(&restricted).map(|(a, b)| dx * (a - b).abs()).sum()
}
