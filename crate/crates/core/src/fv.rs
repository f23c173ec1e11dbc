//! First-order finite-volume schemes with forward Euler stepping.
//!
//! The classical Lax-Friedrichs scheme is the scheme whose one-step total
//! entropy decays fastest among three-point conservative schemes, which makes its
//! entropy history a reference the DG solver should stay below.

use rayon::prelude::*;

use crate::dg::Boundary;
use crate::element::gauss_legendre;
use crate::error::{PhysicsError, SetupError, SolverError};
use crate::physics::{ConservationLaw, StateVector};

/// Courant number of the reference runs.
pub const REFERENCE_CFL: f64 = 0.5;

/// `(f(u_l) + f(u_r))/2 + theta (u_l - u_r) / (2 lambda)`; `theta = 1` is classical LF.
pub fn lf_family_flux<L: ConservationLaw>(
    law: &L,
    u_l: &L::State,
    u_r: &L::State,
    lambda_grid: f64,
    theta: f64,
) -> Result<L::State, PhysicsError> {
    Ok((law.flux(u_l)? + law.flux(u_r)?) * 0.5 + (*u_l - *u_r) * (theta / (2.0 * lambda_grid)))
}

/// Classical Lax-Friedrichs flux with grid ratio `lambda_grid = dt/dx`.
pub fn classical_lf_flux<L: ConservationLaw>(
    law: &L,
    u_l: &L::State,
    u_r: &L::State,
    lambda_grid: f64,
) -> Result<L::State, PhysicsError> {
    lf_family_flux(law, u_l, u_r, lambda_grid, 1.0)
}

/// Cell averages on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FvState<S> {
    pub averages: Vec<S>,
    pub x_left: f64,
    pub dx: f64,
    pub boundary: Boundary,
    pub time: f64,
}

impl<S: StateVector> FvState<S> {
    pub fn new(averages: Vec<S>, x_left: f64, x_right: f64, boundary: Boundary) -> Result<Self, SetupError> {
        if averages.len() < 2 || !(x_right > x_left) {
            return Err(SetupError::InvalidMesh(format!(
                "{} cells on [{x_left}, {x_right}]",
                averages.len()
            )));
        }
        let dx = (x_right - x_left) / averages.len() as f64;
        Ok(Self {
            averages,
            x_left,
            dx,
            boundary,
            time: 0.0,
        })
    }

    /// Cell averages of `initial` by a 4-point Gauss rule per cell.
    pub fn from_function(
        cells: usize,
        x_left: f64,
        x_right: f64,
        boundary: Boundary,
        initial: impl Fn(f64) -> S,
    ) -> Result<Self, SetupError> {
        let (xq, wq) = gauss_legendre(4);
        let dx = (x_right - x_left) / cells as f64;
        let averages = (0..cells)
            .map(|k| {
                let centre = x_left + (k as f64 + 0.5) * dx;
                xq.iter()
                    .zip(&wq)
                    .fold(S::zero(), |acc, (x, w)| acc.add_scaled(0.5 * w, initial(centre + 0.5 * dx * x)))
            })
            .collect();
        Self::new(averages, x_left, x_right, boundary)
    }

    pub fn cells(&self) -> usize {
        self.averages.len()
    }

    pub fn cell_center(&self, k: usize) -> f64 {
        self.x_left + (k as f64 + 0.5) * self.dx
    }

    /// Left and right states at face `i` in `0..=N`.
    pub fn face_states(&self, i: usize) -> (S, S) {
        let n = self.cells();
        let u = &self.averages;
        match (i, self.boundary) {
            (0, Boundary::Periodic) => (u[n - 1], u[0]),
            (0, Boundary::Transmissive) => (u[0], u[0]),
            (i, Boundary::Periodic) if i == n => (u[n - 1], u[0]),
            (i, Boundary::Transmissive) if i == n => (u[n - 1], u[n - 1]),
            (i, _) => (u[i - 1], u[i]),
        }
    }

    /// Sum of the averages times `dx`.
    pub fn total(&self) -> S {
        self.averages.iter().fold(S::zero(), |acc, u| acc.add_scaled(self.dx, *u))
    }
}

fn cell_error(k: usize, source: PhysicsError) -> SolverError {
    SolverError::Node { cell: k, node: 0, source }
}

/// `dx sum_k U(u_k)`.
pub fn total_entropy<L: ConservationLaw>(law: &L, state: &FvState<L::State>) -> Result<f64, SolverError> {
    state.averages.iter().enumerate().try_fold(0.0, |acc, (k, u)| {
        Ok(acc + state.dx * law.entropy(u).map_err(|e| cell_error(k, e))?)
    })
}

pub fn max_wave_speed<L: ConservationLaw>(law: &L, state: &FvState<L::State>) -> Result<f64, SolverError> {
    state
        .averages
        .par_iter()
        .enumerate()
        .map(|(k, u)| law.max_wave_speed(u).map_err(|e| cell_error(k, e)))
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

/// Forward Euler step `u_k <- u_k + (dt/dx)(f_{k-1/2} - f_{k+1/2})` with an arbitrary two-point flux.
pub fn fv_step_with<L, F>(law: &L, state: &FvState<L::State>, dt: f64, flux: F) -> Result<FvState<L::State>, SolverError>
where
    L: ConservationLaw,
    F: Fn(&L::State, &L::State) -> Result<L::State, PhysicsError> + Sync,
{
    let n = state.cells();
    let fluxes = (0..=n)
        .into_par_iter()
        .map(|i| {
            let (u_l, u_r) = state.face_states(i);
            flux(&u_l, &u_r).map_err(|source| SolverError::Interface { interface: i, source })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let ratio = dt / state.dx;
    let averages: Vec<L::State> = state
        .averages
        .par_iter()
        .enumerate()
        .map(|(k, u)| u.add_scaled(ratio, fluxes[k] - fluxes[k + 1]))
        .collect();
    if let Some(k) = averages.iter().position(|u| !law.is_admissible(u)) {
        let source = law.entropy(&averages[k]).err().unwrap_or(PhysicsError::Inadmissible {
            rho: f64::NAN,
            pressure: f64::NAN,
        });
        return Err(cell_error(k, source));
    }
    Ok(FvState {
        averages,
        time: state.time + dt,
        ..state.clone()
    })
}

/// One classical Lax-Friedrichs step with grid ratio `lambda_grid`.
pub fn fv_step<L: ConservationLaw>(
    law: &L,
    state: &FvState<L::State>,
    lambda_grid: f64,
) -> Result<FvState<L::State>, SolverError> {
    fv_step_with(law, state, lambda_grid * state.dx, |a, b| classical_lf_flux(law, a, b, lambda_grid))
}

/// Entropy history and final averages of a reference run.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceRun<S> {
    /// `(t, E_total)` at t = 0, every multiple of the sample interval, and t_end.
    pub samples: Vec<(f64, f64)>,
    pub final_state: FvState<S>,
    pub steps: usize,
}

/// Integrates classical LF at Courant number 0.5 up to `t_end`, landing exactly on
/// every sample time.
pub fn run_reference<L: ConservationLaw>(
    law: &L,
    initial: FvState<L::State>,
    t_end: f64,
    sample_dt: f64,
) -> Result<ReferenceRun<L::State>, SolverError> {
    let mut state = initial;
    let mut samples = vec![(state.time, total_entropy(law, &state)?)];
    let start = state.time;
    let mut sample_index = 1;
    let mut steps = 0;
    while state.time < t_end {
        let c_max = max_wave_speed(law, &state)?;
        let target = crate::time::sample_time(start, sample_dt, sample_index, t_end);
        let dt = crate::time::clip_step(state.time, REFERENCE_CFL * state.dx / c_max, target);
        state = fv_step(law, &state, dt / state.dx)?;
        steps += 1;
        if state.time >= target - 1e-12 * target.abs().max(1.0) {
            state.time = target;
            samples.push((state.time, total_entropy(law, &state)?));
            sample_index += 1;
        }
    }
    Ok(ReferenceRun {
        samples,
        final_state: state,
        steps,
    })
}
