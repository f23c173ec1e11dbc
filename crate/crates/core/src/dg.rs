//! Uncorrected nodal DG right-hand side on a uniform 1D mesh.
//!
//! Per cell, `M (dx/2) du/dt = S f(u) - (e_r f*_r - e_l f*_l)` with collocated
//! nodal fluxes and local Lax-Friedrichs interface fluxes.

use serde::{Deserialize, Serialize};

use crate::element::ReferenceElement;
use crate::error::{PhysicsError, SetupError, SolverError};
use crate::physics::{ConservationLaw, Conserved, EulerParams, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Transmissive,
}

/// Uniform mesh of `cells` intervals on `[x_left, x_right]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    cells: usize,
    x_left: f64,
    x_right: f64,
    boundary: Boundary,
}

impl Mesh1D {
    pub fn new(cells: usize, x_left: f64, x_right: f64, boundary: Boundary) -> Result<Self, SetupError> {
        if cells < 2 {
            return Err(SetupError::InvalidMesh(format!("need at least 2 cells, got {cells}")));
        }
        if !(x_right > x_left) {
            return Err(SetupError::InvalidMesh(format!("empty domain [{x_left}, {x_right}]")));
        }
        Ok(Self {
            cells,
            x_left,
            x_right,
            boundary,
        })
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x_left, self.x_right)
    }

    pub fn dx(&self) -> f64 {
        (self.x_right - self.x_left) / self.cells as f64
    }

    /// Left face of cell `k`.
    pub fn face(&self, k: usize) -> f64 {
        self.x_left + k as f64 * self.dx()
    }

    pub fn cell_center(&self, k: usize) -> f64 {
        self.x_left + (k as f64 + 0.5) * self.dx()
    }

    /// Physical coordinate of reference coordinate `xi` in cell `k`.
    pub fn to_physical(&self, k: usize, xi: f64) -> f64 {
        self.cell_center(k) + 0.5 * self.dx() * xi
    }

    /// Interfaces carrying independent fluxes. Periodic meshes identify face N with face 0.
    pub fn distinct_interfaces(&self) -> std::ops::Range<usize> {
        match self.boundary {
            Boundary::Periodic => 0..self.cells,
            Boundary::Transmissive => 0..self.cells + 1,
        }
    }

    /// Cells touching interface `i`, (left, right).
    pub fn interface_cells(&self, i: usize) -> (Option<usize>, Option<usize>) {
        let n = self.cells;
        debug_assert!(i <= n);
        match self.boundary {
            Boundary::Periodic if i == 0 || i == n => (Some(n - 1), Some(0)),
            Boundary::Transmissive if i == 0 => (None, Some(0)),
            Boundary::Transmissive if i == n => (Some(n - 1), None),
            _ => (Some(i - 1), Some(i)),
        }
    }
}

/// Nodal conserved values on every cell, stored cell-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DgState {
    pub mesh: Mesh1D,
    degree: usize,
    pub values: Vec<Conserved>,
    pub time: f64,
}

impl DgState {
    pub fn new(mesh: Mesh1D, degree: usize, values: Vec<Conserved>, time: f64) -> Self {
        assert_eq!(values.len(), mesh.cells() * (degree + 1), "nodal value count");
        Self {
            mesh,
            degree,
            values,
            time,
        }
    }

    /// Nodal interpolation of `initial`. Face nodes take the one-sided limit from
    /// inside their cell, so a jump sitting on a face is represented exactly.
    pub fn interpolate(mesh: Mesh1D, element: &ReferenceElement, initial: impl Fn(f64) -> Conserved) -> Self {
        let p = element.degree();
        let dx = mesh.dx();
        let mut values = Vec::with_capacity(mesh.cells() * (p + 1));
        for k in 0..mesh.cells() {
            for (j, &xi) in element.nodes().iter().enumerate() {
                let x = mesh.to_physical(k, xi);
                let nudge = 1e-13 * x.abs().max(dx);
                let x_eval = if j == 0 {
                    x + nudge
                } else if j == p {
                    x - nudge
                } else {
                    x
                };
                values.push(initial(x_eval));
            }
        }
        Self::new(mesh, p, values, 0.0)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn nodes_per_cell(&self) -> usize {
        self.degree + 1
    }

    pub fn cell(&self, k: usize) -> &[Conserved] {
        let np = self.nodes_per_cell();
        &self.values[k * np..(k + 1) * np]
    }

    pub fn cell_mut(&mut self, k: usize) -> &mut [Conserved] {
        let np = self.nodes_per_cell();
        &mut self.values[k * np..(k + 1) * np]
    }

    /// Physical coordinates of all nodes, cell-major (ascending).
    pub fn node_positions(&self, element: &ReferenceElement) -> Vec<f64> {
        (0..self.mesh.cells())
            .flat_map(|k| element.nodes().iter().map(move |&xi| self.mesh.to_physical(k, xi)))
            .collect()
    }

    /// Quadrature mean of cell `k` with the element weights (which sum to 2).
    pub fn cell_mean(&self, k: usize, weights: &[f64]) -> Conserved {
        self.cell(k)
            .iter()
            .zip(weights)
            .fold(Conserved::zero(), |acc, (u, w)| acc.add_scaled(0.5 * w, *u))
    }

    /// Left and right states at interface `i` in `0..=N`.
    ///
    /// At a transmissive boundary the ghost is the mean of the boundary cell. A
    /// copy of the trace would make the boundary flux the cell's own physical
    /// flux, leaving its polynomial free to extrapolate itself at an inflow face.
    pub fn interface_states(&self, i: usize, weights: &[f64]) -> (Conserved, Conserved) {
        let n = self.mesh.cells();
        let p = self.degree;
        match self.mesh.interface_cells(i) {
            (Some(l), Some(r)) => (self.cell(l)[p], self.cell(r)[0]),
            (None, Some(r)) => (self.cell_mean(r, weights), self.cell(r)[0]),
            (Some(l), None) => (self.cell(l)[p], self.cell_mean(l, weights)),
            (None, None) => unreachable!("interface {i} of {n} cells has no neighbours"),
        }
    }

    pub fn check_admissible(&self, params: &EulerParams) -> Result<(), SolverError> {
        let np = self.nodes_per_cell();
        for (i, u) in self.values.iter().enumerate() {
            if !u.is_finite() {
                return Err(node_error(i, np, PhysicsError::Inadmissible { rho: u.rho, pressure: f64::NAN }));
            }
            params.pressure(u).map_err(|e| node_error(i, np, e))?;
        }
        Ok(())
    }

    /// Largest `|v| + c` over all nodes.
    pub fn max_wave_speed(&self, params: &EulerParams) -> Result<f64, SolverError> {
        let np = self.nodes_per_cell();
        self.values.iter().enumerate().try_fold(0.0f64, |acc, (i, u)| {
            Ok(acc.max(params.max_wave_speed(u).map_err(|e| node_error(i, np, e))?))
        })
    }
}

pub(crate) fn node_error(flat: usize, np: usize, source: PhysicsError) -> SolverError {
    SolverError::Node {
        cell: flat / np,
        node: flat % np,
        source,
    }
}

/// Output of one DG residual evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct RhsBundle {
    pub dudt: Vec<Conserved>,
    /// `f*` at faces `0..=N` (face N duplicates face 0 on periodic meshes).
    pub fluxes: Vec<Conserved>,
    /// `F*` at faces `0..=N`.
    pub entropy_fluxes: Vec<f64>,
}

fn llf_speed(u_l: &Conserved, u_r: &Conserved, params: &EulerParams) -> Result<f64, PhysicsError> {
    Ok(params.max_wave_speed(u_l)?.max(params.max_wave_speed(u_r)?))
}

/// Local Lax-Friedrichs flux with the per-interface speed `max(|v| + c)`.
pub fn llf_flux(u_l: &Conserved, u_r: &Conserved, params: &EulerParams) -> Result<Conserved, PhysicsError> {
    let c = llf_speed(u_l, u_r, params)?;
    Ok((params.flux(u_l)? + params.flux(u_r)?) * 0.5 - (*u_r - *u_l) * (0.5 * c))
}

/// Entropy flux companion of [`llf_flux`]: `(F_l + F_r)/2 - c/2 (U_r - U_l)`.
pub fn numerical_entropy_flux(u_l: &Conserved, u_r: &Conserved, params: &EulerParams) -> Result<f64, PhysicsError> {
    let c = llf_speed(u_l, u_r, params)?;
    let (e_l, f_l) = params.entropy_pair(u_l)?;
    let (e_r, f_r) = params.entropy_pair(u_r)?;
    Ok(0.5 * (f_l + f_r) - 0.5 * c * (e_r - e_l))
}

/// Both interface fluxes in one pass (shares the speed and flux evaluations).
fn interface_fluxes(u_l: &Conserved, u_r: &Conserved, params: &EulerParams) -> Result<(Conserved, f64), PhysicsError> {
    let c = llf_speed(u_l, u_r, params)?;
    let (e_l, q_l) = params.entropy_pair(u_l)?;
    let (e_r, q_r) = params.entropy_pair(u_r)?;
    let f = (params.flux(u_l)? + params.flux(u_r)?) * 0.5 - (*u_r - *u_l) * (0.5 * c);
    Ok((f, 0.5 * (q_l + q_r) - 0.5 * c * (e_r - e_l)))
}

pub fn semidiscrete_rhs(
    state: &DgState,
    element: &ReferenceElement,
    params: &EulerParams,
) -> Result<RhsBundle, SolverError> {
    let n = state.mesh.cells();
    let np = state.nodes_per_cell();
    let p = state.degree();
    debug_assert_eq!(element.degree(), p);

    let nodal_flux = state
        .values
        .iter()
        .enumerate()
        .map(|(i, u)| params.flux(u).map_err(|e| node_error(i, np, e)))
        .collect::<Result<Vec<_>, _>>()?;

    let mut fluxes = vec![Conserved::zero(); n + 1];
    let mut entropy_fluxes = vec![0.0; n + 1];
    for i in state.mesh.distinct_interfaces() {
        let (u_l, u_r) = state.interface_states(i, element.weights());
        let (f, q) = interface_fluxes(&u_l, &u_r, params)
            .map_err(|source| SolverError::Interface { interface: i, source })?;
        fluxes[i] = f;
        entropy_fluxes[i] = q;
    }
    if state.mesh.boundary() == Boundary::Periodic {
        fluxes[n] = fluxes[0];
        entropy_fluxes[n] = entropy_fluxes[0];
    }

    let stiffness = element.stiffness();
    let weights = element.weights();
    let jac_inv = 2.0 / state.mesh.dx();
    let mut dudt = vec![Conserved::zero(); n * np];
    for k in 0..n {
        let f_cell = &nodal_flux[k * np..(k + 1) * np];
        let out = &mut dudt[k * np..(k + 1) * np];
        for (j, du) in out.iter_mut().enumerate() {
            let mut acc = Conserved::zero();
            for (l, f) in f_cell.iter().enumerate() {
                acc = acc.add_scaled(stiffness[(j, l)], *f);
            }
            if j == 0 {
                acc += fluxes[k];
            }
            if j == p {
                acc = acc - fluxes[k + 1];
            }
            *du = acc * (jac_inv / weights[j]);
        }
    }

    Ok(RhsBundle {
        dudt,
        fluxes,
        entropy_fluxes,
    })
}

/// Quadrature of the entropy over the mesh, `sum_T sum_k (dx/2) w_k U(u_k)`.
pub fn discrete_total_entropy(
    state: &DgState,
    element: &ReferenceElement,
    params: &EulerParams,
) -> Result<f64, SolverError> {
    let np = state.nodes_per_cell();
    let half_dx = 0.5 * state.mesh.dx();
    let weights = element.weights();
    state.values.iter().enumerate().try_fold(0.0, |acc, (i, u)| {
        let e = params.entropy(u).map_err(|e| node_error(i, np, e))?;
        Ok(acc + half_dx * weights[i % np] * e)
    })
}

/// Mesh integral of every conserved component.
pub fn total_conserved(state: &DgState, element: &ReferenceElement) -> Conserved {
    let np = state.nodes_per_cell();
    let half_dx = 0.5 * state.mesh.dx();
    let weights = element.weights();
    state
        .values
        .iter()
        .enumerate()
        .fold(Conserved::zero(), |acc, (i, u)| acc.add_scaled(half_dx * weights[i % np], *u))
}

/// Quadrature mean of each cell.
pub fn cell_means(state: &DgState, element: &ReferenceElement) -> Vec<Conserved> {
    (0..state.mesh.cells())
        .map(|k| {
            state
                .cell(k)
                .iter()
                .zip(element.weights())
                .fold(Conserved::zero(), |acc, (u, w)| acc.add_scaled(0.5 * w, *u))
        })
        .collect()
}
