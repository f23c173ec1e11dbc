//! Correction of the DG time derivative along the filter direction `G u`.
//!
//! Per cell the correction first removes any entropy production (`lambda_ED`),
//! then per interface it adds enough dissipation to reach the predicted rate
//! `sigma` (`lambda_ER`). The sizes come from a Tikhonov-regularised ratio and
//! the total per cell is capped at `lambda_max`.

use crate::dg::{semidiscrete_rhs, Boundary, DgState, RhsBundle};
use crate::element::ReferenceElement;
use crate::error::{SetupError, SolverError};
use crate::filter::FilterOperator;
use crate::physics::{ConservationLaw, Conserved, EulerParams, StateVector};
use crate::predictor::{EntropyPredictor, TruncationPolicy};

/// Square root of machine precision for unit-scaled solutions.
pub const REGULARIZATION: f64 = 1e-8;

/// `max(a b / (b^2 + c^2), 0)`.
pub fn stable_ratio(a: f64, b: f64, c: f64) -> f64 {
    debug_assert!(c > 0.0);
    let r = a * b / (b * b + c * c);
    if r > 0.0 {
        r
    } else {
        0.0
    }
}

/// Entropy bookkeeping per cell, all inner products carrying the Jacobian `dx/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellRates {
    /// `<w, du/dt> - (F*_l - F*_r)`: entropy production of the uncorrected scheme.
    pub production: Vec<f64>,
    /// `<w, G u>`: rate contributed by a unit correction.
    pub dissipation: Vec<f64>,
    /// `|<w, du/dt>| + |F*_l| + |F*_r| + c_T mean_T |w| |u|`, the magnitude the
    /// residual is judged against. The last term keeps the scale positive in
    /// quiescent cells, where the entropy flux (and possibly `U`) vanishes.
    pub scale: Vec<f64>,
    /// `G u` on every node.
    pub direction: Vec<Conserved>,
}

pub fn cell_rates(
    state: &DgState,
    rhs: &RhsBundle,
    element: &ReferenceElement,
    filter: &FilterOperator,
    params: &EulerParams,
) -> Result<CellRates, SolverError> {
    let n = state.mesh.cells();
    let np = state.nodes_per_cell();
    let half_dx = 0.5 * state.mesh.dx();
    let weights = element.weights();
    let mut direction = vec![Conserved::zero(); n * np];
    let mut production = Vec::with_capacity(n);
    let mut dissipation = Vec::with_capacity(n);
    let mut scale = Vec::with_capacity(n);
    for k in 0..n {
        let cell = state.cell(k);
        let dir = &mut direction[k * np..(k + 1) * np];
        filter.apply_generator(cell, dir);
        let (mut wdu, mut wdir, mut mass, mut speed) = (0.0, 0.0, 0.0, 0.0f64);
        for j in 0..np {
            let node_err = |source| SolverError::Node { cell: k, node: j, source };
            let w = params.entropy_variables(&cell[j]).map_err(node_err)?;
            wdu += half_dx * weights[j] * w.dot(&rhs.dudt[k * np + j]);
            wdir += half_dx * weights[j] * w.dot(&dir[j]);
            mass += 0.5 * weights[j] * w.norm() * cell[j].norm();
            speed = speed.max(params.max_wave_speed(&cell[j]).map_err(node_err)?);
        }
        let (f_l, f_r) = (rhs.entropy_fluxes[k], rhs.entropy_fluxes[k + 1]);
        production.push(wdu - (f_l - f_r));
        dissipation.push(wdir);
        scale.push(wdu.abs() + f_l.abs() + f_r.abs() + speed * mass);
    }
    Ok(CellRates {
        production,
        dissipation,
        scale,
        direction,
    })
}

/// `lambda_ED` per cell.
pub fn cell_dissipation_correction(rates: &CellRates, c: f64) -> Vec<f64> {
    rates
        .production
        .iter()
        .zip(&rates.dissipation)
        .map(|(&r, &d)| stable_ratio(-r, d, c))
        .collect()
}

/// `lambda_ER` on faces `0..=N`. On periodic meshes face N repeats face 0.
pub fn interface_rate_correction(
    state: &DgState,
    sigma: &[f64],
    rates: &CellRates,
    lambda_ed: &[f64],
    c: f64,
) -> Vec<f64> {
    let mesh = &state.mesh;
    let n = mesh.cells();
    let mut out = vec![0.0; n + 1];
    for i in mesh.distinct_interfaces() {
        let (l, r) = mesh.interface_cells(i);
        let (mut num, mut den) = (sigma[i], 0.0);
        for k in [l, r].into_iter().flatten() {
            num -= rates.production[k] + lambda_ed[k] * rates.dissipation[k];
            den += rates.dissipation[k];
        }
        out[i] = stable_ratio(num, den, c);
    }
    if mesh.boundary() == Boundary::Periodic {
        out[n] = out[0];
    }
    out
}

/// Everything decided during one corrected right-hand-side evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionReport {
    pub lambda_ed: Vec<f64>,
    /// Per face `0..=N`.
    pub lambda_er: Vec<f64>,
    pub lambda_total: Vec<f64>,
    pub lambda_max: f64,
    /// Predicted dissipation rate per face.
    pub sigma: Vec<f64>,
    /// Cell entropy production before correction.
    pub production: Vec<f64>,
    /// Cell entropy production after correction.
    pub residual: Vec<f64>,
    pub dissipation: Vec<f64>,
    pub scale: Vec<f64>,
    pub truncation_fallbacks: usize,
}

impl CorrectionReport {
    /// `lambda_ER` summed over the two faces of cell `k`.
    pub fn lambda_er_of_cell(&self, k: usize) -> f64 {
        self.lambda_er[k] + self.lambda_er[k + 1]
    }

    /// Largest positive residual relative to its cell scale.
    pub fn violation_pos(&self) -> f64 {
        self.residual
            .iter()
            .zip(&self.scale)
            .map(|(&r, &s)| if r > 0.0 { r / s.max(f64::MIN_POSITIVE) } else { 0.0 })
            .fold(0.0, f64::max)
    }

    pub fn residual_min(&self) -> f64 {
        self.residual.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Number of cells where the `lambda_max` cap was active.
    pub fn capped_cells(&self) -> usize {
        self.lambda_total.iter().filter(|&&l| l >= self.lambda_max).count()
    }
}

/// The complete spatial operator: DG residual plus entropy-rate correction.
#[derive(Debug, Clone)]
pub struct CorrectedScheme {
    pub element: ReferenceElement,
    pub filter: FilterOperator,
    pub predictor: EntropyPredictor,
    pub params: EulerParams,
    pub regularization: f64,
    /// When false the plain DG residual is returned (with an all-zero report).
    pub correction_enabled: bool,
}

impl CorrectedScheme {
    pub fn new(degree: usize, params: EulerParams, policy: TruncationPolicy) -> Result<Self, SetupError> {
        let element = ReferenceElement::new(degree)?;
        let filter = FilterOperator::build(&element)?;
        let predictor = EntropyPredictor::new(&element, policy);
        Ok(Self {
            element,
            filter,
            predictor,
            params,
            regularization: REGULARIZATION,
            correction_enabled: true,
        })
    }

    pub fn degree(&self) -> usize {
        self.element.degree()
    }

    pub fn rhs(&self, state: &DgState, lambda_max: f64) -> Result<(RhsBundle, CorrectionReport), SolverError> {
        corrected_rhs(self, state, lambda_max)
    }
}

/// `du/dt + min(lambda_max, lambda_ED + sum lambda_ER) G u` per cell.
pub fn corrected_rhs(
    scheme: &CorrectedScheme,
    state: &DgState,
    lambda_max: f64,
) -> Result<(RhsBundle, CorrectionReport), SolverError> {
    let params = &scheme.params;
    let mut rhs = semidiscrete_rhs(state, &scheme.element, params)?;
    let rates = cell_rates(state, &rhs, &scheme.element, &scheme.filter, params)?;
    let n = state.mesh.cells();
    let np = state.nodes_per_cell();

    if !scheme.correction_enabled {
        let report = CorrectionReport {
            lambda_ed: vec![0.0; n],
            lambda_er: vec![0.0; n + 1],
            lambda_total: vec![0.0; n],
            lambda_max,
            sigma: vec![0.0; n + 1],
            residual: rates.production.clone(),
            production: rates.production,
            dissipation: rates.dissipation,
            scale: rates.scale,
            truncation_fallbacks: 0,
        };
        return Ok((rhs, report));
    }

    let predictions = scheme.predictor.predict_all(params, state)?;
    let sigma: Vec<f64> = predictions.iter().map(|p| p.sigma).collect();
    let truncation_fallbacks = predictions[..n].iter().filter(|p| p.truncation_fallback).count()
        + usize::from(state.mesh.boundary() == Boundary::Transmissive && predictions[n].truncation_fallback);

    let c = scheme.regularization;
    let lambda_ed = cell_dissipation_correction(&rates, c);
    let lambda_er = interface_rate_correction(state, &sigma, &rates, &lambda_ed, c);
    let lambda_total: Vec<f64> = (0..n)
        .map(|k| (lambda_ed[k] + lambda_er[k] + lambda_er[k + 1]).min(lambda_max))
        .collect();

    let mut residual = Vec::with_capacity(n);
    for k in 0..n {
        let lam = lambda_total[k];
        if lam > 0.0 {
            for j in 0..np {
                let idx = k * np + j;
                rhs.dudt[idx] = rhs.dudt[idx].add_scaled(lam, rates.direction[idx]);
            }
        }
        residual.push(rates.production[k] + lam * rates.dissipation[k]);
    }

    let report = CorrectionReport {
        lambda_ed,
        lambda_er,
        lambda_total,
        lambda_max,
        sigma,
        production: rates.production,
        residual,
        dissipation: rates.dissipation,
        scale: rates.scale,
        truncation_fallbacks,
    };
    Ok((rhs, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dg::Mesh1D;
    use approx::assert_abs_diff_eq;

    const AIR: EulerParams = EulerParams { gamma: 1.4 };

    #[test]
    fn stable_ratio_examples() {
        assert_abs_diff_eq!(stable_ratio(1.0, 1.0, 1e-8), 1.0, epsilon = 1e-15);
        assert_eq!(stable_ratio(1.0, 0.0, 1e-8), 0.0);
        assert_eq!(stable_ratio(-1.0, 1.0, 1e-8), 0.0);
        assert_eq!(stable_ratio(0.0, 0.0, 1e-8), 0.0);
    }

    fn scheme(p: usize) -> CorrectedScheme {
        CorrectedScheme::new(p, AIR, TruncationPolicy::default()).unwrap()
    }

    #[test]
    fn constant_state_is_untouched() {
        let s = scheme(3);
        let mesh = Mesh1D::new(6, 0.0, 1.0, Boundary::Periodic).unwrap();
        let state = DgState::interpolate(mesh, &s.element, |_| AIR.from_primitive(1.0, 0.3, 1.0));
        let (rhs, report) = s.rhs(&state, 1e6).unwrap();
        assert!(rhs.dudt.iter().all(|d| d.norm() < 1e-12));
        assert!(report.lambda_total.iter().all(|&l| l < 1e-10), "{:?}", report.lambda_total);
    }

    fn shock_tube(s: &CorrectedScheme, cells: usize) -> DgState {
        let mesh = Mesh1D::new(cells, 0.0, 10.0, Boundary::Transmissive).unwrap();
        DgState::interpolate(mesh, &s.element, |x| {
            if x < 5.0 {
                AIR.from_primitive(1.0, 0.0, 1.0)
            } else {
                AIR.from_primitive(0.125, 0.0, 0.1)
            }
        })
    }

    #[test]
    fn correction_preserves_cell_means() {
        let s = scheme(3);
        for cells in [9, 10] {
            let state = shock_tube(&s, cells);
            let plain = semidiscrete_rhs(&state, &s.element, &AIR).unwrap();
            let (rhs, _) = s.rhs(&state, 1e8).unwrap();
            for k in 0..cells {
                let mut diff = Conserved::zero();
                for j in 0..4 {
                    diff = diff.add_scaled(s.element.weights()[j], rhs.dudt[k * 4 + j] - plain.dudt[k * 4 + j]);
                }
                assert!(diff.norm() < 1e-12, "cell {k}: {diff:?}");
            }
        }
    }

    #[test]
    fn jump_inside_a_cell_reaches_predicted_rate() {
        let s = scheme(3);
        let state = shock_tube(&s, 9);
        let (_, report) = s.rhs(&state, 1e8).unwrap();
        assert!(report.lambda_er.iter().any(|&l| l > 0.0));
        assert_eq!(report.capped_cells(), 0);
        for i in 1..9 {
            let pair = report.residual[i - 1] + report.residual[i];
            let scale = report.scale[i - 1] + report.scale[i];
            assert!(pair <= report.sigma[i] + 1e-8 * scale, "face {i}: {pair} vs {}", report.sigma[i]);
        }
        assert!(report.violation_pos() <= 1e-10, "{}", report.violation_pos());
    }

    #[test]
    fn face_aligned_jump_leaves_no_direction() {
        // every cell is constant, so G u = 0 and nothing can be corrected yet
        let s = scheme(3);
        let state = shock_tube(&s, 10);
        let (_, report) = s.rhs(&state, 1e8).unwrap();
        assert!(report.sigma[5] < 0.0);
        assert!(report.dissipation.iter().all(|d| d.abs() < 1e-14));
        assert!(report.violation_pos() <= 1e-10);
    }

    #[test]
    fn cap_limits_total() {
        let s = scheme(3);
        let mesh = Mesh1D::new(10, 0.0, 10.0, Boundary::Transmissive).unwrap();
        let state = DgState::interpolate(mesh, &s.element, |x| {
            AIR.from_primitive(if x < 5.0 { 1.0 } else { 0.125 }, 0.0, if x < 5.0 { 1.0 } else { 0.1 })
        });
        let (_, report) = s.rhs(&state, 1e-3).unwrap();
        assert!(report.lambda_total.iter().all(|&l| l <= 1e-3));
        assert!(report.capped_cells() > 0);
    }
}
