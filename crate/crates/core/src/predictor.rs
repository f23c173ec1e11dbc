//! Lower bounds on the entropy dissipation rate of any admissible weak solution
//! near a cell interface.
//!
//! For traces `u_l`, `u_r` and signal-speed bounds `a_l < a_r`, conservation over
//! the wave cone fixes the cone average `u_lr` and Jensen's inequality gives
//!
//! ```text
//! sigma >= (a_r - a_l) U(u_lr) + a_l U(u_l) - a_r U(u_r) + F(u_r) - F(u_l).
//! ```
//!
//! The bound vanishes quadratically in the jump, so on smooth data it decays at
//! twice the rate of the trace mismatch. Under-resolved data is caught by also
//! evaluating the bound on traces of the degree `p - 1` Legendre truncation and
//! taking the more dissipative of the two.

use crate::dg::{Boundary, DgState};
use crate::element::ReferenceElement;
use crate::error::{PhysicsError, SolverError};
use crate::physics::{ConservationLaw, StateVector};

/// Attempts at widening the speed cone when the cone average is inadmissible.
const MAX_WIDENINGS: usize = 30;

/// Cone-average state `(a_r u_r - a_l u_l + f(u_l) - f(u_r)) / (a_r - a_l)`.
pub fn hll_state<L: ConservationLaw>(
    law: &L,
    u_l: &L::State,
    u_r: &L::State,
    a_l: f64,
    a_r: f64,
) -> Result<L::State, PhysicsError> {
    let spread = a_r - a_l;
    if !(spread >= 1e-14 * a_l.abs().max(a_r.abs()).max(1.0)) {
        return Err(PhysicsError::DegenerateSpeeds { a_l, a_r });
    }
    let num = *u_r * a_r - *u_l * a_l + law.flux(u_l)? - law.flux(u_r)?;
    Ok(num * (1.0 / spread))
}

/// A single evaluation of the cone bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateBound<S> {
    /// Bound on the dissipation rate, clipped to be non-positive.
    pub sigma: f64,
    pub a_l: f64,
    pub a_r: f64,
    pub u_lr: S,
}

/// Cone bound for explicitly given speeds.
pub fn rate_bound_with_speeds<L: ConservationLaw>(
    law: &L,
    u_l: &L::State,
    u_r: &L::State,
    a_l: f64,
    a_r: f64,
) -> Result<RateBound<L::State>, PhysicsError> {
    let u_lr = hll_state(law, u_l, u_r, a_l, a_r)?;
    if u_l == u_r {
        return Ok(RateBound { sigma: 0.0, a_l, a_r, u_lr });
    }
    let (e_l, q_l) = law.entropy_pair(u_l)?;
    let (e_r, q_r) = law.entropy_pair(u_r)?;
    let e_lr = law.entropy(&u_lr)?;
    let sigma = (a_r - a_l) * e_lr + a_l * e_l - a_r * e_r + q_r - q_l;
    Ok(RateBound {
        sigma: sigma.min(0.0),
        a_l,
        a_r,
        u_lr,
    })
}

/// Cone bound starting from the given speeds, symmetrically widening the cone
/// until the cone average is admissible. Wider cones only loosen the bound.
pub fn rate_bound_widening<L: ConservationLaw>(
    law: &L,
    u_l: &L::State,
    u_r: &L::State,
    mut a_l: f64,
    mut a_r: f64,
) -> Result<RateBound<L::State>, PhysicsError> {
    let mut last_err = None;
    for _ in 0..=MAX_WIDENINGS {
        let u_lr = hll_state(law, u_l, u_r, a_l, a_r)?;
        if law.is_admissible(&u_lr) {
            return rate_bound_with_speeds(law, u_l, u_r, a_l, a_r);
        }
        last_err = Some(law.entropy(&u_lr).err().unwrap_or(PhysicsError::DegenerateSpeeds { a_l, a_r }));
        let half = 0.5 * (a_r - a_l);
        a_l -= half;
        a_r += half;
    }
    Err(last_err.expect("loop runs at least once"))
}

/// Cone bound with the law's own signal-speed estimates.
pub fn dissipation_rate_bound<L: ConservationLaw>(
    law: &L,
    u_l: &L::State,
    u_r: &L::State,
) -> Result<RateBound<L::State>, PhysicsError> {
    let (a_l, a_r) = law.wave_speed_bounds(u_l, u_r)?;
    rate_bound_widening(law, u_l, u_r, a_l, a_r)
}

/// When the degree `p - 1` branch is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TruncationPolicy {
    pub enabled: bool,
    /// Smallest degree at which the branch is used.
    pub min_degree: usize,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self {
            enabled: true,
            min_degree: 3,
        }
    }
}

/// Per-interface prediction of the admissible dissipation rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfacePrediction<S> {
    pub sigma_p: f64,
    pub sigma_pm1: f64,
    /// `min(sigma_p, sigma_pm1)`.
    pub sigma: f64,
    pub a_l: f64,
    pub a_r: f64,
    pub u_lr: S,
    /// The truncated traces were inadmissible and only `sigma_p` was used.
    pub truncation_fallback: bool,
}

impl<S: StateVector> InterfacePrediction<S> {
    /// Prediction for an interface with no jump.
    pub fn quiet(u: S, a_l: f64, a_r: f64) -> Self {
        Self {
            sigma_p: 0.0,
            sigma_pm1: 0.0,
            sigma: 0.0,
            a_l,
            a_r,
            u_lr: u,
            truncation_fallback: false,
        }
    }
}

/// Precomputed trace operators for interface predictions on one element.
#[derive(Debug, Clone)]
pub struct EntropyPredictor {
    degree: usize,
    /// Rows of the degree p-1 projector giving its traces at xi = -1 and xi = +1.
    truncated_traces: Option<(Vec<f64>, Vec<f64>)>,
}

impl EntropyPredictor {
    pub fn new(element: &ReferenceElement, policy: TruncationPolicy) -> Self {
        let p = element.degree();
        let truncated_traces = (policy.enabled && p >= policy.min_degree.max(1)).then(|| {
            let t = element
                .truncation_matrix(p - 1)
                .expect("p - 1 is a valid target");
            (t.row(0).iter().copied().collect(), t.row(p).iter().copied().collect())
        });
        Self {
            degree: p,
            truncated_traces,
        }
    }

    pub fn truncation_active(&self) -> bool {
        self.truncated_traces.is_some()
    }

    /// Prediction for the interface between two neighbouring cells given by nodal values.
    pub fn interface_prediction<L: ConservationLaw>(
        &self,
        law: &L,
        left_cell: &[L::State],
        right_cell: &[L::State],
    ) -> Result<InterfacePrediction<L::State>, PhysicsError> {
        let p = self.degree;
        let full = dissipation_rate_bound(law, &left_cell[p], &right_cell[0])?;
        let mut prediction = InterfacePrediction {
            sigma_p: full.sigma,
            sigma_pm1: full.sigma,
            sigma: full.sigma,
            a_l: full.a_l,
            a_r: full.a_r,
            u_lr: full.u_lr,
            truncation_fallback: false,
        };
        let Some((left_row, right_row)) = &self.truncated_traces else {
            return Ok(prediction);
        };
        let combine = |row: &[f64], cell: &[L::State]| {
            row.iter()
                .zip(cell)
                .fold(L::State::zero(), |acc, (c, u)| acc.add_scaled(*c, *u))
        };
        // right trace of the left cell uses the xi = +1 row, and vice versa
        let ul = combine(right_row, left_cell);
        let ur = combine(left_row, right_cell);
        if !(law.is_admissible(&ul) && law.is_admissible(&ur)) {
            prediction.truncation_fallback = true;
            return Ok(prediction);
        }
        match dissipation_rate_bound(law, &ul, &ur) {
            Ok(low) => {
                prediction.sigma_pm1 = low.sigma;
                prediction.sigma = full.sigma.min(low.sigma);
            }
            Err(_) => prediction.truncation_fallback = true,
        }
        Ok(prediction)
    }

    /// Predictions for faces `0..=N` of a DG state. Transmissive boundary faces
    /// predict no dissipation; on periodic meshes face N repeats face 0.
    pub fn predict_all<L>(
        &self,
        law: &L,
        state: &DgState,
    ) -> Result<Vec<InterfacePrediction<L::State>>, SolverError>
    where
        L: ConservationLaw<State = crate::physics::Conserved>,
    {
        let n = state.mesh.cells();
        let mut out = Vec::with_capacity(n + 1);
        for i in 0..=n {
            if i == n && state.mesh.boundary() == Boundary::Periodic {
                out.push(out[0]);
                continue;
            }
            let prediction = match state.mesh.interface_cells(i) {
                (Some(l), Some(r)) => self.interface_prediction(law, state.cell(l), state.cell(r)),
                _ => {
                    let k = if i == 0 { 0 } else { n - 1 };
                    let u = state.cell(k)[if i == 0 { 0 } else { self.degree }];
                    law.wave_speed_bounds(&u, &u)
                        .map(|(a_l, a_r)| InterfacePrediction::quiet(u, a_l, a_r))
                }
            }
            .map_err(|source| SolverError::Interface { interface: i, source })?;
            out.push(prediction);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::{Burgers, Conserved, EulerParams};
    use approx::assert_abs_diff_eq;

    const AIR: EulerParams = EulerParams { gamma: 1.4 };

    #[test]
    fn hll_state_examples() {
        let u = AIR.from_primitive(0.9, 0.2, 1.1);
        let s = hll_state(&AIR, &u, &u, -1.3, 2.0).unwrap();
        assert!((s - u).norm() < 1e-14);

        let ul = AIR.from_primitive(1.0, 0.3, 1.0);
        let ur = AIR.from_primitive(0.4, -0.2, 0.5);
        let s = hll_state(&AIR, &ul, &ur, -1.0, 1.0).unwrap();
        let want = (ul + ur) * 0.5 + (AIR.flux(&ul).unwrap() - AIR.flux(&ur).unwrap()) * 0.5;
        assert!((s - want).norm() < 1e-14);

        assert_abs_diff_eq!(hll_state(&Burgers, &1.0, &0.0, -1.0, 1.0).unwrap(), 0.75, epsilon = 1e-15);
    }

    #[test]
    fn degenerate_speeds_rejected() {
        assert!(matches!(
            hll_state(&Burgers, &1.0, &0.0, 1.0, 1.0),
            Err(PhysicsError::DegenerateSpeeds { .. })
        ));
        assert!(hll_state(&Burgers, &1.0, &0.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn burgers_shock_bound_sits_below_exact_production() {
        let b = rate_bound_with_speeds(&Burgers, &1.0, &0.0, -1.0, 1.0).unwrap();
        assert_abs_diff_eq!(b.sigma, 0.5625 - 0.5 - 1.0 / 3.0, epsilon = 1e-12);
        // Rankine-Hugoniot: s = 1/2, production = [F] - s [U]
        let exact = (0.0 - 1.0 / 3.0) - 0.5 * (0.0 - 0.5);
        assert_abs_diff_eq!(exact, -1.0 / 12.0, epsilon = 1e-15);
        assert!(b.sigma <= exact);
    }

    #[test]
    fn equal_traces_predict_nothing() {
        let u = AIR.from_primitive(0.9, 0.2, 1.1);
        assert_eq!(dissipation_rate_bound(&AIR, &u, &u).unwrap().sigma, 0.0);
    }

    #[test]
    fn widening_recovers_from_inadmissible_cone_average() {
        // narrow speeds around a strong rarefaction: the cone average loses positivity
        let ul = AIR.from_primitive(1.0, -3.0, 0.4);
        let ur = AIR.from_primitive(1.0, 3.0, 0.4);
        let narrow = hll_state(&AIR, &ul, &ur, -0.1, 0.1).unwrap();
        assert!(!AIR.is_admissible(&narrow));
        let b = rate_bound_widening(&AIR, &ul, &ur, -0.1, 0.1).unwrap();
        assert!(AIR.is_admissible(&b.u_lr));
        assert!(b.a_r - b.a_l > 0.2);
        assert!(b.sigma <= 0.0);
    }

    #[test]
    fn reflection_invariance() {
        let refl = |u: Conserved| Conserved::new(u.rho, -u.rho_v, u.energy);
        let ul = AIR.from_primitive(1.0, 0.1, 1.0);
        let ur = AIR.from_primitive(0.3, -0.4, 0.2);
        let a = dissipation_rate_bound(&AIR, &ul, &ur).unwrap().sigma;
        let b = dissipation_rate_bound(&AIR, &refl(ur), &refl(ul)).unwrap().sigma;
        assert!(a < 0.0);
        assert_abs_diff_eq!(a, b, epsilon = 1e-13 * a.abs());
    }

    #[test]
    fn constant_cells_predict_zero() {
        let e = ReferenceElement::new(4).unwrap();
        let pred = EntropyPredictor::new(&e, TruncationPolicy::default());
        assert!(pred.truncation_active());
        let cell = vec![AIR.from_primitive(1.0, 0.5, 1.0); 5];
        let out = pred.interface_prediction(&AIR, &cell, &cell).unwrap();
        assert_eq!(out.sigma, 0.0);
        assert!(!out.truncation_fallback);
    }

    #[test]
    fn truncation_policy_threshold() {
        let e = ReferenceElement::new(2).unwrap();
        assert!(!EntropyPredictor::new(&e, TruncationPolicy::default()).truncation_active());
        let e = ReferenceElement::new(3).unwrap();
        let off = TruncationPolicy { enabled: false, ..Default::default() };
        assert!(!EntropyPredictor::new(&e, off).truncation_active());
    }
}
