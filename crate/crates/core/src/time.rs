//! Explicit Runge-Kutta steppers and the CFL step size.
//!
//! Both steppers are written against [`LinearState`], so the same code advances
//! scalars in the order tests and full DG states in the solver.

use serde::{Deserialize, Serialize};

use crate::dg::DgState;
use crate::error::SolverError;
use crate::physics::{Conserved, EulerParams, StateVector};

/// Vector-space operations a stepper needs.
pub trait LinearState: Clone {
    /// `self += a x`.
    fn axpy(&mut self, a: f64, x: &Self);
    /// `self *= a`.
    fn scale(&mut self, a: f64);
}

impl LinearState for f64 {
    fn axpy(&mut self, a: f64, x: &Self) {
        *self += a * x;
    }
    fn scale(&mut self, a: f64) {
        *self *= a;
    }
}

impl LinearState for Vec<f64> {
    fn axpy(&mut self, a: f64, x: &Self) {
        debug_assert_eq!(self.len(), x.len());
        self.iter_mut().zip(x).for_each(|(s, v)| *s += a * v);
    }
    fn scale(&mut self, a: f64) {
        self.iter_mut().for_each(|s| *s *= a);
    }
}

impl LinearState for Vec<Conserved> {
    fn axpy(&mut self, a: f64, x: &Self) {
        debug_assert_eq!(self.len(), x.len());
        self.iter_mut().zip(x).for_each(|(s, v)| *s = s.add_scaled(a, *v));
    }
    fn scale(&mut self, a: f64) {
        self.iter_mut().for_each(|s| *s = *s * a);
    }
}

impl LinearState for DgState {
    fn axpy(&mut self, a: f64, x: &Self) {
        self.values.axpy(a, &x.values);
    }
    fn scale(&mut self, a: f64) {
        self.values.scale(a);
    }
}

/// Time integrator choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Four-stage, third-order strong-stability-preserving Runge-Kutta.
    #[default]
    Ssprk43,
    /// Eighth-order Dormand-Prince solution, fixed step.
    Rk8,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Ssprk43 => "ssprk43",
            Scheme::Rk8 => "rk8",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ssprk43" => Ok(Scheme::Ssprk43),
            "rk8" => Ok(Scheme::Rk8),
            other => Err(format!("unknown scheme '{other}' (expected ssprk43 or rk8)")),
        }
    }
}

/// CFL number `0.1 / (p^2 + p)`.
pub fn default_cfl(degree: usize) -> f64 {
    let p = degree as f64;
    0.1 / (p * p + p)
}

/// `cfl * dx / max(|v| + c)`.
pub fn compute_dt(state: &DgState, params: &EulerParams, cfl: f64) -> Result<f64, SolverError> {
    let c_max = state.max_wave_speed(params)?;
    if !(c_max > 0.0 && c_max.is_finite()) {
        return Err(SolverError::BlowUp {
            time: state.time,
            cell: None,
            reason: format!("maximum wave speed {c_max}"),
        });
    }
    Ok(cfl * state.mesh.dx() / c_max)
}

/// The `index`-th sample time `start + index * interval`, snapped onto `end`
/// when it lies within round-off of it or beyond.
pub fn sample_time(start: f64, interval: f64, index: usize, end: f64) -> f64 {
    let t = start + index as f64 * interval;
    if t >= end - 1e-12 * end.abs().max(1.0) {
        end
    } else {
        t
    }
}

/// Shortens `dt` so that `t + dt` does not step over `target`.
pub fn clip_step(t: f64, dt: f64, target: f64) -> f64 {
    let remaining = target - t;
    if dt >= remaining || remaining - dt < 1e-12 * target.abs().max(1.0) {
        remaining
    } else {
        dt
    }
}

fn stage<S, F>(rhs: &mut F, u: &S, index: usize) -> Result<S, SolverError>
where
    F: FnMut(&S) -> Result<S, SolverError>,
{
    rhs(u).map_err(|e| SolverError::Stage {
        stage: index,
        source: Box::new(e),
    })
}

/// One SSPRK(4,3) step: three half-step Euler substeps, a 2/3-1/3 recombination
/// with the start value and a final half step.
pub fn ssprk43_step<S, F>(u: &S, dt: f64, mut rhs: F) -> Result<S, SolverError>
where
    S: LinearState,
    F: FnMut(&S) -> Result<S, SolverError>,
{
    let h = 0.5 * dt;
    let mut u1 = u.clone();
    u1.axpy(h, &stage(&mut rhs, u, 0)?);
    let mut u2 = u1.clone();
    u2.axpy(h, &stage(&mut rhs, &u1, 1)?);
    let k2 = stage(&mut rhs, &u2, 2)?;
    // 2/3 u + 1/3 w written as u + (w - u)/3, exact when nothing moves
    let mut u3 = u2;
    u3.axpy(h, &k2);
    u3.axpy(-1.0, u);
    u3.scale(1.0 / 3.0);
    u3.axpy(1.0, u);
    let k3 = stage(&mut rhs, &u3, 3)?;
    u3.axpy(h, &k3);
    Ok(u3)
}

/// One fixed step of the eighth-order Dormand-Prince 8(5,3) solution.
pub fn rk8_step<S, F>(u: &S, dt: f64, mut rhs: F) -> Result<S, SolverError>
where
    S: LinearState,
    F: FnMut(&S) -> Result<S, SolverError>,
{
    let mut k: Vec<S> = Vec::with_capacity(DOP853_A.len());
    for (i, row) in DOP853_A.iter().enumerate() {
        let mut y = u.clone();
        for &(j, a) in row.iter() {
            y.axpy(dt * a, &k[j]);
        }
        k.push(stage(&mut rhs, &y, i)?);
    }
    let mut out = u.clone();
    for &(j, b) in DOP853_B {
        out.axpy(dt * b, &k[j]);
    }
    Ok(out)
}

/// Dispatches on the scheme.
pub fn step<S, F>(scheme: Scheme, u: &S, dt: f64, rhs: F) -> Result<S, SolverError>
where
    S: LinearState,
    F: FnMut(&S) -> Result<S, SolverError>,
{
    match scheme {
        Scheme::Ssprk43 => ssprk43_step(u, dt, rhs),
        Scheme::Rk8 => rk8_step(u, dt, rhs),
    }
}

// Dormand-Prince 8(5,3) tableau (Hairer, Norsett and Wanner), sparse rows.
#[allow(clippy::excessive_precision)]
const DOP853_A: [&[(usize, f64)]; 12] = [
    &[],
    &[(0, 5.26001519587677318785587544488e-2)],
    &[(0, 1.97250569845378994544595329183e-2), (1, 5.91751709536136983633785987549e-2)],
    &[(0, 2.95875854768068491816892993775e-2), (2, 8.87627564304205475450678981324e-2)],
    &[(0, 2.41365134159266685502369798665e-1), (2, -8.84549479328286085344864962717e-1), (3, 9.24834003261792003115737966543e-1)],
    &[(0, 3.7037037037037037037037037037e-2), (3, 1.70828608729473871279604482173e-1), (4, 1.25467687566822425016691814123e-1)],
    &[(0, 3.7109375e-2), (3, 1.70252211019544039314978060272e-1), (4, 6.02165389804559606850219397283e-2), (5, -1.7578125e-2)],
    &[(0, 3.70920001185047927108779319836e-2), (3, 1.70383925712239993810214054705e-1), (4, 1.07262030446373284651809199168e-1), (5, -1.53194377486244017527936158236e-2), (6, 8.27378916381402288758473766002e-3)],
    &[(0, 6.24110958716075717114429577812e-1), (3, -3.36089262944694129406857109825), (4, -8.68219346841726006818189891453e-1), (5, 2.75920996994467083049415600797e1), (6, 2.01540675504778934086186788979e1), (7, -4.34898841810699588477366255144e1)],
    &[(0, 4.77662536438264365890433908527e-1), (3, -2.48811461997166764192642586468), (4, -5.90290826836842996371446475743e-1), (5, 2.12300514481811942347288949897e1), (6, 1.52792336328824235832596922938e1), (7, -3.32882109689848629194453265587e1), (8, -2.03312017085086261358222928593e-2)],
    &[(0, -9.3714243008598732571704021658e-1), (3, 5.18637242884406370830023853209), (4, 1.09143734899672957818500254654), (5, -8.14978701074692612513997267357), (6, -1.85200656599969598641566180701e1), (7, 2.27394870993505042818970056734e1), (8, 2.49360555267965238987089396762), (9, -3.0467644718982195003823669022)],
    &[(0, 2.27331014751653820792359768449), (3, -1.05344954667372501984066689879e1), (4, -2.00087205822486249909675718444), (5, -1.79589318631187989172765950534e1), (6, 2.79488845294199600508499808837e1), (7, -2.85899827713502369474065508674), (8, -8.87285693353062954433549289258), (9, 1.23605671757943030647266201528e1), (10, 6.43392746015763530355970484046e-1)],
];
#[allow(clippy::excessive_precision)]
const DOP853_B: &[(usize, f64)] = &[(0, 5.42937341165687622380535766363e-2), (5, 4.45031289275240888144113950566), (6, 1.89151789931450038304281599044), (7, -5.8012039600105847814672114227), (8, 3.1116436695781989440891606237e-1), (9, -1.52160949662516078556178806805e-1), (10, 2.01365400804030348374776537501e-1), (11, 4.47106157277725905176885569043e-2)];
