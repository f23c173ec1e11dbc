//! Pointwise algebra of the conservation laws the solver understands.
//!
//! The Euler system is what the DG solver runs on. Inviscid Burgers is kept
//! alongside as a scalar law with closed-form entropy production, which the
//! predictor and the finite-volume reference are checked against.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::PhysicsError;

/// Vector-space operations needed on a conserved state.
pub trait StateVector:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<f64, Output = Self>
{
    fn zero() -> Self;
    /// Euclidean norm over the components.
    fn norm(&self) -> f64;
    /// Component-wise fused `self + alpha * other`.
    fn add_scaled(self, alpha: f64, other: Self) -> Self {
        self + other * alpha
    }
}

impl StateVector for f64 {
    fn zero() -> Self {
        0.0
    }
    fn norm(&self) -> f64 {
        self.abs()
    }
}

/// A hyperbolic conservation law together with a convex entropy pair.
pub trait ConservationLaw: Sync {
    type State: StateVector;

    fn flux(&self, u: &Self::State) -> Result<Self::State, PhysicsError>;
    fn entropy(&self, u: &Self::State) -> Result<f64, PhysicsError>;
    fn entropy_flux(&self, u: &Self::State) -> Result<f64, PhysicsError>;

    fn entropy_pair(&self, u: &Self::State) -> Result<(f64, f64), PhysicsError> {
        Ok((self.entropy(u)?, self.entropy_flux(u)?))
    }

    /// Largest characteristic speed magnitude at `u`.
    fn max_wave_speed(&self, u: &Self::State) -> Result<f64, PhysicsError>;

    /// Lower and upper bounds on the signal speeds of the Riemann problem (u_l, u_r).
    fn wave_speed_bounds(
        &self,
        u_l: &Self::State,
        u_r: &Self::State,
    ) -> Result<(f64, f64), PhysicsError>;

    fn is_admissible(&self, u: &Self::State) -> bool;
}

/// Conserved Euler variables (density, momentum density, total energy density).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Conserved {
    pub rho: f64,
    pub rho_v: f64,
    pub energy: f64,
}

impl Conserved {
    pub const fn new(rho: f64, rho_v: f64, energy: f64) -> Self {
        Self { rho, rho_v, energy }
    }

    pub fn splat(value: f64) -> Self {
        Self::new(value, value, value)
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.rho, self.rho_v, self.energy]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.rho * other.rho + self.rho_v * other.rho_v + self.energy * other.energy
    }

    pub fn map(self, f: impl Fn(f64) -> f64) -> Self {
        Self::new(f(self.rho), f(self.rho_v), f(self.energy))
    }

    pub fn is_finite(&self) -> bool {
        self.rho.is_finite() && self.rho_v.is_finite() && self.energy.is_finite()
    }
}

impl Add for Conserved {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.rho + o.rho, self.rho_v + o.rho_v, self.energy + o.energy)
    }
}

impl Sub for Conserved {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.rho - o.rho, self.rho_v - o.rho_v, self.energy - o.energy)
    }
}

impl Mul<f64> for Conserved {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.rho * s, self.rho_v * s, self.energy * s)
    }
}

impl Neg for Conserved {
    type Output = Self;
    fn neg(self) -> Self {
        self * -1.0
    }
}

impl AddAssign for Conserved {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl StateVector for Conserved {
    fn zero() -> Self {
        Self::default()
    }
    fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }
    fn add_scaled(self, alpha: f64, o: Self) -> Self {
        Self::new(
            alpha.mul_add(o.rho, self.rho),
            alpha.mul_add(o.rho_v, self.rho_v),
            alpha.mul_add(o.energy, self.energy),
        )
    }
}

/// Ideal-gas Euler equations with the physical entropy `U = -rho S`, `S = ln(p rho^-gamma)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerParams {
    pub gamma: f64,
}

impl Default for EulerParams {
    fn default() -> Self {
        Self { gamma: 1.4 }
    }
}

impl EulerParams {
    pub fn new(gamma: f64) -> Self {
        assert!(gamma > 1.0, "gamma must exceed 1, got {gamma}");
        Self { gamma }
    }

    pub fn from_primitive(&self, rho: f64, v: f64, p: f64) -> Conserved {
        Conserved::new(rho, rho * v, p / (self.gamma - 1.0) + 0.5 * rho * v * v)
    }

    /// Returns (rho, v, p) without admissibility checks.
    pub fn to_primitive(&self, u: &Conserved) -> (f64, f64, f64) {
        let v = u.rho_v / u.rho;
        let p = (self.gamma - 1.0) * (u.energy - 0.5 * u.rho_v * v);
        (u.rho, v, p)
    }

    pub fn pressure(&self, u: &Conserved) -> Result<f64, PhysicsError> {
        let (rho, _, p) = self.to_primitive(u);
        // NaN-safe: negated comparisons reject NaN as well
        if !(rho > 0.0) || !(p > 0.0) {
            return Err(PhysicsError::Inadmissible { rho, pressure: p });
        }
        Ok(p)
    }

    pub fn sound_speed(&self, u: &Conserved) -> Result<f64, PhysicsError> {
        let p = self.pressure(u)?;
        Ok((self.gamma * p / u.rho).sqrt())
    }

    /// Specific physical entropy `ln(p rho^-gamma)`.
    pub fn specific_entropy(&self, u: &Conserved) -> Result<f64, PhysicsError> {
        let p = self.pressure(u)?;
        Ok(p.ln() - self.gamma * u.rho.ln())
    }

    /// Gradient of `U = -rho S` with respect to (rho, rho v, E).
    pub fn entropy_variables(&self, u: &Conserved) -> Result<Conserved, PhysicsError> {
        let p = self.pressure(u)?;
        let s = p.ln() - self.gamma * u.rho.ln();
        let v = u.rho_v / u.rho;
        let gm1 = self.gamma - 1.0;
        let beta = gm1 * u.rho / p;
        Ok(Conserved::new(
            self.gamma - s - 0.5 * beta * v * v,
            beta * v,
            -beta,
        ))
    }
}

impl ConservationLaw for EulerParams {
    type State = Conserved;

    fn flux(&self, u: &Conserved) -> Result<Conserved, PhysicsError> {
        let p = self.pressure(u)?;
        let v = u.rho_v / u.rho;
        Ok(Conserved::new(u.rho_v, u.rho_v * v + p, v * (u.energy + p)))
    }

    fn entropy(&self, u: &Conserved) -> Result<f64, PhysicsError> {
        Ok(-u.rho * self.specific_entropy(u)?)
    }

    fn entropy_flux(&self, u: &Conserved) -> Result<f64, PhysicsError> {
        Ok(-u.rho_v * self.specific_entropy(u)?)
    }

    fn entropy_pair(&self, u: &Conserved) -> Result<(f64, f64), PhysicsError> {
        let s = self.specific_entropy(u)?;
        Ok((-u.rho * s, -u.rho_v * s))
    }

    fn max_wave_speed(&self, u: &Conserved) -> Result<f64, PhysicsError> {
        Ok((u.rho_v / u.rho).abs() + self.sound_speed(u)?)
    }

    /// Davis estimates: the extreme characteristic speeds of either state.
    fn wave_speed_bounds(&self, u_l: &Conserved, u_r: &Conserved) -> Result<(f64, f64), PhysicsError> {
        let (c_l, c_r) = (self.sound_speed(u_l)?, self.sound_speed(u_r)?);
        let (v_l, v_r) = (u_l.rho_v / u_l.rho, u_r.rho_v / u_r.rho);
        Ok(((v_l - c_l).min(v_r - c_r), (v_l + c_l).max(v_r + c_r)))
    }

    fn is_admissible(&self, u: &Conserved) -> bool {
        self.pressure(u).is_ok()
    }
}

/// Inviscid Burgers' equation `u_t + (u^2/2)_x = 0` with `U = u^2/2`, `F = u^3/3`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Burgers;

impl ConservationLaw for Burgers {
    type State = f64;

    fn flux(&self, u: &f64) -> Result<f64, PhysicsError> {
        Ok(0.5 * u * u)
    }

    fn entropy(&self, u: &f64) -> Result<f64, PhysicsError> {
        Ok(0.5 * u * u)
    }

    fn entropy_flux(&self, u: &f64) -> Result<f64, PhysicsError> {
        Ok(u * u * u / 3.0)
    }

    fn max_wave_speed(&self, u: &f64) -> Result<f64, PhysicsError> {
        Ok(u.abs())
    }

    /// Symmetric bounds `(-m, m)` with `m = max(|u_l|, |u_r|)`.
    fn wave_speed_bounds(&self, u_l: &f64, u_r: &f64) -> Result<(f64, f64), PhysicsError> {
        let m = u_l.abs().max(u_r.abs());
        Ok((-m, m))
    }

    fn is_admissible(&self, u: &f64) -> bool {
        u.is_finite()
    }
}
