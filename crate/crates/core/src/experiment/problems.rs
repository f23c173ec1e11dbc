//! Test problems: initial data, domains, boundary treatment and exact solutions.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dg::Boundary;
use crate::error::SetupError;
use crate::physics::{Conserved, EulerParams};
use crate::predictor::TruncationPolicy;
use crate::time::Scheme;

/// Background density of the smooth wave, also the post-shock density of Shu-Osher.
pub const SMOOTH_RHO: f64 = 3.857153;
pub const SMOOTH_VELOCITY: f64 = 2.0;
pub const SMOOTH_PRESSURE: f64 = 10.33333;
/// Amplitude of the Shu-Osher entropy wave.
pub const SHU_OSHER_EPSILON: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemId {
    Shocktube1,
    Shocktube2,
    Shuosher,
    Smoothwave,
}

impl ProblemId {
    pub const ALL: [ProblemId; 4] = [
        ProblemId::Shocktube1,
        ProblemId::Shocktube2,
        ProblemId::Shuosher,
        ProblemId::Smoothwave,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProblemId::Shocktube1 => "shocktube1",
            ProblemId::Shocktube2 => "shocktube2",
            ProblemId::Shuosher => "shuosher",
            ProblemId::Smoothwave => "smoothwave",
        }
    }

    pub fn domain(self) -> (f64, f64) {
        match self {
            ProblemId::Smoothwave => (3.0 - 2.0 * PI, 3.0 + 2.0 * PI),
            _ => (0.0, 10.0),
        }
    }

    pub fn boundary(self) -> Boundary {
        match self {
            ProblemId::Smoothwave => Boundary::Periodic,
            _ => Boundary::Transmissive,
        }
    }

    pub fn default_t_end(self) -> f64 {
        match self {
            ProblemId::Shocktube1 | ProblemId::Shuosher => 1.8,
            ProblemId::Shocktube2 => 1.2,
            ProblemId::Smoothwave => 5.0,
        }
    }

    /// Location of the initial discontinuity, if any.
    pub fn jump(self) -> Option<f64> {
        match self {
            ProblemId::Shocktube1 | ProblemId::Shocktube2 => Some(5.0),
            ProblemId::Shuosher => Some(1.0),
            ProblemId::Smoothwave => None,
        }
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ProblemId::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown problem '{s}'"))
    }
}

/// Envelope of the smooth-wave perturbation. The decaying Gaussian is the
/// default; the growing variant reproduces the formula as literally printed in
/// the source and is only useful for audits (it is not periodic-compatible).
pub fn smooth_envelope(x: f64, positive_exponent: bool) -> f64 {
    let s = (x - 3.0) * (x - 3.0);
    if positive_exponent {
        s.exp()
    } else {
        (-s).exp()
    }
}

/// Full description of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemConfig {
    pub problem: ProblemId,
    pub gamma: f64,
    pub x_left: f64,
    pub x_right: f64,
    pub cells: usize,
    pub degree: usize,
    /// Overrides `0.1 / (p^2 + p)`.
    pub cfl: Option<f64>,
    /// Multiplies the CFL number (used by the time-step search).
    pub cfl_multiplier: f64,
    pub t_end: f64,
    pub boundary: Boundary,
    pub scheme: Scheme,
    pub truncation: bool,
    /// Apply the entropy-rate correction; off gives the plain DG scheme.
    pub correction: bool,
    /// Interval between samples (snapshots and exact landing times); `None` means only t_end.
    pub sample_dt: Option<f64>,
    pub positive_exponent: bool,
    /// Scales the smooth-wave perturbation; 0 leaves a uniformly moving constant state.
    #[serde(default = "unit_amplitude")]
    pub amplitude: f64,
}

fn unit_amplitude() -> f64 {
    1.0
}

impl ProblemConfig {
    pub fn new(problem: ProblemId, cells: usize, degree: usize) -> Self {
        let (x_left, x_right) = problem.domain();
        Self {
            problem,
            gamma: 1.4,
            x_left,
            x_right,
            cells,
            degree,
            cfl: None,
            cfl_multiplier: 1.0,
            t_end: problem.default_t_end(),
            boundary: problem.boundary(),
            scheme: Scheme::Ssprk43,
            truncation: true,
            correction: true,
            sample_dt: None,
            positive_exponent: false,
            amplitude: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), SetupError> {
        if self.cells < 2 {
            return Err(SetupError::InvalidMesh(format!("need at least 2 cells, got {}", self.cells)));
        }
        if self.degree < 1 {
            return Err(SetupError::InvalidDegree { degree: self.degree, min: 1 });
        }
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(SetupError::InvalidMesh(format!("t_end must be non-negative, got {}", self.t_end)));
        }
        if !positive(self.cfl_multiplier) || self.cfl.is_some_and(|c| !positive(c)) {
            return Err(SetupError::InvalidMesh("CFL number must be positive".into()));
        }
        if self.sample_dt.is_some_and(|s| !positive(s)) {
            return Err(SetupError::InvalidMesh("sample interval must be positive".into()));
        }
        if !(self.gamma > 1.0) {
            return Err(SetupError::InvalidMesh(format!("gamma must exceed 1, got {}", self.gamma)));
        }
        Ok(())
    }

    pub fn params(&self) -> EulerParams {
        EulerParams::new(self.gamma)
    }

    pub fn truncation_policy(&self) -> TruncationPolicy {
        TruncationPolicy {
            enabled: self.truncation,
            ..TruncationPolicy::default()
        }
    }

    /// Effective CFL number.
    pub fn cfl_number(&self) -> f64 {
        self.cfl.unwrap_or_else(|| crate::time::default_cfl(self.degree)) * self.cfl_multiplier
    }

    /// Primitive initial data `(rho, v, p)`.
    pub fn initial_primitive(&self, x: f64) -> (f64, f64, f64) {
        match self.problem {
            ProblemId::Shocktube1 => {
                if x < 5.0 {
                    (1.0, 0.0, 1.0)
                } else {
                    (0.125, 0.0, 0.1)
                }
            }
            ProblemId::Shocktube2 => {
                if x < 5.0 {
                    (0.445, 0.698, 3.528)
                } else {
                    (0.5, 0.0, 0.571)
                }
            }
            ProblemId::Shuosher => {
                if x < 1.0 {
                    (SMOOTH_RHO, 2.629, 10.333)
                } else {
                    (1.0 + SHU_OSHER_EPSILON * (5.0 * x).sin(), 0.0, 1.0)
                }
            }
            ProblemId::Smoothwave => (self.exact_density(x, 0.0), SMOOTH_VELOCITY, SMOOTH_PRESSURE),
        }
    }

    pub fn initial(&self, x: f64) -> Conserved {
        let (rho, v, p) = self.initial_primitive(x);
        self.params().from_primitive(rho, v, p)
    }

    /// Exact density of the smooth wave: the initial profile shifted periodically by `2t`.
    pub fn exact_density(&self, x: f64, t: f64) -> f64 {
        let length = self.x_right - self.x_left;
        let shifted = self.x_left + (x - SMOOTH_VELOCITY * t - self.x_left).rem_euclid(length);
        SMOOTH_RHO + self.amplitude * smooth_envelope(shifted, self.positive_exponent) * (2.0 * shifted).sin()
    }

    /// `(min, max)` of the initial density over the domain, sampled finely.
    pub fn initial_density_range(&self) -> (f64, f64) {
        let samples = 20_000;
        (0..=samples)
            .map(|i| {
                let x = self.x_left + (self.x_right - self.x_left) * i as f64 / samples as f64;
                self.initial_primitive(x.min(self.x_right - 1e-12)).0
            })
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r), hi.max(r)))
    }
}
