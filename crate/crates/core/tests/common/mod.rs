//! Oracles shared by the integration tests.

#![allow(dead_code)]

use entropy_rate_dg::{Conserved, EulerParams};
use rand::Rng;

/// Exact solution structure of an Euler Riemann problem.
#[derive(Debug, Clone, Copy)]
pub struct StarRegion {
    pub pressure: f64,
    pub velocity: f64,
    pub rho_left: f64,
    pub rho_right: f64,
    /// Shock speeds, `None` where the wave is a rarefaction.
    pub left_shock: Option<f64>,
    pub right_shock: Option<f64>,
}

/// Primitive state `(rho, v, p)`.
pub type Primitive = (f64, f64, f64);

fn wave_function(p: f64, (rho, _, pk): Primitive, gamma: f64) -> f64 {
    let c = (gamma * pk / rho).sqrt();
    if p > pk {
        let a = 2.0 / ((gamma + 1.0) * rho);
        let b = (gamma - 1.0) / (gamma + 1.0) * pk;
        (p - pk) * (a / (p + b)).sqrt()
    } else {
        2.0 * c / (gamma - 1.0) * ((p / pk).powf((gamma - 1.0) / (2.0 * gamma)) - 1.0)
    }
}

/// Star state by bisection on the monotone pressure function.
pub fn exact_riemann(left: Primitive, right: Primitive, gamma: f64) -> StarRegion {
    let g = |p: f64| wave_function(p, left, gamma) + wave_function(p, right, gamma) + right.1 - left.1;
    let (mut lo, mut hi) = (1e-12, 1.0);
    while g(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let p = 0.5 * (lo + hi);
    let u = 0.5 * (left.1 + right.1) + 0.5 * (wave_function(p, right, gamma) - wave_function(p, left, gamma));
    let ratio = (gamma - 1.0) / (gamma + 1.0);
    let star_rho = |(rho, _, pk): Primitive| {
        if p > pk {
            rho * (p / pk + ratio) / (ratio * p / pk + 1.0)
        } else {
            rho * (p / pk).powf(1.0 / gamma)
        }
    };
    let shock_factor = |pk: f64| ((gamma + 1.0) / (2.0 * gamma) * p / pk + (gamma - 1.0) / (2.0 * gamma)).sqrt();
    let sound = |(rho, _, pk): Primitive| (gamma * pk / rho).sqrt();
    StarRegion {
        pressure: p,
        velocity: u,
        rho_left: star_rho(left),
        rho_right: star_rho(right),
        left_shock: (p > left.2).then(|| left.1 - sound(left) * shock_factor(left.2)),
        right_shock: (p > right.2).then(|| right.1 + sound(right) * shock_factor(right.2)),
    }
}

/// A random admissible Euler state with density and pressure in `[0.1, 2]` and `|v| <= 1`.
pub fn random_state(rng: &mut impl Rng, air: &EulerParams) -> Conserved {
    air.from_primitive(rng.gen_range(0.1..2.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.1..2.0))
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// `sum_k w_k U(u_k)` on one cell.
pub fn cell_entropy(air: &EulerParams, weights: &[f64], cell: &[Conserved]) -> f64 {
    use entropy_rate_dg::ConservationLaw;
    weights.iter().zip(cell).map(|(w, u)| w * air.entropy(u).unwrap()).sum()
}

/// HLL flux with Davis speed bounds, a competitor of the Lax-Friedrichs flux.
pub fn hll_flux(air: &EulerParams, u_l: &Conserved, u_r: &Conserved) -> Conserved {
    use entropy_rate_dg::ConservationLaw;
    let (a_l, a_r) = air.wave_speed_bounds(u_l, u_r).unwrap();
    let (f_l, f_r) = (air.flux(u_l).unwrap(), air.flux(u_r).unwrap());
    if a_l >= 0.0 {
        f_l
    } else if a_r <= 0.0 {
        f_r
    } else {
        (f_l * a_r - f_r * a_l + (*u_r - *u_l) * (a_l * a_r)) * (1.0 / (a_r - a_l))
    }
}
