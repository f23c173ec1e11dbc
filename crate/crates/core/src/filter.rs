//! Positive conservative filter on one element, obtained by running the heat
//! equation `u_t = (alpha(x) u_x)_x` on [-1, 1] for the shortest time that makes
//! its solution operator entrywise non-negative.
//!
//! The conductivity `alpha` vanishes at both ends, so the flow conserves the
//! quadrature mean and needs no boundary condition. In the nodal basis the flow is
//! `M u' = -Q u` with `Q_kl = int phi_k' alpha phi_l'`, and its solution operator
//! `C(t) = exp(-t M^-1 Q)` is computed from the symmetric eigenproblem of
//! `M^-1/2 Q M^-1/2`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::element::{gauss_legendre, ReferenceElement};
use crate::error::SetupError;
use crate::physics::StateVector;

/// Entries above this count as non-negative.
pub const POSITIVITY_TOL: f64 = -1e-13;
const BISECTION_REL_TOL: f64 = 1e-6;

/// The standard mollifier `exp(1 - 1/(1 - x^2))`, zero outside (-1, 1).
pub fn mollifier_alpha(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - x * x)).exp()
    }
}

/// Conductivity matrix `Q_kl = int phi_k' alpha phi_l'` with a `4(p+1)`-point Gauss rule.
///
/// The quadrature is not exact for the mollifier, so constants are pushed back
/// into the kernel by centring on both sides, `Q <- P Q P` with `P = I - 11^T/(p+1)`,
/// which keeps `Q` symmetric.
pub fn assemble_q(element: &ReferenceElement) -> DMatrix<f64> {
    let n = element.num_nodes();
    let (xq, wq) = gauss_legendre(4 * n);
    let mut q = DMatrix::zeros(n, n);
    for (&x, &w) in xq.iter().zip(&wq) {
        let a = w * mollifier_alpha(x);
        let d = element.basis_derivative_at(x);
        for k in 0..n {
            for l in 0..n {
                q[(k, l)] += a * d[k] * d[l];
            }
        }
    }
    let centre = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 } - 1.0 / n as f64);
    let q = &centre * q * &centre;
    (&q + q.transpose()) * 0.5
}

/// Eigen-decomposition of `-M^-1 Q` through its symmetric similarity transform.
#[derive(Debug, Clone)]
pub struct HeatSemigroup {
    sqrt_w: DVector<f64>,
    /// Eigenvalues of `M^-1/2 Q M^-1/2`, ascending (first is the zero mode).
    lambda: DVector<f64>,
    vectors: DMatrix<f64>,
}

impl HeatSemigroup {
    pub fn new(element: &ReferenceElement, q: &DMatrix<f64>) -> Self {
        let sqrt_w = DVector::from_iterator(element.num_nodes(), element.weights().iter().map(|w| w.sqrt()));
        let a = DMatrix::from_fn(q.nrows(), q.ncols(), |i, j| q[(i, j)] / (sqrt_w[i] * sqrt_w[j]));
        let eig = SymmetricEigen::new(a);
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let lambda = DVector::from_iterator(order.len(), order.iter().map(|&i| eig.eigenvalues[i]));
        let vectors = eig.eigenvectors.select_columns(&order);
        Self { sqrt_w, lambda, vectors }
    }

    /// Eigenvalues of `-M^-1 Q`, descending from the zero mode.
    pub fn generator_eigenvalues(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.lambda.iter().map(|l| -l).collect();
        out[0] = 0.0;
        out
    }

    /// Smallest non-zero decay rate `|lambda_2|`.
    pub fn spectral_gap(&self) -> f64 {
        self.lambda[1]
    }

    /// `M^-1/2 W diag(g(lambda)) W^T M^1/2`.
    fn spectral_map(&self, g: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let n = self.lambda.len();
        let mut scaled = self.vectors.clone();
        for (c, mut col) in scaled.column_iter_mut().enumerate() {
            // the zero mode is exactly a constant, pin it so conservation is not polluted
            let lam = if c == 0 { 0.0 } else { self.lambda[c] };
            col *= g(lam);
        }
        let core = scaled * self.vectors.transpose();
        DMatrix::from_fn(n, n, |i, j| core[(i, j)] * self.sqrt_w[j] / self.sqrt_w[i])
    }

    /// `C(t) = exp(-t M^-1 Q)`.
    pub fn at(&self, t: f64) -> DMatrix<f64> {
        self.spectral_map(|lam| (-t * lam).exp())
    }
}

/// `C(t)` for a given conductivity matrix.
pub fn heat_semigroup(element: &ReferenceElement, q: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    HeatSemigroup::new(element, q).at(t)
}

fn min_entry(m: &DMatrix<f64>) -> f64 {
    m.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Result of the positivity-time search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositiveTime {
    pub t_star: f64,
    pub min_entry: f64,
    /// `C(t_star / 2)` still has an entry below the tolerance.
    pub half_time_negative: bool,
}

/// Bisection for the smallest `t` with `C(t)` entrywise non-negative on `[0, 64/|lambda_2|]`.
pub fn find_positive_time(semigroup: &HeatSemigroup) -> Result<PositiveTime, SetupError> {
    let upper = 64.0 / semigroup.spectral_gap();
    let positive = |t: f64| min_entry(&semigroup.at(t)) >= POSITIVITY_TOL;
    if !positive(upper) {
        return Err(SetupError::BracketFailure {
            upper,
            min_entry: min_entry(&semigroup.at(upper)),
        });
    }
    // t = 0 is the identity, which is a filter but not a useful one; it counts as "not yet"
    let (mut lo, mut hi) = (0.0, upper);
    let floor = BISECTION_REL_TOL * upper;
    while hi - lo > (BISECTION_REL_TOL * hi).max(floor * BISECTION_REL_TOL) && hi > floor {
        let mid = 0.5 * (lo + hi);
        if positive(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(PositiveTime {
        t_star: hi,
        min_entry: min_entry(&semigroup.at(hi)),
        half_time_negative: !positive(0.5 * hi),
    })
}

/// Filter `Upsilon = C(t*)` and generator `G = (Upsilon - I)/t*` on one element.
#[derive(Debug, Clone)]
pub struct FilterOperator {
    pub generator: DMatrix<f64>,
    pub upsilon: DMatrix<f64>,
    pub t_star: f64,
    /// Eigenvalues of `-M^-1 Q`, descending, the first being 0.
    pub eigenvalues: Vec<f64>,
    /// Upper bound on the 2-norm of `G`.
    pub spectral_radius: f64,
    pub half_time_negative: bool,
    weights: Vec<f64>,
}

impl FilterOperator {
    pub fn build(element: &ReferenceElement) -> Result<Self, SetupError> {
        let q = assemble_q(element);
        let semigroup = HeatSemigroup::new(element, &q);
        let found = find_positive_time(&semigroup)?;
        let t = found.t_star;
        let n = element.num_nodes();

        // (C(t) - I)/t evaluated spectrally; forming the difference of matrices
        // loses everything when t* sits at the bisection floor
        let mut generator = semigroup.spectral_map(|lam| (-t * lam).exp_m1() / t);
        // clip round-off negatives of C(t*) and restore unit row sums of the filter
        for k in 0..n {
            let mut off = 0.0;
            for l in (0..n).filter(|&l| l != k) {
                generator[(k, l)] = generator[(k, l)].max(0.0);
                off += generator[(k, l)];
            }
            generator[(k, k)] = -off;
        }
        let upsilon = DMatrix::identity(n, n) + &generator * t;

        let w = element.weights();
        let (w_min, w_max) = w.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
        let decay = semigroup
            .lambda
            .iter()
            .skip(1)
            .map(|&l| (1.0 - (-t * l).exp()) / t)
            .fold(0.0, f64::max);
        // slack covers the clip-and-renormalise perturbation
        let spectral_radius = (w_max / w_min).sqrt() * decay * (1.0 + 1e-9) + 1e-12 / t;

        Ok(Self {
            generator,
            upsilon,
            t_star: t,
            eigenvalues: semigroup.generator_eigenvalues(),
            spectral_radius,
            half_time_negative: found.half_time_negative,
            weights: w.to_vec(),
        })
    }

    pub fn degree(&self) -> usize {
        self.weights.len() - 1
    }

    /// `max_l |G_ll|`; forward Euler with `dt` at most its inverse keeps `I + dt G` a filter.
    pub fn max_diagonal(&self) -> f64 {
        self.generator.diagonal().iter().fold(0.0, |m, g| m.max(g.abs()))
    }

    fn apply_matrix<S: StateVector>(m: &DMatrix<f64>, cell: &[S], out: &mut [S]) {
        for (k, o) in out.iter_mut().enumerate() {
            *o = cell
                .iter()
                .enumerate()
                .fold(S::zero(), |acc, (l, u)| acc.add_scaled(m[(k, l)], *u));
        }
    }

    /// `G u` componentwise on one cell.
    pub fn apply_generator<S: StateVector>(&self, cell: &[S], out: &mut [S]) {
        Self::apply_matrix(&self.generator, cell, out);
    }

    /// `Upsilon u` componentwise on one cell.
    pub fn apply_filter<S: StateVector>(&self, cell: &[S], out: &mut [S]) {
        Self::apply_matrix(&self.upsilon, cell, out);
    }

    pub fn dump(&self) -> FilterDump {
        let rows = |m: &DMatrix<f64>| m.row_iter().map(|r| r.iter().copied().collect()).collect();
        FilterDump {
            degree: self.degree(),
            t_star: self.t_star,
            eigenvalues: self.eigenvalues.clone(),
            spectral_radius: self.spectral_radius,
            half_time_negative: self.half_time_negative,
            generator: rows(&self.generator),
            upsilon: rows(&self.upsilon),
        }
    }
}

/// Serialisable snapshot of a [`FilterOperator`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterDump {
    pub degree: usize,
    pub t_star: f64,
    pub eigenvalues: Vec<f64>,
    pub spectral_radius: f64,
    pub half_time_negative: bool,
    pub generator: Vec<Vec<f64>>,
    pub upsilon: Vec<Vec<f64>>,
}
