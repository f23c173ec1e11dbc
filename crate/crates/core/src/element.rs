//! Reference element on [-1, 1]: Legendre-Gauss-Lobatto collocation with a
//! lumped (diagonal) mass matrix, plus the nodal/modal Legendre transform.

use nalgebra::{DMatrix, DVector};

use crate::error::SetupError;

const NEWTON_TOL: f64 = 1e-14;
const NODE_RESIDUAL_TOL: f64 = 1e-13;
const NEWTON_MAX_ITER: usize = 100;

/// Legendre polynomials `P_0..=P_n` at `x` together with their derivatives.
pub fn legendre_with_derivatives(n: usize, x: f64) -> (Vec<f64>, Vec<f64>) {
    let mut p = vec![0.0; n + 1];
    let mut dp = vec![0.0; n + 1];
    p[0] = 1.0;
    if n >= 1 {
        p[1] = x;
        dp[1] = 1.0;
    }
    for k in 2..=n {
        let kf = k as f64;
        p[k] = ((2.0 * kf - 1.0) * x * p[k - 1] - (kf - 1.0) * p[k - 2]) / kf;
        // P'_k = P'_{k-2} + (2k - 1) P_{k-1}
        dp[k] = dp[k - 2] + (2.0 * kf - 1.0) * p[k - 1];
    }
    (p, dp)
}

/// `P_n(x)` alone.
pub fn legendre(n: usize, x: f64) -> f64 {
    legendre_with_derivatives(n, x).0[n]
}

/// Gauss-Legendre rule with `n` points on [-1, 1], nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Tricomi-type initial guess, descending order
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..NEWTON_MAX_ITER {
            let (p, dp) = legendre_with_derivatives(n, x);
            let dx = p[n] / dp[n];
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivatives(n, x);
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp[n] * dp[n]);
    }
    (nodes, weights)
}

/// Single-cell polynomial infrastructure for degree `p` on [-1, 1].
#[derive(Debug, Clone)]
pub struct ReferenceElement {
    degree: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    mass: DMatrix<f64>,
    stiffness: DMatrix<f64>,
    diff: DMatrix<f64>,
    vandermonde: DMatrix<f64>,
    vandermonde_inv: DMatrix<f64>,
}

impl ReferenceElement {
    /// LGL collocation element of degree `p >= 1`.
    pub fn new(p: usize) -> Result<Self, SetupError> {
        if p < 1 {
            return Err(SetupError::InvalidDegree { degree: p, min: 1 });
        }
        let n = p + 1;
        let nodes = lgl_nodes(p)?;

        let p_at_nodes: Vec<f64> = nodes.iter().map(|&x| legendre(p, x)).collect();
        let pf = p as f64;
        let weights: Vec<f64> = p_at_nodes
            .iter()
            .map(|&pp| 2.0 / (pf * (pf + 1.0) * pp * pp))
            .collect();

        let mut diff = DMatrix::zeros(n, n);
        for i in 0..n {
            let mut row_sum = 0.0;
            for j in 0..n {
                if i != j {
                    let d = p_at_nodes[i] / (p_at_nodes[j] * (nodes[i] - nodes[j]));
                    diff[(i, j)] = d;
                    row_sum += d;
                }
            }
            diff[(i, i)] = -row_sum;
        }

        let mass = DMatrix::from_diagonal(&DVector::from_vec(weights.clone()));
        // S_kl = <phi_k', phi_l> evaluated with the nodal quadrature
        let mut stiffness = DMatrix::from_fn(n, n, |k, l| weights[l] * diff[(l, k)]);
        // pin the row sums to the boundary operator diag(-1, 0, .., 0, 1)
        for k in 0..n {
            let boundary = if k == 0 { -1.0 } else if k == p { 1.0 } else { 0.0 };
            let off: f64 = (0..n).filter(|&l| l != k).map(|l| stiffness[(k, l)]).sum();
            stiffness[(k, k)] = boundary - off;
        }

        let vandermonde = DMatrix::from_fn(n, n, |i, j| legendre(j, nodes[i]));
        let vandermonde_inv = vandermonde
            .clone()
            .try_inverse()
            .expect("Legendre Vandermonde on distinct nodes is invertible");

        Ok(Self {
            degree: p,
            nodes,
            weights,
            mass,
            stiffness,
            diff,
            vandermonde,
            vandermonde_inv,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn num_nodes(&self) -> usize {
        self.degree + 1
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mass(&self) -> &DMatrix<f64> {
        &self.mass
    }

    pub fn stiffness(&self) -> &DMatrix<f64> {
        &self.stiffness
    }

    pub fn differentiation(&self) -> &DMatrix<f64> {
        &self.diff
    }

    /// Nodal values of the Legendre basis, `V_ij = P_j(xi_i)`.
    pub fn vandermonde(&self) -> &DMatrix<f64> {
        &self.vandermonde
    }

    pub fn vandermonde_inv(&self) -> &DMatrix<f64> {
        &self.vandermonde_inv
    }

    /// Legendre coefficients of the interpolant through `nodal`.
    pub fn to_modal(&self, nodal: &[f64]) -> Vec<f64> {
        mat_vec(&self.vandermonde_inv, nodal)
    }

    pub fn to_nodal(&self, modal: &[f64]) -> Vec<f64> {
        mat_vec(&self.vandermonde, modal)
    }

    /// Nodal values of the L2 projection onto polynomials of degree `<= target_degree`.
    pub fn modal_truncate(&self, nodal: &[f64], target_degree: usize) -> Result<Vec<f64>, SetupError> {
        if target_degree > self.degree {
            return Err(SetupError::InvalidTargetDegree {
                target: target_degree,
                degree: self.degree,
            });
        }
        let mut modal = self.to_modal(nodal);
        modal[target_degree + 1..].iter_mut().for_each(|c| *c = 0.0);
        Ok(self.to_nodal(&modal))
    }

    /// Matrix of the truncation projector, `V diag(1,..,1,0,..) V^-1`.
    pub fn truncation_matrix(&self, target_degree: usize) -> Result<DMatrix<f64>, SetupError> {
        if target_degree > self.degree {
            return Err(SetupError::InvalidTargetDegree {
                target: target_degree,
                degree: self.degree,
            });
        }
        let n = self.num_nodes();
        let keep = DMatrix::from_fn(n, n, |i, j| if i == j && i <= target_degree { 1.0 } else { 0.0 });
        Ok(&self.vandermonde * keep * &self.vandermonde_inv)
    }

    /// Values of the nodal (Lagrange) basis functions at `x`.
    pub fn basis_at(&self, x: f64) -> Vec<f64> {
        let (p, _) = legendre_with_derivatives(self.degree, x);
        (0..self.num_nodes())
            .map(|k| (0..self.num_nodes()).map(|j| self.vandermonde_inv[(j, k)] * p[j]).sum())
            .collect()
    }

    /// Derivatives of the nodal basis functions at `x`.
    pub fn basis_derivative_at(&self, x: f64) -> Vec<f64> {
        let (_, dp) = legendre_with_derivatives(self.degree, x);
        (0..self.num_nodes())
            .map(|k| (0..self.num_nodes()).map(|j| self.vandermonde_inv[(j, k)] * dp[j]).sum())
            .collect()
    }

    /// Evaluates the interpolant through `nodal` at reference coordinate `x`.
    pub fn evaluate(&self, nodal: &[f64], x: f64) -> f64 {
        self.basis_at(x).iter().zip(nodal).map(|(b, u)| b * u).sum()
    }
}

fn mat_vec(m: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum())
        .collect()
}

/// LGL nodes: the roots of `(1 - x^2) P_p'(x)`, ascending.
fn lgl_nodes(p: usize) -> Result<Vec<f64>, SetupError> {
    let n = p + 1;
    let mut x: Vec<f64> = (0..n)
        .map(|j| -(std::f64::consts::PI * j as f64 / p as f64).cos())
        .collect();
    let pf = p as f64;
    for _ in 0..NEWTON_MAX_ITER {
        let mut max_dx: f64 = 0.0;
        for xi in x.iter_mut() {
            let (lp, _) = legendre_with_derivatives(p, *xi);
            let lp_m1 = if p >= 1 { lp[p - 1] } else { 0.0 };
            // Newton step on x P_p - P_{p-1}, which shares its roots with (1 - x^2) P_p'
            let dx = (*xi * lp[p] - lp_m1) / ((pf + 1.0) * lp[p]);
            *xi -= dx;
            max_dx = max_dx.max(dx.abs());
        }
        if max_dx < NEWTON_TOL {
            break;
        }
    }
    x[0] = -1.0;
    x[p] = 1.0;
    // interior nodes are symmetric about zero
    for j in 0..n / 2 {
        let m = 0.5 * (x[n - 1 - j] - x[j]);
        x[j] = -m;
        x[n - 1 - j] = m;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }

    let residual = x[1..p]
        .iter()
        .map(|&xi| legendre_with_derivatives(p, xi).1[p].abs())
        .fold(0.0, f64::max);
    if residual >= NODE_RESIDUAL_TOL * (pf * pf).max(1.0) {
        return Err(SetupError::NodesNotConverged { residual });
    }
    Ok(x)
}
