mod common;

use entropy_rate_dg::dg::{cell_means, semidiscrete_rhs, Boundary, DgState, Mesh1D};
use entropy_rate_dg::element::ReferenceElement;
use entropy_rate_dg::filter::FilterOperator;
use entropy_rate_dg::limiter::{stable_ratio, CorrectedScheme};
use entropy_rate_dg::predictor::TruncationPolicy;
use entropy_rate_dg::{ConservationLaw, Conserved, EulerParams, StateVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{cell_entropy, random_state};

const AIR: EulerParams = EulerParams { gamma: 1.4 };

#[test]
fn filter_is_a_mean_preserving_positive_average() {
    for p in 1..=7 {
        let f = FilterOperator::build(&ReferenceElement::new(p).unwrap()).unwrap();
        let w = ReferenceElement::new(p).unwrap().weights().to_vec();
        for k in 0..=p {
            let row_sum: f64 = (0..=p).map(|l| f.upsilon[(k, l)]).sum();
            assert!((row_sum - 1.0).abs() < 1e-12, "p = {p}");
            assert!((0..=p).all(|l| f.upsilon[(k, l)] >= 0.0));
            // w-weighted column sums keep the cell mean
            let col: f64 = (0..=p).map(|l| w[l] * f.upsilon[(l, k)]).sum();
            assert!((col - w[k]).abs() < 1e-10, "p = {p}");
        }
        assert!(f.t_star > 0.0);
    }
}

#[test]
fn filtering_does_not_increase_cell_entropy() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for p in [2, 3, 5, 7] {
        let e = ReferenceElement::new(p).unwrap();
        let f = FilterOperator::build(&e).unwrap();
        for _ in 0..200 {
            let cell: Vec<Conserved> = (0..=p).map(|_| random_state(&mut rng, &AIR)).collect();
            let mut out = vec![Conserved::zero(); p + 1];
            f.apply_filter(&cell, &mut out);
            let before = cell_entropy(&AIR, e.weights(), &cell);
            let after = cell_entropy(&AIR, e.weights(), &out);
            assert!(after <= before + 1e-12 * before.abs(), "p = {p}");

            // a forward Euler step of the generator at the largest admissible step is also a filter
            let dt = 1.0 / f.max_diagonal();
            f.apply_generator(&cell, &mut out);
            let stepped: Vec<Conserved> = cell.iter().zip(&out).map(|(u, g)| u.add_scaled(dt, *g)).collect();
            assert!(stepped.iter().all(|u| AIR.is_admissible(u)));
            assert!(cell_entropy(&AIR, e.weights(), &stepped) <= before + 1e-12 * before.abs());
        }
    }
}

#[test]
fn generator_direction_dissipates_entropy() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let e = ReferenceElement::new(4).unwrap();
    let f = FilterOperator::build(&e).unwrap();
    for _ in 0..200 {
        let cell: Vec<Conserved> = (0..5).map(|_| random_state(&mut rng, &AIR)).collect();
        let mut g = vec![Conserved::zero(); 5];
        f.apply_generator(&cell, &mut g);
        let rate: f64 = (0..5)
            .map(|j| e.weights()[j] * AIR.entropy_variables(&cell[j]).unwrap().dot(&g[j]))
            .sum();
        assert!(rate <= 1e-12);
    }
}

#[test]
fn stable_ratio_is_a_regularised_clipped_quotient() {
    assert!((stable_ratio(-1.0, -2.0, 1e-8) - 0.5).abs() < 1e-15);
    assert_eq!(stable_ratio(1.0, -2.0, 1e-8), 0.0);
    // a vanishing denominator gives a vanishing ratio, not a blow-up
    assert!((stable_ratio(-1.0, -1e-12, 1e-4) - 1e-4).abs() < 1e-12);
}

fn sod_state(p: usize, n: usize) -> (CorrectedScheme, DgState) {
    let scheme = CorrectedScheme::new(p, AIR, TruncationPolicy::default()).unwrap();
    let mesh = Mesh1D::new(n, 0.0, 1.0, Boundary::Transmissive).unwrap();
    let state = DgState::interpolate(mesh, &scheme.element, |x| {
        // smeared Sod profile so the cells are not piecewise constant
        let s = 0.5 * (1.0 + ((x - 0.5) / 0.03).tanh());
        AIR.from_primitive(1.0 - 0.875 * s, 0.0, 1.0 - 0.9 * s)
    });
    (scheme, state)
}

#[test]
fn correction_keeps_cell_means_of_the_rhs() {
    for p in [3, 7] {
        let (scheme, state) = sod_state(p, 20);
        let plain = semidiscrete_rhs(&state, &scheme.element, &AIR).unwrap();
        let (corrected, report) = scheme.rhs(&state, 1e6).unwrap();
        assert!(report.lambda_total.iter().any(|&l| l > 0.0), "p = {p}");
        let mean = |d: Vec<Conserved>| cell_means(&DgState::new(state.mesh.clone(), p, d, 0.0), &scheme.element);
        for (a, b) in mean(plain.dudt).iter().zip(&mean(corrected.dudt)) {
            assert!((*a - *b).norm() < 1e-9 * (1.0 + a.norm()));
        }
    }
}

#[test]
fn uncapped_correction_meets_the_cell_and_face_targets() {
    let (scheme, state) = sod_state(3, 20);
    let (_, r) = scheme.rhs(&state, f64::INFINITY).unwrap();
    assert_eq!(r.capped_cells(), 0);
    assert!(r.violation_pos() < 1e-8);
    for i in 1..20 {
        // the two neighbours dissipate at least the predicted rate
        let pair = r.residual[i - 1] + r.residual[i];
        let tol = 1e-8 * (r.scale[i - 1] + r.scale[i]);
        assert!(pair <= r.sigma[i] + tol, "face {i}");
    }
    assert!(r.lambda_er.iter().all(|&l| l >= 0.0) && r.lambda_ed.iter().all(|&l| l >= 0.0));
}

#[test]
fn cap_limits_the_correction() {
    let (scheme, state) = sod_state(3, 20);
    let (_, r) = scheme.rhs(&state, 1e-3).unwrap();
    assert!(r.capped_cells() > 0);
    assert!(r.lambda_total.iter().all(|&l| l <= 1e-3));
}

#[test]
fn disabled_correction_is_the_plain_operator() {
    let (mut scheme, state) = sod_state(3, 10);
    scheme.correction_enabled = false;
    let plain = semidiscrete_rhs(&state, &scheme.element, &AIR).unwrap();
    let (rhs, report) = scheme.rhs(&state, 1e6).unwrap();
    assert_eq!(rhs.dudt, plain.dudt);
    assert!(report.lambda_total.iter().all(|&l| l == 0.0));
}

#[test]
fn generator_dissipates_the_square_entropy() {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for p in 1..=7 {
        let e = ReferenceElement::new(p).unwrap();
        let f = FilterOperator::build(&e).unwrap();
        for _ in 0..1000 {
            let u: Vec<f64> = (0..=p).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut g = vec![0.0; p + 1];
            f.apply_generator(&u, &mut g);
            let rate: f64 = (0..=p).map(|j| e.weights()[j] * 2.0 * u[j] * g[j]).sum();
            assert!(rate < 0.0, "p = {p}: {rate}");
        }
    }
}
