use entropy_rate_dg::dg::{discrete_total_entropy, llf_flux, numerical_entropy_flux, semidiscrete_rhs, total_conserved, Boundary, DgState, Mesh1D};
use entropy_rate_dg::element::ReferenceElement;
use entropy_rate_dg::{ConservationLaw, Conserved, EulerParams, StateVector};
use proptest::prelude::*;

const AIR: EulerParams = EulerParams { gamma: 1.4 };

fn wave(x: f64) -> Conserved {
    AIR.from_primitive(1.0 + 0.3 * (2.0 * std::f64::consts::PI * x).sin(), 0.5, 1.0)
}

#[test]
fn free_stream_is_preserved() {
    for p in [1, 3, 7] {
        let e = ReferenceElement::new(p).unwrap();
        for boundary in [Boundary::Periodic, Boundary::Transmissive] {
            let mesh = Mesh1D::new(8, -1.0, 2.0, boundary).unwrap();
            let u = AIR.from_primitive(0.8, -0.4, 1.7);
            let state = DgState::interpolate(mesh, &e, |_| u);
            let rhs = semidiscrete_rhs(&state, &e, &AIR).unwrap();
            assert!(rhs.dudt.iter().all(|d| d.norm() < 1e-12), "p = {p}, {boundary:?}");
        }
    }
}

#[test]
fn periodic_rhs_conserves_mass_momentum_energy() {
    for p in [2, 3, 5] {
        let e = ReferenceElement::new(p).unwrap();
        let mesh = Mesh1D::new(12, 0.0, 1.0, Boundary::Periodic).unwrap();
        let state = DgState::interpolate(mesh, &e, wave);
        let rhs = semidiscrete_rhs(&state, &e, &AIR).unwrap();
        let rate = total_conserved(&DgState::new(state.mesh.clone(), p, rhs.dudt, 0.0), &e);
        assert!(rate.norm() < 1e-12, "p = {p}: {rate:?}");
    }
}

#[test]
fn converges_to_the_exact_time_derivative() {
    // with v and p constant the density is advected: rho_t = -v rho_x
    let drho = |x: f64| -0.5 * 0.3 * 2.0 * std::f64::consts::PI * (2.0 * std::f64::consts::PI * x).cos();
    let e = ReferenceElement::new(3).unwrap();
    let error = |n: usize| {
        let state = DgState::interpolate(Mesh1D::new(n, 0.0, 1.0, Boundary::Periodic).unwrap(), &e, wave);
        let rhs = semidiscrete_rhs(&state, &e, &AIR).unwrap();
        state
            .node_positions(&e)
            .iter()
            .zip(&rhs.dudt)
            .map(|(&x, d)| (d.rho - drho(x)).abs())
            .fold(0.0, f64::max)
    };
    let (coarse, fine) = (error(10), error(20));
    assert!(fine < 1e-3);
    assert!((coarse / fine).log2() > 2.5, "{coarse} {fine}");
}

#[test]
fn total_entropy_of_a_constant_state() {
    let e = ReferenceElement::new(4).unwrap();
    let u = AIR.from_primitive(1.2, 0.1, 0.9);
    let state = DgState::interpolate(Mesh1D::new(5, 0.0, 2.5, Boundary::Periodic).unwrap(), &e, |_| u);
    let total = discrete_total_entropy(&state, &e, &AIR).unwrap();
    assert!((total - 2.5 * AIR.entropy(&u).unwrap()).abs() < 1e-13);
}

#[test]
fn interpolation_keeps_a_face_aligned_jump_sharp() {
    let e = ReferenceElement::new(3).unwrap();
    let mesh = Mesh1D::new(4, 0.0, 1.0, Boundary::Transmissive).unwrap();
    let state = DgState::interpolate(mesh, &e, |x| AIR.from_primitive(if x < 0.5 { 1.0 } else { 0.125 }, 0.0, 1.0));
    assert!(state.cell(1).iter().all(|u| u.rho == 1.0));
    assert!(state.cell(2).iter().all(|u| u.rho == 0.125));
}

#[test]
fn transmissive_ghost_is_the_cell_mean() {
    let e = ReferenceElement::new(3).unwrap();
    let state = DgState::interpolate(Mesh1D::new(4, 0.0, 1.0, Boundary::Transmissive).unwrap(), &e, wave);
    let (ghost, inner) = state.interface_states(0, e.weights());
    assert_eq!(inner, state.cell(0)[0]);
    assert!((ghost - state.cell_mean(0, e.weights())).norm() < 1e-15);
}

fn state() -> impl Strategy<Value = Conserved> {
    (0.1f64..3.0, -2.0f64..2.0, 0.1f64..3.0).prop_map(|(rho, v, p)| AIR.from_primitive(rho, v, p))
}

proptest! {
    #[test]
    fn llf_flux_is_consistent(u in state()) {
        let f = llf_flux(&u, &u, &AIR).unwrap();
        prop_assert!((f - AIR.flux(&u).unwrap()).norm() < 1e-12 * (1.0 + f.norm()));
        let q = numerical_entropy_flux(&u, &u, &AIR).unwrap();
        prop_assert!((q - AIR.entropy_flux(&u).unwrap()).abs() < 1e-12 * (1.0 + q.abs()));
    }

    #[test]
    fn llf_flux_is_entropy_stable(ul in state(), ur in state()) {
        // Tadmor's condition: [w] . f* - [psi] <= 0, psi = w . f - F
        let f = llf_flux(&ul, &ur, &AIR).unwrap();
        let psi = |u: &Conserved| AIR.entropy_variables(u).unwrap().dot(&AIR.flux(u).unwrap()) - AIR.entropy_flux(u).unwrap();
        let dw = AIR.entropy_variables(&ur).unwrap() - AIR.entropy_variables(&ul).unwrap();
        let production = dw.dot(&f) - (psi(&ur) - psi(&ul));
        prop_assert!(production <= 1e-10 * (1.0 + f.norm()));
    }
}

#[test]
fn transmissive_rhs_telescopes_to_the_boundary_fluxes() {
    let e = ReferenceElement::new(3).unwrap();
    let mesh = Mesh1D::new(9, 0.0, 1.0, Boundary::Transmissive).unwrap();
    let state = DgState::interpolate(mesh, &e, wave);
    let rhs = semidiscrete_rhs(&state, &e, &AIR).unwrap();
    let rate = total_conserved(&DgState::new(state.mesh.clone(), 3, rhs.dudt, 0.0), &e);
    let boundary = rhs.fluxes[0] - rhs.fluxes[9];
    assert!((rate - boundary).norm() < 1e-12, "{rate:?} vs {boundary:?}");
}

#[test]
fn total_entropy_agrees_with_an_oversampled_quadrature() {
    let (xq, wq) = entropy_rate_dg::element::gauss_legendre(40);
    let p = 3;
    let e = ReferenceElement::new(p).unwrap();
    let gap = |n: usize| {
        let state = DgState::interpolate(Mesh1D::new(n, 0.0, 1.0, Boundary::Periodic).unwrap(), &e, wave);
        let mut fine = 0.0;
        for k in 0..n {
            let cell = state.cell(k);
            let comp = |f: fn(&Conserved) -> f64| cell.iter().map(f).collect::<Vec<f64>>();
            let (r, m, en) = (comp(|u| u.rho), comp(|u| u.rho_v), comp(|u| u.energy));
            for (&x, &w) in xq.iter().zip(&wq) {
                let u = Conserved::new(e.evaluate(&r, x), e.evaluate(&m, x), e.evaluate(&en, x));
                fine += 0.5 * state.mesh.dx() * w * AIR.entropy(&u).unwrap();
            }
        }
        (discrete_total_entropy(&state, &e, &AIR).unwrap() - fine).abs()
    };
    let (coarse, finer) = (gap(8), gap(16));
    assert!(finer < 1e-6);
    assert!((coarse / finer).log2() >= (p + 1) as f64 - 0.5, "{coarse} {finer}");
}

#[test]
fn total_entropy_is_additive_over_disjoint_meshes() {
    let e = ReferenceElement::new(2).unwrap();
    let total = |a: f64, b: f64, n: usize| {
        let s = DgState::interpolate(Mesh1D::new(n, a, b, Boundary::Transmissive).unwrap(), &e, wave);
        discrete_total_entropy(&s, &e, &AIR).unwrap()
    };
    assert!((total(0.0, 1.0, 10) - total(0.0, 0.4, 4) - total(0.4, 1.0, 6)).abs() < 1e-13);
}
