//! Finite-difference oracles for both PDE solvers. The oracles integrate the
//! PDEs directly by explicit stepping and share no machinery with the
//! Gauss-Hermite recursions they check.

use spinlab_core::gtbound::{finite_difference_psi0, solve_psi, PsiGridParams};
use spinlab_core::mixing::{CorrKind, MixingPair, StepGamma};
use spinlab_core::parisi::{
    finite_difference_phi0, parisi_correction, parisi_value, solve_phi, zero_gamma_value,
    PdeGridParams,
};

fn pure2() -> MixingPair {
    MixingPair::pure(2, 0.5, CorrKind::Scaled).unwrap()
}

#[test]
fn fd_oracle_reproduces_zero_gamma_closed_form() {
    // Calibrates the oracle itself before it is used as a reference.
    let diff = (finite_difference_phi0(&pure2(), &StepGamma::zero(), 600).unwrap()
        - zero_gamma_value(&pure2()))
    .abs();
    assert!(diff <= 5e-5, "oracle self-check diff {diff}");
}

#[test]
fn one_step_gamma_matches_fd_oracle() {
    let m = pure2();
    let gamma = StepGamma::constant(1.0).unwrap();
    let gh = solve_phi(&m, &gamma, &PdeGridParams::default())
        .unwrap()
        .value_at_origin();
    let fd = finite_difference_phi0(&m, &gamma, 600).unwrap();
    let diff = (gh - fd).abs();
    assert!(diff <= 1e-4, "GH {gh} vs FD {fd} (diff {diff})");
}

#[test]
fn parisi_value_two_routes_on_random_two_step_gammas() {
    let m = pure2();
    let gammas = [
        StepGamma::new(vec![0.35, 1.0], vec![0.4, 1.3]).unwrap(),
        StepGamma::new(vec![0.6, 1.0], vec![0.2, 0.9]).unwrap(),
        StepGamma::new(vec![0.5, 1.0], vec![0.7, 2.1]).unwrap(),
    ];
    for gamma in gammas {
        let via_gh = parisi_value(&m, &gamma, &PdeGridParams::default()).unwrap();
        let via_fd = finite_difference_phi0(&m, &gamma, 600).unwrap() - parisi_correction(&m, &gamma);
        let diff = (via_gh - via_fd).abs();
        assert!(diff <= 1e-4, "γ {gamma:?}: {via_gh} vs {via_fd}");
    }
}

#[test]
fn psi_matches_2d_fd_oracle() {
    // pure K=2, scaled t = 0.5, one-step γ, q = 0.6.
    let m = pure2();
    let gamma = StepGamma::constant(0.8).unwrap();
    let q = 0.6;
    let gh = solve_psi(&m, &gamma, q, &PsiGridParams::default())
        .unwrap()
        .value_at_origin();
    let fd = finite_difference_psi0(&m, &gamma, q, 192).unwrap();
    let diff = (gh - fd).abs();
    assert!(diff <= 5e-4, "GH {gh} vs FD {fd} (diff {diff})");
}
