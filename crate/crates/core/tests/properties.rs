mod common;

use holistic::catalogue::AnalyticModel;
use holistic::subgrid::extract::analytic_series;
use holistic::{GridField, ModelSpec, Truncation};
use proptest::prelude::*;

const CASES: u32 = 32;

#[test]
fn stencils_annihilate_constants() {
    common::constants_annihilated(CASES).unwrap();
}

#[test]
fn odd_symmetry_is_preserved() {
    common::odd_symmetry_preserved(CASES).unwrap();
}

#[test]
fn rhs_is_sign_equivariant() {
    common::rhs_sign_equivariant(CASES).unwrap();
}

#[test]
fn g_is_sign_equivariant() {
    common::g_sign_equivariant(CASES).unwrap();
}

#[test]
fn amplitude_condition_holds() {
    common::amplitude_condition(1).unwrap();
}

#[test]
fn constructions_leave_zero_residuals() {
    common::zero_residuals(1).unwrap();
}

#[test]
fn constant_residual_gives_negated_g() {
    common::constant_residual_correction(CASES).unwrap();
}

#[test]
fn higher_model_truncates_to_lower() {
    for (hi, lo, t) in [
        (AnalyticModel::HolisticG4A4, AnalyticModel::HolisticG3A3, Truncation::total(3)),
        (AnalyticModel::HolisticG3A3, AnalyticModel::HolisticG2A2, Truncation::rect(2, 2)),
    ] {
        assert_eq!(
            analytic_series::<f64>(hi, t),
            analytic_series::<f64>(lo, t),
            "{} vs {}",
            hi.name(),
            lo.name()
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: CASES, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn rhs_commutes_with_grid_shifts(u in common::periodic_field(), si in 0isize..8, sj in 0isize..8, alpha in 0.0f64..8.0) {
        let mut shifted = GridField::zeros(u.grid);
        let idx: Vec<_> = shifted.indices().collect();
        for &(k, i, j) in &idx {
            shifted.values_mut()[k] = u.at(i + si, j + sj);
        }
        for model in AnalyticModel::ALL {
            let spec = ModelSpec::analytic(model, 1.0, alpha, u.grid);
            let a = spec.rhs(&u).unwrap();
            let b = spec.rhs(&shifted).unwrap();
            for &(k, i, j) in &idx {
                prop_assert!((b.values()[k] - a.at(i + si, j + sj)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn jacobian_is_the_derivative_of_rhs(u in common::periodic_field(), alpha in 0.0f64..8.0) {
        for model in AnalyticModel::ALL {
            let spec = ModelSpec::analytic(model, 1.0, alpha, u.grid);
            let j = spec.jacobian(&u).unwrap();
            let fd = spec.jacobian_fd(&u).unwrap();
            let scale = j.amax().max(1.0);
            prop_assert!((j - fd).amax() < 1e-5 * scale);
        }
    }

    #[test]
    fn uniform_states_follow_the_reaction(c in -1.5f64..1.5, alpha in -3.0f64..8.0, gamma in 0.0f64..1.0) {
        let grid = holistic::MacroGrid::new(0.4, 6, 6, holistic::Symmetry::Periodic).unwrap();
        let u = GridField::from_fn(grid, |_, _| c);
        for model in AnalyticModel::ALL {
            let r = ModelSpec::analytic(model, gamma, alpha, grid).rhs(&u).unwrap();
            let want = alpha * (c - c * c * c);
            prop_assert!(r.values().iter().all(|v| (v - want).abs() < 1e-10 * (1.0 + want.abs())));
        }
    }
}
