//! Property checks shared by the property tests and the acceptance report.

#![allow(dead_code)]

use holistic::catalogue::AnalyticModel;
use holistic::scalar::rational;
use holistic::subgrid::{CorrectionSystem, RowKind};
use holistic::{apply_stencil, construct, GridField, MacroGrid, MacroSymbol, ModelSpec, StencilId, Truncation};
use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

type Q = BigRational;

pub type Check = fn(u32) -> Result<(), String>;

/// Named property checks; each takes the number of random cases.
pub const PROPERTIES: [(&str, Check); 7] = [
    ("stencils annihilate constants", constants_annihilated),
    ("odd symmetry is preserved", odd_symmetry_preserved),
    ("rhs is sign equivariant", rhs_sign_equivariant),
    ("g is sign equivariant", g_sign_equivariant),
    ("amplitude condition holds at all orders", amplitude_condition),
    ("construct leaves zero residuals", zero_residuals),
    ("constant residual gives g' = -c", constant_residual_correction),
];

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    })
}

fn check<S: Strategy>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String> {
    runner(cases).run(&strategy, test).map_err(|e| e.to_string())
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), TestCaseError> {
    if cond {
        Ok(())
    } else {
        Err(TestCaseError::fail(msg()))
    }
}

/// Random field on a periodic `m x m` grid with spacing `h`.
pub fn periodic_field() -> impl Strategy<Value = GridField> {
    (4usize..9, 0.1f64..1.0).prop_flat_map(|(m, h)| {
        prop::collection::vec(-1.5f64..1.5, m * m).prop_map(move |v| {
            GridField::from_values(MacroGrid::new(h, m, m, holistic::Symmetry::Periodic).unwrap(), v).unwrap()
        })
    })
}

pub fn constants_annihilated(cases: u32) -> Result<(), String> {
    check(cases, (4usize..9, -5.0f64..5.0), |(m, c)| {
        let grid = MacroGrid::new(0.3, m, m, holistic::Symmetry::Periodic).unwrap();
        let u = GridField::from_fn(grid, |_, _| c);
        for s in StencilId::ALL.into_iter().filter(|s| s.is_difference()) {
            for (_, i, j) in u.indices() {
                let v = apply_stencil(&u, s, i, j);
                ensure(v.abs() <= 1e-12 * (1.0 + c.abs()), || format!("{s:?} gives {v} on constant {c}"))?;
            }
        }
        Ok(())
    })
}

/// Odd extension of stored values to a `2m x 2m` periodic grid of the same
/// spacing: the periodic rhs must be odd again and agree with the rhs on the
/// odd grid.
pub fn odd_symmetry_preserved(cases: u32) -> Result<(), String> {
    let strategy = (3usize..7).prop_flat_map(|m| (Just(m), prop::collection::vec(-1.0f64..1.0, (m - 1) * (m - 1))));
    check(cases, strategy, |(m, vals)| {
        let odd = MacroGrid::odd_square(m).unwrap();
        let uo = GridField::from_values(odd, vals).unwrap();
        let per = MacroGrid::new(odd.h, 2 * m, 2 * m, holistic::Symmetry::Periodic).unwrap();
        let mut up = GridField::zeros(per);
        let idx: Vec<_> = up.indices().collect();
        for (k, i, j) in idx {
            up.values_mut()[k] = uo.at(i, j);
        }
        for model in AnalyticModel::ALL {
            let ro = ModelSpec::analytic(model, 1.0, 3.0, odd).rhs(&uo).unwrap();
            let rp = ModelSpec::analytic(model, 1.0, 3.0, per).rhs(&up).unwrap();
            for (_, i, j) in rp.indices() {
                let (a, b) = (rp.at(i, j), ro.at(i, j));
                ensure((a - b).abs() <= 1e-10 * (1.0 + a.abs()), || {
                    format!("{}: periodic {a} vs odd {b} at ({i}, {j})", model.name())
                })?;
                let mirror = rp.at(-i, j);
                ensure((a + mirror).abs() <= 1e-10 * (1.0 + a.abs()), || {
                    format!("{}: not odd at ({i}, {j})", model.name())
                })?;
            }
        }
        Ok(())
    })
}

pub fn rhs_sign_equivariant(cases: u32) -> Result<(), String> {
    check(cases, (periodic_field(), 0.0f64..1.0, -5.0f64..10.0), |(u, gamma, alpha)| {
        for model in AnalyticModel::ALL {
            let spec = ModelSpec::analytic(model, gamma, alpha, u.grid);
            let a = spec.rhs(&u).unwrap();
            let b = spec.rhs(&u.map(|v| -v)).unwrap();
            for (x, y) in a.values().iter().zip(b.values()) {
                ensure((x + y).abs() <= 1e-9 * (1.0 + x.abs()), || format!("{}: {x} vs {y}", model.name()))?;
            }
        }
        Ok(())
    })
}

fn symbol_values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 81)
}

fn value_of(vals: &[f64], s: MacroSymbol, sign: f64) -> f64 {
    sign * vals[((s.dj as i32 + 4) * 9 + (s.di as i32 + 4)) as usize]
}

pub fn g_sign_equivariant(cases: u32) -> Result<(), String> {
    let manifolds: Vec<_> = [2, 3]
        .into_iter()
        .map(|n| construct::<f64>(n, Truncation::total(3)).unwrap())
        .collect();
    check(cases, symbol_values(), |vals| {
        for m in &manifolds {
            for ((a, b), p) in m.g().slots() {
                let plus = p.eval(&|s| value_of(&vals, s, 1.0));
                let minus = p.eval(&|s| value_of(&vals, s, -1.0));
                ensure((plus + minus).abs() <= 1e-10 * (1.0 + plus.abs()), || {
                    format!("n = {}, slot ({a}, {b}): {plus} vs {minus}", m.n())
                })?;
            }
        }
        Ok(())
    })
}

fn exact_constructions() -> Vec<holistic::SubgridManifold<Q>> {
    [(2, Truncation::total(3)), (3, Truncation::rect(2, 2)), (4, Truncation::total(3))]
        .into_iter()
        .map(|(n, t)| construct::<Q>(n, t).unwrap())
        .collect()
}

pub fn amplitude_condition(_cases: u32) -> Result<(), String> {
    let centre = holistic::Poly::<Q>::symbol(MacroSymbol::new(0, 0));
    for m in exact_constructions() {
        let v = m.v_at(0, 0).ok_or("no centre node")?;
        for ((a, b), p) in v.slots() {
            let want = if (a, b) == (0, 0) { centre.clone() } else { holistic::Poly::zero() };
            if *p != want {
                return Err(format!("n = {}: centre value has a ({a}, {b}) part", m.n()));
            }
        }
    }
    Ok(())
}

pub fn zero_residuals(_cases: u32) -> Result<(), String> {
    for m in exact_constructions() {
        if !m.residuals().all_converged() {
            return Err(format!("n = {}: residual left {:?}", m.n(), m.residuals().largest()));
        }
    }
    Ok(())
}

pub fn constant_residual_correction(cases: u32) -> Result<(), String> {
    let systems: Vec<CorrectionSystem<Q>> = (2..=5).map(|n| CorrectionSystem::build(n).unwrap()).collect();
    check(cases, (0usize..4, -50i64..50, 1i64..20), |(k, num, den)| {
        let sys = &systems[k];
        let c = rational(num, den);
        let rhs: Vec<Q> = sys
            .row_kinds()
            .iter()
            .map(|r| match r {
                RowKind::Pde(_) => c.clone(),
                _ => Q::zero(),
            })
            .collect();
        let x = sys.solve(&rhs).unwrap();
        let (g, v) = x.split_last().unwrap();
        ensure(*g == -c.clone(), || format!("n = {}: g' = {g}, c = {c}", sys.n()))?;
        ensure(v.iter().all(|v| v.is_zero()), || format!("n = {}: nonzero field correction", sys.n()))
    })
}
