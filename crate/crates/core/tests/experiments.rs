use holistic::catalogue::AnalyticModel;
use holistic::consistency::{convergence_order, expected_leading, ErrorPart, ManufacturedField};
use holistic::continuation::{switch_branch, trivial_branch, ContinuationConfig};
use holistic::export;
use holistic::models::TrustRadii;
use holistic::tables::{check_error_table, check_low_order_table, error_report, low_order_coefficients};
use holistic::{construct, subgrid_snapshot, ConstructedModel, GridField, MacroGrid, ModelKind, ModelSpec, Scalar, Truncation};
use num_rational::BigRational;
use serde_json::json;

type Q = BigRational;

#[test]
fn odd_resolution_lies_between_its_neighbours() {
    let c2 = low_order_coefficients::<Q>(2).unwrap();
    let c3 = low_order_coefficients::<Q>(3).unwrap();
    let c4 = low_order_coefficients::<Q>(4).unwrap();
    for k in 0..3 {
        let (a, b, c) = (&c2[k], &c3[k], &c4[k]);
        assert!((a < b && b < c) || (a > b && b > c), "{a} {b} {c}");
    }
}

#[test]
fn float_and_exact_verdicts_agree() {
    let exact: Vec<bool> = check_low_order_table::<Q>().unwrap().iter().map(|c| c.pass).collect();
    let float: Vec<bool> = check_low_order_table::<f64>().unwrap().iter().map(|c| c.pass).collect();
    assert_eq!(exact, float);
    let exact: Vec<bool> = check_error_table(&error_report::<Q>(&[2, 4], 8).unwrap()).iter().map(|c| c.pass).collect();
    let float: Vec<bool> = check_error_table(&error_report::<f64>(&[2, 4], 8).unwrap()).iter().map(|c| c.pass).collect();
    assert_eq!(exact, float);
}

#[test]
fn interelement_jumps_shrink_with_the_coupling_order() {
    let grid = MacroGrid::odd_square(4).unwrap();
    let u = GridField::from_fn(grid, |x, y| 0.9 * x.sin() * y.sin());
    let jumps: Vec<f64> = [2, 3, 4]
        .into_iter()
        .map(|p| {
            let m = construct::<f64>(4, Truncation::rect(p, 2)).unwrap();
            subgrid_snapshot(&m, &u, 1.0, 6.0, TrustRadii::default()).max_jump
        })
        .collect();
    assert!(jumps[0] > 2.0 * jumps[1] && jumps[1] > 1.5 * jumps[2], "{jumps:?}");
    // without coupling every element is flat and the jumps are the full
    // differences between neighbouring grid values
    let m = construct::<f64>(4, Truncation::rect(2, 2)).unwrap();
    let snap = subgrid_snapshot(&m, &u, 0.0, 0.0, TrustRadii::default());
    assert!(snap.max_jump > 0.3);
}

#[test]
fn snapshot_warns_outside_the_trust_region() {
    let grid = MacroGrid::odd_square(2).unwrap();
    let m = construct::<f64>(2, Truncation::rect(2, 2)).unwrap();
    let u = GridField::from_fn(grid, |x, y| x.sin() * y.sin());
    let snap = subgrid_snapshot(&m, &u, 1.0, 30.0, TrustRadii::default());
    assert_eq!(snap.warnings.len(), 1);
}

#[test]
fn gradient_cubic_term_of_the_g3a3_model() {
    let model = AnalyticModel::HolisticG3A3;
    let fit = convergence_order(
        &ModelKind::Analytic(model),
        1.0,
        ErrorPart::AlphaLinear,
        &ManufacturedField::mixed(1.0),
        &[8, 16, 32, 64],
        expected_leading(model, ErrorPart::AlphaLinear),
    )
    .unwrap();
    assert!((fit.order - 2.0).abs() < 0.2, "{}", fit.order);
    assert!(fit.coefficient_deviation().unwrap() < 0.02);
}

#[test]
fn quartic_bracket_of_the_g4a4_model() {
    let model = AnalyticModel::HolisticG4A4;
    for f in [ManufacturedField::sin_sin(1.0, 1, 1), ManufacturedField::mixed(1.0)] {
        let fit = convergence_order(
            &ModelKind::Analytic(model),
            1.0,
            ErrorPart::AlphaLinear,
            &f,
            &[32, 64, 128, 256],
            expected_leading(model, ErrorPart::AlphaLinear),
        )
        .unwrap();
        // the h^6 part still bends the slope of the mixed field at m = 32
        assert!((fit.order - 4.0).abs() < 0.2, "{}", fit.order);
        assert!(fit.coefficient_deviation().unwrap() < 0.01, "{:?}", fit.coefficient);
        let last = fit.samples.last().unwrap();
        assert!(last.misfit.unwrap() < 0.01);
    }
}

#[test]
fn constructed_model_survives_an_artifact_round_trip() {
    let m = construct::<Q>(3, Truncation::rect(2, 2)).unwrap();
    let model = ConstructedModel::from_series(3, m.g());
    let mut buf = Vec::new();
    export::write_json(&mut buf, &json!({"n": 3}), &[], &model).unwrap();
    let doc: serde_json::Value = serde_json::from_slice(&buf).unwrap();
    assert_eq!(doc["config"]["n"], 3);
    let back: ConstructedModel = serde_json::from_value(doc["data"].clone()).unwrap();
    assert_eq!(back, model);
    let grid = MacroGrid::odd_square(5).unwrap();
    let u = GridField::from_fn(grid, |x, y| (x * y).sin());
    let a = ModelSpec::new(ModelKind::Constructed(back.into()), 1.0, 4.0, grid).rhs(&u).unwrap();
    let b = holistic::models::constructed_spec(3, m.g(), 1.0, 4.0, grid).rhs(&u).unwrap();
    assert_eq!(a, b);
    assert!(m.g().coeff(1, 1).terms().all(|(_, c)| c.to_f64().is_finite()));
}

#[test]
fn branch_artifacts_carry_the_configuration() {
    let model = ModelSpec::analytic(AnalyticModel::Centered2, 1.0, 0.0, MacroGrid::odd_square(4).unwrap());
    let cfg = ContinuationConfig {
        alpha_max: 8.0,
        ..Default::default()
    };
    let tb = trivial_branch(&model, cfg).unwrap();
    let uni = switch_branch(&model, &tb.bifurcations[0], 1.0, cfg, "unimodal").unwrap();
    let config = json!({"command": "continue", "grid": 4});
    let mut csv = Vec::new();
    export::write_branches_csv(&mut csv, &config, &[tb.clone(), uni.clone()]).unwrap();
    let text = String::from_utf8(csv).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# config: {"));
    assert_eq!(lines.next().unwrap(), "branch,row,alpha,rms,stability,unstable_count");
    assert_eq!(text.lines().filter(|l| l.starts_with("trivial,branch_point")).count(), tb.bifurcations.len());
    assert_eq!(text.lines().count(), 2 + tb.points.len() + uni.points.len() + tb.bifurcations.len());

    let svg = export::svg_bifurcation(&config, "centered2", &[tb, uni]);
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    assert!(svg.contains("<metadata>{&quot;") || svg.contains("<metadata>{\""));
    assert!(svg.contains("stroke-dasharray"));
}
