use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use holistic::catalogue::AnalyticModel;
use holistic::consistency::{convergence_order, expected_leading, ErrorPart, ManufacturedField};
use holistic::continuation::{
    newton_solve, switch_branch, trivial_branch, Branch, ContinuationConfig, Stability,
};
use holistic::export;
use holistic::models::TrustRadii;
use holistic::subgrid::extract::{fit_coefficients, model_dictionary};
use holistic::tables::{check_error_table, check_low_order_table, error_report, CellCheck, LOW_ORDER_COLUMNS};
use holistic::{
    integrate, subgrid_snapshot, ArithmeticMode, ConstructedModel, GridField, MacroGrid, ModelKind, ModelSpec, Scalar,
    Truncation,
};
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{
    Cli, Command, ConsistencyArgs, ConstructArgs, ContinueArgs, Field, ModelChoice, Part, SimulateArgs,
    SubgridPlotArgs, VerifyArgs,
};
use crate::Failure;

type Res<T> = Result<T, Failure>;

fn numerical(e: impl std::fmt::Display) -> Failure {
    Failure::Numerical(e.to_string())
}

fn invalid(e: impl std::fmt::Display) -> Failure {
    Failure::Validation(e.to_string())
}

/// Everything needed to reproduce a run.
#[derive(Serialize)]
struct RunConfig<'a, A: Serialize> {
    command: &'a str,
    mode: ArithmeticMode,
    version: &'a str,
    args: &'a A,
}

fn run_config<A: Serialize>(command: &str, mode: ArithmeticMode, args: &A) -> Value {
    serde_json::to_value(RunConfig {
        command,
        mode,
        version: env!("CARGO_PKG_VERSION"),
        args,
    })
    .expect("arguments serialise")
}

struct Output {
    dir: PathBuf,
    config: Value,
}

impl Output {
    fn new(dir: &Path, config: Value) -> Res<Output> {
        fs::create_dir_all(dir).map_err(|e| invalid(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Output {
            dir: dir.to_path_buf(),
            config,
        })
    }

    fn file(&self, name: &str) -> Res<BufWriter<File>> {
        let path = self.dir.join(name);
        File::create(&path)
            .map(BufWriter::new)
            .map_err(|e| invalid(format!("cannot write {}: {e}", path.display())))
    }

    fn text(&self, name: &str, body: &str) -> Res<()> {
        let path = self.dir.join(name);
        fs::write(&path, body).map_err(|e| invalid(format!("cannot write {}: {e}", path.display())))
    }

    fn json<T: Serialize>(&self, name: &str, warnings: &[String], data: &T) -> Res<()> {
        export::write_json(self.file(name)?, &self.config, warnings, data).map_err(invalid)
    }
}

pub fn run(cli: Cli) -> Res<()> {
    let mode = ArithmeticMode::from_env().map_err(invalid)?;
    match &cli.command {
        Command::Construct(a) => {
            let out = Output::new(&cli.out, run_config("construct", mode, a))?;
            match mode {
                ArithmeticMode::Rational => construct::<BigRational>(a, &out),
                ArithmeticMode::Float => construct::<f64>(a, &out),
            }
        }
        Command::Verify(a) => {
            let out = Output::new(&cli.out, run_config("verify", mode, a))?;
            match mode {
                ArithmeticMode::Rational => verify::<BigRational>(a, &out),
                ArithmeticMode::Float => verify::<f64>(a, &out),
            }
        }
        Command::Simulate(a) => simulate(a, &Output::new(&cli.out, run_config("simulate", mode, a))?),
        Command::Continue(a) => continuation(a, &Output::new(&cli.out, run_config("continue", mode, a))?),
        Command::Consistency(a) => consistency(a, &Output::new(&cli.out, run_config("consistency", mode, a))?),
        Command::SubgridPlot(a) => {
            let out = Output::new(&cli.out, run_config("subgrid-plot", mode, a))?;
            match mode {
                ArithmeticMode::Rational => subgrid_plot::<BigRational>(a, &out),
                ArithmeticMode::Float => subgrid_plot::<f64>(a, &out),
            }
        }
    }
}

fn truncation(order_gamma: usize, order_alpha: usize, total: bool) -> Res<Truncation> {
    if order_gamma == 0 || order_alpha == 0 {
        return Err(invalid("truncation orders must be at least 1"));
    }
    Ok(Truncation {
        gamma: order_gamma,
        alpha: order_alpha,
        total: total.then(|| order_gamma.max(order_alpha)),
    })
}

fn check_n(n: usize) -> Res<()> {
    if n < 2 {
        return Err(invalid(format!("subgrid resolution n = {n} is too small (need n >= 2)")));
    }
    Ok(())
}

fn construct<C: Scalar>(a: &ConstructArgs, out: &Output) -> Res<()> {
    check_n(a.n)?;
    let trunc = truncation(a.order_gamma, a.order_alpha, a.total)?;
    let m = holistic::construct::<C>(a.n, trunc).map_err(numerical)?;
    let g = if a.solvability {
        let mut g = m.g().with_truncation(trunc.extended());
        g.add_assign_ref(&m.solvability_correction());
        g
    } else {
        m.g().clone()
    };
    let dict = model_dictionary::<C>(AnalyticModel::HolisticG4A4);
    let table = fit_coefficients(&g, &dict);
    let model = ConstructedModel::from_series(a.n, &g).with_dictionary(&table);

    let mut report = String::new();
    let _ = writeln!(
        report,
        "n = {}, truncation O(gamma^{}, alpha^{}){}, {} iterations",
        a.n,
        trunc.gamma,
        trunc.alpha,
        trunc.total.map_or(String::new(), |t| format!(", total degree < {t}")),
        m.iterations()
    );
    if trunc.contains(2, 0) && trunc.contains(1, 1) {
        let _ = writeln!(report, "\n{:>4} | {:>22} | {:>22} | {:>22}", "n", "gamma^2 delta^4 u/h^2", "alpha gamma delta^2 u^3", "alpha gamma u^2 delta^2 u");
        let cells: Vec<String> = LOW_ORDER_COLUMNS
            .iter()
            .map(|(sa, sb, name)| table.coeff(*sa, *sb, name).map_or("-".into(), |c| c.to_exact_string()))
            .collect();
        let _ = writeln!(report, "{:>4} | {:>22} | {:>22} | {:>22}", a.n, cells[0], cells[1], cells[2]);
    }
    let _ = writeln!(report, "\nslot (gamma^a alpha^b h^(2b-2))  term  coefficient");
    let mut rows = Vec::new();
    for fit in &table.slots {
        for (name, c) in fit.names.iter().zip(&fit.coeffs) {
            let _ = writeln!(report, "({}, {})  {:<40} {}", fit.a, fit.b, name, c.to_exact_string());
            rows.push(vec![
                fit.a.to_string(),
                fit.b.to_string(),
                name.clone(),
                c.to_exact_string(),
                c.to_f64().to_string(),
            ]);
        }
        if !fit.is_complete() {
            let _ = writeln!(
                report,
                "({}, {})  {} monomials outside the dictionary (see model.json)",
                fit.a,
                fit.b,
                fit.residual.len()
            );
        }
        if fit.null_dimension > 0 {
            let _ = writeln!(
                report,
                "({}, {})  dictionary has {} linear relations; minimum-norm coefficients shown",
                fit.a, fit.b, fit.null_dimension
            );
        }
    }
    print!("{report}");
    out.text("report.txt", &report)?;
    out.json("model.json", &[], &model)?;
    export::write_table_csv(
        out.file("coefficients.csv")?,
        &out.config,
        &["a", "b", "term", "exact", "value"],
        &rows,
    )
    .map_err(invalid)
}

fn verify<C: Scalar>(a: &VerifyArgs, out: &Output) -> Res<()> {
    check_n(a.oracle_n)?;
    let mut cells: Vec<CellCheck> = check_low_order_table::<C>().map_err(numerical)?;
    let report = error_report::<C>(&[2, 4, 8], a.oracle_n).map_err(numerical)?;
    cells.extend(check_error_table(&report));
    let mut rows = Vec::new();
    for c in &cells {
        println!(
            "{} {:<9} {:<6} {:<22} expected {:<10} got {:<12} {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.table,
            c.row,
            c.column,
            c.expected,
            c.got,
            c.note
        );
        rows.push(vec![
            c.table.clone(),
            c.row.clone(),
            c.column.clone(),
            c.expected.clone(),
            c.got.clone(),
            c.tolerance.to_string(),
            c.pass.to_string(),
            c.note.clone(),
        ]);
    }
    let passed = cells.iter().filter(|c| c.pass).count();
    println!("{passed}/{} cells pass", cells.len());
    export::write_table_csv(
        out.file("verify.csv")?,
        &out.config,
        &["table", "row", "column", "expected", "got", "tolerance", "pass", "note"],
        &rows,
    )
    .map_err(invalid)?;
    out.json("verify.json", &[], &json!({ "cells": cells, "errors": report }))?;
    if passed == cells.len() {
        Ok(())
    } else {
        Err(Failure::Numerical(format!("{} of {} cells failed", cells.len() - passed, cells.len())))
    }
}

pub fn parse_model(name: &str) -> Res<AnalyticModel> {
    AnalyticModel::ALL.into_iter().find(|m| m.name() == name).ok_or_else(|| {
        let names: Vec<&str> = AnalyticModel::ALL.iter().map(|m| m.name()).collect();
        invalid(format!("unknown model `{name}` (expected one of {})", names.join(", ")))
    })
}

fn load_model(choice: &ModelChoice) -> Res<ModelKind> {
    match &choice.model_file {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
            let doc: Value = serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
            let data = doc.get("data").cloned().unwrap_or(doc);
            let model: ConstructedModel =
                serde_json::from_value(data).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
            Ok(ModelKind::Constructed(Arc::new(model)))
        }
        None => parse_model(&choice.model).map(ModelKind::Analytic),
    }
}

fn odd_grid(m: usize) -> Res<MacroGrid> {
    MacroGrid::odd_square(m).map_err(invalid)
}

fn sin_mode(grid: MacroGrid, amp: f64) -> GridField {
    GridField::from_fn(grid, |x, y| amp * x.sin() * y.sin())
}

#[derive(Serialize)]
struct SimulationSummary {
    model: String,
    dt: f64,
    stability_bound: f64,
    steps_stored: usize,
    initial_rms: f64,
    final_rms: f64,
    final_max: f64,
}

fn simulate(a: &SimulateArgs, out: &Output) -> Res<()> {
    let kind = load_model(&a.model)?;
    let spec = ModelSpec::new(kind, a.gamma, a.alpha, odd_grid(a.grid)?);
    let bound = spec.stability_bound();
    let dt = a.dt.unwrap_or(0.5 * bound);
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut u0 = sin_mode(spec.grid, a.amplitude);
    for v in u0.values_mut() {
        *v += a.noise * rng.gen_range(-1.0..1.0);
    }
    let traj = integrate(&spec, &u0, a.t_end, dt, a.stride).map_err(|e| match e {
        holistic::ModelError::InvalidRequest(_) | holistic::ModelError::UnstableStep { .. } => invalid(e),
        e => numerical(e),
    })?;
    let last = traj.last();
    let summary = SimulationSummary {
        model: spec.kind.name(),
        dt,
        stability_bound: bound,
        steps_stored: traj.states.len(),
        initial_rms: u0.rms(),
        final_rms: last.rms(),
        final_max: last.max_abs(),
    };
    println!(
        "{}: t = {} with dt = {:.4e}; rms {:.6} -> {:.6}",
        summary.model, a.t_end, dt, summary.initial_rms, summary.final_rms
    );
    let warnings = spec.warnings();
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    export::write_trajectory_csv(out.file("trajectory.csv")?, &out.config, &traj).map_err(invalid)?;
    out.json("simulation.json", &warnings, &summary)
}

#[derive(Serialize)]
struct BranchSummary {
    label: String,
    points: usize,
    alpha_end: f64,
    stable: usize,
    unstable: usize,
    marginal: usize,
    bifurcations: Vec<f64>,
    unstable_count_changes: Vec<(f64, f64, usize, usize)>,
    stopped: Option<String>,
}

fn summarise(b: &Branch) -> BranchSummary {
    let count = |s: Stability| b.points.iter().filter(|p| p.stability == s).count();
    BranchSummary {
        label: b.label.clone(),
        points: b.points.len(),
        alpha_end: b.points.last().map_or(f64::NAN, |p| p.alpha),
        stable: count(Stability::Stable),
        unstable: count(Stability::Unstable),
        marginal: count(Stability::Marginal),
        bifurcations: b.bifurcations.iter().map(|f| f.alpha).collect(),
        unstable_count_changes: b.count_changes(),
        stopped: b.stopped.clone(),
    }
}

fn continuation(a: &ContinueArgs, out: &Output) -> Res<()> {
    let kind = load_model(&a.model)?;
    let spec = ModelSpec::new(kind, a.gamma, 0.0, odd_grid(a.grid)?);
    let cfg = ContinuationConfig {
        alpha_max: a.alpha_max,
        ds_max: a.ds_max,
        ..Default::default()
    };
    let trivial = trivial_branch(&spec, cfg).map_err(numerical)?;
    let mut branches = vec![trivial.clone()];
    let take = a.branches.unwrap_or(trivial.bifurcations.len());
    for (k, bif) in trivial.bifurcations.iter().take(take).enumerate() {
        let b = switch_branch(&spec, bif, 1.0, cfg, &format!("branch-{}", k + 1)).map_err(numerical)?;
        branches.push(b);
    }
    let summaries: Vec<BranchSummary> = branches.iter().map(summarise).collect();
    for s in &summaries {
        println!(
            "{:<10} {:>4} points up to alpha {:.3}: {} stable, {} unstable, {} marginal; bifurcations at {:?}",
            s.label, s.points, s.alpha_end, s.stable, s.unstable, s.marginal, s.bifurcations
        );
    }
    export::write_branches_csv(out.file("branches.csv")?, &out.config, &branches).map_err(invalid)?;
    let title = format!("{} on {}x{} elements", spec.kind.name(), a.grid, a.grid);
    out.text("bifurcation.svg", &export::svg_bifurcation(&out.config, &title, &branches))?;
    out.json("continuation.json", &spec.warnings(), &summaries)
}

fn consistency(a: &ConsistencyArgs, out: &Output) -> Res<()> {
    let model = parse_model(&a.model)?;
    let part = match a.part {
        Part::Full => ErrorPart::Full,
        Part::AlphaLinear => ErrorPart::AlphaLinear,
    };
    let field = match a.field {
        Field::SinSin => ManufacturedField::sin_sin(1.0, 1, 1),
        Field::Mixed => ManufacturedField::mixed(1.0),
    };
    let fit = convergence_order(
        &ModelKind::Analytic(model),
        a.alpha,
        part,
        &field,
        &a.m_list,
        expected_leading(model, part),
    )
    .map_err(|e| match e {
        holistic::ConsistencyError::Model(m) => numerical(m),
        e => invalid(e),
    })?;
    println!("{}: order {:.4}", model.name(), fit.order);
    if let (Some(c), Some(x)) = (fit.coefficient, fit.expected) {
        println!(
            "leading coefficient {c:.6} (expected {:.6}, deviation {:.2}%)",
            x.coefficient,
            100.0 * fit.coefficient_deviation().unwrap_or(f64::NAN)
        );
    }
    for w in &fit.warnings {
        eprintln!("warning: {w}");
    }
    let label = model.name().to_string();
    export::write_consistency_csv(out.file("consistency.csv")?, &out.config, &[(label.clone(), fit.clone())])
        .map_err(invalid)?;
    let series = vec![(label, fit.samples.iter().map(|s| (s.h, s.error)).collect())];
    out.text(
        "consistency.svg",
        &export::svg_loglog(&out.config, &format!("truncation error of {}", model.name()), &series),
    )?;
    out.json("consistency.json", &fit.warnings, &fit)
}

fn subgrid_plot<C: Scalar>(a: &SubgridPlotArgs, out: &Output) -> Res<()> {
    check_n(a.n)?;
    let trunc = truncation(a.order_gamma, a.order_alpha, false)?;
    let grid = odd_grid(a.elements)?;
    let m = holistic::construct::<C>(a.n, trunc).map_err(numerical)?;
    let mut u = sin_mode(grid, a.amplitude);
    if a.equilibrium {
        let spec = holistic::models::constructed_spec(a.n, m.g(), a.gamma, a.alpha, grid);
        u = newton_solve(&spec, &u, a.alpha, 1e-10).map_err(numerical)?.u;
    }
    let snap = subgrid_snapshot(&m, &u, a.gamma, a.alpha, TrustRadii::default());
    println!("largest interelement jump {:.4e}", snap.max_jump);
    for w in &snap.warnings {
        eprintln!("warning: {w}");
    }
    let title = format!(
        "subgrid field, {}x{} elements, n = {}, alpha = {}, O(gamma^{}, alpha^{})",
        a.elements, a.elements, a.n, a.alpha, a.order_gamma, a.order_alpha
    );
    out.text("subgrid.svg", &export::svg_subgrid(&out.config, &title, &snap))?;
    out.json("subgrid.json", &snap.warnings, &snap)
}
