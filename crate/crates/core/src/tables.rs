//! Reference coefficient tables and cell-by-cell comparison against
//! constructed models.

use serde::Serialize;

use crate::catalogue::AnalyticModel;
use crate::error::ConstructError;
use crate::scalar::Scalar;
use crate::subgrid::extract::{
    analytic_series, coefficient_errors, extended_model, fit_coefficients, model_dictionary, CoefficientTable,
    ErrorEntry, ERROR_GROUPS,
};
use crate::subgrid::{construct, Truncation};

/// Columns of the `O(gamma^3 + alpha^3)` coefficient table: slot and term.
pub const LOW_ORDER_COLUMNS: [(usize, usize, &str); 3] = [
    (2, 0, "delta^4 u"),
    (1, 1, "delta^2 u^3"),
    (1, 1, "u^2 delta^2 u"),
];

/// Published coefficients per resolution, as `(num, den)`.
pub const LOW_ORDER_TABLE: [(usize, [(i64, i64); 3]); 3] = [
    (2, [(-1, 16), (1, 16), (-3, 16)]),
    (4, [(-5, 64), (5, 64), (-15, 64)]),
    (8, [(-21, 256), (21, 256), (-63, 256)]),
];

/// Limits of the columns as `n -> infinity`.
pub const LOW_ORDER_LIMITS: [(i64, i64); 3] = [(-1, 12), (1, 12), (-1, 4)];

/// Published maximum coefficient errors of the `O(gamma^4 + alpha^4)` model,
/// per resolution, in the column order of [`ERROR_GROUPS`].  Kept as printed
/// so that the tolerance follows the last printed digit.
pub const ERROR_TABLE: [(usize, [&str; 5]); 3] = [
    (2, ["0.021", "0.062", "0.0033", "0.14", "0.0016"]),
    (4, ["0.0052", "0.016", "0.00086", "0.040", "0.000098"]),
    (8, ["0.0013", "0.0039", "0.00022", "0.010", "0.0000061"]),
];

/// Two units in the last printed digit of a decimal string.
pub fn printed_tolerance(printed: &str) -> f64 {
    let decimals = printed.split_once('.').map_or(0, |(_, f)| f.len());
    2.0 * 10f64.powi(-(decimals as i32))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellCheck {
    pub table: String,
    pub row: String,
    pub column: String,
    pub expected: String,
    pub got: String,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub note: String,
}

/// Low-order coefficients of `construct(n, total(3))` for each `n`.
pub fn low_order_coefficients<C: Scalar>(n: usize) -> Result<[C; 3], ConstructError> {
    let m = construct::<C>(n, Truncation::total(3))?;
    let table = fit_coefficients(m.g(), &model_dictionary::<C>(AnalyticModel::HolisticG3A3));
    Ok(LOW_ORDER_COLUMNS.map(|(a, b, name)| table.coeff(a, b, name).cloned().unwrap_or_else(C::zero)))
}

fn matches<C: Scalar>(got: &C, num: i64, den: i64) -> bool {
    let want = C::from_ratio(num, den);
    if C::EXACT {
        *got == want
    } else {
        (got.to_f64() - want.to_f64()).abs() <= 1e-12
    }
}

/// The nine published cells plus the three limits, which are checked by
/// Richardson extrapolation of the `n = 4, 8` values under an `O(1/n^2)`
/// error (exact when the error is a pure `1/n^2` term).
pub fn check_low_order_table<C: Scalar>() -> Result<Vec<CellCheck>, ConstructError> {
    let mut out = Vec::new();
    let mut rows = Vec::new();
    for (n, cells) in LOW_ORDER_TABLE {
        let got = low_order_coefficients::<C>(n)?;
        for ((col, (num, den)), g) in LOW_ORDER_COLUMNS.iter().zip(cells).zip(&got) {
            out.push(CellCheck {
                table: "low-order".into(),
                row: format!("n={n}"),
                column: col.2.into(),
                expected: format!("{num}/{den}"),
                got: g.to_exact_string(),
                tolerance: if C::EXACT { 0.0 } else { 1e-12 },
                pass: matches(g, num, den),
                note: String::new(),
            });
        }
        rows.push(got);
    }
    for (k, (num, den)) in LOW_ORDER_LIMITS.into_iter().enumerate() {
        let mut extrap = rows[2][k].clone() * C::from_int(4);
        extrap -= &rows[1][k];
        extrap /= &C::from_int(3);
        out.push(CellCheck {
            table: "low-order".into(),
            row: "n=inf".into(),
            column: LOW_ORDER_COLUMNS[k].2.into(),
            expected: format!("{num}/{den}"),
            got: extrap.to_exact_string(),
            tolerance: if C::EXACT { 0.0 } else { 1e-12 },
            pass: matches(&extrap, num, den),
            note: "extrapolated from n=4,8".into(),
        });
    }
    Ok(out)
}

/// Coefficient errors of the extended numerical model and, for groups whose
/// dictionary is dependent, the distance to a fine-resolution constructed
/// model.
#[derive(Clone, Debug, Serialize)]
pub struct ErrorReport {
    /// Errors against the analytic model, one entry per `(n, group)`.
    pub errors: Vec<ErrorEntry>,
    /// Errors against the constructed model at `oracle_n`.
    pub oracle: Vec<ErrorEntry>,
    pub oracle_n: usize,
}

pub fn error_report<C: Scalar>(n_list: &[usize], oracle_n: usize) -> Result<ErrorReport, ConstructError> {
    let dict = model_dictionary::<C>(AnalyticModel::HolisticG4A4);
    let reference = fit_coefficients(&analytic_series(AnalyticModel::HolisticG4A4, Truncation::total(4)), &dict);
    let tables: Vec<(usize, CoefficientTable<C>)> = n_list
        .iter()
        .map(|&n| Ok((n, fit_coefficients(&extended_model::<C>(n)?, &dict))))
        .collect::<Result<_, ConstructError>>()?;
    let fine = match tables.iter().find(|(n, _)| *n == oracle_n) {
        Some((_, t)) => t.clone(),
        None => fit_coefficients(&extended_model::<C>(oracle_n)?, &dict),
    };
    let mut errors = Vec::new();
    let mut oracle = Vec::new();
    for (n, t) in &tables {
        errors.extend(coefficient_errors(*n, t, &reference));
        oracle.extend(coefficient_errors(*n, t, &fine));
    }
    Ok(ErrorReport {
        errors,
        oracle,
        oracle_n,
    })
}

fn entry(list: &[ErrorEntry], n: usize, a: usize, b: usize) -> Option<&ErrorEntry> {
    list.iter().find(|e| e.n == n && e.a == a && e.b == b)
}

/// Compares an error report against the published table.  Groups with a
/// unique representation are compared to the printed value within two units
/// of its last digit.  Dependent groups are checked instead against the
/// fine-resolution oracle: the distance to it must agree with the analytic
/// error scaled by `1 - (n / oracle_n)^2` within 15%, and the analytic error
/// must fall by at least 3.5 per doubling of `n`.
pub fn check_error_table(report: &ErrorReport) -> Vec<CellCheck> {
    let mut out = Vec::new();
    for (n, printed) in ERROR_TABLE {
        for ((a, b, group), printed) in ERROR_GROUPS.iter().zip(printed) {
            let Some(e) = entry(&report.errors, n, *a, *b) else {
                continue;
            };
            let mut cell = CellCheck {
                table: "max-error".into(),
                row: format!("n={n}"),
                column: group.to_string(),
                expected: printed.to_string(),
                got: format!("{:.3e}", e.max_error),
                tolerance: printed_tolerance(printed),
                pass: false,
                note: String::new(),
            };
            if e.unique {
                let want: f64 = printed.parse().expect("table literal");
                cell.pass = (e.max_error - want).abs() <= cell.tolerance;
            } else {
                let scale = 1.0 - (n as f64 / report.oracle_n as f64).powi(2);
                let d = entry(&report.oracle, n, *a, *b).map_or(f64::NAN, |o| o.max_error);
                let agree = ((d - e.max_error * scale) / (e.max_error * scale)).abs() <= 0.15;
                let next = entry(&report.errors, 2 * n, *a, *b).map(|x| x.max_error);
                let decay = next.map_or(true, |x| e.max_error / x >= 3.5);
                cell.tolerance = 0.15;
                cell.pass = agree && decay;
                cell.note = format!(
                    "dependent dictionary, minimum-norm coefficients; distance to n={} model {:.3e} vs expected {:.3e}{}",
                    report.oracle_n,
                    d,
                    e.max_error * scale,
                    next.map_or(String::new(), |x| format!("; decay to n={} x{:.2}", 2 * n, e.max_error / x))
                );
            }
            out.push(cell);
        }
    }
    out
}
