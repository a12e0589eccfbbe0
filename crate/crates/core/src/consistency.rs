//! Truncation errors of the discrete models against manufactured smooth
//! solutions, and fitted convergence orders.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::catalogue::AnalyticModel;
use crate::error::{ConsistencyError, ModelError};
use crate::grid::{GridField, MacroGrid, Symmetry};
use crate::models::{ModelKind, ModelSpec};

/// `amp sin(kx x + px) sin(ky y + py)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub amp: f64,
    pub kx: i32,
    pub px: f64,
    pub ky: i32,
    pub py: f64,
}

/// A trigonometric polynomial, `2 pi`-periodic in both directions, with exact
/// derivatives of every order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManufacturedField {
    pub terms: Vec<TrigTerm>,
}

impl ManufacturedField {
    /// `amp sin(kx x) sin(ky y)`.
    pub fn sin_sin(amp: f64, kx: i32, ky: i32) -> Self {
        ManufacturedField {
            terms: vec![TrigTerm {
                amp,
                kx,
                px: 0.0,
                ky,
                py: 0.0,
            }],
        }
    }

    /// A field without the symmetries of a single mode, so that every term of
    /// an equivalent PDE is exercised.
    pub fn mixed(amp: f64) -> Self {
        let t = |a: f64, kx, px, ky, py| TrigTerm {
            amp: amp * a,
            kx,
            px,
            ky,
            py,
        };
        ManufacturedField {
            terms: vec![
                t(1.0, 1, 0.0, 1, 0.0),
                t(0.4, 2, 0.3, 1, FRAC_PI_2),
                t(-0.3, 1, FRAC_PI_2, 3, 1.1),
            ],
        }
    }

    /// `d^p/dx^p d^q/dy^q f` at `(x, y)`.
    pub fn derivative(&self, p: u32, q: u32, x: f64, y: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let fx = (t.kx as f64).powi(p as i32) * (t.kx as f64 * x + t.px + p as f64 * FRAC_PI_2).sin();
                let fy = (t.ky as f64).powi(q as i32) * (t.ky as f64 * y + t.py + q as f64 * FRAC_PI_2).sin();
                t.amp * fx * fy
            })
            .sum()
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        self.derivative(0, 0, x, y)
    }

    /// `lap f + alpha (f - f^3)`.
    pub fn pde_rhs(&self, alpha: f64, x: f64, y: f64) -> f64 {
        let f = self.value(x, y);
        self.derivative(2, 0, x, y) + self.derivative(0, 2, x, y) + alpha * (f - f * f * f)
    }
}

/// Which part of the truncation error to measure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorPart {
    /// The whole error at the given `alpha`.
    Full,
    /// The part linear in `alpha`, `(E(a) - E(-a)) / (2a)` at `a = alpha`.
    /// Every model and the PDE are at most quadratic in `alpha`, so this is
    /// exactly the `alpha`-linear coefficient.
    AlphaLinear,
}

/// Spatial shape of a leading error term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    /// `d_x^q f + d_y^q f`.
    Hyperdiffusion(u32),
    /// `f |grad f|^2`.
    GradientCubic,
    /// `f f_xy^2 + 2 f_x f_y f_xy - 8 (f_x^2 f_xx + f_y^2 f_yy)
    ///  - 5 f (f_xx^2 + f_yy^2) - 14 f (f_x f_xxx + f_y f_yyy)`.
    QuarticBracket,
}

impl Shape {
    pub fn eval(self, f: &ManufacturedField, x: f64, y: f64) -> f64 {
        let d = |p, q| f.derivative(p, q, x, y);
        match self {
            Shape::Hyperdiffusion(q) => d(q, 0) + d(0, q),
            Shape::GradientCubic => d(0, 0) * (d(1, 0).powi(2) + d(0, 1).powi(2)),
            Shape::QuarticBracket => {
                let (u, ux, uy, uxy) = (d(0, 0), d(1, 0), d(0, 1), d(1, 1));
                let (uxx, uyy, uxxx, uyyy) = (d(2, 0), d(0, 2), d(3, 0), d(0, 3));
                u * uxy * uxy + 2.0 * ux * uy * uxy - 8.0 * (ux * ux * uxx + uy * uy * uyy)
                    - 5.0 * u * (uxx * uxx + uyy * uyy)
                    - 14.0 * u * (ux * uxxx + uy * uyyy)
            }
        }
    }
}

/// Expected leading error `coefficient * h^order * shape`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub order: u32,
    pub shape: Shape,
    pub coefficient: f64,
}

/// Leading term of the equivalent PDE minus the Ginzburg-Landau PDE at
/// `gamma = 1`, for the linear part (`alpha = 0`) or the `alpha`-linear part.
pub fn expected_leading(model: AnalyticModel, part: ErrorPart) -> Option<Expectation> {
    use AnalyticModel::*;
    let e = |order, shape, coefficient| {
        Some(Expectation {
            order,
            shape,
            coefficient,
        })
    };
    match (part, model) {
        (ErrorPart::Full, Centered2 | HolisticG2A2) => e(2, Shape::Hyperdiffusion(4), 1.0 / 12.0),
        (ErrorPart::Full, Centered4 | HolisticG3A3) => e(4, Shape::Hyperdiffusion(6), -1.0 / 90.0),
        (ErrorPart::Full, HolisticG4A4) => e(6, Shape::Hyperdiffusion(8), 1.0 / 560.0),
        (ErrorPart::AlphaLinear, HolisticG2A2 | HolisticG3A3) => e(2, Shape::GradientCubic, 0.5),
        (ErrorPart::AlphaLinear, HolisticG4A4) => e(4, Shape::QuarticBracket, 1.0 / 60.0),
        (ErrorPart::AlphaLinear, Centered2 | Centered4) => None,
    }
}

/// Periodic `m x m` grid on `[0, 2 pi)^2`.
pub fn manufactured_grid(m: usize) -> Result<MacroGrid, ConsistencyError> {
    MacroGrid::new(2.0 * PI / m as f64, m, m, Symmetry::Periodic)
        .map_err(|e| ConsistencyError::Model(e.into()))
}

/// Pointwise error `rhs(f) - (lap f + alpha (f - f^3))` of a model at
/// `gamma = 1` on the `m x m` manufactured grid.
pub fn error_field(
    kind: &ModelKind,
    alpha: f64,
    part: ErrorPart,
    f: &ManufacturedField,
    m: usize,
) -> Result<GridField, ConsistencyError> {
    let grid = manufactured_grid(m)?;
    let u = GridField::from_fn(grid, |x, y| f.value(x, y));
    let at = |a: f64| -> Result<GridField, ConsistencyError> {
        let spec = ModelSpec::new(kind.clone(), 1.0, a, grid);
        let rhs = spec.rhs(&u)?;
        let exact = GridField::from_fn(grid, |x, y| f.pde_rhs(a, x, y));
        let mut e = rhs;
        for (v, x) in e.values_mut().iter_mut().zip(exact.values()) {
            *v -= x;
        }
        Ok(e)
    };
    match part {
        ErrorPart::Full => at(alpha),
        ErrorPart::AlphaLinear => {
            if alpha == 0.0 {
                return Err(ConsistencyError::Model(ModelError::InvalidRequest(
                    "the alpha-linear part needs alpha != 0".into(),
                )));
            }
            let (p, q) = (at(alpha)?, at(-alpha)?);
            let vals = p
                .values()
                .iter()
                .zip(q.values())
                .map(|(a, b)| (a - b) / (2.0 * alpha))
                .collect();
            Ok(GridField::from_values(grid, vals).expect("same grid"))
        }
    }
}

/// Max-norm truncation error of a model on its own grid, which must be a
/// periodic grid on `[0, 2 pi)^2`.
pub fn truncation_error(model: &ModelSpec, f: &ManufacturedField) -> Result<f64, ConsistencyError> {
    if model.gamma != 1.0 {
        return Err(ConsistencyError::PartialCoupling(model.gamma));
    }
    let u = GridField::from_fn(model.grid, |x, y| f.value(x, y));
    let rhs = model.rhs(&u)?;
    let g = model.grid;
    Ok(rhs
        .indices()
        .map(|(k, i, j)| (rhs.values()[k] - f.pde_rhs(model.alpha, g.x(i), g.y(j))).abs())
        .fold(0.0, f64::max))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorSample {
    pub m: usize,
    pub h: f64,
    /// Max-norm of the error field.
    pub error: f64,
    /// Least-squares multiple of the expected shape in the error field.
    pub projection: Option<f64>,
    /// `|e - projection * shape|_inf / |e|_inf`: small when the expected shape
    /// is the whole leading error.
    pub misfit: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceFit {
    pub samples: Vec<ErrorSample>,
    /// Indices of the samples used in the fit.
    pub fit_range: (usize, usize),
    /// Least-squares slope of `log error` against `log h`.
    pub order: f64,
    /// `C` in `projection ~ C h^p + D h^(p+2)` with `p` the expected order.
    pub coefficient: Option<f64>,
    pub expected: Option<Expectation>,
    pub warnings: Vec<String>,
}

impl ConvergenceFit {
    /// Relative deviation of the fitted coefficient from the expected one.
    pub fn coefficient_deviation(&self) -> Option<f64> {
        let (c, e) = (self.coefficient?, self.expected?);
        Some(((c - e.coefficient) / e.coefficient).abs())
    }
}

/// Measures errors on `m x m` grids for every `m` of `m_list` (a doubling
/// sequence, so `h` is geometric) and fits order and leading coefficient.
pub fn convergence_order(
    kind: &ModelKind,
    alpha: f64,
    part: ErrorPart,
    f: &ManufacturedField,
    m_list: &[usize],
    expected: Option<Expectation>,
) -> Result<ConvergenceFit, ConsistencyError> {
    if m_list.len() < 4 {
        return Err(ConsistencyError::TooFewPoints {
            needed: 4,
            found: m_list.len(),
        });
    }
    let ratio = m_list[1] as f64 / m_list[0] as f64;
    if !(ratio > 1.0)
        || m_list
            .windows(2)
            .any(|w| ((w[1] as f64 / w[0] as f64) - ratio).abs() > 1e-12)
    {
        return Err(ConsistencyError::NotGeometric);
    }
    let mut samples = Vec::with_capacity(m_list.len());
    let mut floor = 0.0f64;
    for &m in m_list {
        let e = error_field(kind, alpha, part, f, m)?;
        let grid = e.grid;
        let scale = e
            .indices()
            .map(|(_, i, j)| f.pde_rhs(alpha, grid.x(i), grid.y(j)).abs())
            .fold(1.0, f64::max);
        floor = floor.max(1e3 * f64::EPSILON * scale / (grid.h * grid.h).min(1.0));
        let fit = expected.map(|x| {
            let shape: Vec<f64> = e.indices().map(|(_, i, j)| x.shape.eval(f, grid.x(i), grid.y(j))).collect();
            let num: f64 = shape.iter().zip(e.values()).map(|(s, v)| s * v).sum();
            let den: f64 = shape.iter().map(|s| s * s).sum();
            let p = num / den;
            let rest = shape
                .iter()
                .zip(e.values())
                .map(|(s, v)| (v - p * s).abs())
                .fold(0.0, f64::max);
            (p, rest / e.max_abs())
        });
        samples.push(ErrorSample {
            m,
            h: grid.h,
            error: e.max_abs(),
            projection: fit.map(|x| x.0),
            misfit: fit.map(|x| x.1),
        });
    }
    let mut warnings = Vec::new();
    // the fit stops at the round-off floor or where errors stop decreasing
    let mut end = samples.len();
    for (k, s) in samples.iter().enumerate() {
        if s.error < floor || (k > 0 && s.error >= samples[k - 1].error) {
            end = k;
            break;
        }
    }
    if end < samples.len() {
        warnings.push(format!(
            "dropped {} finest grid(s) at the round-off floor {floor:.1e}",
            samples.len() - end
        ));
    }
    if end < 3 {
        return Err(ConsistencyError::TooFewPoints { needed: 3, found: end });
    }
    let used = &samples[..end];
    let order = slope(used.iter().map(|s| (s.h.ln(), s.error.ln())));
    let coefficient = expected.map(|x| {
        let p = x.order as i32;
        // two-term least squares on c(h) / h^p = C + D h^2
        let pts: Vec<(f64, f64)> = used
            .iter()
            .map(|s| (s.h * s.h, s.projection.unwrap_or(0.0) / s.h.powi(p)))
            .collect();
        let d = slope(pts.iter().cloned());
        let n = pts.len() as f64;
        let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x / n, b + y / n));
        my - d * mx
    });
    Ok(ConvergenceFit {
        fit_range: (0, end - 1),
        samples,
        order,
        coefficient,
        expected,
        warnings,
    })
}

fn slope(points: impl Iterator<Item = (f64, f64)> + Clone) -> f64 {
    let n = points.clone().count() as f64;
    let (mx, my) = points.clone().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
    let (sxy, sxx) = points.fold((0.0, 0.0), |(a, b), (x, y)| (a + (x - mx) * (y - my), b + (x - mx).powi(2)));
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    fn analytic(m: AnalyticModel) -> ModelKind {
        ModelKind::Analytic(m)
    }

    #[test]
    fn manufactured_derivatives_match_finite_differences() {
        let f = ManufacturedField::mixed(0.7);
        let (x, y, e) = (0.3, 1.1, 1e-4);
        let dx = (f.value(x + e, y) - f.value(x - e, y)) / (2.0 * e);
        assert!((dx - f.derivative(1, 0, x, y)).abs() < 1e-7);
        let lap = (f.value(x + e, y) + f.value(x - e, y) + f.value(x, y + e) + f.value(x, y - e) - 4.0 * f.value(x, y))
            / (e * e);
        let want = f.derivative(2, 0, x, y) + f.derivative(0, 2, x, y);
        assert!((lap - want).abs() < 1e-5);
        let u = f.value(x, y);
        assert!((f.pde_rhs(2.0, x, y) - (want + 2.0 * (u - u * u * u))).abs() < 1e-12);
    }

    #[test]
    fn centered2_error_on_a_sine_mode_is_the_symbol_defect() {
        let f = ManufacturedField::sin_sin(1.0, 1, 1);
        let m = 16;
        let e = error_field(&analytic(AnalyticModel::Centered2), 0.0, ErrorPart::Full, &f, m).unwrap();
        let h = 2.0 * PI / m as f64;
        let defect = 2.0 - 8.0 / (h * h) * (h / 2.0).sin().powi(2);
        let g = e.grid;
        for (k, i, j) in e.indices() {
            let want = defect * g.x(i).sin() * g.y(j).sin();
            assert!((e.values()[k] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn alpha_linear_part_removes_the_diffusion_error() {
        // centered2 reproduces the reaction term exactly, so its alpha-linear
        // error vanishes
        let f = ManufacturedField::mixed(1.0);
        let e = error_field(&analytic(AnalyticModel::Centered2), 3.0, ErrorPart::AlphaLinear, &f, 16).unwrap();
        assert!(e.max_abs() < 1e-12);
        assert!(error_field(&analytic(AnalyticModel::Centered2), 0.0, ErrorPart::AlphaLinear, &f, 16).is_err());
    }

    #[test]
    fn centered2_converges_at_second_order_with_one_twelfth() {
        let f = ManufacturedField::sin_sin(1.0, 1, 1);
        let fit = convergence_order(
            &analytic(AnalyticModel::Centered2),
            0.0,
            ErrorPart::Full,
            &f,
            &[8, 16, 32, 64],
            expected_leading(AnalyticModel::Centered2, ErrorPart::Full),
        )
        .unwrap();
        assert!((fit.order - 2.0).abs() < 0.05);
        assert!(fit.coefficient_deviation().unwrap() < 1e-3);
        assert!(fit.samples.iter().all(|s| s.misfit.unwrap() < 1e-2));
    }

    #[test]
    fn bad_grid_sequences_are_rejected() {
        let f = ManufacturedField::sin_sin(1.0, 1, 1);
        let k = analytic(AnalyticModel::Centered2);
        assert!(matches!(
            convergence_order(&k, 0.0, ErrorPart::Full, &f, &[8, 16, 32], None),
            Err(ConsistencyError::TooFewPoints { .. })
        ));
        assert!(matches!(
            convergence_order(&k, 0.0, ErrorPart::Full, &f, &[8, 16, 24, 32], None),
            Err(ConsistencyError::NotGeometric)
        ));
    }

    #[test]
    fn partial_coupling_is_refused() {
        let grid = manufactured_grid(8).unwrap();
        let spec = ModelSpec::analytic(AnalyticModel::Centered2, 0.5, 0.0, grid);
        assert_eq!(
            truncation_error(&spec, &ManufacturedField::sin_sin(1.0, 1, 1)),
            Err(ConsistencyError::PartialCoupling(0.5))
        );
    }
}
