//! Steady states, their linear stability, and pseudo-arclength continuation in
//! `alpha` with detection of steady-state bifurcations and branch switching.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::ContinuationError;
use crate::grid::GridField;
use crate::models::ModelSpec;

/// Half-width of the band in which the leading eigenvalue counts as zero.
pub const MARGINAL_BAND: f64 = 1e-6;

const NEWTON_ITERATIONS: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    Unstable,
    Marginal,
}

impl Stability {
    fn of(leading: f64) -> Stability {
        if leading > MARGINAL_BAND {
            Stability::Unstable
        } else if leading < -MARGINAL_BAND {
            Stability::Stable
        } else {
            Stability::Marginal
        }
    }
}

/// Spectrum summary of a Jacobian.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// Eigenvalues with the largest real parts, in decreasing order.
    pub leading: Vec<Eigenvalue>,
    /// Number of eigenvalues with positive real part.
    pub unstable: usize,
    /// Real eigenvalue of smallest magnitude (the test function for
    /// steady-state bifurcations).
    pub smallest_real: f64,
}

/// Eigenvalues of a square matrix; symmetric matrices use the symmetric
/// solver.
pub fn eigenvalues(jac: &DMatrix<f64>) -> Vec<Eigenvalue> {
    let scale = jac.amax().max(1.0);
    let symmetric = (jac - jac.transpose()).amax() <= 1e-12 * scale;
    let mut out: Vec<Eigenvalue> = if symmetric {
        SymmetricEigen::new(jac.clone())
            .eigenvalues
            .iter()
            .map(|&re| Eigenvalue { re, im: 0.0 })
            .collect()
    } else {
        jac.complex_eigenvalues()
            .iter()
            .map(|c| Eigenvalue { re: c.re, im: c.im })
            .collect()
    };
    out.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    out
}

pub fn spectrum(jac: &DMatrix<f64>, k: usize) -> Spectrum {
    let all = eigenvalues(jac);
    let scale = jac.amax().max(1.0);
    let unstable = all.iter().filter(|e| e.re > 0.0).count();
    let smallest_real = all
        .iter()
        .filter(|e| e.im.abs() <= 1e-9 * scale)
        .map(|e| e.re)
        .min_by(|a, b| a.abs().total_cmp(&b.abs()))
        .unwrap_or(f64::INFINITY);
    Spectrum {
        leading: all.into_iter().take(k).collect(),
        unstable,
        smallest_real,
    }
}

/// A converged steady state.
#[derive(Clone, Debug)]
pub struct Equilibrium {
    pub u: GridField,
    pub alpha: f64,
    pub model: ModelSpec,
    /// `max |rhs(u)|`.
    pub residual_norm: f64,
    pub spectrum: Spectrum,
    pub stability: Stability,
    pub newton_iterations: usize,
}

impl Equilibrium {
    /// Root-mean-square of the grid values, the solution measure of all
    /// diagrams.
    pub fn norm(&self) -> f64 {
        self.u.rms()
    }
}

/// Leading `k` eigenvalues of the Jacobian at an equilibrium.
pub fn stability(eq: &Equilibrium, k: usize) -> Result<Vec<Eigenvalue>, ContinuationError> {
    let jac = eq.model.jacobian(&eq.u)?;
    Ok(spectrum(&jac, k).leading)
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn equilibrium(model: &ModelSpec, u: GridField, iterations: usize, leading: usize) -> Result<Equilibrium, ContinuationError> {
    let residual_norm = model.rhs(&u)?.max_abs();
    let spectrum = spectrum(&model.jacobian(&u)?, leading);
    let top = spectrum.leading.first().map_or(f64::NEG_INFINITY, |e| e.re);
    Ok(Equilibrium {
        alpha: model.alpha,
        model: model.clone(),
        u,
        residual_norm,
        stability: Stability::of(top),
        spectrum,
        newton_iterations: iterations,
    })
}

/// Damped Newton iteration on `rhs(u) = 0` at fixed `alpha`, with the exact
/// Jacobian and a backtracking line search on `|rhs|_2`.
pub fn newton_solve(model: &ModelSpec, u0: &GridField, alpha: f64, tol: f64) -> Result<Equilibrium, ContinuationError> {
    if !(tol > 0.0) {
        return Err(ContinuationError::InvalidRequest(format!("tolerance must be positive, got {tol}")));
    }
    let model = model.with_alpha(alpha);
    let mut u = u0.clone();
    let mut f = model.rhs(&u)?;
    for it in 0..NEWTON_ITERATIONS {
        if f.max_abs() <= tol {
            return equilibrium(&model, u, it, 6);
        }
        let jac = model.jacobian(&u)?;
        let rhs = -DVector::from_column_slice(f.values());
        let du = jac.lu().solve(&rhs).ok_or(ContinuationError::SingularJacobian)?;
        if du.iter().any(|v| !v.is_finite()) {
            return Err(ContinuationError::SingularJacobian);
        }
        let f_norm = norm2(f.values());
        let mut lambda = 1.0;
        loop {
            let mut trial = u.clone();
            for (t, d) in trial.values_mut().iter_mut().zip(du.iter()) {
                *t += lambda * d;
            }
            let ft = model.rhs(&trial)?;
            if norm2(ft.values()) <= (1.0 - 1e-4 * lambda) * f_norm || lambda < 1e-3 {
                u = trial;
                f = ft;
                break;
            }
            lambda *= 0.5;
        }
    }
    if f.max_abs() <= tol {
        return equilibrium(&model, u, NEWTON_ITERATIONS, 6);
    }
    Err(ContinuationError::NewtonFailed {
        iterations: NEWTON_ITERATIONS,
        residual: f.max_abs(),
    })
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuationConfig {
    pub alpha_min: f64,
    pub alpha_max: f64,
    /// Initial arclength step.
    pub ds: f64,
    pub ds_min: f64,
    pub ds_max: f64,
    pub max_points: usize,
    pub tol: f64,
    /// Number of leading eigenvalues stored per point.
    pub leading: usize,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        ContinuationConfig {
            alpha_min: 0.0,
            alpha_max: 30.0,
            ds: 0.1,
            ds_min: 1e-8,
            ds_max: 0.5,
            max_points: 2000,
            tol: 1e-10,
            leading: 6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub alpha: f64,
    pub u: GridField,
    /// Root-mean-square of `u`.
    pub norm: f64,
    pub arclength: f64,
    pub residual_norm: f64,
    pub stability: Stability,
    pub unstable: usize,
    pub leading: Vec<Eigenvalue>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BifurcationKind {
    /// A real eigenvalue crosses zero while `alpha` keeps increasing.
    BranchPoint,
    /// Turning point in `alpha`.
    Fold,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bifurcation {
    pub alpha: f64,
    pub kind: BifurcationKind,
    /// Index of the branch point just before the crossing.
    pub after_point: usize,
    pub u: GridField,
    /// Null vector of the Jacobian at the located point, unit RMS.
    pub eigenvector: GridField,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub label: String,
    pub points: Vec<BranchPoint>,
    /// Parity changes of the unstable eigenvalue count.
    pub bifurcations: Vec<Bifurcation>,
    /// Why continuation ended early, if it did.
    pub stopped: Option<String>,
}

impl Branch {
    /// Every change in the unstable eigenvalue count, including even ones
    /// (simultaneous crossings of symmetric mode pairs) that the parity test
    /// does not report as bifurcations: `(alpha before, alpha after, count
    /// before, count after)`.
    pub fn count_changes(&self) -> Vec<(f64, f64, usize, usize)> {
        self.points
            .windows(2)
            .filter(|w| w[0].unstable != w[1].unstable)
            .map(|w| (w[0].alpha, w[1].alpha, w[0].unstable, w[1].unstable))
            .collect()
    }
}

/// State `(u, alpha)` of the extended system with the inner product
/// `<x, y> = u.v / N + alpha beta`.
#[derive(Clone, Debug)]
struct Ext {
    u: DVector<f64>,
    alpha: f64,
}

impl Ext {
    fn dot(&self, other: &Ext) -> f64 {
        self.u.dot(&other.u) / self.u.len() as f64 + self.alpha * other.alpha
    }

    fn normalized(mut self) -> Ext {
        let n = self.dot(&self).sqrt();
        self.u /= n;
        self.alpha /= n;
        self
    }

    fn axpy(&self, s: f64, t: &Ext) -> Ext {
        Ext {
            u: &self.u + &t.u * s,
            alpha: self.alpha + s * t.alpha,
        }
    }
}

struct Continuer<'a> {
    model: &'a ModelSpec,
    cfg: ContinuationConfig,
}

impl Continuer<'_> {
    fn field(&self, u: &DVector<f64>) -> GridField {
        GridField::from_values(self.model.grid, u.as_slice().to_vec()).expect("state length matches grid")
    }

    /// Bordered matrix `[[J, F_alpha], [t_u^T / N, t_alpha]]` at `x`.
    fn bordered(&self, x: &Ext, t: &Ext) -> Result<(DMatrix<f64>, DVector<f64>), ContinuationError> {
        let model = self.model.with_alpha(x.alpha);
        let u = self.field(&x.u);
        let n = x.u.len();
        let jac = model.jacobian(&u)?;
        let fa = model.rhs_alpha(&u)?;
        let f = model.rhs(&u)?;
        let mut m = DMatrix::zeros(n + 1, n + 1);
        m.view_mut((0, 0), (n, n)).copy_from(&jac);
        for r in 0..n {
            m[(r, n)] = fa.values()[r];
            m[(n, r)] = t.u[r] / n as f64;
        }
        m[(n, n)] = t.alpha;
        Ok((m, DVector::from_column_slice(f.values())))
    }

    fn tangent(&self, x: &Ext, prev: &Ext) -> Result<Ext, ContinuationError> {
        let (m, _) = self.bordered(x, prev)?;
        let n = x.u.len();
        let mut rhs = DVector::zeros(n + 1);
        rhs[n] = 1.0;
        let z = m.lu().solve(&rhs).ok_or(ContinuationError::SingularJacobian)?;
        Ok(Ext {
            u: z.rows(0, n).into_owned(),
            alpha: z[n],
        }
        .normalized())
    }

    /// Newton corrector on `F = 0`, `<t, x - pred> = 0`.
    fn correct(&self, pred: &Ext, t: &Ext) -> Option<(Ext, usize)> {
        let n = pred.u.len();
        let mut x = pred.clone();
        for it in 1..=10 {
            let (m, f) = self.bordered(&x, t).ok()?;
            let d = Ext {
                u: &x.u - &pred.u,
                alpha: x.alpha - pred.alpha,
            };
            let mut rhs = DVector::zeros(n + 1);
            rhs.rows_mut(0, n).copy_from(&(-&f));
            rhs[n] = -t.dot(&d);
            let dx = m.lu().solve(&rhs)?;
            if dx.iter().any(|v| !v.is_finite()) {
                return None;
            }
            x.u += dx.rows(0, n);
            x.alpha += dx[n];
            let f_new = self.model.with_alpha(x.alpha).rhs(&self.field(&x.u)).ok()?;
            let step = inf_norm(dx.as_slice());
            if f_new.max_abs() <= self.cfg.tol && step <= 1e-8 * (1.0 + inf_norm(x.u.as_slice())) {
                return Some((x, it));
            }
            if f_new.max_abs() <= self.cfg.tol * 1e-2 {
                return Some((x, it));
            }
        }
        None
    }

    fn point(&self, x: &Ext, arclength: f64) -> Result<(BranchPoint, f64), ContinuationError> {
        let model = self.model.with_alpha(x.alpha);
        let u = self.field(&x.u);
        let spec = spectrum(&model.jacobian(&u)?, self.cfg.leading);
        let top = spec.leading.first().map_or(f64::NEG_INFINITY, |e| e.re);
        Ok((
            BranchPoint {
                alpha: x.alpha,
                norm: u.rms(),
                residual_norm: model.rhs(&u)?.max_abs(),
                u,
                arclength,
                stability: Stability::of(top),
                unstable: spec.unstable,
                leading: spec.leading,
            },
            spec.smallest_real,
        ))
    }

    fn spectrum_at(&self, x: &Ext) -> Result<Spectrum, ContinuationError> {
        let model = self.model.with_alpha(x.alpha);
        Ok(spectrum(&model.jacobian(&self.field(&x.u))?, 1))
    }

    /// Locates the crossing between `x0` (unstable count `n0`, real
    /// eigenvalue nearest zero `f0`) and the point at arclength `s1` along
    /// `t` (value `f1`).  When the eigenvalue nearest zero differs at the two
    /// ends, the bracket is first bisected on the parity of the unstable
    /// count; the zero is then refined by the Illinois variant of regula
    /// falsi.
    fn locate(&self, x0: &Ext, t: &Ext, n0: usize, f0: f64, s1: f64, f1: f64) -> Result<Ext, ContinuationError> {
        let (mut a, mut fa, mut b, mut fb) = (0.0, f0, s1, f1);
        let mut best = self
            .correct(&x0.axpy(s1, t), t)
            .map(|p| p.0)
            .ok_or(ContinuationError::SingularJacobian)?;
        for _ in 0..50 {
            if fa.signum() != fb.signum() || (b - a).abs() <= 1e-12 * (1.0 + s1.abs()) {
                break;
            }
            let s = 0.5 * (a + b);
            let Some((x, _)) = self.correct(&x0.axpy(s, t), t) else { break };
            let spec = self.spectrum_at(&x)?;
            if spec.unstable % 2 == n0 % 2 {
                a = s;
                fa = spec.smallest_real;
            } else {
                b = s;
                fb = spec.smallest_real;
                best = x;
            }
        }
        if fa.signum() == fb.signum() {
            return Ok(best);
        }
        let mut side = 0;
        for _ in 0..60 {
            if (b - a).abs() <= 1e-12 * (1.0 + s1.abs()) {
                break;
            }
            let s = (a * fb - b * fa) / (fb - fa);
            let Some((x, _)) = self.correct(&x0.axpy(s, t), t) else { break };
            let fs = self.spectrum_at(&x)?.smallest_real;
            best = x;
            if fs == 0.0 || fs.abs() < 1e-11 {
                break;
            }
            if fs.signum() == fa.signum() {
                a = s;
                fa = fs;
                if side == -1 {
                    fb /= 2.0;
                }
                side = -1;
            } else {
                b = s;
                fb = fs;
                if side == 1 {
                    fa /= 2.0;
                }
                side = 1;
            }
        }
        Ok(best)
    }

    /// Unit-RMS null vector of the Jacobian at `x` by inverse iteration.
    fn null_vector(&self, x: &Ext) -> Result<GridField, ContinuationError> {
        let model = self.model.with_alpha(x.alpha);
        let u = self.field(&x.u);
        let jac = model.jacobian(&u)?;
        let n = jac.nrows();
        let lambda = spectrum(&jac, 1).smallest_real;
        let shift = lambda + 1e-9 * jac.amax().max(1.0);
        let lu = (jac - DMatrix::identity(n, n) * shift).lu();
        let mut v = DVector::from_fn(n, |i, _| 1.0 + 0.1 * ((i * 7919) % 13) as f64);
        for _ in 0..4 {
            let w = lu.solve(&v).ok_or(ContinuationError::SingularJacobian)?;
            v = &w / w.norm();
        }
        let rms = v.norm() / (n as f64).sqrt();
        let k = v.iamax();
        let sign = v[k].signum();
        Ok(GridField::from_values(u.grid, v.iter().map(|x| sign * x / rms).collect())?)
    }

    fn run(&self, start: Ext, tangent: Ext, label: &str, from_bifurcation: bool) -> Result<Branch, ContinuationError> {
        let cfg = self.cfg;
        let mut branch = Branch {
            label: label.to_string(),
            points: Vec::new(),
            bifurcations: Vec::new(),
            stopped: None,
        };
        let in_range = |a: f64| a >= cfg.alpha_min - 1e-12 && a <= cfg.alpha_max + 1e-12;
        let (p0, mut f_prev) = self.point(&start, 0.0)?;
        branch.points.push(p0);
        let mut x = start;
        let mut t = tangent.normalized();
        let mut ds = cfg.ds;
        let mut arclength = 0.0;
        while branch.points.len() < cfg.max_points {
            let Some((x_new, iters)) = self.correct(&x.axpy(ds, &t), &t) else {
                ds /= 2.0;
                if ds < cfg.ds_min {
                    branch.stopped = Some(format!("step fell below {:e} at alpha = {}", cfg.ds_min, x.alpha));
                    break;
                }
                continue;
            };
            if !in_range(x_new.alpha) {
                break;
            }
            let t_new = self.tangent(&x_new, &t)?;
            arclength += ds;
            let (p, f_new) = self.point(&x_new, arclength)?;
            let prev = branch.points.last().expect("branch has a start point");
            // a start on a bifurcation has an eigenvalue at zero, so its count
            // is not comparable
            let skip = from_bifurcation && branch.points.len() == 1;
            if !skip && prev.unstable % 2 != p.unstable % 2 {
                let kind = if t.alpha * t_new.alpha < 0.0 {
                    BifurcationKind::Fold
                } else {
                    BifurcationKind::BranchPoint
                };
                let at = self.locate(&x, &t, prev.unstable, f_prev, ds, f_new)?;
                branch.bifurcations.push(Bifurcation {
                    alpha: at.alpha,
                    kind,
                    after_point: branch.points.len() - 1,
                    u: self.field(&at.u),
                    eigenvector: self.null_vector(&at)?,
                });
            }
            branch.points.push(p);
            f_prev = f_new;
            x = x_new;
            t = t_new;
            if iters <= 3 {
                ds = (ds * 1.5).min(cfg.ds_max);
            } else if iters >= 6 {
                ds /= 2.0;
            }
        }
        Ok(branch)
    }
}

/// Pseudo-arclength continuation from a converged equilibrium, initially in
/// the direction of increasing `alpha`.
pub fn continue_branch(
    model: &ModelSpec,
    start: &Equilibrium,
    cfg: ContinuationConfig,
    label: &str,
) -> Result<Branch, ContinuationError> {
    check_config(&cfg)?;
    let c = Continuer { model, cfg };
    let x = Ext {
        u: DVector::from_column_slice(start.u.values()),
        alpha: start.alpha,
    };
    let guess = Ext {
        u: DVector::zeros(x.u.len()),
        alpha: 1.0,
    };
    let mut t = c.tangent(&x, &guess)?;
    if t.alpha < 0.0 {
        t.u = -t.u;
        t.alpha = -t.alpha;
    }
    c.run(x, t, label, false)
}

/// Continues the branch that leaves a located bifurcation along its critical
/// eigenvector (`sign` picks one of the two pitchfork halves).  The first step
/// has size `1e-3 h`.
pub fn switch_branch(
    model: &ModelSpec,
    bif: &Bifurcation,
    sign: f64,
    cfg: ContinuationConfig,
    label: &str,
) -> Result<Branch, ContinuationError> {
    check_config(&cfg)?;
    let cfg = ContinuationConfig {
        ds: 1e-3 * model.h(),
        ..cfg
    };
    let c = Continuer { model, cfg };
    let x = Ext {
        u: DVector::from_column_slice(bif.u.values()),
        alpha: bif.alpha,
    };
    let t = Ext {
        u: DVector::from_column_slice(bif.eigenvector.values()) * sign,
        alpha: 0.0,
    };
    c.run(x, t, label, true)
}

fn check_config(cfg: &ContinuationConfig) -> Result<(), ContinuationError> {
    if !(cfg.alpha_max > cfg.alpha_min) || !(cfg.ds > 0.0) || !(cfg.ds_max >= cfg.ds_min) || !(cfg.tol > 0.0) {
        return Err(ContinuationError::InvalidRequest(format!("inconsistent continuation settings {cfg:?}")));
    }
    Ok(())
}

/// Norm discrepancy between two branches over their common `alpha` range.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Discrepancy {
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub max: f64,
    pub mean: f64,
    /// `max` divided by the largest norm of either branch in the range.
    pub relative: f64,
    pub samples: usize,
}

/// Norm of a branch at `alpha` by linear interpolation on the first segment
/// bracketing it.
fn norm_at(b: &Branch, alpha: f64) -> Option<f64> {
    b.points.windows(2).find_map(|w| {
        let (a0, a1) = (w[0].alpha, w[1].alpha);
        if (a0 - alpha) * (a1 - alpha) <= 0.0 && a0 != a1 {
            let s = (alpha - a0) / (a1 - a0);
            Some(w[0].norm + s * (w[1].norm - w[0].norm))
        } else if a0 == alpha {
            Some(w[0].norm)
        } else {
            None
        }
    })
}

/// Compares branch norms at every point of either branch inside the common
/// `alpha` range, optionally clipped to `[lo, hi]`.
pub fn diagram_compare(a: &Branch, b: &Branch, clip: Option<(f64, f64)>) -> Result<Discrepancy, ContinuationError> {
    let range = |br: &Branch| {
        br.points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.alpha), hi.max(p.alpha))
        })
    };
    let (alo, ahi) = range(a);
    let (blo, bhi) = range(b);
    let (mut lo, mut hi) = (alo.max(blo), ahi.min(bhi));
    if let Some((cl, ch)) = clip {
        lo = lo.max(cl);
        hi = hi.min(ch);
    }
    if !(hi > lo) {
        return Err(ContinuationError::DisjointRanges);
    }
    let mut diffs = Vec::new();
    let mut top: f64 = 0.0;
    for (x, y) in [(a, b), (b, a)] {
        for p in x.points.iter().filter(|p| p.alpha >= lo && p.alpha <= hi) {
            if let Some(other) = norm_at(y, p.alpha) {
                diffs.push((p.norm - other).abs());
                top = top.max(p.norm).max(other);
            }
        }
    }
    if diffs.is_empty() {
        return Err(ContinuationError::DisjointRanges);
    }
    let max = diffs.iter().cloned().fold(0.0, f64::max);
    Ok(Discrepancy {
        alpha_min: lo,
        alpha_max: hi,
        max,
        mean: diffs.iter().sum::<f64>() / diffs.len() as f64,
        relative: if top > 0.0 { max / top } else { 0.0 },
        samples: diffs.len(),
    })
}

/// The trivial branch `u = 0` from `cfg.alpha_min` upward.
pub fn trivial_branch(model: &ModelSpec, cfg: ContinuationConfig) -> Result<Branch, ContinuationError> {
    let start = newton_solve(model, &GridField::zeros(model.grid), cfg.alpha_min, cfg.tol)?;
    continue_branch(model, &start, cfg, "trivial")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalogue::AnalyticModel;
    use crate::grid::MacroGrid;

    fn centered2(m: usize) -> ModelSpec {
        ModelSpec::analytic(AnalyticModel::Centered2, 1.0, 0.0, MacroGrid::odd_square(m).unwrap())
    }

    /// Eigenvalue of `-delta^2 / h^2` for the odd mode `sin(kx) sin(ly)`.
    fn laplace_eigen(m: usize, k: usize, l: usize) -> f64 {
        let h = std::f64::consts::PI / m as f64;
        let mu = |k: usize| 4.0 / (h * h) * (k as f64 * h / 2.0).sin().powi(2);
        mu(k) + mu(l)
    }

    #[test]
    fn eigenvalues_of_a_rotation_block() {
        let j = DMatrix::from_row_slice(3, 3, &[1.0, -2.0, 0.0, 2.0, 1.0, 0.0, 0.0, 0.0, -3.0]);
        let s = spectrum(&j, 3);
        assert_eq!(s.unstable, 2);
        assert!((s.leading[0].re - 1.0).abs() < 1e-12);
        assert!((s.leading[0].im.abs() - 2.0).abs() < 1e-12);
        assert!((s.smallest_real + 3.0).abs() < 1e-12 || (s.smallest_real - 1.0).abs() < 1e-12);
    }

    #[test]
    fn newton_finds_the_zero_state_and_a_nontrivial_one() {
        let model = centered2(6);
        let z = newton_solve(&model, &GridField::zeros(model.grid), 1.0, 1e-12).unwrap();
        assert_eq!(z.norm(), 0.0);
        assert_eq!(z.stability, Stability::Stable);
        let guess = GridField::from_fn(model.grid, |x, y| 0.8 * x.sin() * y.sin());
        let eq = newton_solve(&model, &guess, 6.0, 1e-12).unwrap();
        assert!(eq.residual_norm < 1e-10);
        assert!(eq.norm() > 0.1);
        assert!(eq.u.values().iter().all(|v| *v > 0.0));
        assert_eq!(eq.stability, Stability::Stable);
    }

    #[test]
    fn trivial_branch_bifurcates_at_the_discrete_laplace_eigenvalues() {
        // odd m keeps the (k, k) modes apart from the pairs mu_k + mu_(m-k)
        let m = 5;
        let model = centered2(m);
        let cfg = ContinuationConfig {
            alpha_max: 20.0,
            ..Default::default()
        };
        let b = trivial_branch(&model, cfg).unwrap();
        // simple modes (k, k) are reported, symmetric pairs (k, l != k) are
        // double crossings seen only by the eigenvalue count
        let simple: Vec<f64> = (1..m).map(|k| laplace_eigen(m, k, k)).filter(|&a| a < 20.0).collect();
        assert_eq!(b.bifurcations.len(), simple.len());
        for (f, want) in b.bifurcations.iter().zip(&simple) {
            assert!((f.alpha - want).abs() < 1e-6 * want, "{} vs {want}", f.alpha);
            assert_eq!(f.kind, BifurcationKind::BranchPoint);
        }
        let pair = laplace_eigen(m, 1, 2);
        assert!(b
            .count_changes()
            .iter()
            .any(|&(a0, a1, c0, c1)| a0 < pair && pair <= a1 && c1 == c0 + 2));
        assert!(b.points.iter().all(|p| p.norm == 0.0));
    }

    #[test]
    fn unimodal_branch_is_a_stable_supercritical_pitchfork() {
        let model = centered2(6);
        let cfg = ContinuationConfig {
            alpha_max: 10.0,
            ..Default::default()
        };
        let tb = trivial_branch(&model, cfg).unwrap();
        let first = &tb.bifurcations[0];
        let b = switch_branch(&model, first, 1.0, cfg, "uni").unwrap();
        assert!(b.points.len() > 5);
        assert!(b.points.iter().all(|p| p.alpha >= first.alpha - 1e-6));
        assert!(b.points.windows(2).all(|w| w[1].norm >= w[0].norm - 1e-12));
        assert!(b
            .points
            .iter()
            .skip(3)
            .all(|p| p.stability == Stability::Stable && p.residual_norm < 1e-8));
        // the mirrored half of the pitchfork has the same norms
        let m = switch_branch(&model, first, -1.0, cfg, "mirror").unwrap();
        let d = diagram_compare(&b, &m, None).unwrap();
        assert!(d.relative < 1e-6);
    }

    #[test]
    fn diagram_of_a_branch_with_itself_is_exact() {
        let model = centered2(4);
        let cfg = ContinuationConfig {
            alpha_max: 8.0,
            ..Default::default()
        };
        let tb = trivial_branch(&model, cfg).unwrap();
        let b = switch_branch(&model, &tb.bifurcations[0], 1.0, cfg, "uni").unwrap();
        let d = diagram_compare(&b, &b, None).unwrap();
        assert_eq!(d.max, 0.0);
        let far = Branch {
            points: b.points.iter().map(|p| BranchPoint { alpha: p.alpha + 100.0, ..p.clone() }).collect(),
            ..b.clone()
        };
        assert_eq!(diagram_compare(&b, &far, None), Err(ContinuationError::DisjointRanges));
    }

    #[test]
    fn bad_settings_are_rejected() {
        let model = centered2(4);
        let cfg = ContinuationConfig {
            alpha_max: -1.0,
            ..Default::default()
        };
        assert!(matches!(trivial_branch(&model, cfg), Err(ContinuationError::InvalidRequest(_))));
    }
}
