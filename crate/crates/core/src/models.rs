//! Right-hand sides of the macroscale models, their Jacobians, explicit time
//! integration and evaluation of constructed subgrid fields.

use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::catalogue::{AnalyticModel, Factor};
use crate::error::ModelError;
use crate::grid::{CompiledStencil, GridField, MacroGrid};
use crate::scalar::Scalar;
use crate::subgrid::{
    CoefficientTable, MacroSymbol, Monomial, Series2, SubgridManifold, Truncation,
};

/// One monomial of a constructed model: `value * prod u[di,dj]^e`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructedTerm {
    pub monomial: Vec<(i8, i8, u8)>,
    pub value: f64,
    /// Exact coefficient when the model came from a rational construction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructedSlot {
    pub a: usize,
    pub b: usize,
    pub terms: Vec<ConstructedTerm>,
}

/// A dictionary coefficient of a constructed model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DictionaryCoefficient {
    pub a: usize,
    pub b: usize,
    pub name: String,
    pub value: f64,
    pub exact: String,
}

/// The evolution `g` of a subgrid construction, in a form that can be saved,
/// loaded and evaluated on a grid.
#[derive(Debug, Serialize, Deserialize)]
pub struct ConstructedModel {
    pub n: usize,
    pub truncation: Truncation,
    pub slots: Vec<ConstructedSlot>,
    #[serde(default)]
    pub dictionary: Vec<DictionaryCoefficient>,
    #[serde(skip)]
    compiled: OnceLock<Compiled>,
}

impl Clone for ConstructedModel {
    fn clone(&self) -> Self {
        ConstructedModel {
            n: self.n,
            truncation: self.truncation,
            slots: self.slots.clone(),
            dictionary: self.dictionary.clone(),
            compiled: OnceLock::new(),
        }
    }
}

impl PartialEq for ConstructedModel {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.truncation == other.truncation
            && self.slots == other.slots
            && self.dictionary == other.dictionary
    }
}

impl ConstructedModel {
    pub fn from_series<C: Scalar>(n: usize, g: &Series2<C>) -> Self {
        let slots = g
            .slots()
            .map(|((a, b), p)| ConstructedSlot {
                a,
                b,
                terms: p
                    .terms()
                    .map(|(m, c)| ConstructedTerm {
                        monomial: m.factors().iter().map(|(s, e)| (s.di, s.dj, *e)).collect(),
                        value: c.to_f64(),
                        exact: C::EXACT.then(|| c.to_exact_string()),
                    })
                    .collect(),
            })
            .collect();
        ConstructedModel {
            n,
            truncation: g.truncation(),
            slots,
            dictionary: Vec::new(),
            compiled: OnceLock::new(),
        }
    }

    pub fn with_dictionary<C: Scalar>(mut self, table: &CoefficientTable<C>) -> Self {
        self.dictionary = table
            .slots
            .iter()
            .flat_map(|fit| {
                fit.names.iter().zip(&fit.coeffs).map(move |(name, c)| DictionaryCoefficient {
                    a: fit.a,
                    b: fit.b,
                    name: name.clone(),
                    value: c.to_f64(),
                    exact: c.to_exact_string(),
                })
            })
            .collect();
        self
    }

    /// `g` as a float series.
    pub fn series(&self) -> Series2<f64> {
        let mut g = Series2::zero(self.truncation);
        for slot in &self.slots {
            let p = g.get_mut(slot.a, slot.b);
            for t in &slot.terms {
                let m = Monomial::from_factors(
                    t.monomial
                        .iter()
                        .map(|&(di, dj, e)| (MacroSymbol { di, dj }, e))
                        .collect(),
                );
                p.add_term(m, t.value);
            }
        }
        g
    }

    fn compiled(&self) -> &Compiled {
        self.compiled.get_or_init(|| {
            Compiled::Monomials(
                self.slots
                    .iter()
                    .map(|s| MonomialSlot {
                        a: s.a,
                        b: s.b,
                        terms: s
                            .terms
                            .iter()
                            .map(|t| {
                                (
                                    t.value,
                                    t.monomial
                                        .iter()
                                        .map(|&(di, dj, e)| (di as isize, dj as isize, e as i32))
                                        .collect(),
                                )
                            })
                            .collect(),
                    })
                    .collect(),
            )
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "model", rename_all = "snake_case")]
pub enum ModelKind {
    Analytic(AnalyticModel),
    Constructed(Arc<ConstructedModel>),
}

impl ModelKind {
    pub fn name(&self) -> String {
        match self {
            ModelKind::Analytic(m) => m.name().to_string(),
            ModelKind::Constructed(c) => format!("constructed(n={}, {})", c.n, c.truncation),
        }
    }
}

/// A model with its parameters on a particular grid.
#[derive(Clone, Debug)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub gamma: f64,
    pub alpha: f64,
    pub grid: MacroGrid,
    compiled: Arc<Compiled>,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, gamma: f64, alpha: f64, grid: MacroGrid) -> Self {
        let compiled = match &kind {
            ModelKind::Analytic(m) => Arc::new(Compiled::factored(*m)),
            ModelKind::Constructed(c) => Arc::new(c.compiled().clone()),
        };
        ModelSpec {
            kind,
            gamma,
            alpha,
            grid,
            compiled,
        }
    }

    pub fn analytic(model: AnalyticModel, gamma: f64, alpha: f64, grid: MacroGrid) -> Self {
        Self::new(ModelKind::Analytic(model), gamma, alpha, grid)
    }

    pub fn with_alpha(&self, alpha: f64) -> Self {
        ModelSpec {
            alpha,
            ..self.clone()
        }
    }

    pub fn h(&self) -> f64 {
        self.grid.h
    }

    /// Conditions worth recording next to any output of the model.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(0.0..=1.0).contains(&self.gamma) {
            out.push(format!("gamma = {} lies outside the physical range [0, 1]", self.gamma));
        }
        out
    }

    /// Largest RK4 step allowed by [`integrate`]: `0.2 h^2 / gamma`.
    pub fn stability_bound(&self) -> f64 {
        if self.gamma.abs() > 0.0 {
            0.2 * self.h() * self.h() / self.gamma.abs()
        } else {
            f64::INFINITY
        }
    }

    fn slot_scale(&self, a: usize, b: usize) -> f64 {
        self.gamma.powi(a as i32) * self.alpha.powi(b as i32) * self.h().powi(2 * b as i32 - 2)
    }

    fn slot_scale_dalpha(&self, a: usize, b: usize) -> f64 {
        if b == 0 {
            0.0
        } else {
            b as f64
                * self.gamma.powi(a as i32)
                * self.alpha.powi(b as i32 - 1)
                * self.h().powi(2 * b as i32 - 2)
        }
    }

    fn check(&self, u: &GridField) -> Result<(), ModelError> {
        if self.grid.same_as(&u.grid) {
            Ok(())
        } else {
            Err(ModelError::DimensionMismatch)
        }
    }

    /// `du/dt` at every stored grid point.
    pub fn rhs(&self, u: &GridField) -> Result<GridField, ModelError> {
        self.check(u)?;
        let values = self.compiled.eval(u, &|a, b| self.slot_scale(a, b));
        Ok(GridField::from_values(u.grid, values)?)
    }

    /// Derivative of the rhs with respect to `alpha`.
    pub fn rhs_alpha(&self, u: &GridField) -> Result<GridField, ModelError> {
        self.check(u)?;
        let values = self.compiled.eval(u, &|a, b| self.slot_scale_dalpha(a, b));
        Ok(GridField::from_values(u.grid, values)?)
    }

    /// Exact Jacobian of the rhs with respect to the stored values.
    pub fn jacobian(&self, u: &GridField) -> Result<DMatrix<f64>, ModelError> {
        self.check(u)?;
        Ok(self.compiled.jacobian(u, &|a, b| self.slot_scale(a, b)))
    }

    /// Forward-difference Jacobian with step `1e-7 * max(1, |u|_inf)`.
    pub fn jacobian_fd(&self, u: &GridField) -> Result<DMatrix<f64>, ModelError> {
        let f0 = self.rhs(u)?;
        let eps = 1e-7 * u.max_abs().max(1.0);
        let n = u.grid.len();
        let mut jac = DMatrix::zeros(n, n);
        let mut up = u.clone();
        for c in 0..n {
            up.values_mut()[c] += eps;
            let f1 = self.rhs(&up)?;
            up.values_mut()[c] = u.values()[c];
            for r in 0..n {
                jac[(r, c)] = (f1.values()[r] - f0.values()[r]) / eps;
            }
        }
        Ok(jac)
    }
}

#[derive(Clone, Debug)]
struct FactoredTerm {
    a: usize,
    b: usize,
    coeff: f64,
    products: Vec<(f64, Vec<usize>)>,
}

#[derive(Clone, Debug)]
struct MonomialSlot {
    a: usize,
    b: usize,
    terms: Vec<(f64, Vec<(isize, isize, i32)>)>,
}

/// Model terms prepared for evaluation on grid fields.
#[derive(Clone, Debug)]
enum Compiled {
    /// Catalogue terms: products of stencils applied to pointwise powers.
    Factored {
        factors: Vec<(Factor, CompiledStencil)>,
        terms: Vec<FactoredTerm>,
    },
    /// Expanded polynomials in neighbouring grid values.
    Monomials(Vec<MonomialSlot>),
}

impl Compiled {
    fn factored(model: AnalyticModel) -> Compiled {
        let mut factors: Vec<(Factor, CompiledStencil)> = Vec::new();
        let mut index = |f: &Factor| match factors.iter().position(|(g, _)| g == f) {
            Some(i) => i,
            None => {
                factors.push((*f, CompiledStencil::new(f.stencil)));
                factors.len() - 1
            }
        };
        let terms = model
            .terms()
            .iter()
            .map(|t| FactoredTerm {
                a: t.a,
                b: t.b,
                coeff: t.coeff_f64(),
                products: t
                    .products
                    .iter()
                    .map(|(w, fs)| (*w as f64, fs.iter().map(&mut index).collect()))
                    .collect(),
            })
            .collect();
        Compiled::Factored { factors, terms }
    }

    fn eval(&self, u: &GridField, scale: &dyn Fn(usize, usize) -> f64) -> Vec<f64> {
        let mut out = vec![0.0; u.grid.len()];
        match self {
            Compiled::Factored { factors, terms } => {
                let fields: Vec<Vec<f64>> = factors
                    .iter()
                    .map(|(f, s)| {
                        u.indices()
                            .map(|(_, i, j)| s.at_power(u, f.power as i32, i, j))
                            .collect()
                    })
                    .collect();
                for t in terms {
                    let c = t.coeff * scale(t.a, t.b);
                    if c == 0.0 {
                        continue;
                    }
                    for (w, fs) in &t.products {
                        for (k, o) in out.iter_mut().enumerate() {
                            *o += c * w * fs.iter().map(|&f| fields[f][k]).product::<f64>();
                        }
                    }
                }
            }
            Compiled::Monomials(slots) => {
                for slot in slots {
                    let s = scale(slot.a, slot.b);
                    if s == 0.0 {
                        continue;
                    }
                    for (k, i, j) in u.indices() {
                        out[k] += s * slot
                            .terms
                            .iter()
                            .map(|(c, m)| {
                                c * m
                                    .iter()
                                    .map(|&(di, dj, e)| u.at(i + di, j + dj).powi(e))
                                    .product::<f64>()
                            })
                            .sum::<f64>();
                    }
                }
            }
        }
        out
    }

    fn jacobian(&self, u: &GridField, scale: &dyn Fn(usize, usize) -> f64) -> DMatrix<f64> {
        let n = u.grid.len();
        let mut jac = DMatrix::zeros(n, n);
        let grid = u.grid;
        let mut add = |row: usize, i: isize, j: isize, v: f64| {
            if let Some((col, sign)) = grid.locate(i, j) {
                jac[(row, col)] += sign * v;
            }
        };
        match self {
            Compiled::Factored { factors, terms } => {
                for (k, i, j) in u.indices() {
                    let vals: Vec<f64> = factors
                        .iter()
                        .map(|(f, s)| s.at_power(u, f.power as i32, i, j))
                        .collect();
                    for t in terms {
                        let c = t.coeff * scale(t.a, t.b);
                        if c == 0.0 {
                            continue;
                        }
                        for (w, fs) in &t.products {
                            for (pos, &f) in fs.iter().enumerate() {
                                let others: f64 = fs
                                    .iter()
                                    .enumerate()
                                    .filter(|&(q, _)| q != pos)
                                    .map(|(_, &g)| vals[g])
                                    .product();
                                let (factor, stencil) = &factors[f];
                                let p = factor.power as i32;
                                for &(di, dj, sw) in stencil.weights() {
                                    let x = u.at(i + di, j + dj);
                                    let d = p as f64 * x.powi(p - 1);
                                    add(k, i + di, j + dj, c * w * others * sw * d);
                                }
                            }
                        }
                    }
                }
            }
            Compiled::Monomials(slots) => {
                for slot in slots {
                    let s = scale(slot.a, slot.b);
                    if s == 0.0 {
                        continue;
                    }
                    for (k, i, j) in u.indices() {
                        for (c, m) in &slot.terms {
                            for (pos, &(di, dj, e)) in m.iter().enumerate() {
                                let others: f64 = m
                                    .iter()
                                    .enumerate()
                                    .filter(|&(q, _)| q != pos)
                                    .map(|(_, &(ei, ej, ee))| u.at(i + ei, j + ej).powi(ee))
                                    .product();
                                let d = e as f64 * u.at(i + di, j + dj).powi(e - 1);
                                add(k, i + di, j + dj, s * c * others * d);
                            }
                        }
                    }
                }
            }
        }
        jac
    }
}

/// Snapshots of an integration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<GridField>,
}

impl Trajectory {
    pub fn last(&self) -> &GridField {
        self.states.last().expect("trajectory holds the initial state")
    }
}

/// Classic RK4 with fixed step `dt` (the last step is shortened to land on
/// `t_end`), keeping every `stride`-th state plus the final one.
pub fn integrate(
    model: &ModelSpec,
    u0: &GridField,
    t_end: f64,
    dt: f64,
    stride: usize,
) -> Result<Trajectory, ModelError> {
    if !(dt > 0.0) || !(t_end >= 0.0) || stride == 0 {
        return Err(ModelError::InvalidRequest(format!(
            "need dt > 0, t_end >= 0 and stride >= 1 (dt = {dt}, t_end = {t_end}, stride = {stride})"
        )));
    }
    let bound = model.stability_bound();
    if dt > bound {
        return Err(ModelError::UnstableStep { dt, bound });
    }
    let steps = (t_end / dt - 1e-9).ceil().max(0.0) as usize;
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![u0.clone()],
    };
    let mut u = u0.clone();
    let mut t = 0.0;
    let axpy = |u: &GridField, k: &GridField, s: f64| -> GridField {
        let mut out = u.clone();
        for (o, kv) in out.values_mut().iter_mut().zip(k.values()) {
            *o += s * kv;
        }
        out
    };
    for step in 1..=steps {
        let h = dt.min(t_end - t);
        let k1 = model.rhs(&u)?;
        let k2 = model.rhs(&axpy(&u, &k1, h / 2.0))?;
        let k3 = model.rhs(&axpy(&u, &k2, h / 2.0))?;
        let k4 = model.rhs(&axpy(&u, &k3, h))?;
        for (idx, o) in u.values_mut().iter_mut().enumerate() {
            *o += h / 6.0
                * (k1.values()[idx] + 2.0 * k2.values()[idx] + 2.0 * k3.values()[idx] + k4.values()[idx]);
        }
        t = if step == steps { t_end } else { t + h };
        if u.values().iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite { step, t });
        }
        if step % stride == 0 || step == steps {
            traj.times.push(t);
            traj.states.push(u.clone());
        }
    }
    Ok(traj)
}

/// Bounds beyond which the truncated series are not trusted.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrustRadii {
    pub gamma: f64,
    /// Bound on `|alpha| h^2`, the expansion variable of the subgrid field.
    pub alpha_h2: f64,
}

impl Default for TrustRadii {
    fn default() -> Self {
        TrustRadii {
            gamma: 1.0,
            alpha_h2: 5.0,
        }
    }
}

/// Subgrid field of every stored element evaluated at numeric grid values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubgridSnapshot {
    pub n: usize,
    pub grid: MacroGrid,
    pub gamma: f64,
    pub alpha: f64,
    /// Per stored element, `(2n+1)^2` node values in row-major `(l, k)`
    /// order; the four excluded corners hold NaN.
    pub elements: Vec<Vec<f64>>,
    /// Largest mismatch between neighbouring elements at the midlines
    /// `x = x_i + h/2`, `y = y_j + h/2` that separate them.
    pub max_jump: f64,
    pub warnings: Vec<String>,
}

impl SubgridSnapshot {
    /// Value of element `e` at node `(k, l)`.
    pub fn node(&self, e: usize, k: i32, l: i32) -> f64 {
        let n = self.n as i32;
        let side = (2 * n + 1) as usize;
        self.elements[e][(l + n) as usize * side + (k + n) as usize]
    }
}

/// Evaluates the subgrid field of the manifold over every element of `u`.
pub fn subgrid_snapshot<C: Scalar>(
    manifold: &SubgridManifold<C>,
    u: &GridField,
    gamma: f64,
    alpha: f64,
    trust: TrustRadii,
) -> SubgridSnapshot {
    let n = manifold.n() as i32;
    let side = (2 * n + 1) as usize;
    let h2 = u.grid.h * u.grid.h;
    let vs: Vec<Option<Series2<f64>>> = (-n..=n)
        .flat_map(|l| (-n..=n).map(move |k| (k, l)))
        .map(|(k, l)| manifold.v_at(k, l).map(|s| s.map_coeffs(|c| c.to_f64())))
        .collect();
    let element = |i: isize, j: isize| -> Vec<f64> {
        let value = |s: MacroSymbol| u.at(i + s.di as isize, j + s.dj as isize);
        vs.iter()
            .map(|v| match v {
                Some(v) => v.eval(gamma, alpha * h2, |_, _| 1.0, &value),
                None => f64::NAN,
            })
            .collect()
    };
    let at = |e: &[f64], k: i32, l: i32| e[(l + n) as usize * side + (k + n) as usize];
    // value at the fractional position n/2 along one axis
    let half = |e: &[f64], sign: i32, l: i32, x_axis: bool| {
        let lo = n / 2;
        let hi = n - n / 2;
        let get = |k: i32| if x_axis { at(e, sign * k, l) } else { at(e, l, sign * k) };
        0.5 * (get(lo) + get(hi))
    };
    let mut elements = Vec::with_capacity(u.grid.len());
    let mut max_jump: f64 = 0.0;
    for (_, i, j) in u.indices() {
        let here = element(i, j);
        for (x_axis, ni, nj) in [(true, i + 1, j), (false, i, j + 1), (true, i - 1, j), (false, i, j - 1)] {
            let there = element(ni, nj);
            let sign = if (ni, nj) > (i, j) { 1 } else { -1 };
            for l in -n / 2..=n / 2 {
                let jump = (half(&here, sign, l, x_axis) - half(&there, -sign, l, x_axis)).abs();
                max_jump = max_jump.max(jump);
            }
        }
        elements.push(here);
    }
    let mut warnings = Vec::new();
    if gamma.abs() > trust.gamma {
        warnings.push(format!("|gamma| = {} exceeds the trust radius {}", gamma.abs(), trust.gamma));
    }
    if (alpha * h2).abs() > trust.alpha_h2 {
        warnings.push(format!(
            "|alpha| h^2 = {:.3} exceeds the trust radius {}",
            (alpha * h2).abs(),
            trust.alpha_h2
        ));
    }
    SubgridSnapshot {
        n: manifold.n(),
        grid: u.grid,
        gamma,
        alpha,
        elements,
        max_jump,
        warnings,
    }
}

/// Model from a float or exact construction, keeping the slots of `g`.
pub fn constructed_spec<C: Scalar>(
    n: usize,
    g: &Series2<C>,
    gamma: f64,
    alpha: f64,
    grid: MacroGrid,
) -> ModelSpec {
    ModelSpec::new(
        ModelKind::Constructed(Arc::new(ConstructedModel::from_series(n, g))),
        gamma,
        alpha,
        grid,
    )
}
