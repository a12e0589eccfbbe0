//! Closed-form macroscale models as lists of stencil terms.
//!
//! A term sits in a slot `(a, b)` and contributes
//! `coeff * gamma^a * alpha^b * h^(2b - 2) * sum_k weight_k * prod_f (S_f u^p_f)`
//! to `du/dt`, where each factor applies a stencil `S_f` to a pointwise power
//! of the grid values.  A braced product `{A}{B}` of two one-directional
//! difference operators is a dot product over the two directions,
//! `A_x B_x + A_y B_y`, and expands to two products.

use serde::{Deserialize, Serialize};

use crate::grid::StencilId;
use crate::scalar::Scalar;
use crate::subgrid::Poly;

/// A stencil applied to a pointwise power of `u` (`Identity` for the plain power).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Factor {
    pub stencil: StencilId,
    pub power: u8,
}

impl Factor {
    pub const fn new(stencil: StencilId, power: u8) -> Self {
        Factor { stencil, power }
    }

    pub fn poly<C: Scalar>(&self) -> Poly<C> {
        Poly::stencil_of_power(&self.stencil.stencil(), self.power)
    }
}

/// One named term of a model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelTerm {
    pub a: usize,
    pub b: usize,
    pub name: String,
    /// Coefficient as an exact fraction.
    pub num: i64,
    pub den: i64,
    /// Weighted products of factors making up the term.
    pub products: Vec<(i64, Vec<Factor>)>,
}

impl ModelTerm {
    pub fn coeff<C: Scalar>(&self) -> C {
        C::from_ratio(self.num, self.den)
    }

    pub fn coeff_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// The term without its coefficient, as a polynomial in the generic
    /// element's grid values.
    pub fn poly<C: Scalar>(&self) -> Poly<C> {
        let mut out = Poly::zero();
        for (w, factors) in &self.products {
            let mut p = Poly::constant(C::one());
            for f in factors {
                p = p.mul(&f.poly());
            }
            out.add_scaled(&p, &C::from_int(*w));
        }
        out
    }

    pub fn factors(&self) -> impl Iterator<Item = &Factor> {
        self.products.iter().flat_map(|(_, f)| f.iter())
    }
}

/// Closed-form models available in the catalogue.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalyticModel {
    /// Second-order central differences.
    Centered2,
    /// Fourth-order Laplacian `delta^2 - delta^4/12`.
    Centered4,
    /// Holistic model with error `O(gamma^2, alpha^2)`.
    HolisticG2A2,
    /// Holistic model with error `O(gamma^3 + alpha^3)`.
    HolisticG3A3,
    /// Holistic model with error `O(gamma^4 + alpha^4)`.
    HolisticG4A4,
}

use StencilId::*;

const fn f(stencil: StencilId, power: u8) -> Factor {
    Factor::new(stencil, power)
}

const U: Factor = f(Identity, 1);
const U2: Factor = f(Identity, 2);
const U4: Factor = f(Identity, 4);

fn term(a: usize, b: usize, name: &str, num: i64, den: i64, products: Vec<(i64, Vec<Factor>)>) -> ModelTerm {
    ModelTerm {
        a,
        b,
        name: name.to_string(),
        num,
        den,
        products,
    }
}

fn single(a: usize, b: usize, name: &str, num: i64, den: i64, factors: Vec<Factor>) -> ModelTerm {
    term(a, b, name, num, den, vec![(1, factors)])
}

/// `{mu delta X} . {mu delta Y}` summed over both directions, with extra
/// scalar factors.
fn dot(x: (StencilId, StencilId), px: u8, y: (StencilId, StencilId), py: u8, extra: &[Factor]) -> Vec<(i64, Vec<Factor>)> {
    let mut fx = vec![f(x.0, px), f(y.0, py)];
    let mut fy = vec![f(x.1, px), f(y.1, py)];
    fx.extend_from_slice(extra);
    fy.extend_from_slice(extra);
    vec![(1, fx), (1, fy)]
}

const MD: (StencilId, StencilId) = (MuDeltaX, MuDeltaY);
const MD3: (StencilId, StencilId) = (MuDelta3X, MuDelta3Y);
const D2: (StencilId, StencilId) = (Delta2X, Delta2Y);
const D4: (StencilId, StencilId) = (Delta4X, Delta4Y);

fn reaction() -> Vec<ModelTerm> {
    vec![
        single(0, 1, "u", 1, 1, vec![U]),
        single(0, 1, "u^3", -1, 1, vec![f(Identity, 3)]),
    ]
}

fn gamma_alpha() -> Vec<ModelTerm> {
    vec![
        single(1, 1, "delta^2 u^3", 1, 12, vec![f(Delta2, 3)]),
        single(1, 1, "u^2 delta^2 u", -1, 4, vec![U2, f(Delta2, 1)]),
    ]
}

fn gamma2_alpha() -> Vec<ModelTerm> {
    let d = 720;
    vec![
        single(2, 1, "u^2 delta^2 u", 222, d, vec![U2, f(Delta2, 1)]),
        single(2, 1, "u^2 delta^4 u", 24, d, vec![U2, f(Delta4, 1)]),
        single(2, 1, "u^2 delta_x^2 delta_y^2 u", -3, d, vec![U2, f(Delta2XDelta2Y, 1)]),
        single(2, 1, "u delta^2 u^2", -102, d, vec![U, f(Delta2, 2)]),
        term(2, 1, "u {delta^2 u}^2", 36, d, dot(D2, 1, D2, 1, &[U])),
        single(2, 1, "u {delta_x^2 u}{delta_y^2 u}", 6, d, vec![U, f(Delta2X, 1), f(Delta2Y, 1)]),
        term(2, 1, "u {mu delta u}^2", -144, d, dot(MD, 1, MD, 1, &[U])),
        single(
            2,
            1,
            "{mu_y delta_y delta_x^2 u}{mu_y delta_y u^2}",
            -6,
            d,
            vec![f(MuDeltaYDelta2X, 1), f(MuDeltaY, 2)],
        ),
        single(
            2,
            1,
            "{mu_x delta_x delta_y^2 u}{mu_x delta_x u^2}",
            -6,
            d,
            vec![f(MuDeltaXDelta2Y, 1), f(MuDeltaX, 2)],
        ),
        term(2, 1, "{mu delta u^2}{mu delta u}", 12, d, dot(MD, 2, MD, 1, &[])),
        term(2, 1, "{mu delta^3 u}{mu delta u^2}", 12, d, dot(MD3, 1, MD, 2, &[])),
        single(
            2,
            1,
            "{delta^2 u^2}{delta_x^2 delta_y^2 u}",
            -3,
            2 * d,
            vec![f(Delta2, 2), f(Delta2XDelta2Y, 1)],
        ),
        term(2, 1, "{delta^4 u}{delta^2 u^2}", 3, d, dot(D4, 1, D2, 2, &[])),
        single(2, 1, "{delta_x^2 u^2}{delta_y^2 u}", -3, d, vec![f(Delta2X, 2), f(Delta2Y, 1)]),
        single(2, 1, "{delta_y^2 u^2}{delta_x^2 u}", -3, d, vec![f(Delta2Y, 2), f(Delta2X, 1)]),
        term(2, 1, "{delta^2 u^2}{delta^2 u}", 9, d, dot(D2, 2, D2, 1, &[])),
        single(2, 1, "delta^4 u^3", -8, d, vec![f(Delta4, 3)]),
        single(2, 1, "delta^2 u^3", -6, d, vec![f(Delta2, 3)]),
        single(2, 1, "delta_x^2 delta_y^2 u^3", 1, d, vec![f(Delta2XDelta2Y, 3)]),
    ]
}

fn gamma_alpha2() -> Vec<ModelTerm> {
    let d = 240;
    vec![
        single(1, 2, "u^4 delta^2 u", 3, d, vec![U4, f(Delta2, 1)]),
        single(1, 2, "u^2 delta^2 u", 6, d, vec![U2, f(Delta2, 1)]),
        single(1, 2, "u^2 delta^2 u^3", -6, d, vec![U2, f(Delta2, 3)]),
        single(1, 2, "delta^2 u^3", -2, d, vec![f(Delta2, 3)]),
        single(1, 2, "delta^2 u^5", 3, d, vec![f(Delta2, 5)]),
    ]
}

impl AnalyticModel {
    pub const ALL: [AnalyticModel; 5] = [
        AnalyticModel::Centered2,
        AnalyticModel::Centered4,
        AnalyticModel::HolisticG2A2,
        AnalyticModel::HolisticG3A3,
        AnalyticModel::HolisticG4A4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AnalyticModel::Centered2 => "centered2",
            AnalyticModel::Centered4 => "centered4",
            AnalyticModel::HolisticG2A2 => "holistic_g2a2",
            AnalyticModel::HolisticG3A3 => "holistic_g3a3",
            AnalyticModel::HolisticG4A4 => "holistic_g4a4",
        }
    }

    /// Every term of the model.  Baseline models put their whole stencil in
    /// slot `(1, 0)` so that `gamma` still scales the diffusion.
    pub fn terms(self) -> Vec<ModelTerm> {
        let diffusion = single(1, 0, "delta^2 u", 1, 1, vec![f(Delta2, 1)]);
        let hyper4 = single(2, 0, "delta^4 u", -1, 12, vec![f(Delta4, 1)]);
        let mut out = vec![];
        match self {
            AnalyticModel::Centered2 => {
                out.push(diffusion);
                out.extend(reaction());
            }
            AnalyticModel::Centered4 => {
                out.push(single(1, 0, "(delta^2 - delta^4/12) u", 1, 1, vec![f(Laplacian4, 1)]));
                out.extend(reaction());
            }
            AnalyticModel::HolisticG2A2 => {
                out.push(diffusion);
                out.extend(reaction());
                out.extend(gamma_alpha());
            }
            AnalyticModel::HolisticG3A3 => {
                out.push(diffusion);
                out.extend(reaction());
                out.push(hyper4);
                out.extend(gamma_alpha());
            }
            AnalyticModel::HolisticG4A4 => {
                out.push(diffusion);
                out.extend(reaction());
                out.push(hyper4);
                out.extend(gamma_alpha());
                out.push(single(3, 0, "delta^6 u", 1, 90, vec![f(Delta6, 1)]));
                out.extend(gamma2_alpha());
                out.extend(gamma_alpha2());
            }
        }
        out
    }
}
