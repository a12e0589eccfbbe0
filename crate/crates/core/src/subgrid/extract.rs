//! Reading stencil coefficients off a constructed `g`.

use serde::Serialize;

use super::poly::Poly;
use super::manifold::construct;
use super::series::{Series2, Truncation};
use crate::catalogue::{AnalyticModel, ModelTerm};
use crate::error::{ConstructError, ExtractError};
use crate::scalar::Scalar;

/// A named stencil term in one slot of the model.
#[derive(Clone, Debug)]
pub struct DictionaryTerm<C> {
    pub a: usize,
    pub b: usize,
    pub name: String,
    pub poly: Poly<C>,
}

impl<C: Scalar> DictionaryTerm<C> {
    pub fn from_model_term(t: &ModelTerm) -> Self {
        DictionaryTerm {
            a: t.a,
            b: t.b,
            name: t.name.clone(),
            poly: t.poly(),
        }
    }
}

/// The dictionary spanned by the terms of an analytic model.
pub fn model_dictionary<C: Scalar>(model: AnalyticModel) -> Vec<DictionaryTerm<C>> {
    model.terms().iter().map(DictionaryTerm::from_model_term).collect()
}

/// Coefficients of one slot of `g` in a dictionary.
#[derive(Clone, Debug)]
pub struct SlotFit<C> {
    pub a: usize,
    pub b: usize,
    pub names: Vec<String>,
    pub coeffs: Vec<C>,
    /// `g_{a,b} - sum c_k D_k`; zero when the dictionary is complete.
    pub residual: Poly<C>,
    /// Number of independent linear relations among the dictionary terms;
    /// when positive the coefficients are the minimum-norm representation.
    pub null_dimension: usize,
}

impl<C: Scalar> SlotFit<C> {
    pub fn coeff(&self, name: &str) -> Option<&C> {
        self.names.iter().position(|n| n == name).map(|i| &self.coeffs[i])
    }

    pub fn is_complete(&self) -> bool {
        self.residual.is_zero()
    }
}

/// Dictionary coefficients, slot by slot.
#[derive(Clone, Debug)]
pub struct CoefficientTable<C> {
    pub slots: Vec<SlotFit<C>>,
}

impl<C: Scalar> CoefficientTable<C> {
    pub fn slot(&self, a: usize, b: usize) -> Option<&SlotFit<C>> {
        self.slots.iter().find(|s| s.a == a && s.b == b)
    }

    pub fn coeff(&self, a: usize, b: usize, name: &str) -> Option<&C> {
        self.slot(a, b).and_then(|s| s.coeff(name))
    }
}

/// Least-squares coefficients of `target` over `dict` (Euclidean inner
/// product on monomial coefficients); exact whenever `target` lies in the
/// span.  When the dictionary is linearly dependent the minimum-norm
/// coefficient vector is returned and `null_dimension` is positive.
pub fn fit_slot<C: Scalar>(
    a: usize,
    b: usize,
    target: &Poly<C>,
    dict: &[&DictionaryTerm<C>],
) -> SlotFit<C> {
    let k = dict.len();
    let gram: Vec<Vec<C>> = (0..k)
        .map(|i| (0..k).map(|j| dot(&dict[i].poly, &dict[j].poly)).collect())
        .collect();
    let rhs: Vec<C> = (0..k).map(|i| dot(&dict[i].poly, target)).collect();
    let (coeffs, null_dimension) = min_norm_solve(gram, rhs);
    let mut residual = target.clone();
    for (t, c) in dict.iter().zip(&coeffs) {
        residual.add_scaled(&t.poly, &-c.clone());
    }
    SlotFit {
        a,
        b,
        names: dict.iter().map(|t| t.name.clone()).collect(),
        coeffs,
        residual,
        null_dimension,
    }
}

fn dot<C: Scalar>(p: &Poly<C>, q: &Poly<C>) -> C {
    let mut s = C::zero();
    for (m, c) in p.terms() {
        if let Some(d) = q.coeff(m) {
            let mut t = c.clone();
            t *= d;
            s += &t;
        }
    }
    s
}

/// Reduced row echelon form in place; returns the pivot columns.
fn rref<C: Scalar>(m: &mut [Vec<C>], cols: usize) -> Vec<usize> {
    let scale = m.iter().flatten().fold(0.0f64, |s, v| s.max(v.magnitude()));
    let tiny = if C::EXACT { 0.0 } else { 1e-12 * scale.max(1e-300) };
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        if row == m.len() {
            break;
        }
        let piv = (row..m.len())
            .max_by(|&i, &j| m[i][col].magnitude().total_cmp(&m[j][col].magnitude()))
            .unwrap();
        if m[piv][col].is_zero() || m[piv][col].magnitude() <= tiny {
            continue;
        }
        m.swap(row, piv);
        let p = m[row][col].clone();
        for v in m[row].iter_mut() {
            *v /= &p;
        }
        for r in 0..m.len() {
            if r == row || m[r][col].is_zero() {
                continue;
            }
            let f = m[r][col].clone();
            for c in 0..m[r].len() {
                let mut t = m[row][c].clone();
                t *= &f;
                m[r][c] -= &t;
            }
        }
        pivots.push(col);
        row += 1;
    }
    pivots
}

/// Minimum-norm solution of the symmetric consistent system `g x = r`, with
/// the dimension of the null space of `g`.
fn min_norm_solve<C: Scalar>(g: Vec<Vec<C>>, r: Vec<C>) -> (Vec<C>, usize) {
    let k = r.len();
    let mut aug: Vec<Vec<C>> = g
        .into_iter()
        .zip(r)
        .map(|(mut row, v)| {
            row.push(v);
            row
        })
        .collect();
    let pivots = rref(&mut aug, k);
    let mut x = vec![C::zero(); k];
    for (i, &p) in pivots.iter().enumerate() {
        x[p] = aug[i][k].clone();
    }
    let free: Vec<usize> = (0..k).filter(|c| !pivots.contains(c)).collect();
    if free.is_empty() {
        return (x, 0);
    }
    // null basis: one vector per free column
    let null: Vec<Vec<C>> = free
        .iter()
        .map(|&f| {
            let mut v = vec![C::zero(); k];
            v[f] = C::one();
            for (i, &p) in pivots.iter().enumerate() {
                v[p] = -aug[i][f].clone();
            }
            v
        })
        .collect();
    // remove the null-space component: solve (N^T N) y = N^T x
    let vdot = |u: &[C], w: &[C]| {
        let mut s = C::zero();
        for (a, b) in u.iter().zip(w) {
            let mut t = a.clone();
            t *= b;
            s += &t;
        }
        s
    };
    let nf = free.len();
    let mut sys: Vec<Vec<C>> = (0..nf)
        .map(|i| {
            let mut row: Vec<C> = (0..nf).map(|j| vdot(&null[i], &null[j])).collect();
            row.push(vdot(&null[i], &x));
            row
        })
        .collect();
    rref(&mut sys, nf);
    for (i, v) in null.iter().enumerate() {
        let y = sys[i][nf].clone();
        for (xc, vc) in x.iter_mut().zip(v) {
            let mut t = vc.clone();
            t *= &y;
            *xc -= &t;
        }
    }
    (x, nf)
}

/// Matches every nonzero slot of `g` against the dictionary terms of that
/// slot.  Fails if a slot's dictionary is dependent or leaves a residual
/// polynomial.
pub fn extract_coefficients<C: Scalar>(
    g: &Series2<C>,
    dictionary: &[DictionaryTerm<C>],
) -> Result<CoefficientTable<C>, ExtractError> {
    let table = fit_coefficients(g, dictionary);
    for s in &table.slots {
        if s.null_dimension > 0 {
            return Err(ExtractError::DependentDictionary { a: s.a, b: s.b });
        }
        if !s.is_complete() {
            let monomials: Vec<String> = s.residual.terms().take(6).map(|(m, _)| m.to_string()).collect();
            return Err(ExtractError::Incomplete {
                a: s.a,
                b: s.b,
                monomials: monomials.join(", "),
            });
        }
    }
    Ok(table)
}

/// As [`extract_coefficients`] but keeps incomplete fits with their
/// residuals and resolves dependent dictionaries by minimum norm.
pub fn fit_coefficients<C: Scalar>(g: &Series2<C>, dictionary: &[DictionaryTerm<C>]) -> CoefficientTable<C> {
    let mut slots = Vec::new();
    for (a, b) in g.truncation().slots() {
        let target = g.coeff(a, b);
        let dict: Vec<&DictionaryTerm<C>> =
            dictionary.iter().filter(|t| t.a == a && t.b == b).collect();
        if target.is_zero() && dict.is_empty() {
            continue;
        }
        slots.push(fit_slot(a, b, &target, &dict));
    }
    CoefficientTable { slots }
}

/// Order groups reported in the coefficient error table.
pub const ERROR_GROUPS: [(usize, usize, &str); 5] = [
    (2, 0, "gamma^2/h^2"),
    (1, 1, "gamma alpha"),
    (3, 0, "gamma^3/h^2"),
    (2, 1, "gamma^2 alpha"),
    (1, 2, "gamma alpha^2 h^2"),
];

/// One cell of the coefficient error table.
#[derive(Clone, Debug, Serialize)]
pub struct ErrorEntry {
    pub n: usize,
    pub a: usize,
    pub b: usize,
    pub group: String,
    /// Largest `|c_n - c_ref|` over the group's terms.
    pub max_error: f64,
    /// Term attaining the maximum.
    pub worst_term: String,
    /// Size of the part of the constructed slot outside the dictionary span.
    pub residual_norm: f64,
    /// False when the group's terms are linearly dependent, so that the
    /// per-term coefficients (and hence the error) are those of the
    /// minimum-norm representation.
    pub unique: bool,
}

/// Maximum absolute coefficient difference per order group between a
/// constructed table and a reference table over the same dictionary.
pub fn coefficient_errors<C: Scalar>(
    n: usize,
    table: &CoefficientTable<C>,
    reference: &CoefficientTable<C>,
) -> Vec<ErrorEntry> {
    let mut out = Vec::new();
    for (a, b, group) in ERROR_GROUPS {
        let (Some(fit), Some(rfit)) = (table.slot(a, b), reference.slot(a, b)) else {
            continue;
        };
        let mut worst = (0.0f64, String::new());
        for (name, rc) in rfit.names.iter().zip(&rfit.coeffs) {
            let got = fit.coeff(name).map_or(0.0, |c| c.to_f64());
            let err = (got - rc.to_f64()).abs();
            if err > worst.0 || worst.1.is_empty() {
                worst = (err, name.clone());
            }
        }
        out.push(ErrorEntry {
            n,
            a,
            b,
            group: group.to_string(),
            max_error: worst.0,
            worst_term: worst.1,
            residual_norm: fit.residual.max_magnitude(),
            unique: fit.null_dimension == 0,
        });
    }
    out
}

/// The analytic model as a series over the generic element.
pub fn analytic_series<C: Scalar>(model: AnalyticModel, trunc: Truncation) -> Series2<C> {
    let mut g = Series2::zero(trunc);
    for t in model.terms() {
        if trunc.contains(t.a, t.b) {
            g.get_mut(t.a, t.b).add_scaled(&t.poly(), &t.coeff());
        }
    }
    g
}

/// `g` of the `O(gamma^3 + alpha^3)` construction extended by the pyramid
/// solvability correction to all slots of total degree 3.
pub fn extended_model<C: Scalar>(n: usize) -> Result<Series2<C>, ConstructError> {
    let m = construct::<C>(n, Truncation::total(3))?;
    let mut g = m.g().with_truncation(Truncation::total(4));
    g.add_assign_ref(&m.solvability_correction());
    Ok(g)
}

/// Coefficient errors of the extended numerical model against an analytic
/// reference, for each subgrid resolution.
pub fn coefficient_error_table<C: Scalar>(
    n_list: &[usize],
    reference: AnalyticModel,
) -> Result<Vec<ErrorEntry>, ConstructError> {
    let dict = model_dictionary::<C>(reference);
    let rtable = fit_coefficients(&analytic_series(reference, Truncation::total(4)), &dict);
    let mut out = Vec::new();
    for &n in n_list {
        let g = extended_model::<C>(n)?;
        out.extend(coefficient_errors(n, &fit_coefficients(&g, &dict), &rtable));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rational;
    use crate::subgrid::{construct, Truncation};
    use num_rational::BigRational;

    type Q = BigRational;

    #[test]
    fn dictionary_terms_fit_themselves() {
        let dict = model_dictionary::<Q>(AnalyticModel::HolisticG4A4);
        for (a, b) in [(1, 0), (0, 1), (2, 0), (1, 1), (3, 0), (2, 1), (1, 2)] {
            let terms: Vec<_> = dict.iter().filter(|t| t.a == a && t.b == b).collect();
            let target = terms[0].poly.clone();
            let fit = fit_slot(a, b, &target, &terms);
            assert!(fit.is_complete());
            if fit.null_dimension == 0 {
                assert_eq!(fit.coeffs[0], rational(1, 1));
            }
        }
    }

    #[test]
    fn table_one_row_n2() {
        let m = construct::<Q>(2, Truncation::total(3)).unwrap();
        let dict = model_dictionary::<Q>(AnalyticModel::HolisticG3A3);
        let t = extract_coefficients(m.g(), &dict).unwrap();
        assert_eq!(t.coeff(1, 0, "delta^2 u"), Some(&rational(1, 1)));
        assert_eq!(t.coeff(2, 0, "delta^4 u"), Some(&rational(-1, 16)));
        assert_eq!(t.coeff(1, 1, "delta^2 u^3"), Some(&rational(1, 16)));
        assert_eq!(t.coeff(1, 1, "u^2 delta^2 u"), Some(&rational(-3, 16)));
    }

    #[test]
    fn incomplete_dictionary_reports_monomials() {
        let m = construct::<Q>(2, Truncation::total(3)).unwrap();
        let dict: Vec<_> = model_dictionary::<Q>(AnalyticModel::HolisticG3A3)
            .into_iter()
            .filter(|t| t.name != "delta^4 u")
            .collect();
        assert!(matches!(
            extract_coefficients(m.g(), &dict),
            Err(ExtractError::Incomplete { a: 2, b: 0, .. }) | Err(ExtractError::DependentDictionary { .. })
        ));
    }

    #[test]
    fn gamma2_alpha_terms_satisfy_two_relations() {
        let dict = model_dictionary::<Q>(AnalyticModel::HolisticG4A4);
        let terms: Vec<_> = dict.iter().filter(|t| (t.a, t.b) == (2, 1)).collect();
        let fit = fit_slot(2, 1, &terms[3].poly, &terms);
        assert_eq!(fit.null_dimension, 2);
        assert!(fit.is_complete());
    }

    #[test]
    fn extended_model_equals_full_construction() {
        let ext = extended_model::<Q>(2).unwrap();
        let full = construct::<Q>(2, Truncation::total(4)).unwrap();
        assert_eq!(&ext, full.g());
    }

    #[test]
    fn analytic_reference_fits_exactly() {
        let dict = model_dictionary::<Q>(AnalyticModel::HolisticG4A4);
        let g = analytic_series::<Q>(AnalyticModel::HolisticG4A4, Truncation::total(4));
        let t = fit_coefficients(&g, &dict);
        assert!(t.slots.iter().all(|s| s.is_complete()));
        assert_eq!(t.coeff(3, 0, "delta^6 u"), Some(&rational(1, 90)));
    }
}
