//! Sparse polynomials in the macroscale grid values `u_{i+di, j+dj}` of a
//! generic element.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::grid::Stencil;
use crate::scalar::Scalar;

/// The neighbouring grid value `u_{i+di, j+dj}` relative to the generic element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MacroSymbol {
    pub di: i8,
    pub dj: i8,
}

impl MacroSymbol {
    pub const CENTRE: MacroSymbol = MacroSymbol { di: 0, dj: 0 };

    pub fn new(di: i32, dj: i32) -> Self {
        MacroSymbol {
            di: i8::try_from(di).expect("symbol offset out of range"),
            dj: i8::try_from(dj).expect("symbol offset out of range"),
        }
    }

    pub fn shifted(self, by: MacroSymbol) -> MacroSymbol {
        MacroSymbol {
            di: self.di + by.di,
            dj: self.dj + by.dj,
        }
    }

    /// Taxicab distance from the element centre.
    pub fn radius(self) -> i32 {
        (self.di as i32).abs() + (self.dj as i32).abs()
    }
}

impl fmt::Display for MacroSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "u[{},{}]", self.di, self.dj)
    }
}

/// Product of symbol powers, kept sorted by symbol with positive exponents.
///
/// Ordered by total degree first, then lexicographically on the factor list.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Monomial {
    factors: SmallVec<[(MacroSymbol, u8); 4]>,
}

impl Monomial {
    pub fn one() -> Self {
        Monomial::default()
    }

    pub fn var(s: MacroSymbol, exp: u8) -> Self {
        let mut factors = SmallVec::new();
        if exp > 0 {
            factors.push((s, exp));
        }
        Monomial { factors }
    }

    pub fn from_factors(mut raw: Vec<(MacroSymbol, u8)>) -> Self {
        raw.sort_by_key(|f| f.0);
        let mut factors: SmallVec<[(MacroSymbol, u8); 4]> = SmallVec::new();
        for (s, e) in raw {
            if e == 0 {
                continue;
            }
            match factors.last_mut() {
                Some(last) if last.0 == s => last.1 += e,
                _ => factors.push((s, e)),
            }
        }
        Monomial { factors }
    }

    pub fn factors(&self) -> &[(MacroSymbol, u8)] {
        &self.factors
    }

    pub fn degree(&self) -> u32 {
        self.factors.iter().map(|f| f.1 as u32).sum()
    }

    pub fn exponent(&self, s: MacroSymbol) -> u8 {
        self.factors
            .iter()
            .find(|f| f.0 == s)
            .map(|f| f.1)
            .unwrap_or(0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut factors = SmallVec::with_capacity(self.factors.len() + other.factors.len());
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.factors, &other.factors);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    factors.push(a[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    factors.push(b[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    factors.push((a[i].0, a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        factors.extend_from_slice(&a[i..]);
        factors.extend_from_slice(&b[j..]);
        Monomial { factors }
    }

    /// `d/du_s` as `(exponent, remaining monomial)`, or `None` if `s` is absent.
    pub fn derivative(&self, s: MacroSymbol) -> Option<(u8, Monomial)> {
        let pos = self.factors.iter().position(|f| f.0 == s)?;
        let exp = self.factors[pos].1;
        let mut factors = self.factors.clone();
        if exp == 1 {
            factors.remove(pos);
        } else {
            factors[pos].1 -= 1;
        }
        Some((exp, Monomial { factors }))
    }

    /// Translates every symbol; order among factors is preserved.
    pub fn shift(&self, by: MacroSymbol) -> Monomial {
        Monomial {
            factors: self.factors.iter().map(|&(s, e)| (s.shifted(by), e)).collect(),
        }
    }

    /// Replaces each symbol by `-symbol`: the sign picked up is `(-1)^degree`.
    pub fn parity(&self) -> i32 {
        if self.degree() % 2 == 0 {
            1
        } else {
            -1
        }
    }

    pub fn eval(&self, value: &impl Fn(MacroSymbol) -> f64) -> f64 {
        self.factors
            .iter()
            .map(|&(s, e)| value(s).powi(e as i32))
            .product()
    }

    pub fn max_radius(&self) -> i32 {
        self.factors.iter().map(|f| f.0.radius()).max().unwrap_or(0)
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.factors.as_slice().cmp(other.factors.as_slice()))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return f.write_str("1");
        }
        for (k, (s, e)) in self.factors.iter().enumerate() {
            if k > 0 {
                f.write_str("*")?;
            }
            if *e == 1 {
                write!(f, "{s}")?;
            } else {
                write!(f, "{s}^{e}")?;
            }
        }
        Ok(())
    }
}

/// Sparse polynomial with canonical form: no negligible coefficients stored.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly<C> {
    terms: BTreeMap<Monomial, C>,
}

impl<C: Scalar> Default for Poly<C> {
    fn default() -> Self {
        Poly::zero()
    }
}

impl<C: Scalar> Poly<C> {
    pub fn zero() -> Self {
        Poly {
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(c: C) -> Self {
        Poly::monomial(Monomial::one(), c)
    }

    pub fn monomial(m: Monomial, c: C) -> Self {
        let mut p = Poly::zero();
        p.add_term(m, c);
        p
    }

    pub fn symbol(s: MacroSymbol) -> Self {
        Poly::monomial(Monomial::var(s, 1), C::one())
    }

    /// `u_{0,0}^power`.
    pub fn centre_power(power: u8) -> Self {
        Poly::monomial(Monomial::var(MacroSymbol::CENTRE, power), C::one())
    }

    /// `sum_o w_o u_o^power`: a stencil applied to a pointwise power.
    pub fn stencil_of_power(stencil: &Stencil, power: u8) -> Self {
        let mut p = Poly::zero();
        for &(di, dj, num, den) in stencil.weights() {
            p.add_term(
                Monomial::var(MacroSymbol::new(di, dj), power),
                C::from_ratio(num, den),
            );
        }
        p
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Monomial, C)>) -> Self {
        let mut p = Poly::zero();
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &C)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> Option<&C> {
        self.terms.get(m)
    }

    pub fn add_term(&mut self, m: Monomial, c: C) {
        if c.negligible() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += &c;
                if e.get().negligible() {
                    e.remove();
                }
            }
        }
    }

    /// `self += c * other`.
    pub fn add_scaled(&mut self, other: &Poly<C>, c: &C) {
        if c.negligible() {
            return;
        }
        for (m, v) in &other.terms {
            let mut t = v.clone();
            t *= c;
            self.add_term(m.clone(), t);
        }
    }

    pub fn add_assign_ref(&mut self, other: &Poly<C>) {
        for (m, v) in &other.terms {
            self.add_term(m.clone(), v.clone());
        }
    }

    pub fn sub_assign_ref(&mut self, other: &Poly<C>) {
        for (m, v) in &other.terms {
            self.add_term(m.clone(), -v.clone());
        }
    }

    pub fn scaled(&self, c: &C) -> Poly<C> {
        let mut out = Poly::zero();
        out.add_scaled(self, c);
        out
    }

    pub fn neg(&self) -> Poly<C> {
        Poly {
            terms: self.terms.iter().map(|(m, v)| (m.clone(), -v.clone())).collect(),
        }
    }

    pub fn mul(&self, other: &Poly<C>) -> Poly<C> {
        let mut out = Poly::zero();
        self.mul_into(other, &mut out);
        out
    }

    /// `acc += self * other`.
    pub fn mul_into(&self, other: &Poly<C>, acc: &mut Poly<C>) {
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let mut c = c1.clone();
                c *= c2;
                acc.add_term(m1.mul(m2), c);
            }
        }
    }

    pub fn pow(&self, e: u32) -> Poly<C> {
        let mut out = Poly::constant(C::one());
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    pub fn derivative(&self, s: MacroSymbol) -> Poly<C> {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            if let Some((e, rest)) = m.derivative(s) {
                let mut t = c.clone();
                t *= &C::from_int(e as i64);
                out.add_term(rest, t);
            }
        }
        out
    }

    /// Translates all symbols by `by`, i.e. the same expression for the element
    /// at offset `by`.
    pub fn shift(&self, by: MacroSymbol) -> Poly<C> {
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.shift(by), c.clone()))
                .collect(),
        }
    }

    /// Substitutes `-u` for every symbol.
    pub fn negate_symbols(&self) -> Poly<C> {
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| {
                    let v = if m.parity() < 0 { -c.clone() } else { c.clone() };
                    (m.clone(), v)
                })
                .collect(),
        }
    }

    pub fn symbols(&self) -> BTreeSet<MacroSymbol> {
        self.terms
            .keys()
            .flat_map(|m| m.factors().iter().map(|f| f.0))
            .collect()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    pub fn max_radius(&self) -> i32 {
        self.terms.keys().map(|m| m.max_radius()).max().unwrap_or(0)
    }

    pub fn max_magnitude(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.magnitude()))
    }

    pub fn all_converged(&self) -> bool {
        self.terms.values().all(|c| c.converged())
    }

    /// As [`Poly::all_converged`] with the float threshold multiplied by `scale`.
    pub fn all_converged_at(&self, scale: f64) -> bool {
        self.terms.values().all(|c| c.converged_at(scale))
    }

    pub fn eval(&self, value: &impl Fn(MacroSymbol) -> f64) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| c.to_f64() * m.eval(value))
            .sum()
    }

    pub fn map_coeffs<D: Scalar>(&self, f: impl Fn(&C) -> D) -> Poly<D> {
        Poly::from_terms(self.terms.iter().map(|(m, c)| (m.clone(), f(c))))
    }

    pub fn to_f64(&self) -> Poly<f64> {
        self.map_coeffs(|c| c.to_f64())
    }
}

impl<C: Scalar> fmt::Display for Poly<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (k, (m, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "({c})*{m}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::StencilId;
    use crate::scalar::rational;
    use num_rational::BigRational;
    use proptest::prelude::*;

    type Q = BigRational;

    fn s(di: i32, dj: i32) -> MacroSymbol {
        MacroSymbol::new(di, dj)
    }

    fn arb_poly() -> impl Strategy<Value = Poly<Q>> {
        prop::collection::vec(
            (
                prop::collection::vec(((-2i32..=2), (-2i32..=2), 1u8..3), 0..3),
                -5i64..=5,
                1i64..4,
            ),
            0..5,
        )
        .prop_map(|terms| {
            Poly::from_terms(terms.into_iter().map(|(f, n, d)| {
                (
                    Monomial::from_factors(f.into_iter().map(|(a, b, e)| (s(a, b), e)).collect()),
                    rational(n, d),
                )
            }))
        })
    }

    #[test]
    fn graded_order() {
        let a = Monomial::var(s(1, 0), 1);
        let b = Monomial::var(s(-1, 0), 2);
        let c = Monomial::var(s(0, 0), 1).mul(&Monomial::var(s(1, 0), 1));
        assert!(a < b);
        assert!(a < c);
        assert_eq!(c.degree(), 2);
        assert_eq!(format!("{c}"), "u[0,0]*u[1,0]");
    }

    #[test]
    fn canonical_form_drops_zeros() {
        let mut p = Poly::<Q>::symbol(s(1, 0));
        p.add_term(Monomial::var(s(1, 0), 1), rational(-1, 1));
        assert!(p.is_zero());
        let d2 = Poly::<Q>::stencil_of_power(&StencilId::Delta2.stencil(), 1);
        assert_eq!(d2.len(), 5);
        assert_eq!(d2.coeff(&Monomial::var(s(0, 0), 1)), Some(&rational(-4, 1)));
    }

    #[test]
    fn derivative_and_shift() {
        // u00^2 u10 + 3 u01
        let p = Poly::<Q>::centre_power(2).mul(&Poly::symbol(s(1, 0)))
            + Poly::symbol(s(0, 1)).scaled(&rational(3, 1));
        let d = p.derivative(s(0, 0));
        assert_eq!(
            d,
            Poly::symbol(s(0, 0))
                .mul(&Poly::symbol(s(1, 0)))
                .scaled(&rational(2, 1))
        );
        let sh = p.shift(s(1, 0));
        assert_eq!(sh.symbols(), [s(1, 0), s(1, 1), s(2, 0)].into_iter().collect());
    }

    #[test]
    fn float_polys_drop_roundoff() {
        let mut p = Poly::<f64>::symbol(s(0, 0));
        p.add_term(Monomial::var(s(0, 0), 1), -1.0 + 1e-16);
        assert!(p.is_zero());
    }

    proptest! {
        #[test]
        fn product_is_commutative_and_distributive(a in arb_poly(), b in arb_poly(), c in arb_poly()) {
            prop_assert_eq!(a.mul(&b), b.mul(&a));
            let lhs = a.mul(&(b.clone() + c.clone()));
            let rhs = a.mul(&b) + a.mul(&c);
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn shift_commutes_with_product(a in arb_poly(), b in arb_poly()) {
            let by = s(1, -1);
            prop_assert_eq!(a.mul(&b).shift(by), a.shift(by).mul(&b.shift(by)));
        }

        #[test]
        fn leibniz_rule(a in arb_poly(), b in arb_poly()) {
            let x = s(0, 0);
            let lhs = a.mul(&b).derivative(x);
            let rhs = a.derivative(x).mul(&b) + a.mul(&b.derivative(x));
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn evaluation_is_a_ring_map(a in arb_poly(), b in arb_poly()) {
            let val = |m: MacroSymbol| 0.3 + 0.1 * m.di as f64 - 0.2 * m.dj as f64;
            let prod = a.mul(&b).eval(&val);
            prop_assert!((prod - a.eval(&val) * b.eval(&val)).abs() < 1e-9);
        }
    }
}

impl<C: Scalar> std::ops::Add for Poly<C> {
    type Output = Poly<C>;

    fn add(mut self, rhs: Poly<C>) -> Poly<C> {
        self.add_assign_ref(&rhs);
        self
    }
}

impl<C: Scalar> std::ops::Sub for Poly<C> {
    type Output = Poly<C>;

    fn sub(mut self, rhs: Poly<C>) -> Poly<C> {
        self.sub_assign_ref(&rhs);
        self
    }
}
