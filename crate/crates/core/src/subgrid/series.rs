//! Truncated bivariate power series in the coupling `gamma` and the
//! nonlinearity `alpha`, with polynomial coefficients.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::poly::{MacroSymbol, Poly};
use crate::scalar::Scalar;

/// Which `gamma^a alpha^b` slots a series keeps.
///
/// A slot is kept iff `a < gamma`, `b < alpha` and `a + b < total`.
/// `rect(p, q)` is the error `O(gamma^p, alpha^q)`; `total(p)` is the error
/// `O(gamma^p + alpha^p)`, which drops the mixed slots of degree `>= p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Truncation {
    pub gamma: usize,
    pub alpha: usize,
    pub total: Option<usize>,
}

impl Truncation {
    pub fn rect(gamma: usize, alpha: usize) -> Self {
        Truncation {
            gamma,
            alpha,
            total: None,
        }
    }

    pub fn total(p: usize) -> Self {
        Truncation {
            gamma: p,
            alpha: p,
            total: Some(p),
        }
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        a < self.gamma && b < self.alpha && self.total.map_or(true, |t| a + b < t)
    }

    /// Kept slots ordered by total degree, then by power of gamma.
    pub fn slots(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = (0..self.gamma)
            .flat_map(|a| (0..self.alpha).map(move |b| (a, b)))
            .filter(|&(a, b)| self.contains(a, b))
            .collect();
        out.sort_by_key(|&(a, b)| (a + b, a));
        out
    }

    pub fn max_degree(&self) -> usize {
        self.slots().iter().map(|&(a, b)| a + b).max().unwrap_or(0)
    }

    /// The slots of total degree at most `degree`.
    pub fn capped(&self, degree: usize) -> Truncation {
        let cap = degree + 1;
        Truncation {
            gamma: self.gamma,
            alpha: self.alpha,
            total: Some(self.total.map_or(cap, |t| t.min(cap))),
        }
    }

    /// Slots one order beyond the truncation: outside it, but reachable from a
    /// kept slot by one more factor of gamma or alpha.
    pub fn next_slots(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = (0..=self.gamma)
            .flat_map(|a| (0..=self.alpha).map(move |b| (a, b)))
            .filter(|&(a, b)| {
                !self.contains(a, b)
                    && ((a > 0 && self.contains(a - 1, b)) || (b > 0 && self.contains(a, b - 1)))
            })
            .collect();
        out.sort_by_key(|&(a, b)| (a + b, a));
        out
    }

    /// The truncation keeping exactly the current slots plus [`Self::next_slots`].
    pub fn extended(&self) -> Truncation {
        let corner = self.gamma + self.alpha;
        Truncation {
            gamma: self.gamma + 1,
            alpha: self.alpha + 1,
            total: Some(self.total.map_or(corner, |t| (t + 1).min(corner))),
        }
    }

    /// Slots `(a, b)` such that `(a, b + 1)` is kept: what a factor multiplied
    /// by `alpha` needs.
    pub fn before_alpha(&self) -> Truncation {
        Truncation {
            gamma: self.gamma,
            alpha: self.alpha.saturating_sub(1),
            total: self.total.map(|t| t.saturating_sub(1)),
        }
    }

    /// Slots `(a, b)` such that `(a + 1, b)` is kept.
    pub fn before_gamma(&self) -> Truncation {
        Truncation {
            gamma: self.gamma.saturating_sub(1),
            alpha: self.alpha,
            total: self.total.map(|t| t.saturating_sub(1)),
        }
    }
}

impl std::fmt::Display for Truncation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.total {
            None => write!(f, "O(gamma^{}, alpha^{})", self.gamma, self.alpha),
            Some(t) if t == self.gamma && t == self.alpha => {
                write!(f, "O(gamma^{t} + alpha^{t})")
            }
            Some(t) => write!(f, "O(gamma^{}, alpha^{}, degree {t})", self.gamma, self.alpha),
        }
    }
}

/// `sum_{(a,b)} gamma^a alpha^b P_{a,b}` truncated to a [`Truncation`].
#[derive(Clone, Debug, PartialEq)]
pub struct Series2<C> {
    trunc: Truncation,
    coeffs: Vec<Poly<C>>,
}

impl<C: Scalar> Series2<C> {
    pub fn zero(trunc: Truncation) -> Self {
        Series2 {
            trunc,
            coeffs: vec![Poly::zero(); trunc.gamma * trunc.alpha],
        }
    }

    /// A series with only the `(0, 0)` slot set.
    pub fn from_poly(trunc: Truncation, p: Poly<C>) -> Self {
        let mut s = Series2::zero(trunc);
        if trunc.contains(0, 0) {
            s.coeffs[0] = p;
        }
        s
    }

    pub fn truncation(&self) -> Truncation {
        self.trunc
    }

    fn idx(&self, a: usize, b: usize) -> usize {
        a * self.trunc.alpha + b
    }

    /// The slot coefficient; slots outside the truncation are zero.
    pub fn get(&self, a: usize, b: usize) -> Option<&Poly<C>> {
        self.trunc.contains(a, b).then(|| &self.coeffs[self.idx(a, b)])
    }

    pub fn coeff(&self, a: usize, b: usize) -> Poly<C> {
        self.get(a, b).cloned().unwrap_or_default()
    }

    /// # Panics
    /// If the slot is outside the truncation.
    pub fn get_mut(&mut self, a: usize, b: usize) -> &mut Poly<C> {
        assert!(self.trunc.contains(a, b), "slot ({a},{b}) outside {}", self.trunc);
        let i = self.idx(a, b);
        &mut self.coeffs[i]
    }

    /// Nonzero slots with their coefficients.
    pub fn slots(&self) -> impl Iterator<Item = ((usize, usize), &Poly<C>)> + '_ {
        self.trunc
            .slots()
            .into_iter()
            .map(move |(a, b)| ((a, b), &self.coeffs[self.idx(a, b)]))
            .filter(|(_, p)| !p.is_zero())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|p| p.is_zero())
    }

    /// Re-indexes into another truncation, dropping slots it does not keep.
    pub fn with_truncation(&self, trunc: Truncation) -> Series2<C> {
        let mut out = Series2::zero(trunc);
        for ((a, b), p) in self.slots() {
            if trunc.contains(a, b) {
                *out.get_mut(a, b) = p.clone();
            }
        }
        out
    }

    pub fn add_assign_ref(&mut self, other: &Series2<C>) {
        for ((a, b), p) in other.slots() {
            if self.trunc.contains(a, b) {
                self.get_mut(a, b).add_assign_ref(p);
            }
        }
    }

    pub fn sub_assign_ref(&mut self, other: &Series2<C>) {
        for ((a, b), p) in other.slots() {
            if self.trunc.contains(a, b) {
                self.get_mut(a, b).sub_assign_ref(p);
            }
        }
    }

    pub fn scaled(&self, c: &C) -> Series2<C> {
        Series2 {
            trunc: self.trunc,
            coeffs: self.coeffs.iter().map(|p| p.scaled(c)).collect(),
        }
    }

    pub fn neg(&self) -> Series2<C> {
        Series2 {
            trunc: self.trunc,
            coeffs: self.coeffs.iter().map(|p| p.neg()).collect(),
        }
    }

    /// Truncated product, kept in `trunc`.
    pub fn mul_in(&self, other: &Series2<C>, trunc: Truncation) -> Series2<C> {
        let mut out = Series2::zero(trunc);
        self.mul_into(other, &mut out);
        out
    }

    pub fn mul(&self, other: &Series2<C>) -> Series2<C> {
        self.mul_in(other, self.trunc)
    }

    /// `acc += self * other`, truncated to `acc`'s truncation.
    pub fn mul_into(&self, other: &Series2<C>, acc: &mut Series2<C>) {
        let lhs: Vec<_> = self.slots().collect();
        let rhs: Vec<_> = other.slots().collect();
        for &((a1, b1), p1) in &lhs {
            for &((a2, b2), p2) in &rhs {
                let (a, b) = (a1 + a2, b1 + b2);
                if acc.trunc.contains(a, b) {
                    p1.mul_into(p2, acc.get_mut(a, b));
                }
            }
        }
    }

    /// Multiplies by `gamma`, landing in `trunc`.
    pub fn mul_gamma_in(&self, trunc: Truncation) -> Series2<C> {
        let mut out = Series2::zero(trunc);
        for ((a, b), p) in self.slots() {
            if trunc.contains(a + 1, b) {
                *out.get_mut(a + 1, b) = p.clone();
            }
        }
        out
    }

    /// Multiplies by `alpha`, landing in `trunc`.
    pub fn mul_alpha_in(&self, trunc: Truncation) -> Series2<C> {
        let mut out = Series2::zero(trunc);
        for ((a, b), p) in self.slots() {
            if trunc.contains(a, b + 1) {
                *out.get_mut(a, b + 1) = p.clone();
            }
        }
        out
    }

    pub fn derivative(&self, s: MacroSymbol) -> Series2<C> {
        Series2 {
            trunc: self.trunc,
            coeffs: self.coeffs.iter().map(|p| p.derivative(s)).collect(),
        }
    }

    pub fn shift(&self, by: MacroSymbol) -> Series2<C> {
        Series2 {
            trunc: self.trunc,
            coeffs: self.coeffs.iter().map(|p| p.shift(by)).collect(),
        }
    }

    pub fn negate_symbols(&self) -> Series2<C> {
        Series2 {
            trunc: self.trunc,
            coeffs: self.coeffs.iter().map(|p| p.negate_symbols()).collect(),
        }
    }

    pub fn symbols(&self) -> BTreeSet<MacroSymbol> {
        self.coeffs.iter().flat_map(|p| p.symbols()).collect()
    }

    /// Largest coefficient magnitude and the slot holding it.
    pub fn largest(&self) -> Option<(f64, usize, usize)> {
        self.slots()
            .map(|((a, b), p)| (p.max_magnitude(), a, b))
            .max_by(|x, y| x.0.total_cmp(&y.0))
    }

    /// `sum gamma^a alpha^b P_{a,b}(u)`, each slot additionally weighted by
    /// `scale(a, b)`.
    pub fn eval(
        &self,
        gamma: f64,
        alpha: f64,
        scale: impl Fn(usize, usize) -> f64,
        value: &impl Fn(MacroSymbol) -> f64,
    ) -> f64 {
        self.slots()
            .map(|((a, b), p)| {
                gamma.powi(a as i32) * alpha.powi(b as i32) * scale(a, b) * p.eval(value)
            })
            .sum()
    }

    pub fn map_coeffs<D: Scalar>(&self, f: impl Fn(&C) -> D + Copy) -> Series2<D> {
        Series2 {
            trunc: self.trunc,
            coeffs: self.coeffs.iter().map(|p| p.map_coeffs(f)).collect(),
        }
    }
}
