//! Residual-driven construction of the subgrid slow manifold of one generic
//! element.
//!
//! Lengths are scaled by the macroscale spacing `h`, so the construction sees
//! `h = 1` and `alpha` stands for `alpha h^2`.  Slot `(a, b)` of `g` therefore
//! carries the physical factor `gamma^a alpha^b h^(2b - 2)`.

use std::collections::BTreeMap;

use super::poly::{MacroSymbol, Poly};
use super::series::{Series2, Truncation};
use super::system::{CorrectionSystem, NodeLayout, RowKind};
use crate::error::ConstructError;
use crate::scalar::Scalar;

/// Subgrid field `v` at every node and macroscale evolution `g` of the
/// generic element, as truncated series.
#[derive(Clone, Debug)]
pub struct SubgridManifold<C> {
    trunc: Truncation,
    layout: NodeLayout,
    v: Vec<Series2<C>>,
    g: Series2<C>,
    iterations: usize,
}

/// Residuals of the subgrid PDE (per interior node, in
/// [`NodeLayout::interior`] order) and of the coupling conditions (per edge
/// node, in [`NodeLayout::edges`] order).
#[derive(Clone, Debug)]
pub struct Residuals<C> {
    pub pde: Vec<Series2<C>>,
    pub ibc: Vec<Series2<C>>,
    /// Size of the subgrid Laplacian (`n^2`); float round-off in the PDE
    /// residuals grows with it.
    pub pde_scale: f64,
}

impl<C: Scalar> Residuals<C> {
    /// Largest residual coefficient and its slot.
    pub fn largest(&self) -> Option<(f64, usize, usize)> {
        self.pde
            .iter()
            .chain(&self.ibc)
            .filter_map(|s| s.largest())
            .max_by(|x, y| x.0.total_cmp(&y.0))
    }

    fn slot_converged(&self, a: usize, b: usize) -> bool {
        self.pde
            .iter()
            .all(|s| s.get(a, b).map_or(true, |p| p.all_converged_at(self.pde_scale)))
            && self.ibc.iter().all(|s| s.get(a, b).map_or(true, |p| p.all_converged()))
    }

    pub fn all_converged(&self) -> bool {
        let trunc = match self.pde.first() {
            Some(s) => s.truncation(),
            None => return true,
        };
        trunc.slots().into_iter().all(|(a, b)| self.slot_converged(a, b))
    }
}

impl<C: Scalar> SubgridManifold<C> {
    /// The isolated-element base state `v = u_{0,0}`, `g = 0`.
    pub fn base(n: usize, trunc: Truncation) -> Self {
        let layout = NodeLayout::new(n);
        let u = Series2::from_poly(trunc, Poly::symbol(MacroSymbol::CENTRE));
        SubgridManifold {
            trunc,
            v: vec![u; layout.node_count()],
            layout,
            g: Series2::zero(trunc),
            iterations: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.layout.n()
    }

    pub fn truncation(&self) -> Truncation {
        self.trunc
    }

    pub fn layout(&self) -> &NodeLayout {
        &self.layout
    }

    pub fn g(&self) -> &Series2<C> {
        &self.g
    }

    pub fn v(&self, node: usize) -> &Series2<C> {
        &self.v[node]
    }

    /// Subgrid field at node `(k, l)`, if that node exists.
    pub fn v_at(&self, k: i32, l: i32) -> Option<&Series2<C>> {
        self.layout.index_of(k, l).map(|i| &self.v[i])
    }

    /// Correction solves performed by [`construct`].
    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn residual_pde(&self) -> Vec<Series2<C>> {
        self.residuals_in(self.trunc).pde
    }

    pub fn residual_ibc(&self) -> Vec<Series2<C>> {
        self.residuals_in(self.trunc).ibc
    }

    pub fn residuals(&self) -> Residuals<C> {
        self.residuals_in(self.trunc)
    }

    /// Residuals evaluated in `trunc`, which may keep more slots than the
    /// manifold itself.
    pub fn residuals_in(&self, trunc: Truncation) -> Residuals<C> {
        let n2 = C::from_int((self.n() * self.n()) as i64);
        let v: Vec<Series2<C>> = self.v.iter().map(|s| s.with_truncation(trunc)).collect();
        let g = self.g.with_truncation(trunc);
        let before_alpha = trunc.before_alpha();
        let before_gamma = trunc.before_gamma();
        let mut g_shifted: BTreeMap<MacroSymbol, Series2<C>> = BTreeMap::new();

        let mut pde = Vec::with_capacity(self.layout.interior().len());
        for &p in self.layout.interior() {
            let (k, l) = self.layout.nodes()[p];
            let mut lap = v[p].scaled(&C::from_int(-4));
            for (dk, dl) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                let q = self.layout.index_of(k + dk, l + dl).expect("interior neighbour");
                lap.add_assign_ref(&v[q]);
            }
            let mut r = lap.scaled(&n2);

            let low = v[p].with_truncation(before_alpha);
            let mut reaction = low.clone();
            reaction.sub_assign_ref(&low.mul(&low).mul(&low));
            r.add_assign_ref(&reaction.mul_alpha_in(trunc));

            let mut chain = Series2::zero(trunc);
            for s in v[p].symbols() {
                let gs = g_shifted.entry(s).or_insert_with(|| g.shift(s));
                v[p].derivative(s).mul_into(gs, &mut chain);
            }
            r.sub_assign_ref(&chain);
            pde.push(r);
        }

        let mut ibc = Vec::with_capacity(self.layout.edges().len());
        for edge in self.layout.edges() {
            let centre = &v[edge.centre];
            let low = centre.with_truncation(before_gamma);
            let mut jump = low.shift(edge.offset);
            jump.sub_assign_ref(&low);
            let mut r = v[edge.node].clone();
            r.sub_assign_ref(centre);
            r.sub_assign_ref(&jump.mul_gamma_in(trunc));
            ibc.push(r);
        }
        Residuals {
            pde,
            ibc,
            pde_scale: (self.n() * self.n()) as f64,
        }
    }

    /// Next-order correction to `g` from the pyramid-weighted residuals.
    ///
    /// The discrete pyramid `(1 - |k|/n)(1 - |l|/n)` is annihilated by the
    /// adjoint of the subgrid Laplacian once the coupling conditions are
    /// folded in, so for each slot just beyond the truncation (whose lower
    /// slots are all kept) this equals the `g` coefficient the full linear
    /// solve would produce.  Other slots are left zero.
    pub fn solvability_correction(&self) -> Series2<C> {
        let ext = self.trunc.extended();
        let res = self.residuals_in(ext);
        let n = self.n() as i64;
        let norm = C::from_int(n * n * n * n);
        let mut out = Series2::zero(ext);
        for (a, b) in self.trunc.next_slots() {
            let closed = (0..=a)
                .flat_map(|x| (0..=b).map(move |y| (x, y)))
                .all(|(x, y)| (x, y) == (a, b) || self.trunc.contains(x, y));
            if !closed {
                continue;
            }
            let mut acc = Poly::zero();
            for (i, &p) in self.layout.interior().iter().enumerate() {
                if let Some(r) = res.pde[i].get(a, b) {
                    acc.add_scaled(r, &C::from_int(self.layout.pyramid_scaled(p)));
                }
            }
            for (e, edge) in self.layout.edges().iter().enumerate() {
                if let Some(r) = res.ibc[e].get(a, b) {
                    let w = n * n * (n - edge.along as i64);
                    acc.add_scaled(r, &C::from_int(-w));
                }
            }
            let mut inv = C::one();
            inv /= &norm;
            *out.get_mut(a, b) = acc.scaled(&inv);
        }
        out
    }

    fn apply(&mut self, a: usize, b: usize, correction: Vec<Poly<C>>) {
        let g_col = self.layout.node_count();
        let centre = self.layout.centre();
        for (i, p) in correction.into_iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            if i == g_col {
                self.g.get_mut(a, b).add_assign_ref(&p);
            } else {
                debug_assert!(i != centre, "amplitude condition violated");
                self.v[i].get_mut(a, b).add_assign_ref(&p);
            }
        }
    }
}

/// Builds the manifold to the given truncation.  `construct(n, Truncation::rect(p, q))`
/// has residuals `O(gamma^p, alpha^q)`.
pub fn construct<C: Scalar>(n: usize, trunc: Truncation) -> Result<SubgridManifold<C>, ConstructError> {
    let system = CorrectionSystem::build(n)?;
    construct_with(&system, trunc, None)
}

/// As [`construct`] but reusing a factorised system; `max_iterations`
/// defaults to `p_gamma + p_alpha + 2`.
pub fn construct_with<C: Scalar>(
    system: &CorrectionSystem<C>,
    trunc: Truncation,
    max_iterations: Option<usize>,
) -> Result<SubgridManifold<C>, ConstructError> {
    if !trunc.contains(0, 0) {
        return Err(ConstructError::EmptyTruncation);
    }
    let cap = max_iterations.unwrap_or(trunc.gamma + trunc.alpha + 2);
    let max_degree = trunc.max_degree();
    let mut m = SubgridManifold::base(system.n(), trunc);
    let mut degree = 0;
    loop {
        let capped = trunc.capped(degree);
        let res = m.residuals_in(capped);
        for (a, b) in capped.slots() {
            if a + b < degree && !res.slot_converged(a, b) {
                return Err(ConstructError::Regression { a, b });
            }
        }
        let open: Vec<(usize, usize)> = capped
            .slots()
            .into_iter()
            .filter(|&(a, b)| a + b == degree && !res.slot_converged(a, b))
            .collect();
        if open.is_empty() {
            if degree >= max_degree {
                break;
            }
            degree += 1;
            continue;
        }
        if m.iterations >= cap {
            let (largest, a, b) = res.largest().unwrap_or((0.0, 0, 0));
            return Err(ConstructError::NonConvergence {
                iterations: m.iterations,
                largest,
                a,
                b,
            });
        }
        m.iterations += 1;
        for (a, b) in open {
            let rhs: Vec<Poly<C>> = system
                .row_kinds()
                .iter()
                .map(|kind| match kind {
                    RowKind::Pde(p) => {
                        let i = m.layout.interior().binary_search(p).expect("interior row");
                        res.pde[i].coeff(a, b).neg()
                    }
                    RowKind::Ibc(e) => res.ibc[*e].coeff(a, b).neg(),
                    RowKind::Amplitude => Poly::zero(),
                })
                .collect();
            let correction = system.solve_polys(&rhs)?;
            m.apply(a, b, correction);
        }
    }
    debug_assert!(m
        .g
        .slots()
        .all(|((_, b), p)| p.degree() <= 3u32.pow(b as u32)));
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::StencilId;
    use crate::scalar::rational;
    use num_rational::BigRational;

    type Q = BigRational;

    fn stencil(s: StencilId, power: u8) -> Poly<Q> {
        Poly::stencil_of_power(&s.stencil(), power)
    }

    #[test]
    fn base_residuals() {
        let m = SubgridManifold::<Q>::base(2, Truncation::rect(2, 2));
        let u = Poly::<Q>::symbol(MacroSymbol::CENTRE);
        let react = u.clone() - u.pow(3);
        for r in m.residual_pde() {
            assert!(r.coeff(0, 0).is_zero());
            assert!(r.coeff(1, 0).is_zero());
            assert_eq!(r.coeff(0, 1), react);
        }
        for (e, r) in m.residual_ibc().iter().enumerate() {
            let edge = m.layout().edges()[e];
            let expect = u.clone() - Poly::symbol(edge.offset);
            assert_eq!(r.coeff(1, 0), expect);
            assert!(r.coeff(0, 0).is_zero());
        }
    }

    #[test]
    fn low_order_model_is_exact_for_every_n() {
        for n in [2, 3, 4] {
            let m = construct::<Q>(n, Truncation::rect(2, 2)).unwrap();
            let u = Poly::<Q>::symbol(MacroSymbol::CENTRE);
            assert_eq!(m.g().coeff(1, 0), stencil(StencilId::Delta2, 1));
            assert_eq!(m.g().coeff(0, 1), u.clone() - u.pow(3));
            assert!(m.residuals().all_converged());
            assert!(m.v_at(0, 0).unwrap().coeff(1, 0).is_zero());
        }
    }

    #[test]
    fn coarsest_model_coefficients() {
        let m = construct::<Q>(2, Truncation::total(3)).unwrap();
        let g20 = stencil(StencilId::Delta4, 1).scaled(&rational(-1, 16));
        assert_eq!(m.g().coeff(2, 0), g20);
        let u2 = Poly::<Q>::centre_power(2);
        let g11 = stencil(StencilId::Delta2, 3).scaled(&rational(1, 16))
            + u2.mul(&stencil(StencilId::Delta2, 1)).scaled(&rational(-3, 16));
        assert_eq!(m.g().coeff(1, 1), g11);
        assert!(m.g().coeff(0, 2).is_zero());
        assert!(m.iterations() <= 3 + 3 + 2);
    }

    #[test]
    fn solvability_matches_full_solve() {
        let m = construct::<Q>(3, Truncation::total(2)).unwrap();
        let corr = m.solvability_correction();
        let full = construct::<Q>(3, Truncation::total(3)).unwrap();
        for (a, b) in [(2, 0), (1, 1), (0, 2)] {
            assert_eq!(corr.coeff(a, b), full.g().coeff(a, b), "slot ({a},{b})");
        }
    }

    #[test]
    fn float_mode_agrees() {
        let m = construct::<f64>(4, Truncation::total(3)).unwrap();
        let d4 = stencil(StencilId::Delta4, 1).to_f64().scaled(&(-5.0 / 64.0));
        let diff = m.g().coeff(2, 0) - d4;
        assert!(diff.max_magnitude() < 1e-12);
    }
}
