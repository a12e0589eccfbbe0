//! Subgrid node layout of one element and the linear correction system.

use super::lu::SparseLu;
use super::poly::{MacroSymbol, Monomial, Poly};
use crate::error::{ConstructError, LinearError};
use crate::scalar::Scalar;

/// Coupling condition of an edge node: `v[node]` is tied to `v[centre]`
/// translated to the neighbouring element at `offset`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EdgeNode {
    pub node: usize,
    pub centre: usize,
    pub offset: MacroSymbol,
    /// Position along the edge, `|l|` for an x-edge and `|k|` for a y-edge.
    pub along: usize,
}

/// Subgrid nodes `(k, l)`, `|k|, |l| <= n`, without the four extreme corners.
#[derive(Clone, Debug)]
pub struct NodeLayout {
    n: usize,
    nodes: Vec<(i32, i32)>,
    index: Vec<Option<usize>>,
    interior: Vec<usize>,
    edges: Vec<EdgeNode>,
}

impl NodeLayout {
    pub fn new(n: usize) -> Self {
        let ni = n as i32;
        let side = 2 * n + 1;
        let mut nodes = Vec::with_capacity(side * side - 4);
        let mut index = vec![None; side * side];
        for l in -ni..=ni {
            for k in -ni..=ni {
                if k.abs() == ni && l.abs() == ni {
                    continue;
                }
                index[((l + ni) as usize) * side + (k + ni) as usize] = Some(nodes.len());
                nodes.push((k, l));
            }
        }
        let mut layout = NodeLayout {
            n,
            nodes,
            index,
            interior: Vec::new(),
            edges: Vec::new(),
        };
        layout.interior = (0..layout.nodes.len())
            .filter(|&i| {
                let (k, l) = layout.nodes[i];
                k.abs() < ni && l.abs() < ni
            })
            .collect();
        let mut edges = Vec::with_capacity(8 * n - 4);
        for l in 1 - ni..ni {
            for s in [-1, 1] {
                edges.push(EdgeNode {
                    node: layout.index_of(s * ni, l).unwrap(),
                    centre: layout.index_of(0, l).unwrap(),
                    offset: MacroSymbol::new(s, 0),
                    along: l.unsigned_abs() as usize,
                });
            }
        }
        for k in 1 - ni..ni {
            for s in [-1, 1] {
                edges.push(EdgeNode {
                    node: layout.index_of(k, s * ni).unwrap(),
                    centre: layout.index_of(k, 0).unwrap(),
                    offset: MacroSymbol::new(0, s),
                    along: k.unsigned_abs() as usize,
                });
            }
        }
        layout.edges = edges;
        layout
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[(i32, i32)] {
        &self.nodes
    }

    pub fn index_of(&self, k: i32, l: i32) -> Option<usize> {
        let ni = self.n as i32;
        if k.abs() > ni || l.abs() > ni {
            return None;
        }
        let side = 2 * self.n + 1;
        self.index[((l + ni) as usize) * side + (k + ni) as usize]
    }

    pub fn centre(&self) -> usize {
        self.index_of(0, 0).unwrap()
    }

    /// Nodes with `|k|, |l| < n`, where the PDE is imposed.
    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    /// Edge nodes carrying a coupling condition.
    pub fn edges(&self) -> &[EdgeNode] {
        &self.edges
    }

    /// Discrete pyramid `(1 - |k|/n)(1 - |l|/n)` at a node, scaled by `n^2` to
    /// stay integral.
    pub fn pyramid_scaled(&self, node: usize) -> i64 {
        let (k, l) = self.nodes[node];
        let n = self.n as i64;
        (n - k.abs() as i64) * (n - l.abs() as i64)
    }
}

/// Kind of a row of the correction system.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowKind {
    /// `n^2 delta^2 v' - g' = rhs` at an interior node.
    Pde(usize),
    /// `v'_edge - v'_centre = rhs` for an edge condition.
    Ibc(usize),
    /// `v'_{0,0} = 0`.
    Amplitude,
}

/// The constant-coefficient linear system for corrections `(v', g')`,
/// factorised once.
///
/// With the element half-width scaled to one the subgrid spacing is `1/n`, so
/// the Laplacian rows carry the factor `n^2`.
#[derive(Clone, Debug)]
pub struct CorrectionSystem<C> {
    layout: NodeLayout,
    rows: Vec<RowKind>,
    lu: SparseLu<C>,
}

impl<C: Scalar> CorrectionSystem<C> {
    pub fn build(n: usize) -> Result<Self, ConstructError> {
        if n < 2 {
            return Err(ConstructError::ResolutionTooSmall(n));
        }
        let layout = NodeLayout::new(n);
        let nn = layout.node_count();
        let g_col = nn;
        let n2 = C::from_int((n * n) as i64);

        let mut kinds = Vec::with_capacity(nn + 1);
        let mut rows: Vec<Vec<(usize, C)>> = Vec::with_capacity(nn + 1);
        for &p in layout.interior() {
            let (k, l) = layout.nodes()[p];
            let mut row = vec![(p, -(n2.clone() * C::from_int(4))), (g_col, -C::one())];
            for (dk, dl) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                row.push((layout.index_of(k + dk, l + dl).unwrap(), n2.clone()));
            }
            rows.push(row);
            kinds.push(RowKind::Pde(p));
        }
        for (e, edge) in layout.edges().iter().enumerate() {
            rows.push(vec![(edge.node, C::one()), (edge.centre, -C::one())]);
            kinds.push(RowKind::Ibc(e));
        }
        rows.push(vec![(layout.centre(), C::one())]);
        kinds.push(RowKind::Amplitude);

        let order = column_order(&layout);
        let lu = SparseLu::factor(rows, &order)?;
        Ok(CorrectionSystem {
            layout,
            rows: kinds,
            lu,
        })
    }

    pub fn n(&self) -> usize {
        self.layout.n()
    }

    pub fn layout(&self) -> &NodeLayout {
        &self.layout
    }

    /// Number of unknowns: every node plus `g'`.
    pub fn dimension(&self) -> usize {
        self.lu.dim()
    }

    pub fn row_kinds(&self) -> &[RowKind] {
        &self.rows
    }

    pub fn factor_entries(&self) -> usize {
        self.lu.stored_entries()
    }

    /// Solves for `(v'_node..., g')`; `rhs` is ordered as [`Self::row_kinds`].
    pub fn solve(&self, rhs: &[C]) -> Result<Vec<C>, LinearError> {
        self.lu.solve(rhs)
    }

    /// Solves one right-hand side per monomial appearing in `rhs`.
    pub fn solve_polys(&self, rhs: &[Poly<C>]) -> Result<Vec<Poly<C>>, LinearError> {
        if rhs.len() != self.dimension() {
            return Err(LinearError::RhsLength {
                expected: self.dimension(),
                found: rhs.len(),
            });
        }
        let monomials: std::collections::BTreeSet<Monomial> = rhs
            .iter()
            .flat_map(|p| p.terms().map(|(m, _)| m.clone()))
            .collect();
        let mut out = vec![Poly::zero(); rhs.len()];
        for m in monomials {
            let b: Vec<C> = rhs
                .iter()
                .map(|p| p.coeff(&m).cloned().unwrap_or_else(C::zero))
                .collect();
            let x = self.lu.solve(&b)?;
            for (slot, v) in out.iter_mut().zip(x) {
                slot.add_term(m.clone(), v);
            }
        }
        Ok(out)
    }
}

/// Elimination order: edge nodes, the four quadrant interiors, the centre
/// cross, and finally `g'`.  Quadrants only connect through the cross, so
/// eliminating them first keeps fill-in local.
fn column_order(layout: &NodeLayout) -> Vec<usize> {
    let n = layout.n() as i32;
    let mut order = Vec::with_capacity(layout.node_count() + 1);
    let nodes = layout.nodes();
    let is_edge = |&(k, l): &(i32, i32)| k.abs() == n || l.abs() == n;
    order.extend((0..nodes.len()).filter(|&i| is_edge(&nodes[i])));
    for (sk, sl) in [(1, 1), (-1, 1), (-1, -1), (1, -1)] {
        order.extend((0..nodes.len()).filter(|&i| {
            let (k, l) = nodes[i];
            !is_edge(&nodes[i]) && k * sk > 0 && l * sl > 0
        }));
    }
    order.extend((0..nodes.len()).filter(|&i| {
        let (k, l) = nodes[i];
        !is_edge(&nodes[i]) && (k == 0 || l == 0)
    }));
    order.push(nodes.len());
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rational;
    use num_rational::BigRational;
    use num_traits::Zero;

    type Q = BigRational;

    #[test]
    fn layout_counts() {
        for n in 2..6 {
            let l = NodeLayout::new(n);
            let side = 2 * n + 1;
            assert_eq!(l.node_count(), side * side - 4);
            assert_eq!(l.interior().len(), (2 * n - 1) * (2 * n - 1));
            assert_eq!(l.edges().len(), 4 * (2 * n - 1));
            assert_eq!(l.index_of(n as i32, n as i32), None);
            assert_eq!(l.nodes()[l.centre()], (0, 0));
            let order = column_order(&l);
            let mut sorted = order.clone();
            sorted.sort_unstable();
            assert_eq!(sorted, (0..=l.node_count()).collect::<Vec<_>>());
        }
    }

    #[test]
    fn dimension_for_n2() {
        let sys = CorrectionSystem::<Q>::build(2).unwrap();
        assert_eq!(sys.dimension(), 21 + 1);
        assert!(CorrectionSystem::<Q>::build(1).is_err());
    }

    #[test]
    fn zero_rhs_gives_zero_correction() {
        let sys = CorrectionSystem::<Q>::build(3).unwrap();
        let x = sys.solve(&vec![Q::zero(); sys.dimension()]).unwrap();
        assert!(x.iter().all(|v| v.is_zero()));
    }

    #[test]
    fn constant_pde_rhs_gives_constant_g() {
        for n in [2, 4] {
            let sys = CorrectionSystem::<Q>::build(n).unwrap();
            let c = rational(3, 7);
            let rhs: Vec<Q> = sys
                .row_kinds()
                .iter()
                .map(|k| match k {
                    RowKind::Pde(_) => c.clone(),
                    _ => Q::zero(),
                })
                .collect();
            let x = sys.solve(&rhs).unwrap();
            let (g, v) = x.split_last().unwrap();
            assert_eq!(*g, -c.clone());
            assert!(v.iter().all(|v| v.is_zero()));
        }
    }

    #[test]
    fn float_and_exact_agree() {
        let exact = CorrectionSystem::<Q>::build(4).unwrap();
        let float = CorrectionSystem::<f64>::build(4).unwrap();
        let rhs: Vec<Q> = (0..exact.dimension())
            .map(|i| rational((i as i64 * 37) % 11 - 5, 3))
            .collect();
        let xf = float
            .solve(&rhs.iter().map(crate::scalar::Scalar::to_f64).collect::<Vec<_>>())
            .unwrap();
        let xe = exact.solve(&rhs).unwrap();
        for (a, b) in xe.iter().zip(xf) {
            assert!((crate::scalar::Scalar::to_f64(a) - b).abs() < 1e-10);
        }
    }
}
