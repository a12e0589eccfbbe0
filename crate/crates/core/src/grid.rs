//! Macroscale grid geometry, symmetric index maps and finite-difference stencils.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::GridError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Symmetry {
    /// Plain doubly periodic wrap; all `mx * my` points are stored.
    Periodic,
    /// Odd about both `x = 0` and `x = mx h` (likewise in `y`) and periodic
    /// with period `2 mx h`. Only the open cell `0 < i < mx`, `0 < j < my` is
    /// stored; values on the symmetry lines are identically zero.
    OddPeriodic,
}

/// Uniform macroscale grid `x_i = x0 + i h`, `y_j = y0 + j h`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MacroGrid {
    pub h: f64,
    pub mx: usize,
    pub my: usize,
    pub symmetry: Symmetry,
    pub origin: (f64, f64),
}

impl MacroGrid {
    pub fn new(h: f64, mx: usize, my: usize, symmetry: Symmetry) -> Result<Self, GridError> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(GridError::InvalidSpacing(h));
        }
        if mx < 2 || my < 2 {
            return Err(GridError::TooFewElements { mx, my });
        }
        Ok(MacroGrid {
            h,
            mx,
            my,
            symmetry,
            origin: (0.0, 0.0),
        })
    }

    /// Doubly periodic grid of `m x m` points on `[0, length)^2`.
    pub fn periodic_square(m: usize, length: f64) -> Result<Self, GridError> {
        Self::new(length / m as f64, m, m, Symmetry::Periodic)
    }

    /// `m x m` elements on `[0, pi]^2` with doubly odd symmetry, so `h = pi / m`
    /// and `(m - 1)^2` grid values are free.
    pub fn odd_square(m: usize) -> Result<Self, GridError> {
        Self::new(PI / m as f64, m, m, Symmetry::OddPeriodic)
    }

    /// Shape `(nx, ny)` of the stored fundamental cell.
    pub fn stored_shape(&self) -> (usize, usize) {
        match self.symmetry {
            Symmetry::Periodic => (self.mx, self.my),
            Symmetry::OddPeriodic => (self.mx - 1, self.my - 1),
        }
    }

    pub fn len(&self) -> usize {
        let (nx, ny) = self.stored_shape();
        nx * ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Grid index `(i, j)` of stored position `(p, q)`.
    pub fn grid_index(&self, p: usize, q: usize) -> (isize, isize) {
        match self.symmetry {
            Symmetry::Periodic => (p as isize, q as isize),
            Symmetry::OddPeriodic => (p as isize + 1, q as isize + 1),
        }
    }

    pub fn x(&self, i: isize) -> f64 {
        self.origin.0 + i as f64 * self.h
    }

    pub fn y(&self, j: isize) -> f64 {
        self.origin.1 + j as f64 * self.h
    }

    /// Maps any integer grid index to a stored flat index and a sign, or
    /// `None` where the symmetry forces the value to vanish.
    pub fn locate(&self, i: isize, j: isize) -> Option<(usize, f64)> {
        let (nx, _) = self.stored_shape();
        match self.symmetry {
            Symmetry::Periodic => {
                let p = i.rem_euclid(self.mx as isize) as usize;
                let q = j.rem_euclid(self.my as isize) as usize;
                Some((q * nx + p, 1.0))
            }
            Symmetry::OddPeriodic => {
                let (p, sx) = fold_odd(i, self.mx)?;
                let (q, sy) = fold_odd(j, self.my)?;
                Some(((q - 1) * nx + (p - 1), sx * sy))
            }
        }
    }

    pub(crate) fn same_as(&self, other: &MacroGrid) -> bool {
        self.mx == other.mx
            && self.my == other.my
            && self.symmetry == other.symmetry
            && (self.h - other.h).abs() <= 1e-12 * self.h.max(other.h)
    }
}

/// Reflects an index into `1..m` for odd symmetry about `0` and `m`.
fn fold_odd(i: isize, m: usize) -> Option<(usize, f64)> {
    let period = 2 * m as isize;
    let r = i.rem_euclid(period);
    if r == 0 || r == m as isize {
        None
    } else if r < m as isize {
        Some((r as usize, 1.0))
    } else {
        Some(((period - r) as usize, -1.0))
    }
}

/// Grid values `u_{i,j}` over the stored cell of a [`MacroGrid`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    pub grid: MacroGrid,
    values: Vec<f64>,
}

impl GridField {
    pub fn zeros(grid: MacroGrid) -> Self {
        GridField {
            values: vec![0.0; grid.len()],
            grid,
        }
    }

    pub fn from_values(grid: MacroGrid, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::ShapeMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        Ok(GridField { grid, values })
    }

    /// Samples `f(x_i, y_j)` at every stored point.
    pub fn from_fn(grid: MacroGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let (nx, ny) = grid.stored_shape();
        let mut values = Vec::with_capacity(nx * ny);
        for q in 0..ny {
            for p in 0..nx {
                let (i, j) = grid.grid_index(p, q);
                values.push(f(grid.x(i), grid.y(j)));
            }
        }
        GridField { grid, values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value at any integer grid index, applying the symmetry of the grid.
    pub fn at(&self, i: isize, j: isize) -> f64 {
        match self.grid.locate(i, j) {
            Some((k, sign)) => sign * self.values[k],
            None => 0.0,
        }
    }

    /// Applies `f` to every stored value.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridField {
        GridField {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Root-mean-square of the stored values.
    pub fn rms(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        (self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64).sqrt()
    }

    /// Iterates `(stored index, i, j)` over the stored cell.
    pub fn indices(&self) -> impl Iterator<Item = (usize, isize, isize)> + '_ {
        let (nx, ny) = self.grid.stored_shape();
        (0..ny).flat_map(move |q| {
            (0..nx).map(move |p| {
                let (i, j) = self.grid.grid_index(p, q);
                (q * nx + p, i, j)
            })
        })
    }
}

/// Field value at any integer index (free-function form of [`GridField::at`]).
pub fn field_at(field: &GridField, i: isize, j: isize) -> f64 {
    field.at(i, j)
}

/// A finite signed-weight map on integer offsets, with exact rational weights.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stencil {
    /// `(di, dj, numerator, denominator)`, sorted by offset, nonzero weights only.
    weights: Vec<(i32, i32, i64, i64)>,
}

impl Stencil {
    pub fn from_weights(mut raw: Vec<(i32, i32, i64, i64)>) -> Self {
        raw.sort_by_key(|w| (w.0, w.1));
        let mut weights: Vec<(i32, i32, i64, i64)> = Vec::with_capacity(raw.len());
        for (di, dj, num, den) in raw {
            match weights.last_mut() {
                Some(last) if last.0 == di && last.1 == dj => {
                    let (n, d) = add_frac((last.2, last.3), (num, den));
                    last.2 = n;
                    last.3 = d;
                }
                _ => {
                    let (n, d) = reduce(num, den);
                    weights.push((di, dj, n, d));
                }
            }
        }
        weights.retain(|w| w.2 != 0);
        Stencil { weights }
    }

    fn identity() -> Self {
        Stencil::from_weights(vec![(0, 0, 1, 1)])
    }

    /// Convolution: applying `self` after `other`.
    pub fn compose(&self, other: &Stencil) -> Stencil {
        let mut raw = Vec::new();
        for &(a, b, n1, d1) in &self.weights {
            for &(c, d, n2, d2) in &other.weights {
                raw.push((a + c, b + d, n1 * n2, d1 * d2));
            }
        }
        Stencil::from_weights(raw)
    }

    pub fn plus(&self, other: &Stencil) -> Stencil {
        let mut raw = self.weights.clone();
        raw.extend_from_slice(&other.weights);
        Stencil::from_weights(raw)
    }

    pub fn weights(&self) -> &[(i32, i32, i64, i64)] {
        &self.weights
    }

    pub fn weight_f64(&self) -> impl Iterator<Item = (i32, i32, f64)> + '_ {
        self.weights
            .iter()
            .map(|&(di, dj, n, d)| (di, dj, n as f64 / d as f64))
    }

    /// Sum of the weights as an exact fraction.
    pub fn weight_sum(&self) -> (i64, i64) {
        self.weights
            .iter()
            .fold((0, 1), |acc, w| add_frac(acc, (w.2, w.3)))
    }

    /// Largest `|di| + |dj|` over the support.
    pub fn radius(&self) -> i32 {
        self.weights
            .iter()
            .map(|w| w.0.abs() + w.1.abs())
            .max()
            .unwrap_or(0)
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn reduce(n: i64, d: i64) -> (i64, i64) {
    let g = gcd(n, d).max(1);
    let s = if d < 0 { -1 } else { 1 };
    (s * n / g, s * d / g)
}

fn add_frac(a: (i64, i64), b: (i64, i64)) -> (i64, i64) {
    reduce(a.0 * b.1 + b.0 * a.1, a.1 * b.1)
}

/// Named stencils used by the model catalogue.
///
/// The mean-difference operators follow the usual central-difference
/// notation: `mu_x delta_x f_i = (f_{i+1} - f_{i-1}) / 2`, and
/// `mu_x delta_x^3 = mu_x delta_x delta_x^2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StencilId {
    Delta2,
    Delta4,
    Delta6,
    Delta2X,
    Delta2Y,
    Delta4X,
    Delta4Y,
    Delta6X,
    Delta6Y,
    Delta2XDelta2Y,
    MuDeltaX,
    MuDeltaY,
    MuDelta3X,
    MuDelta3Y,
    /// `mu_x delta_x delta_y^2`
    MuDeltaXDelta2Y,
    /// `mu_y delta_y delta_x^2`
    MuDeltaYDelta2X,
    /// Standard fourth-order accurate Laplacian `(delta^2 - delta^4 / 12)`.
    Laplacian4,
    Identity,
}

impl StencilId {
    pub const ALL: [StencilId; 18] = [
        StencilId::Delta2,
        StencilId::Delta4,
        StencilId::Delta6,
        StencilId::Delta2X,
        StencilId::Delta2Y,
        StencilId::Delta4X,
        StencilId::Delta4Y,
        StencilId::Delta6X,
        StencilId::Delta6Y,
        StencilId::Delta2XDelta2Y,
        StencilId::MuDeltaX,
        StencilId::MuDeltaY,
        StencilId::MuDelta3X,
        StencilId::MuDelta3Y,
        StencilId::MuDeltaXDelta2Y,
        StencilId::MuDeltaYDelta2X,
        StencilId::Laplacian4,
        StencilId::Identity,
    ];

    pub fn stencil(self) -> Stencil {
        let dx2 = Stencil::from_weights(vec![(-1, 0, 1, 1), (0, 0, -2, 1), (1, 0, 1, 1)]);
        let dy2 = Stencil::from_weights(vec![(0, -1, 1, 1), (0, 0, -2, 1), (0, 1, 1, 1)]);
        let mux = Stencil::from_weights(vec![(1, 0, 1, 2), (-1, 0, -1, 2)]);
        let muy = Stencil::from_weights(vec![(0, 1, 1, 2), (0, -1, -1, 2)]);
        let dx4 = dx2.compose(&dx2);
        let dy4 = dy2.compose(&dy2);
        match self {
            StencilId::Delta2 => dx2.plus(&dy2),
            StencilId::Delta4 => dx4.plus(&dy4),
            StencilId::Delta6 => dx4.compose(&dx2).plus(&dy4.compose(&dy2)),
            StencilId::Delta2X => dx2,
            StencilId::Delta2Y => dy2,
            StencilId::Delta4X => dx4,
            StencilId::Delta4Y => dy4,
            StencilId::Delta6X => dx4.compose(&dx2),
            StencilId::Delta6Y => dy4.compose(&dy2),
            StencilId::Delta2XDelta2Y => dx2.compose(&dy2),
            StencilId::MuDeltaX => mux,
            StencilId::MuDeltaY => muy,
            StencilId::MuDelta3X => mux.compose(&dx2),
            StencilId::MuDelta3Y => muy.compose(&dy2),
            StencilId::MuDeltaXDelta2Y => mux.compose(&dy2),
            StencilId::MuDeltaYDelta2X => muy.compose(&dx2),
            StencilId::Laplacian4 => {
                let d4 = dx4.plus(&dy4);
                let scaled = Stencil::from_weights(
                    d4.weights().iter().map(|&(a, b, n, d)| (a, b, -n, 12 * d)).collect(),
                );
                dx2.plus(&dy2).plus(&scaled)
            }
            StencilId::Identity => Stencil::identity(),
        }
    }

    /// True for stencils that annihilate constants.
    pub fn is_difference(self) -> bool {
        !matches!(self, StencilId::Identity)
    }
}

/// `sum_o w_o u_{i+di, j+dj}`.
pub fn apply_stencil(field: &GridField, s: StencilId, i: isize, j: isize) -> f64 {
    apply_weights(field, &s.stencil(), 1, i, j)
}

/// Applies the stencil to the pointwise cube: `delta (u^3)`, cube first.
pub fn stencil_of_cube(field: &GridField, s: StencilId, i: isize, j: isize) -> f64 {
    apply_weights(field, &s.stencil(), 3, i, j)
}

/// Applies the stencil to the pointwise `power` of the field.
pub fn stencil_of_power(field: &GridField, s: StencilId, power: i32, i: isize, j: isize) -> f64 {
    apply_weights(field, &s.stencil(), power, i, j)
}

fn apply_weights(field: &GridField, stencil: &Stencil, power: i32, i: isize, j: isize) -> f64 {
    stencil
        .weight_f64()
        .map(|(di, dj, w)| w * field.at(i + di as isize, j + dj as isize).powi(power))
        .sum()
}

/// Precomputed float weights for repeated whole-field application.
#[derive(Clone, Debug)]
pub struct CompiledStencil {
    weights: Vec<(isize, isize, f64)>,
}

impl CompiledStencil {
    pub fn new(s: StencilId) -> Self {
        CompiledStencil {
            weights: s
                .stencil()
                .weight_f64()
                .map(|(a, b, w)| (a as isize, b as isize, w))
                .collect(),
        }
    }

    #[inline]
    pub fn at(&self, field: &GridField, i: isize, j: isize) -> f64 {
        self.weights
            .iter()
            .map(|&(di, dj, w)| w * field.at(i + di, j + dj))
            .sum()
    }

    #[inline]
    pub fn at_power(&self, field: &GridField, power: i32, i: isize, j: isize) -> f64 {
        self.weights
            .iter()
            .map(|&(di, dj, w)| w * field.at(i + di, j + dj).powi(power))
            .sum()
    }

    pub fn weights(&self) -> &[(isize, isize, f64)] {
        &self.weights
    }

    /// Whole-field application.
    pub fn apply(&self, field: &GridField) -> GridField {
        let mut out = GridField::zeros(field.grid);
        for (k, i, j) in field.indices() {
            out.values[k] = self.at(field, i, j);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(grid: MacroGrid, seed: u64) -> GridField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = grid.len();
        GridField::from_values(grid, (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(MacroGrid::new(0.0, 4, 4, Symmetry::Periodic).is_err());
        assert!(MacroGrid::new(0.1, 1, 4, Symmetry::Periodic).is_err());
        assert!(GridField::from_values(MacroGrid::odd_square(4).unwrap(), vec![0.0; 16]).is_err());
    }

    #[test]
    fn periodic_wrap() {
        let grid = MacroGrid::new(0.5, 4, 4, Symmetry::Periodic).unwrap();
        let f = random_field(grid, 1);
        assert_eq!(f.at(5, 0), f.at(1, 0));
        assert_eq!(f.at(-1, -2), f.at(3, 2));
    }

    #[test]
    fn odd_symmetry_lines_vanish_and_mirror() {
        let grid = MacroGrid::odd_square(6).unwrap();
        let f = random_field(grid, 2);
        for j in -7..14 {
            assert_eq!(f.at(0, j), 0.0);
            assert_eq!(f.at(6, j), 0.0);
            assert_eq!(f.at(j, 12), 0.0);
        }
        // one step past pi mirrors the value one step before pi
        assert_eq!(f.at(7, 2), -f.at(5, 2));
        assert_eq!(f.at(-1, 3), -f.at(1, 3));
        assert_eq!(f.at(2, -3), -f.at(2, 3));
        // mapping past both symmetry lines twice returns the original value
        assert_eq!(f.at(-1, -2), f.at(1, 2));
        assert_eq!(f.at(1 + 12, 2 - 12), f.at(1, 2));
    }

    #[test]
    fn stencil_shapes() {
        let d4 = StencilId::Delta4.stencil();
        let mut table: Vec<(i32, i32, i64, i64)> = vec![
            (0, 0, 12, 1),
            (1, 0, -4, 1),
            (-1, 0, -4, 1),
            (0, 1, -4, 1),
            (0, -1, -4, 1),
            (2, 0, 1, 1),
            (-2, 0, 1, 1),
            (0, 2, 1, 1),
            (0, -2, 1, 1),
        ];
        table.sort_by_key(|w| (w.0, w.1));
        assert_eq!(d4.weights(), &table[..]);

        let d6x = StencilId::Delta6X.stencil();
        let w: Vec<i64> = d6x.weights().iter().map(|w| w.2).collect();
        assert_eq!(w, vec![1, -6, 15, -20, 15, -6, 1]);

        let m3 = StencilId::MuDelta3X.stencil();
        assert_eq!(
            m3.weights(),
            &[(-2, 0, -1, 2), (-1, 0, 1, 1), (1, 0, -1, 1), (2, 0, 1, 2)]
        );
        for s in StencilId::ALL {
            if s.is_difference() {
                assert_eq!(s.stencil().weight_sum().0, 0, "{s:?}");
            }
        }
    }

    #[test]
    fn constants_are_annihilated() {
        let grid = MacroGrid::periodic_square(8, 1.0).unwrap();
        let c = GridField::from_fn(grid, |_, _| 0.7);
        for s in StencilId::ALL.into_iter().filter(|s| s.is_difference()) {
            for (_, i, j) in c.indices() {
                assert!(apply_stencil(&c, s, i, j).abs() < 1e-14, "{s:?}");
                assert!(stencil_of_cube(&c, s, i, j).abs() < 1e-14, "{s:?}");
            }
        }
    }

    #[test]
    fn quadratic_differences_are_exact() {
        let h = 0.25;
        let grid = MacroGrid::new(h, 16, 16, Symmetry::Periodic).unwrap();
        let u = GridField::from_fn(grid, |x, y| x * x + y * y);
        // interior points away from the periodic seam
        for i in 3..12 {
            for j in 3..12 {
                let d2 = apply_stencil(&u, StencilId::Delta2, i, j);
                assert!((d2 - 4.0 * h * h).abs() < 1e-12);
                assert!(apply_stencil(&u, StencilId::Delta4, i, j).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn difference_of_cube() {
        let h = 0.5;
        let grid = MacroGrid::new(h, 16, 16, Symmetry::Periodic).unwrap();
        let u = GridField::from_fn(grid, |x, _| x);
        // delta_x^2 x^3 = 6 x h^2 exactly
        assert_eq!(stencil_of_cube(&u, StencilId::Delta2X, 4, 3), 6.0 * 2.0 * h * h);
        let v = GridField::from_fn(grid, |x, _| x - 2.0 * h);
        assert_eq!(stencil_of_cube(&v, StencilId::Delta2X, 2, 0), 0.0);
        assert_eq!(stencil_of_cube(&v, StencilId::Delta2X, 3, 0), 6.0 * h * h * h);
    }

    #[test]
    fn cube_then_stencil_matches_direct_sum() {
        let grid = MacroGrid::new(0.3, 5, 5, Symmetry::Periodic).unwrap();
        let u = random_field(grid, 9);
        for (_, i, j) in u.indices() {
            let brute = u.at(i + 1, j).powi(3)
                + u.at(i - 1, j).powi(3)
                + u.at(i, j + 1).powi(3)
                + u.at(i, j - 1).powi(3)
                - 4.0 * u.at(i, j).powi(3);
            assert!((stencil_of_cube(&u, StencilId::Delta2, i, j) - brute).abs() < 1e-14);
        }
    }

    #[test]
    fn sine_modes_are_discrete_eigenvectors() {
        let m = 12;
        let grid = MacroGrid::odd_square(m).unwrap();
        let h = grid.h;
        for (k, l) in [(1.0, 1.0), (2.0, 3.0), (5.0, 1.0)] {
            let u = GridField::from_fn(grid, |x, y| (k * x).sin() * (l * y).sin());
            let lam = -4.0 * ((k * h / 2.0).sin().powi(2) + (l * h / 2.0).sin().powi(2));
            for (idx, i, j) in u.indices() {
                let d2 = apply_stencil(&u, StencilId::Delta2, i, j);
                assert!((d2 - lam * u.values()[idx]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn odd_stencils_preserve_oddness() {
        let grid = MacroGrid::odd_square(5).unwrap();
        let u = random_field(grid, 3);
        for s in [StencilId::Delta2, StencilId::Delta4, StencilId::Delta6] {
            let cs = CompiledStencil::new(s);
            let du = cs.apply(&u);
            // the stored result, re-extended by symmetry, agrees with direct evaluation
            for i in -6..12 {
                for j in -6..12 {
                    assert!((du.at(i, j) - cs.at(&u, i, j)).abs() < 1e-12);
                }
            }
        }
    }
}
