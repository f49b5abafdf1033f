//! Grid-sampled convex calculus: discrete Legendre conjugation, Young's
//! inequality gap, finite-difference fields, and the trace–determinant
//! matrix inequality.
//!
//! A [`GridFunction`] samples a scalar function on a uniform rectangular
//! grid with a node mask (so convex but non-rectangular domains can be
//! represented on their bounding box). The discrete Legendre conjugate
//!
//! ```text
//! ũ(ξ) = max_{x masked} ( x·ξ − u(x) )
//! ```
//!
//! is evaluated exactly over the masked nodes — O(N·M) for N primal and M
//! dual nodes, which is affordable at the grid sizes used here and avoids
//! the bookkeeping of fast Legendre transforms. The conjugate of a sampled
//! convex function carries an O(h) bias near slopes attained only at the
//! mask boundary and an O(h²) bias where the maximizer is interior; callers
//! that integrate conjugate values budget for this in their tolerances.
//!
//! [`newton_inequality`] checks the arithmetic–geometric inequality for a
//! product of a symmetric positive definite and a positive semidefinite
//! matrix,
//!
//! ```text
//! (det AB)^{1/n} ≤ tr(AB)/n,
//! ```
//!
//! with equality exactly when `AB` is a multiple of the identity. This is
//! the pointwise engine behind lower bounds for anisotropic Laplacians
//! `Δ_H u = tr(∇²E(∇u) ∇²u)`.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Scalar function sampled on a uniform rectangular grid with a node mask.
///
/// Indexing is x-major: the flat index of node `(ix, iy)` is `ix * ny + iy`,
/// and the node position is `origin + (ix·dx, iy·dy)`. Values at unmasked
/// nodes are ignored (serialized as `nan`).
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub origin: [f64; 2],
    pub spacing: [f64; 2],
    pub shape: [usize; 2],
    values: Vec<f64>,
    mask: Vec<bool>,
}

impl GridFunction {
    pub fn new(
        origin: [f64; 2],
        spacing: [f64; 2],
        shape: [usize; 2],
        values: Vec<f64>,
        mask: Vec<bool>,
    ) -> Result<GridFunction> {
        if shape[0] < 2 || shape[1] < 2 {
            return Err(Error::InvalidGrid(format!(
                "shape {}×{} below minimum 2×2",
                shape[0], shape[1]
            )));
        }
        if !(spacing[0] > 0.0 && spacing[1] > 0.0)
            || !spacing.iter().all(|s| s.is_finite())
            || !origin.iter().all(|s| s.is_finite())
        {
            return Err(Error::InvalidGrid("non-finite or non-positive geometry".into()));
        }
        let n = shape[0] * shape[1];
        if values.len() != n || mask.len() != n {
            return Err(Error::InvalidGrid(format!(
                "values/mask length {}/{} does not match shape ({n} nodes)",
                values.len(),
                mask.len()
            )));
        }
        for i in 0..n {
            if mask[i] && !values[i].is_finite() {
                return Err(Error::InvalidGrid("non-finite value at masked node".into()));
            }
        }
        Ok(GridFunction {
            origin,
            spacing,
            shape,
            values,
            mask,
        })
    }

    /// Sample `f` at every node; nodes where `f` returns `None` are masked
    /// out.
    pub fn from_fn(
        origin: [f64; 2],
        spacing: [f64; 2],
        shape: [usize; 2],
        mut f: impl FnMut([f64; 2]) -> Option<f64>,
    ) -> Result<GridFunction> {
        let (nx, ny) = (shape[0], shape[1]);
        let mut values = vec![f64::NAN; nx * ny];
        let mut mask = vec![false; nx * ny];
        for ix in 0..nx {
            for iy in 0..ny {
                let p = [
                    origin[0] + ix as f64 * spacing[0],
                    origin[1] + iy as f64 * spacing[1],
                ];
                if let Some(v) = f(p) {
                    values[ix * ny + iy] = v;
                    mask[ix * ny + iy] = true;
                }
            }
        }
        GridFunction::new(origin, spacing, shape, values, mask)
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        ix * self.shape[1] + iy
    }

    #[inline]
    pub fn node(&self, ix: usize, iy: usize) -> [f64; 2] {
        [
            self.origin[0] + ix as f64 * self.spacing[0],
            self.origin[1] + iy as f64 * self.spacing[1],
        ]
    }

    #[inline]
    pub fn masked(&self, ix: usize, iy: usize) -> bool {
        self.mask[self.index(ix, iy)]
    }

    #[inline]
    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[self.index(ix, iy)]
    }

    pub fn set(&mut self, ix: usize, iy: usize, v: f64) {
        let i = self.index(ix, iy);
        self.values[i] = v;
        self.mask[i] = v.is_finite();
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn masked_count(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    /// True when every node within Chebyshev distance `margin` of `(ix, iy)`
    /// exists and is masked.
    pub fn has_margin(&self, ix: usize, iy: usize, margin: usize) -> bool {
        let (nx, ny) = (self.shape[0], self.shape[1]);
        if ix < margin || iy < margin || ix + margin >= nx || iy + margin >= ny {
            return false;
        }
        for dx in 0..=2 * margin {
            for dy in 0..=2 * margin {
                if !self.masked(ix - margin + dx, iy - margin + dy) {
                    return false;
                }
            }
        }
        true
    }

    /// Bilinear interpolation; all four surrounding nodes must be masked.
    pub fn bilinear(&self, p: [f64; 2]) -> Result<f64> {
        let fx = (p[0] - self.origin[0]) / self.spacing[0];
        let fy = (p[1] - self.origin[1]) / self.spacing[1];
        if !fx.is_finite() || !fy.is_finite() {
            return Err(Error::NonFiniteInput);
        }
        let ix = (fx.floor() as isize).clamp(0, self.shape[0] as isize - 2) as usize;
        let iy = (fy.floor() as isize).clamp(0, self.shape[1] as isize - 2) as usize;
        let tx = fx - ix as f64;
        let ty = fy - iy as f64;
        if !(-1e-9..=1.0 + 1e-9).contains(&tx) || !(-1e-9..=1.0 + 1e-9).contains(&ty) {
            return Err(Error::OutsideGrid(p[0], p[1]));
        }
        for (dx, dy) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            if !self.masked(ix + dx, iy + dy) {
                return Err(Error::OutsideGrid(p[0], p[1]));
            }
        }
        let v00 = self.value(ix, iy);
        let v01 = self.value(ix, iy + 1);
        let v10 = self.value(ix + 1, iy);
        let v11 = self.value(ix + 1, iy + 1);
        Ok(v00 * (1.0 - tx) * (1.0 - ty)
            + v10 * tx * (1.0 - ty)
            + v01 * (1.0 - tx) * ty
            + v11 * tx * ty)
    }

    /// Gradient at every masked node: central differences where both axis
    /// neighbors are masked, second-order one-sided stencils against the
    /// mask edge, first-order as a last resort, `None` for isolated nodes.
    pub fn gradient_field(&self) -> Vec<Option<[f64; 2]>> {
        let (nx, ny) = (self.shape[0], self.shape[1]);
        let mut out = vec![None; nx * ny];
        for ix in 0..nx {
            for iy in 0..ny {
                if !self.masked(ix, iy) {
                    continue;
                }
                let gx = self.axis_derivative(ix, iy, 0);
                let gy = self.axis_derivative(ix, iy, 1);
                if let (Some(gx), Some(gy)) = (gx, gy) {
                    out[self.index(ix, iy)] = Some([gx, gy]);
                }
            }
        }
        out
    }

    fn axis_derivative(&self, ix: usize, iy: usize, axis: usize) -> Option<f64> {
        let h = self.spacing[axis];
        let get = |dx: isize| -> Option<f64> {
            let (jx, jy) = if axis == 0 {
                (ix as isize + dx, iy as isize)
            } else {
                (ix as isize, iy as isize + dx)
            };
            if jx < 0 || jy < 0 || jx >= self.shape[0] as isize || jy >= self.shape[1] as isize {
                return None;
            }
            let (jx, jy) = (jx as usize, jy as usize);
            if self.masked(jx, jy) {
                Some(self.value(jx, jy))
            } else {
                None
            }
        };
        let c = get(0)?;
        match (get(-1), get(1)) {
            (Some(m), Some(p)) => Some((p - m) / (2.0 * h)),
            (None, Some(p)) => match get(2) {
                Some(p2) => Some((-3.0 * c + 4.0 * p - p2) / (2.0 * h)),
                None => Some((p - c) / h),
            },
            (Some(m), None) => match get(-2) {
                Some(m2) => Some((3.0 * c - 4.0 * m + m2) / (2.0 * h)),
                None => Some((c - m) / h),
            },
            (None, None) => None,
        }
    }

    /// Hessian by central differences at nodes whose full 3×3 neighborhood
    /// is masked; `None` elsewhere.
    pub fn hessian_field(&self) -> Vec<Option<[[f64; 2]; 2]>> {
        let (nx, ny) = (self.shape[0], self.shape[1]);
        let (hx, hy) = (self.spacing[0], self.spacing[1]);
        let mut out = vec![None; nx * ny];
        for ix in 0..nx {
            for iy in 0..ny {
                if !self.has_margin(ix, iy, 1) {
                    continue;
                }
                let v = |dx: isize, dy: isize| {
                    self.value((ix as isize + dx) as usize, (iy as isize + dy) as usize)
                };
                let uxx = (v(1, 0) - 2.0 * v(0, 0) + v(-1, 0)) / (hx * hx);
                let uyy = (v(0, 1) - 2.0 * v(0, 0) + v(0, -1)) / (hy * hy);
                let uxy = (v(1, 1) - v(1, -1) - v(-1, 1) + v(-1, -1)) / (4.0 * hx * hy);
                out[self.index(ix, iy)] = Some([[uxx, uxy], [uxy, uyy]]);
            }
        }
        out
    }

    /// Serialize to the flat text format: one header line
    /// `origin_x origin_y dx dy nx ny`, then one value per line in x-major
    /// order (`nan` at unmasked nodes).
    pub fn write_text(&self, w: &mut impl std::io::Write) -> Result<()> {
        writeln!(
            w,
            "{:.17e} {:.17e} {:.17e} {:.17e} {} {}",
            self.origin[0], self.origin[1], self.spacing[0], self.spacing[1], self.shape[0], self.shape[1]
        )?;
        for i in 0..self.values.len() {
            if self.mask[i] {
                writeln!(w, "{:.17e}", self.values[i])?;
            } else {
                writeln!(w, "nan")?;
            }
        }
        Ok(())
    }

    pub fn read_text(r: &mut impl std::io::BufRead) -> Result<GridFunction> {
        let mut header = String::new();
        r.read_line(&mut header)?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 6 {
            return Err(Error::InvalidGrid(format!(
                "header has {} fields, expected 6",
                parts.len()
            )));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::InvalidGrid(format!("bad header number {s:?}")))
        };
        let origin = [num(parts[0])?, num(parts[1])?];
        let spacing = [num(parts[2])?, num(parts[3])?];
        let shape = [
            parts[4]
                .parse::<usize>()
                .map_err(|_| Error::InvalidGrid("bad shape".into()))?,
            parts[5]
                .parse::<usize>()
                .map_err(|_| Error::InvalidGrid("bad shape".into()))?,
        ];
        let n = shape[0] * shape[1];
        let mut values = Vec::with_capacity(n);
        let mut mask = Vec::with_capacity(n);
        let mut line = String::new();
        loop {
            line.clear();
            if r.read_line(&mut line)? == 0 {
                break;
            }
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            let v: f64 = t
                .parse()
                .map_err(|_| Error::InvalidGrid(format!("bad value line {t:?}")))?;
            mask.push(v.is_finite());
            values.push(v);
        }
        if values.len() != n {
            return Err(Error::InvalidGrid(format!(
                "{} value lines for {} nodes",
                values.len(),
                n
            )));
        }
        GridFunction::new(origin, spacing, shape, values, mask)
    }

    /// CSV rows `x,y,value` for the masked nodes.
    pub fn write_csv(&self, w: &mut impl std::io::Write) -> Result<()> {
        writeln!(w, "x,y,value")?;
        for ix in 0..self.shape[0] {
            for iy in 0..self.shape[1] {
                if self.masked(ix, iy) {
                    let p = self.node(ix, iy);
                    writeln!(w, "{},{},{}", p[0], p[1], self.value(ix, iy))?;
                }
            }
        }
        Ok(())
    }
}

/// Discrete Legendre conjugate `ũ(ξ) = max_x (x·ξ − u(x))` over the masked
/// nodes of `u`, sampled on the dual grid described by
/// `(origin, spacing, shape)`. The maximum is exact over the node set
/// (O(N·M)); the result is fully masked.
pub fn legendre_conjugate(
    u: &GridFunction,
    origin: [f64; 2],
    spacing: [f64; 2],
    shape: [usize; 2],
) -> Result<GridFunction> {
    let mut points = Vec::with_capacity(u.masked_count());
    for ix in 0..u.shape[0] {
        for iy in 0..u.shape[1] {
            if u.masked(ix, iy) {
                let p = u.node(ix, iy);
                points.push([p[0], p[1], u.value(ix, iy)]);
            }
        }
    }
    if points.is_empty() {
        return Err(Error::InvalidGrid("conjugate of a fully masked-out grid".into()));
    }
    let (nx, ny) = (shape[0], shape[1]);
    if nx < 2 || ny < 2 {
        return Err(Error::InvalidGrid("dual grid below 2×2".into()));
    }
    let values: Vec<f64> = (0..nx * ny)
        .into_par_iter()
        .map(|i| {
            let (ix, iy) = (i / ny, i % ny);
            let xi = [
                origin[0] + ix as f64 * spacing[0],
                origin[1] + iy as f64 * spacing[1],
            ];
            let mut best = f64::NEG_INFINITY;
            for p in &points {
                let v = p[0] * xi[0] + p[1] * xi[1] - p[2];
                if v > best {
                    best = v;
                }
            }
            best
        })
        .collect();
    GridFunction::new(origin, spacing, shape, values, vec![true; nx * ny])
}

/// Young's inequality gap `u(x) + ũ(ξ) − x·ξ ≥ 0`, evaluated by bilinear
/// interpolation of both grids. Zero (up to discretization) exactly when
/// `ξ ∈ ∂u(x)`.
pub fn young_gap(
    u: &GridFunction,
    u_conj: &GridFunction,
    x: [f64; 2],
    xi: [f64; 2],
) -> Result<f64> {
    Ok(u.bilinear(x)? + u_conj.bilinear(xi)? - (x[0] * xi[0] + x[1] * xi[1]))
}

/// Result of the trace–determinant inequality check for `AB`.
#[derive(Debug, Clone, Copy)]
pub struct NewtonCheck {
    /// `(det AB)^{1/n}`.
    pub lhs: f64,
    /// `tr(AB)/n`.
    pub rhs: f64,
    /// Whether `AB = λI` within tolerance.
    pub equality: bool,
    /// The multiple `λ = tr(AB)/n` when `equality` holds.
    pub lambda: Option<f64>,
}

/// Check `(det AB)^{1/n} ≤ tr(AB)/n` for symmetric positive definite `A`
/// and symmetric positive semidefinite `B`.
///
/// `A` must be SPD (Cholesky); `B` is accepted as PSD when its smallest
/// eigenvalue is ≥ `−1e-12·‖B‖`. Equality is flagged iff
/// `‖AB − λI‖_∞ ≤ 1e-10 (1 + λ)` with `λ = tr(AB)/n`, which happens exactly
/// when `B = λ A⁻¹`.
pub fn newton_inequality(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<NewtonCheck> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n || b.ncols() != n || n == 0 {
        return Err(Error::InvalidMatrix(format!(
            "dimension mismatch: A is {}×{}, B is {}×{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    if a.iter().any(|v| !v.is_finite()) || b.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let sym_tol = |m: &DMatrix<f64>| 1e-12 * m.amax().max(1.0);
    if (a - a.transpose()).amax() > sym_tol(a) {
        return Err(Error::InvalidMatrix("A is not symmetric".into()));
    }
    if (b - b.transpose()).amax() > sym_tol(b) {
        return Err(Error::InvalidMatrix("B is not symmetric".into()));
    }
    let a_sym = (a + a.transpose()) * 0.5;
    let b_sym = (b + b.transpose()) * 0.5;
    let chol = nalgebra::Cholesky::new(a_sym.clone())
        .ok_or_else(|| Error::InvalidMatrix("A is not positive definite".into()))?;
    let det_a: f64 = chol.l_dirty().diagonal().iter().map(|d| d * d).product();
    let eig_b = b_sym.clone().symmetric_eigen();
    let b_scale = eig_b.eigenvalues.amax();
    let min_eig = eig_b.eigenvalues.min();
    if min_eig < -1e-12 * b_scale.max(1.0) {
        return Err(Error::InvalidMatrix(format!(
            "B is not positive semidefinite (λ_min = {min_eig:.3e})"
        )));
    }
    let det_b = eig_b.eigenvalues.iter().map(|l| l.max(0.0)).product::<f64>();
    let ab = &a_sym * &b_sym;
    let trace = ab.trace();
    let nf = n as f64;
    let lhs = (det_a * det_b).max(0.0).powf(1.0 / nf);
    let rhs = trace / nf;
    let lambda = rhs;
    let mut dev = DMatrix::identity(n, n);
    dev *= lambda;
    let equality = (&ab - dev).amax() <= 1e-10 * (1.0 + lambda.abs());
    Ok(NewtonCheck {
        lhs,
        rhs,
        equality,
        lambda: if equality { Some(lambda) } else { None },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn quadratic_grid(n: usize) -> GridFunction {
        // u(x) = xᵀ diag(1/4, 1) x / 2 on [−2, 2]².
        let h = 4.0 / (n - 1) as f64;
        GridFunction::from_fn([-2.0, -2.0], [h, h], [n, n], |p| {
            Some(0.5 * (p[0] * p[0] / 4.0 + p[1] * p[1]))
        })
        .unwrap()
    }

    #[test]
    fn conjugate_of_quadratic_is_the_inverse_quadratic() {
        // u = xᵀA⁻¹x/2 with A = diag(4,1) → ũ = ξᵀAξ/2.
        let u = quadratic_grid(129);
        let conj = legendre_conjugate(&u, [-0.45, -1.5], [0.9 / 40.0, 3.0 / 40.0], [41, 41]).unwrap();
        for ix in 0..41 {
            for iy in 0..41 {
                let xi = conj.node(ix, iy);
                let expect = 0.5 * (4.0 * xi[0] * xi[0] + xi[1] * xi[1]);
                let got = conj.value(ix, iy);
                assert!(
                    (got - expect).abs() < 1.5e-3,
                    "conjugate off at {xi:?}: {got} vs {expect}"
                );
            }
        }
    }

    #[test]
    fn young_gap_vanishes_on_the_gradient_graph() {
        let u = quadratic_grid(257);
        let conj = legendre_conjugate(&u, [-1.6, -1.6], [0.05, 0.05], [65, 65]).unwrap();
        // ∇u(x) = (x₁/4, x₂): at x = (1, 0), ξ = (1/4, 0) the gap closes.
        let gap = young_gap(&u, &conj, [1.0, 0.0], [0.25, 0.0]).unwrap();
        assert!(gap.abs() < 2e-2, "gap {gap}");
        // Off the graph the gap is the positive duality defect.
        let gap = young_gap(&u, &conj, [1.0, 0.0], [0.0, 1.0]).unwrap();
        assert!((gap - 0.5 * (1.0 / 4.0) - 0.5 + 0.0 * 1.0 < 1.0) && gap > 0.1);
        // Young's inequality: nonnegative up to discretization everywhere.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let x = [rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)];
            let xi = [rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)];
            let gap = young_gap(&u, &conj, x, xi).unwrap();
            assert!(gap > -5e-3, "negative gap {gap} at {x:?} {xi:?}");
        }
    }

    #[test]
    fn biconjugation_recovers_convex_samples() {
        let u = quadratic_grid(129);
        let h = u.spacing[0];
        // Slopes on [−2,2]² stay in [−1,1]×[−2,2]; pad the dual box.
        let conj = legendre_conjugate(&u, [-1.2, -2.4], [2.4 / 96.0, 4.8 / 96.0], [97, 97]).unwrap();
        let biconj = legendre_conjugate(&conj, u.origin, u.spacing, u.shape).unwrap();
        // Lip(u) ≤ 2 on the box; compare away from the rim.
        let lip = 2.0;
        for ix in 8..121 {
            for iy in 8..121 {
                let d = (biconj.value(ix, iy) - u.value(ix, iy)).abs();
                assert!(d <= 3.0 * h * lip, "biconjugation defect {d} at ({ix},{iy})");
            }
        }
    }

    #[test]
    fn conjugate_needs_nodes() {
        let g = GridFunction::new(
            [0.0, 0.0],
            [1.0, 1.0],
            [2, 2],
            vec![f64::NAN; 4],
            vec![false; 4],
        )
        .unwrap();
        assert!(matches!(
            legendre_conjugate(&g, [0.0, 0.0], [1.0, 1.0], [2, 2]),
            Err(Error::InvalidGrid(_))
        ));
    }

    #[test]
    fn text_format_roundtrips() {
        let mut g = quadratic_grid(17);
        g.set(3, 4, f64::NAN); // punch a hole in the mask
        let mut buf = Vec::new();
        g.write_text(&mut buf).unwrap();
        let back = GridFunction::read_text(&mut std::io::BufReader::new(&buf[..])).unwrap();
        assert_eq!(g.shape, back.shape);
        assert_eq!(g.mask(), back.mask());
        for i in 0..g.values().len() {
            if g.mask()[i] {
                assert_relative_eq!(g.values()[i], back.values()[i]);
            }
        }
        let mut csv = Vec::new();
        g.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("x,y,value\n"));
        assert_eq!(text.lines().count(), 1 + g.masked_count());
    }

    #[test]
    fn bilinear_is_exact_on_bilinear_data() {
        let g = GridFunction::from_fn([0.0, 0.0], [0.5, 0.25], [9, 9], |p| {
            Some(1.0 + 2.0 * p[0] - p[1] + 3.0 * p[0] * p[1])
        })
        .unwrap();
        let f = |p: [f64; 2]| 1.0 + 2.0 * p[0] - p[1] + 3.0 * p[0] * p[1];
        for p in [[0.13, 0.2], [3.9, 1.99], [0.0, 0.0], [4.0, 2.0]] {
            assert_relative_eq!(g.bilinear(p).unwrap(), f(p), max_relative = 1e-12);
        }
        assert!(matches!(
            g.bilinear([4.6, 0.0]),
            Err(Error::OutsideGrid(_, _))
        ));
    }

    #[test]
    fn derivative_fields_are_exact_on_quadratics() {
        let u = quadratic_grid(33);
        let grad = u.gradient_field();
        let hess = u.hessian_field();
        for ix in 0..33 {
            for iy in 0..33 {
                let p = u.node(ix, iy);
                let g = grad[u.index(ix, iy)].unwrap();
                // One-sided second-order stencils are exact on quadratics,
                // so even edge nodes are exact.
                assert_relative_eq!(g[0], p[0] / 4.0, epsilon = 1e-10);
                assert_relative_eq!(g[1], p[1], epsilon = 1e-10);
                if let Some(h) = hess[u.index(ix, iy)] {
                    assert_relative_eq!(h[0][0], 0.25, epsilon = 1e-9);
                    assert_relative_eq!(h[1][1], 1.0, epsilon = 1e-9);
                    assert_relative_eq!(h[0][1], 0.0, epsilon = 1e-9);
                }
            }
        }
    }

    fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
        let g = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        &g * g.transpose() + DMatrix::identity(n, n) * 0.05
    }

    #[test]
    fn newton_inequality_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..300 {
            let n = rng.gen_range(2..=4);
            let a = random_spd(&mut rng, n);
            let b = random_spd(&mut rng, n);
            let check = newton_inequality(&a, &b).unwrap();
            let scale = check.rhs.abs().max(1.0);
            assert!(
                check.lhs <= check.rhs + 1e-12 * scale,
                "violated: {} > {}",
                check.lhs,
                check.rhs
            );
        }
    }

    #[test]
    fn newton_equality_detection() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..50 {
            let n = rng.gen_range(2..=4);
            let a = random_spd(&mut rng, n);
            let lambda = rng.gen_range(0.2..5.0);
            // B = λ A⁻¹ makes AB = λ I exactly.
            let b = a.clone().try_inverse().unwrap() * lambda;
            let b = (&b + b.transpose()) * 0.5;
            let check = newton_inequality(&a, &b).unwrap();
            assert!(check.equality, "equality case missed");
            assert_relative_eq!(check.lambda.unwrap(), lambda, max_relative = 1e-9);
            assert_relative_eq!(check.lhs, check.rhs, max_relative = 1e-9);
            // A rank-one bump breaks it.
            let mut v = DMatrix::zeros(n, 1);
            v[(0, 0)] = 1.0;
            let b2 = &b + &v * v.transpose() * 0.01;
            let check = newton_inequality(&a, &b2).unwrap();
            assert!(!check.equality);
            assert!(check.lhs < check.rhs);
        }
    }

    #[test]
    fn newton_rejects_bad_inputs() {
        let id = DMatrix::<f64>::identity(2, 2);
        let neg = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]);
        assert!(matches!(
            newton_inequality(&neg, &id),
            Err(Error::InvalidMatrix(_))
        ));
        // PSD B with a zero eigenvalue passes; strictly negative fails.
        let psd = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(newton_inequality(&id, &psd).is_ok());
        assert!(matches!(
            newton_inequality(&id, &neg),
            Err(Error::InvalidMatrix(_))
        ));
        let skew = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, -0.5, 1.0]);
        assert!(matches!(
            newton_inequality(&id, &skew),
            Err(Error::InvalidMatrix(_))
        ));
        let wide = DMatrix::<f64>::identity(3, 3);
        assert!(matches!(
            newton_inequality(&id, &wide),
            Err(Error::InvalidMatrix(_))
        ));
    }
}
