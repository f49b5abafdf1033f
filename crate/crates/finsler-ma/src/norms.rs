//! Finsler norm families and the convex calculus they induce.
//!
//! A *Finsler norm* here is a convex, positively 1-homogeneous function
//! `H: ℝⁿ → [0, ∞)` vanishing only at the origin, with `H² ∈ C²` away from
//! the origin and a positive-definite Hessian of `E = H²/2` there. The dual
//! norm is
//!
//! ```text
//! H0(x) = max_{ξ≠0} (x·ξ) / H(ξ),
//! ```
//!
//! and `E0 = H0²/2` is the Legendre conjugate of `E`. The gradient maps
//! `∇E = H ∇H` and `∇E0 = H0 ∇H0` are mutually inverse bijections exchanging
//! the unit balls `B_H` and `B_{H0}` (the latter is the *Wulff shape* of
//! `H`). The determinant
//!
//! ```text
//! Φ(ξ) = det ∇²E(ξ),   ξ ≠ 0,
//! ```
//!
//! is 0-homogeneous and acts as the gradient-dependent coefficient of the
//! anisotropic Monge-Ampère operator `Φ(∇u) det ∇²u`.
//!
//! Four concrete families are provided:
//!
//! * **Euclidean** — `H(ξ) = |ξ|`; self-dual, `Φ ≡ 1`.
//! * **Quadratic** — `H(ξ) = √(ξᵀAξ)` for SPD `A`; dual `√(xᵀA⁻¹x)`,
//!   `Φ ≡ det A`.
//! * **PNorm** — `H = ‖ξ‖_p`, `1 < p < ∞`; dual `‖·‖_q`, `1/p + 1/q = 1`.
//!   The Hessian degenerates on the coordinate axes for `p ≠ 2`, so
//!   derivative quantities are only served at generic points (every
//!   component nonzero) when `p < 2`.
//! * **Fourier2D** — `H(ξ) = |ξ| g(θ)` with `g(θ) = 1 + Σ_k (a_k cos kθ +
//!   b_k sin kθ)`, `k ≥ 2`, in the plane. Admissibility (`g > 0` and
//!   `g + g'' > 0` on a dense angular grid) is exactly positive curvature of
//!   the 1-homogeneous extension, and is checked at construction.
//!
//! Odd harmonics make `g(θ+π) ≠ g(θ)`: the resulting `H` is a *gauge*
//! (positively homogeneous only), not a symmetric norm. All duality and
//! inverse-gradient identities implemented here hold for gauges;
//! [`Norm::centrally_symmetric`] reports whether the two-sided homogeneity
//! `H(tξ) = |t| H(ξ)` applies.
//!
//! Derivatives are analytic except for the Fourier2D Hessian, which uses
//! central finite differences of the analytic `∇E` with relative step
//! `1e-5 · max(‖ξ‖, 1)`, and the Fourier2D inverse gradient map, which
//! solves `∇E(ξ) = x` by a damped Newton iteration seeded from the
//! dual-norm maximizing direction.

use std::sync::OnceLock;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest ambient dimension served by the norm families.
pub const MAX_DIM: usize = 3;

/// Number of angles in the coarse scan used by planar dual-norm
/// maximization; refined afterwards by golden-section search.
const DUAL_SCAN: usize = 1024;

/// Number of directions sampled when evaluating `Φ` at the origin (n = 2).
const PHI_ORIGIN_DIRS_2D: usize = 4096;

/// Number of sphere directions sampled when evaluating `Φ` at the origin
/// (n = 3). A spherical Fibonacci lattice keeps the sample deterministic.
const PHI_ORIGIN_DIRS_3D: usize = 100_000;

/// Angular grid used by the Fourier2D admissibility check.
const ADMISSIBILITY_GRID: usize = 4096;

/// Norm family tag. Serialized in lowercase (`"euclidean"`, `"quadratic"`,
/// `"pnorm"`, `"fourier2d"`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Euclidean,
    Quadratic,
    PNorm,
    Fourier2D,
}

/// One trigonometric term `a·cos(kθ) + b·sin(kθ)`, serialized as `[k, a, b]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierTerm(pub u32, pub f64, pub f64);

/// Declarative norm descriptor; the configuration-facing type.
///
/// Only the fields relevant to `family` are read: `a` (row-major `n×n`) for
/// `Quadratic`, `p` for `PNorm`, `fourier` for `Fourier2D`. Validation
/// happens in [`Norm::from_spec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormSpec {
    pub family: Family,
    #[serde(default = "default_dimension")]
    pub dimension: usize,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fourier: Option<Vec<FourierTerm>>,
}

fn default_dimension() -> usize {
    2
}

impl NormSpec {
    pub fn euclidean(dimension: usize) -> Self {
        NormSpec {
            family: Family::Euclidean,
            dimension,
            a: None,
            p: None,
            fourier: None,
        }
    }

    pub fn quadratic(rows: Vec<f64>, dimension: usize) -> Self {
        NormSpec {
            family: Family::Quadratic,
            dimension,
            a: Some(rows),
            p: None,
            fourier: None,
        }
    }

    pub fn p_norm(p: f64, dimension: usize) -> Self {
        NormSpec {
            family: Family::PNorm,
            dimension,
            a: None,
            p: Some(p),
            fourier: None,
        }
    }

    pub fn fourier(terms: Vec<FourierTerm>) -> Self {
        NormSpec {
            family: Family::Fourier2D,
            dimension: 2,
            a: None,
            p: None,
            fourier: Some(terms),
        }
    }
}

/// Value, gradient of `H`, and Hessian of `E = H²/2` at one point.
///
/// `gradient` is 0-homogeneous and `hessian_e` is 0-homogeneous along rays,
/// positive definite under the family admissibility conditions.
#[derive(Debug, Clone)]
pub struct NormEval {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian_e: DMatrix<f64>,
}

#[derive(Debug, Clone)]
enum Kind {
    Euclidean,
    Quadratic {
        a: DMatrix<f64>,
        a_inv: DMatrix<f64>,
        det_a: f64,
    },
    PNorm {
        p: f64,
        q: f64,
    },
    Fourier {
        terms: Vec<FourierTerm>,
        /// `g` tabulated at the shared scan angles, so the coarse phase of a
        /// dual-norm evaluation is a table lookup.
        scan_g: Vec<f64>,
    },
}

/// A validated Finsler norm with cached derived data.
///
/// Construction validates the descriptor (SPD check for `Quadratic`,
/// `p ∈ (1, ∞)` for `PNorm`, the curvature condition for `Fourier2D`) and
/// precomputes what the evaluation paths need (matrix inverse and
/// determinant, angular tables).
#[derive(Debug, Clone)]
pub struct Norm {
    spec: NormSpec,
    kind: Kind,
    dim: usize,
}

/// Shared table of scan directions `(cos θ_i, sin θ_i)`, `θ_i = 2πi/N`.
fn scan_dirs() -> &'static [[f64; 2]] {
    static DIRS: OnceLock<Vec<[f64; 2]>> = OnceLock::new();
    DIRS.get_or_init(|| {
        (0..DUAL_SCAN)
            .map(|i| {
                let t = 2.0 * std::f64::consts::PI * i as f64 / DUAL_SCAN as f64;
                [t.cos(), t.sin()]
            })
            .collect()
    })
}

impl Norm {
    pub fn from_spec(spec: &NormSpec) -> Result<Norm> {
        let dim = spec.dimension;
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidNorm(format!(
                "dimension {dim} unsupported (only 2 ≤ n ≤ {MAX_DIM})"
            )));
        }
        let kind = match spec.family {
            Family::Euclidean => Kind::Euclidean,
            Family::Quadratic => {
                let rows = spec
                    .a
                    .as_ref()
                    .ok_or_else(|| Error::InvalidNorm("quadratic family needs matrix A".into()))?;
                if rows.len() != dim * dim {
                    return Err(Error::InvalidNorm(format!(
                        "matrix A has {} entries, expected {}",
                        rows.len(),
                        dim * dim
                    )));
                }
                if rows.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidNorm("matrix A has non-finite entries".into()));
                }
                let a = DMatrix::from_row_slice(dim, dim, rows);
                let scale = a.amax();
                if (&a - a.transpose()).amax() > 1e-12 * scale.max(1.0) {
                    return Err(Error::InvalidNorm("matrix A is not symmetric".into()));
                }
                let a = (&a + a.transpose()) * 0.5;
                let chol = nalgebra::Cholesky::new(a.clone())
                    .ok_or_else(|| Error::InvalidNorm("matrix A is not positive definite".into()))?;
                let det_a = chol.l_dirty().diagonal().iter().map(|d| d * d).product();
                let a_inv = chol.inverse();
                Kind::Quadratic { a, a_inv, det_a }
            }
            Family::PNorm => {
                let p = spec
                    .p
                    .ok_or_else(|| Error::InvalidNorm("pnorm family needs exponent p".into()))?;
                if !p.is_finite() || p <= 1.0 {
                    return Err(Error::InvalidNorm(format!(
                        "exponent p = {p} outside (1, ∞)"
                    )));
                }
                Kind::PNorm {
                    p,
                    q: p / (p - 1.0),
                }
            }
            Family::Fourier2D => {
                if dim != 2 {
                    return Err(Error::InvalidNorm("fourier2d family is planar (n = 2)".into()));
                }
                let terms = spec
                    .fourier
                    .clone()
                    .ok_or_else(|| Error::InvalidNorm("fourier2d family needs coefficients".into()))?;
                for &FourierTerm(k, a, b) in &terms {
                    if k < 2 {
                        return Err(Error::InvalidNorm(format!(
                            "fourier harmonic k = {k} below minimum 2"
                        )));
                    }
                    if !a.is_finite() || !b.is_finite() {
                        return Err(Error::InvalidNorm("non-finite fourier coefficient".into()));
                    }
                }
                // Admissibility on a dense angular grid: g > 0 keeps H a
                // gauge, g + g'' > 0 is positive curvature of the
                // 1-homogeneous extension (convexity of the unit ball).
                for i in 0..ADMISSIBILITY_GRID {
                    let t = 2.0 * std::f64::consts::PI * i as f64 / ADMISSIBILITY_GRID as f64;
                    let g = fourier_g(&terms, t);
                    let g2 = fourier_g2(&terms, t);
                    if g <= 0.0 {
                        return Err(Error::InvalidNorm(format!(
                            "profile g(θ) ≤ 0 at θ = {t:.4} (g = {g:.4})"
                        )));
                    }
                    if g + g2 <= 0.0 {
                        return Err(Error::InvalidNorm(format!(
                            "curvature g + g'' ≤ 0 at θ = {t:.4} (value {:.4}); ball not convex",
                            g + g2
                        )));
                    }
                }
                let scan_g = scan_dirs()
                    .iter()
                    .enumerate()
                    .map(|(i, _)| {
                        let t = 2.0 * std::f64::consts::PI * i as f64 / DUAL_SCAN as f64;
                        fourier_g(&terms, t)
                    })
                    .collect();
                Kind::Fourier { terms, scan_g }
            }
        };
        Ok(Norm {
            spec: spec.clone(),
            kind,
            dim,
        })
    }

    pub fn euclidean(dimension: usize) -> Result<Norm> {
        Norm::from_spec(&NormSpec::euclidean(dimension))
    }

    pub fn quadratic(rows: Vec<f64>, dimension: usize) -> Result<Norm> {
        Norm::from_spec(&NormSpec::quadratic(rows, dimension))
    }

    pub fn p_norm(p: f64, dimension: usize) -> Result<Norm> {
        Norm::from_spec(&NormSpec::p_norm(p, dimension))
    }

    pub fn fourier(terms: Vec<FourierTerm>) -> Result<Norm> {
        Norm::from_spec(&NormSpec::fourier(terms))
    }

    pub fn spec(&self) -> &NormSpec {
        &self.spec
    }

    pub fn family(&self) -> Family {
        self.spec.family
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    /// Whether `H(-ξ) = H(ξ)`, i.e. the gauge is a genuine norm. True for
    /// every family except Fourier2D specs containing odd harmonics.
    pub fn centrally_symmetric(&self) -> bool {
        match &self.kind {
            Kind::Fourier { terms, .. } => terms
                .iter()
                .all(|&FourierTerm(k, a, b)| k % 2 == 0 || (a == 0.0 && b == 0.0)),
            _ => true,
        }
    }

    fn check_input(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::InvalidNorm(format!(
                "point has dimension {}, norm has {}",
                v.len(),
                self.dim
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        Ok(())
    }

    /// `H(ξ)`.
    pub fn eval(&self, xi: &[f64]) -> Result<f64> {
        self.check_input(xi)?;
        Ok(match &self.kind {
            Kind::Euclidean => nrm2(xi),
            Kind::Quadratic { a, .. } => quad_form(a, xi).max(0.0).sqrt(),
            Kind::PNorm { p, .. } => lp_norm(xi, *p),
            Kind::Fourier { terms, .. } => {
                let r = nrm2(xi);
                if r == 0.0 {
                    0.0
                } else {
                    r * fourier_g(terms, xi[1].atan2(xi[0]))
                }
            }
        })
    }

    /// `E(ξ) = H(ξ)²/2`.
    pub fn e(&self, xi: &[f64]) -> Result<f64> {
        let h = self.eval(xi)?;
        Ok(0.5 * h * h)
    }

    /// `E0(x) = H0(x)²/2`.
    pub fn e0(&self, x: &[f64]) -> Result<f64> {
        let h0 = self.dual(x)?;
        Ok(0.5 * h0 * h0)
    }

    /// Value, `∇H`, and `∇²E` in one call. Errors with
    /// [`Error::DegeneratePoint`] at the origin and at axis points of a
    /// `PNorm` with `p < 2`, where the Hessian does not exist.
    pub fn eval_full(&self, xi: &[f64]) -> Result<NormEval> {
        self.check_input(xi)?;
        if nrm2(xi) == 0.0 {
            return Err(Error::DegeneratePoint);
        }
        Ok(NormEval {
            value: self.eval(xi)?,
            gradient: self.grad_h(xi)?,
            hessian_e: self.hessian_e(xi)?,
        })
    }

    /// `∇H(ξ)` (0-homogeneous). Defined for `ξ ≠ 0`.
    pub fn grad_h(&self, xi: &[f64]) -> Result<Vec<f64>> {
        self.check_input(xi)?;
        let r = nrm2(xi);
        if r == 0.0 {
            return Err(Error::DegeneratePoint);
        }
        Ok(match &self.kind {
            Kind::Euclidean => xi.iter().map(|v| v / r).collect(),
            Kind::Quadratic { a, .. } => {
                let h = quad_form(a, xi).max(0.0).sqrt();
                mat_vec(a, xi).iter().map(|v| v / h).collect()
            }
            Kind::PNorm { p, .. } => {
                let h = lp_norm(xi, *p);
                xi.iter()
                    .map(|&v| {
                        let u = v / h;
                        u.signum() * u.abs().powf(p - 1.0)
                    })
                    .collect()
            }
            Kind::Fourier { terms, .. } => {
                let t = xi[1].atan2(xi[0]);
                let (c, s) = (t.cos(), t.sin());
                let g = fourier_g(terms, t);
                let g1 = fourier_g1(terms, t);
                // ∇H = g ê_r + g' ê_θ in polar coordinates.
                vec![g * c - g1 * s, g * s + g1 * c]
            }
        })
    }

    /// `∇E(ξ) = H(ξ) ∇H(ξ)`, extended by continuity with `∇E(0) = 0`.
    pub fn grad_e(&self, xi: &[f64]) -> Result<Vec<f64>> {
        self.check_input(xi)?;
        if nrm2(xi) == 0.0 {
            return Ok(vec![0.0; self.dim]);
        }
        match &self.kind {
            Kind::Quadratic { a, .. } => Ok(mat_vec(a, xi)),
            _ => {
                let h = self.eval(xi)?;
                Ok(self.grad_h(xi)?.iter().map(|v| v * h).collect())
            }
        }
    }

    /// `∇²E(ξ)` for `ξ ≠ 0`. Analytic except for `Fourier2D`, where central
    /// finite differences of `∇E` with step `1e-5 · max(‖ξ‖, 1)` are used
    /// (the result is symmetrized).
    pub fn hessian_e(&self, xi: &[f64]) -> Result<DMatrix<f64>> {
        self.check_input(xi)?;
        if nrm2(xi) == 0.0 {
            return Err(Error::DegeneratePoint);
        }
        let n = self.dim;
        match &self.kind {
            Kind::Euclidean => Ok(DMatrix::identity(n, n)),
            Kind::Quadratic { a, .. } => Ok(a.clone()),
            Kind::PNorm { p, .. } => {
                let p = *p;
                let h = lp_norm(xi, p);
                let u: Vec<f64> = xi.iter().map(|v| v / h).collect();
                if p < 2.0 && u.contains(&0.0) {
                    return Err(Error::DegeneratePoint);
                }
                // ∇²E = (p−1) diag(|u_i|^{p−2}) + (2−p) s sᵀ,
                // s_i = sign(u_i) |u_i|^{p−1}; written in the 0-homogeneous
                // variable u = ξ/H so scaling cannot overflow.
                let s: Vec<f64> = u
                    .iter()
                    .map(|&v| v.signum() * v.abs().powf(p - 1.0))
                    .collect();
                let mut m = DMatrix::zeros(n, n);
                for i in 0..n {
                    for j in 0..n {
                        let mut v = (2.0 - p) * s[i] * s[j];
                        if i == j {
                            v += (p - 1.0) * u[i].abs().powf(p - 2.0);
                        }
                        m[(i, j)] = v;
                    }
                }
                Ok(m)
            }
            Kind::Fourier { .. } => {
                let r = nrm2(xi);
                let step = 1e-5 * r.max(1.0);
                let mut m = DMatrix::zeros(n, n);
                for j in 0..n {
                    let mut fwd = xi.to_vec();
                    let mut bwd = xi.to_vec();
                    fwd[j] += step;
                    bwd[j] -= step;
                    let gf = self.grad_e(&fwd)?;
                    let gb = self.grad_e(&bwd)?;
                    for i in 0..n {
                        m[(i, j)] = (gf[i] - gb[i]) / (2.0 * step);
                    }
                }
                Ok((&m + m.transpose()) * 0.5)
            }
        }
    }

    /// `Φ(ξ) = det ∇²E(ξ)` for `ξ ≠ 0`; at the origin, the infimum of the
    /// determinant over a dense set of directions (4096 equispaced angles in
    /// the plane, a 10⁵-point spherical Fibonacci lattice for n = 3), which
    /// suffices because `∇²E` is 0-homogeneous along rays. Directions where
    /// the Hessian does not exist (p-norm axes) are skipped, so the value at
    /// 0 is an infimum over the resolved sample.
    pub fn phi(&self, xi: &[f64]) -> Result<f64> {
        self.check_input(xi)?;
        match &self.kind {
            Kind::Euclidean => return Ok(1.0),
            Kind::Quadratic { det_a, .. } => return Ok(*det_a),
            _ => {}
        }
        if nrm2(xi) > 0.0 {
            return Ok(self.hessian_e(xi)?.determinant());
        }
        let mut inf = f64::INFINITY;
        let mut seen = false;
        if self.dim == 2 {
            for i in 0..PHI_ORIGIN_DIRS_2D {
                let t = 2.0 * std::f64::consts::PI * i as f64 / PHI_ORIGIN_DIRS_2D as f64;
                if let Ok(h) = self.hessian_e(&[t.cos(), t.sin()]) {
                    inf = inf.min(h.determinant());
                    seen = true;
                }
            }
        } else {
            for d in fibonacci_sphere(PHI_ORIGIN_DIRS_3D) {
                if let Ok(h) = self.hessian_e(&d) {
                    inf = inf.min(h.determinant());
                    seen = true;
                }
            }
        }
        if seen {
            Ok(inf)
        } else {
            Err(Error::DegeneratePoint)
        }
    }

    /// Dual norm `H0(x) = max_ξ (x·ξ)/H(ξ)`. Analytic for Euclidean,
    /// Quadratic and PNorm; for Fourier2D a 1024-angle scan over the cached
    /// unit-sphere table followed by golden-section refinement.
    pub fn dual(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        Ok(match &self.kind {
            Kind::Euclidean => nrm2(x),
            Kind::Quadratic { a_inv, .. } => quad_form(a_inv, x).max(0.0).sqrt(),
            Kind::PNorm { q, .. } => lp_norm(x, *q),
            Kind::Fourier { .. } => self.fourier_dual_with_dir(x).0,
        })
    }

    /// `∇H0(x)` for `x ≠ 0` (0-homogeneous). For Fourier2D this is the
    /// envelope-theorem direction `ê(θ*)/g(θ*)` at the maximizing angle.
    pub fn grad_dual(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let r = nrm2(x);
        if r == 0.0 {
            return Err(Error::DegeneratePoint);
        }
        Ok(match &self.kind {
            Kind::Euclidean => x.iter().map(|v| v / r).collect(),
            Kind::Quadratic { a_inv, .. } => {
                let h0 = quad_form(a_inv, x).max(0.0).sqrt();
                mat_vec(a_inv, x).iter().map(|v| v / h0).collect()
            }
            Kind::PNorm { q, .. } => {
                let h0 = lp_norm(x, *q);
                x.iter()
                    .map(|&v| {
                        let u = v / h0;
                        u.signum() * u.abs().powf(q - 1.0)
                    })
                    .collect()
            }
            Kind::Fourier { terms, .. } => {
                let (_, theta) = self.fourier_dual_with_dir(x);
                let g = fourier_g(terms, theta);
                vec![theta.cos() / g, theta.sin() / g]
            }
        })
    }

    /// `∇E0(x) = H0(x) ∇H0(x)`, the inverse of `∇E`, extended with
    /// `∇E0(0) = 0`. Analytic families invert in closed form; Fourier2D
    /// solves `∇E(ξ) = x` by damped Newton (halving line search, at most 60
    /// iterations, residual target `1e-10 · (1 + ‖x‖)`) seeded from the
    /// dual-norm maximizing direction.
    pub fn grad_e0(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        if nrm2(x) == 0.0 {
            return Ok(vec![0.0; self.dim]);
        }
        match &self.kind {
            Kind::Euclidean => Ok(x.to_vec()),
            Kind::Quadratic { a_inv, .. } => Ok(mat_vec(a_inv, x)),
            Kind::PNorm { q, .. } => {
                let h0 = lp_norm(x, *q);
                Ok(x
                    .iter()
                    .map(|&v| {
                        let u = v / h0;
                        h0 * u.signum() * u.abs().powf(q - 1.0)
                    })
                    .collect())
            }
            Kind::Fourier { terms, .. } => {
                let (h0, theta) = self.fourier_dual_with_dir(x);
                let g = fourier_g(terms, theta);
                let mut xi = [h0 * theta.cos() / g, h0 * theta.sin() / g];
                let target = 1e-10 * (1.0 + nrm2(x));
                let res = |v: &[f64; 2]| -> Result<(f64, [f64; 2])> {
                    let ge = self.grad_e(v)?;
                    let f = [ge[0] - x[0], ge[1] - x[1]];
                    Ok((nrm2(&f), f))
                };
                let (mut r, mut f) = res(&xi)?;
                for it in 0..60 {
                    if r <= target {
                        return Ok(xi.to_vec());
                    }
                    let j = self.hessian_e(&xi)?;
                    let det = j[(0, 0)] * j[(1, 1)] - j[(0, 1)] * j[(1, 0)];
                    if det.abs() < 1e-300 {
                        return Err(Error::SolverFailure {
                            residual: r,
                            iterations: it,
                        });
                    }
                    let dx = (-f[0] * j[(1, 1)] + f[1] * j[(0, 1)]) / det;
                    let dy = (f[0] * j[(1, 0)] - f[1] * j[(0, 0)]) / det;
                    let mut s = 1.0;
                    let mut accepted = false;
                    while s >= 1.0 / 1024.0 {
                        let cand = [xi[0] + s * dx, xi[1] + s * dy];
                        if let Ok((rc, fc)) = res(&cand) {
                            if rc < r {
                                xi = cand;
                                r = rc;
                                f = fc;
                                accepted = true;
                                break;
                            }
                        }
                        s *= 0.5;
                    }
                    if !accepted {
                        return Err(Error::SolverFailure {
                            residual: r,
                            iterations: it,
                        });
                    }
                }
                if r <= target {
                    Ok(xi.to_vec())
                } else {
                    Err(Error::SolverFailure {
                        residual: r,
                        iterations: 60,
                    })
                }
            }
        }
    }

    /// Recompute `H` as the dual of `H0` by numeric maximization of
    /// `(ξ·x)/H0(x)` (coarse scan + golden section in the plane, multi-start
    /// projected gradient ascent on the sphere for n = 3). A consistency
    /// diagnostic: `bidual(ξ) ≈ eval(ξ)`.
    pub fn bidual(&self, xi: &[f64]) -> Result<f64> {
        self.check_input(xi)?;
        if nrm2(xi) == 0.0 {
            return Ok(0.0);
        }
        maximize_rayleigh(xi, &|d| self.dual(d))
    }

    /// Recompute `H0` by direct numeric maximization of `(x·ξ)/H(ξ)`,
    /// ignoring the analytic shortcuts. Used as an independent oracle.
    pub fn dual_numeric(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        if nrm2(x) == 0.0 {
            return Ok(0.0);
        }
        maximize_rayleigh(x, &|d| self.eval(d))
    }

    /// Scan + golden-section maximization of `(x·ê(θ))/g(θ)`; returns the
    /// dual value and maximizing angle.
    fn fourier_dual_with_dir(&self, x: &[f64]) -> (f64, f64) {
        let Kind::Fourier { terms, scan_g } = &self.kind else {
            unreachable!("fourier path on non-fourier norm")
        };
        if nrm2(x) == 0.0 {
            return (0.0, 0.0);
        }
        let dirs = scan_dirs();
        let mut best = f64::NEG_INFINITY;
        let mut best_i = 0;
        for (i, d) in dirs.iter().enumerate() {
            let v = (x[0] * d[0] + x[1] * d[1]) / scan_g[i];
            if v > best {
                best = v;
                best_i = i;
            }
        }
        let step = 2.0 * std::f64::consts::PI / DUAL_SCAN as f64;
        let center = best_i as f64 * step;
        let f = |t: f64| {
            let g = fourier_g(terms, t);
            (x[0] * t.cos() + x[1] * t.sin()) / g
        };
        golden_max(&f, center - step, center + step, 1e-12)
    }
}

/// Golden-section maximization of a smooth function on `[lo, hi]` down to
/// bracket width `tol`; returns `(value, argmax)` as `(f(t*), t*)` reversed:
/// `(max value, t*)`.
fn golden_max(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let t = 0.5 * (a + b);
    (f(t), t)
}

/// Maximize `(v·d)/gauge(d)` over directions `d`. Planar inputs use the
/// shared angular scan plus golden section; three-dimensional inputs use
/// projected gradient ascent with finite-difference tangent gradients from
/// 9 deterministic starts (a Fibonacci 8-design plus `v` itself).
fn maximize_rayleigh(v: &[f64], gauge: &dyn Fn(&[f64]) -> Result<f64>) -> Result<f64> {
    match v.len() {
        2 => {
            let f = |t: f64| -> f64 {
                let d = [t.cos(), t.sin()];
                match gauge(&d) {
                    Ok(g) if g > 0.0 => (v[0] * d[0] + v[1] * d[1]) / g,
                    _ => f64::NEG_INFINITY,
                }
            };
            let dirs = scan_dirs();
            let mut best = f64::NEG_INFINITY;
            let mut best_i = 0;
            for i in 0..dirs.len() {
                let t = 2.0 * std::f64::consts::PI * i as f64 / dirs.len() as f64;
                let val = f(t);
                if val > best {
                    best = val;
                    best_i = i;
                }
            }
            let step = 2.0 * std::f64::consts::PI / dirs.len() as f64;
            let center = best_i as f64 * step;
            let (val, _) = golden_max(&f, center - step, center + step, 1e-12);
            Ok(val)
        }
        3 => {
            let f = |d: &[f64; 3]| -> f64 {
                match gauge(d) {
                    Ok(g) if g > 0.0 => (v[0] * d[0] + v[1] * d[1] + v[2] * d[2]) / g,
                    _ => f64::NEG_INFINITY,
                }
            };
            let mut starts: Vec<[f64; 3]> = fibonacci_sphere(8);
            let nv = nrm2(v);
            starts.push([v[0] / nv, v[1] / nv, v[2] / nv]);
            let mut best = f64::NEG_INFINITY;
            for s in &starts {
                let val = sphere_ascent(&f, *s);
                if val > best {
                    best = val;
                }
            }
            Ok(best)
        }
        n => Err(Error::InvalidNorm(format!(
            "numeric dual maximization unsupported in dimension {n}"
        ))),
    }
}

/// Projected gradient ascent for a smooth 0-homogeneous objective on S².
fn sphere_ascent(f: &dyn Fn(&[f64; 3]) -> f64, start: [f64; 3]) -> f64 {
    let mut d = start;
    let mut fd = f(&d);
    let mut step = 0.5;
    let h = 1e-6;
    for _ in 0..500 {
        // Tangent basis at d.
        let pick = if d[0].abs() < 0.9 {
            [1.0, 0.0, 0.0]
        } else {
            [0.0, 1.0, 0.0]
        };
        let t1 = normalize3(cross3(d, pick));
        let t2 = cross3(d, t1);
        let df1 = (f(&normalize3(add3(d, scale3(t1, h)))) - f(&normalize3(add3(d, scale3(t1, -h)))))
            / (2.0 * h);
        let df2 = (f(&normalize3(add3(d, scale3(t2, h)))) - f(&normalize3(add3(d, scale3(t2, -h)))))
            / (2.0 * h);
        let gn2 = df1 * df1 + df2 * df2;
        if gn2 <= 1e-20 * (1.0 + fd * fd) {
            break;
        }
        let dir = add3(scale3(t1, df1), scale3(t2, df2));
        let mut accepted = false;
        while step >= 1e-14 {
            let cand = normalize3(add3(d, scale3(dir, step)));
            let fc = f(&cand);
            if fc > fd {
                d = cand;
                fd = fc;
                step *= 1.3;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    fd
}

/// Deterministic spherical Fibonacci lattice of `n` unit vectors.
fn fibonacci_sphere(n: usize) -> Vec<[f64; 3]> {
    let golden_angle = std::f64::consts::PI * (3.0 - 5.0_f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let t = golden_angle * i as f64;
            [rho * t.cos(), rho * t.sin(), z]
        })
        .collect()
}

fn fourier_g(terms: &[FourierTerm], theta: f64) -> f64 {
    let mut g = 1.0;
    for &FourierTerm(k, a, b) in terms {
        let kt = k as f64 * theta;
        g += a * kt.cos() + b * kt.sin();
    }
    g
}

fn fourier_g1(terms: &[FourierTerm], theta: f64) -> f64 {
    let mut g = 0.0;
    for &FourierTerm(k, a, b) in terms {
        let kf = k as f64;
        let kt = kf * theta;
        g += kf * (-a * kt.sin() + b * kt.cos());
    }
    g
}

fn fourier_g2(terms: &[FourierTerm], theta: f64) -> f64 {
    let mut g = 0.0;
    for &FourierTerm(k, a, b) in terms {
        let kf = k as f64;
        let kt = kf * theta;
        g -= kf * kf * (a * kt.cos() + b * kt.sin());
    }
    g
}

fn nrm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn quad_form(a: &DMatrix<f64>, v: &[f64]) -> f64 {
    let n = v.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += v[i] * a[(i, j)] * v[j];
        }
    }
    s
}

fn mat_vec(a: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..n).map(|i| (0..n).map(|j| a[(i, j)] * v[j]).sum()).collect()
}

/// Overflow-safe ℓ_p norm: factor out the largest component.
fn lp_norm(v: &[f64], p: f64) -> f64 {
    let m = v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
    if m == 0.0 {
        return 0.0;
    }
    let s: f64 = v.iter().map(|x| (x.abs() / m).powf(p)).sum();
    m * s.powf(1.0 / p)
}

fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn add3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn scale3(a: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

fn normalize3(a: [f64; 3]) -> [f64; 3] {
    let n = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
    [a[0] / n, a[1] / n, a[2] / n]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn standard_fourier() -> Norm {
        Norm::fourier(vec![FourierTerm(3, 0.05, 0.0)]).unwrap()
    }

    fn mixed_fourier() -> Norm {
        Norm::fourier(vec![FourierTerm(2, 0.04, -0.03), FourierTerm(4, 0.0, 0.02)]).unwrap()
    }

    /// Independent second-difference Hessian of E from values only.
    fn fd_hessian_of_e(norm: &Norm, xi: &[f64], h: f64) -> DMatrix<f64> {
        let n = xi.len();
        let e = |v: &[f64]| norm.e(v).unwrap();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut pp = xi.to_vec();
                let mut pm = xi.to_vec();
                let mut mp = xi.to_vec();
                let mut mm = xi.to_vec();
                if i == j {
                    pp[i] += h;
                    mm[i] -= h;
                    m[(i, j)] = (e(&pp) - 2.0 * e(xi) + e(&mm)) / (h * h);
                } else {
                    pp[i] += h;
                    pp[j] += h;
                    pm[i] += h;
                    pm[j] -= h;
                    mp[i] -= h;
                    mp[j] += h;
                    mm[i] -= h;
                    mm[j] -= h;
                    m[(i, j)] = (e(&pp) - e(&pm) - e(&mp) + e(&mm)) / (4.0 * h * h);
                }
            }
        }
        m
    }

    fn rand_point(rng: &mut ChaCha8Rng, dim: usize, generic: bool) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let r = nrm2(&v);
            if r < 0.1 {
                continue;
            }
            if generic && v.iter().any(|x| x.abs() < 0.05) {
                continue;
            }
            return v;
        }
    }

    #[test]
    fn euclidean_is_self_dual() {
        let n = Norm::euclidean(2).unwrap();
        assert_relative_eq!(n.eval(&[3.0, 4.0]).unwrap(), 5.0);
        assert_relative_eq!(n.dual(&[3.0, 4.0]).unwrap(), 5.0);
        assert_relative_eq!(n.phi(&[1.0, 1.0]).unwrap(), 1.0);
        assert_relative_eq!(n.phi(&[0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(n.grad_e(&[0.3, -0.7]).unwrap(), vec![0.3, -0.7]);
    }

    #[test]
    fn quadratic_closed_forms() {
        let n = Norm::quadratic(vec![4.0, 0.0, 0.0, 1.0], 2).unwrap();
        assert_relative_eq!(n.eval(&[1.0, 0.0]).unwrap(), 2.0);
        // Wulff ball has semi-axes (2, 1): H0((2,0)) = 1.
        assert_relative_eq!(n.dual(&[2.0, 0.0]).unwrap(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(n.phi(&[0.7, 0.2]).unwrap(), 4.0);
        assert_relative_eq!(n.phi(&[0.0, 0.0]).unwrap(), 4.0);
        let full = n.eval_full(&[1.0, 2.0]).unwrap();
        assert_relative_eq!(full.hessian_e[(0, 0)], 4.0);
        assert_relative_eq!(full.hessian_e[(1, 1)], 1.0);
        // ∇E0 inverts ∇E.
        let x = [0.3, -1.1];
        let xi = n.grad_e0(&x).unwrap();
        let back = n.grad_e(&xi).unwrap();
        assert_relative_eq!(back[0], x[0], max_relative = 1e-12);
        assert_relative_eq!(back[1], x[1], max_relative = 1e-12);
    }

    #[test]
    fn quadratic_dual_matches_brute_force_scan() {
        // Oracle: maximize x·ê(θ)/H(ê(θ)) over a fine angular grid.
        let n = Norm::quadratic(vec![2.0, 0.5, 0.5, 1.0], 2).unwrap();
        let x = [1.3, -0.4];
        let mut best = f64::NEG_INFINITY;
        for i in 0..200_000 {
            let t = 2.0 * std::f64::consts::PI * i as f64 / 200_000.0;
            let d = [t.cos(), t.sin()];
            best = best.max((x[0] * d[0] + x[1] * d[1]) / n.eval(&d).unwrap());
        }
        assert_relative_eq!(n.dual(&x).unwrap(), best, max_relative = 1e-6);
    }

    #[test]
    fn pnorm_frozen_values() {
        let n = Norm::p_norm(3.0, 2).unwrap();
        // ‖(1,1)‖₃ = 2^(1/3), dual exponent q = 3/2 gives 2^(2/3).
        assert_relative_eq!(n.eval(&[1.0, 1.0]).unwrap(), 1.259_921_049_894_873_2, max_relative = 1e-14);
        assert_relative_eq!(n.dual(&[1.0, 1.0]).unwrap(), 1.587_401_051_968_199_4, max_relative = 1e-14);
    }

    #[test]
    fn pnorm_hessian_matches_value_oracle() {
        let n = Norm::p_norm(3.0, 2).unwrap();
        let xi = [1.0, 2.0];
        let analytic = n.hessian_e(&xi).unwrap();
        let fd = fd_hessian_of_e(&n, &xi, 1e-4 * 2.0);
        let denom = analytic.amax();
        assert!((&analytic - &fd).amax() / denom < 1e-5, "hessian mismatch: {analytic} vs {fd}");
        // And the determinant (Φ) agrees too.
        assert_relative_eq!(
            n.phi(&xi).unwrap(),
            fd.determinant(),
            max_relative = 1e-4
        );
    }

    #[test]
    fn pnorm_axis_degeneracy() {
        let sub = Norm::p_norm(1.5, 2).unwrap();
        assert!(matches!(sub.hessian_e(&[1.0, 0.0]), Err(Error::DegeneratePoint)));
        let sup = Norm::p_norm(3.0, 2).unwrap();
        // For p > 2 the Hessian exists on the axes but is singular.
        assert_relative_eq!(sup.phi(&[1.0, 0.0]).unwrap(), 0.0);
        // Infimum over directions at the origin: 0 for p > 2, positive for p < 2.
        assert_relative_eq!(sup.phi(&[0.0, 0.0]).unwrap(), 0.0);
        assert!(sub.phi(&[0.0, 0.0]).unwrap() > 0.0);
    }

    #[test]
    fn fourier_admissibility_is_enforced() {
        assert!(Norm::fourier(vec![FourierTerm(3, 0.05, 0.0)]).is_ok());
        // g + g'' = 1 − 8·0.2·cos 3θ dips below zero.
        assert!(matches!(
            Norm::fourier(vec![FourierTerm(3, 0.2, 0.0)]),
            Err(Error::InvalidNorm(_))
        ));
        assert!(matches!(
            Norm::fourier(vec![FourierTerm(1, 0.05, 0.0)]),
            Err(Error::InvalidNorm(_))
        ));
    }

    #[test]
    fn duality_identities_hold_at_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let norms: Vec<Norm> = vec![
            Norm::euclidean(2).unwrap(),
            Norm::quadratic(vec![4.0, 0.3, 0.3, 1.0], 2).unwrap(),
            Norm::p_norm(3.0, 2).unwrap(),
            standard_fourier(),
            mixed_fourier(),
        ];
        for norm in &norms {
            for _ in 0..50 {
                let xi = rand_point(&mut rng, 2, true);
                let x = rand_point(&mut rng, 2, true);
                // H0(∇H(ξ)) = 1 and H(∇H0(x)) = 1.
                let gh = norm.grad_h(&xi).unwrap();
                assert_relative_eq!(norm.dual(&gh).unwrap(), 1.0, max_relative = 1e-8);
                let gd = norm.grad_dual(&x).unwrap();
                assert_relative_eq!(norm.eval(&gd).unwrap(), 1.0, max_relative = 1e-8);
                // Euler: ξ·∇E = 2E; conjugacy: E0(∇E(ξ)) = E(ξ).
                let ge = norm.grad_e(&xi).unwrap();
                let euler: f64 = xi.iter().zip(&ge).map(|(a, b)| a * b).sum();
                assert_relative_eq!(euler, 2.0 * norm.e(&xi).unwrap(), max_relative = 1e-10);
                assert_relative_eq!(
                    norm.e0(&ge).unwrap(),
                    norm.e(&xi).unwrap(),
                    max_relative = 1e-8
                );
                // Inverse-gradient roundtrip.
                let back = norm.grad_e(&norm.grad_e0(&x).unwrap()).unwrap();
                let err = nrm2(&[back[0] - x[0], back[1] - x[1]]);
                assert!(err <= 1e-8 * (1.0 + nrm2(&x)), "roundtrip err {err}");
            }
        }
    }

    #[test]
    fn bidual_recovers_the_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let cases: Vec<(Norm, f64)> = vec![
            (Norm::euclidean(2).unwrap(), 1e-6),
            (Norm::quadratic(vec![4.0, 0.3, 0.3, 1.0], 2).unwrap(), 1e-6),
            (Norm::p_norm(3.0, 2).unwrap(), 1e-6),
            (standard_fourier(), 1e-5),
        ];
        for (norm, tol) in &cases {
            for _ in 0..10 {
                let xi = rand_point(&mut rng, 2, true);
                let h = norm.eval(&xi).unwrap();
                let hb = norm.bidual(&xi).unwrap();
                assert!(
                    (h - hb).abs() <= tol * h,
                    "bidual {hb} vs {h} for {:?}",
                    norm.family()
                );
            }
        }
    }

    #[test]
    fn hessian_is_scale_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let norms: Vec<Norm> = vec![
            Norm::quadratic(vec![4.0, 0.3, 0.3, 1.0], 2).unwrap(),
            Norm::p_norm(2.5, 2).unwrap(),
            standard_fourier(),
            mixed_fourier(),
        ];
        for norm in &norms {
            for _ in 0..10 {
                let xi = rand_point(&mut rng, 2, true);
                let base = norm.hessian_e(&xi).unwrap();
                let mut factors = vec![0.5, 2.0];
                // Two-sided scale invariance needs central symmetry.
                if norm.centrally_symmetric() {
                    factors.push(-3.0);
                }
                for t in factors {
                    let scaled = norm
                        .hessian_e(&[t * xi[0], t * xi[1]])
                        .unwrap();
                    assert!(
                        (&base - &scaled).amax() <= 1e-8,
                        "hessian not scale invariant at t={t}: {:?}",
                        norm.family()
                    );
                }
            }
        }
    }

    #[test]
    fn absolute_homogeneity_for_symmetric_families() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let norms: Vec<Norm> = vec![
            Norm::euclidean(3).unwrap(),
            Norm::quadratic(vec![4.0, 0.3, 0.3, 1.0], 2).unwrap(),
            Norm::p_norm(1.7, 2).unwrap(),
            mixed_fourier(), // even harmonics only
        ];
        for norm in &norms {
            assert!(norm.centrally_symmetric());
            for _ in 0..200 {
                let xi = rand_point(&mut rng, norm.dimension(), false);
                let t: f64 = rng.gen_range(-100.0..100.0);
                let h = norm.eval(&xi).unwrap();
                let ht = norm.eval(&xi.iter().map(|v| t * v).collect::<Vec<_>>()).unwrap();
                assert!(
                    (ht - t.abs() * h).abs() <= 1e-12 * h.max(ht),
                    "homogeneity broke at t={t}"
                );
            }
        }
        // Odd harmonics are positively homogeneous gauges only.
        let gauge = standard_fourier();
        assert!(!gauge.centrally_symmetric());
        for _ in 0..50 {
            let xi = rand_point(&mut rng, 2, false);
            let t: f64 = rng.gen_range(0.01..100.0);
            let h = gauge.eval(&xi).unwrap();
            let ht = gauge.eval(&[t * xi[0], t * xi[1]]).unwrap();
            assert!((ht - t * h).abs() <= 1e-12 * h.max(ht));
        }
    }

    #[test]
    fn three_dimensional_families_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let norms: Vec<Norm> = vec![
            Norm::euclidean(3).unwrap(),
            Norm::quadratic(
                vec![2.0, 0.2, 0.0, 0.2, 1.0, 0.1, 0.0, 0.1, 0.5],
                3,
            )
            .unwrap(),
            Norm::p_norm(3.0, 3).unwrap(),
        ];
        for norm in &norms {
            for _ in 0..20 {
                let x = rand_point(&mut rng, 3, true);
                let back = norm.grad_e(&norm.grad_e0(&x).unwrap()).unwrap();
                let err: f64 = x
                    .iter()
                    .zip(&back)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                assert!(err <= 1e-8 * (1.0 + nrm2(&x)));
                // Sphere-ascent dual against the analytic dual.
                let numeric = norm.dual_numeric(&x).unwrap();
                let analytic = norm.dual(&x).unwrap();
                assert_relative_eq!(numeric, analytic, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn degenerate_and_invalid_inputs_error() {
        let n = standard_fourier();
        assert!(matches!(n.eval_full(&[0.0, 0.0]), Err(Error::DegeneratePoint)));
        assert!(matches!(n.eval(&[f64::NAN, 0.0]), Err(Error::NonFiniteInput)));
        assert!(matches!(n.eval(&[1.0]), Err(Error::InvalidNorm(_))));
        assert_eq!(n.grad_e(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(n.grad_e0(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        assert_relative_eq!(n.dual(&[0.0, 0.0]).unwrap(), 0.0);
        assert!(Norm::quadratic(vec![1.0, 2.0, 2.0, 1.0], 2).is_err()); // indefinite
        assert!(Norm::quadratic(vec![1.0, 0.5, 0.0, 1.0], 2).is_err()); // asymmetric
        assert!(Norm::p_norm(1.0, 2).is_err());
        assert!(Norm::p_norm(f64::INFINITY, 2).is_err());
    }

    #[test]
    fn fourier_hessian_definite_and_consistent() {
        let norm = standard_fourier();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..25 {
            let xi = rand_point(&mut rng, 2, false);
            let h = norm.hessian_e(&xi).unwrap();
            let tr = h[(0, 0)] + h[(1, 1)];
            let det = h.determinant();
            assert!(tr > 0.0 && det > 0.0, "hessian not SPD at {xi:?}");
            // Against the value-based oracle.
            let fd = fd_hessian_of_e(&norm, &xi, 1e-4 * nrm2(&xi).max(1.0));
            assert!((&h - &fd).amax() <= 1e-4 * h.amax());
        }
        // Φ at the origin is the directional infimum, here close to
        // min det over angles of the fd hessian at unit vectors.
        let phi0 = norm.phi(&[0.0, 0.0]).unwrap();
        let mut brute = f64::INFINITY;
        for i in 0..512 {
            let t = 2.0 * std::f64::consts::PI * i as f64 / 512.0;
            brute = brute.min(norm.phi(&[t.cos(), t.sin()]).unwrap());
        }
        assert!(phi0 <= brute + 1e-9);
        assert!(phi0 > 0.0);
    }

    #[test]
    fn norm_spec_serde_roundtrip() {
        let spec = NormSpec::fourier(vec![FourierTerm(3, 0.05, 0.0), FourierTerm(4, 0.0, 0.01)]);
        let text = toml::to_string(&spec).unwrap();
        let back: NormSpec = toml::from_str(&text).unwrap();
        assert_eq!(spec, back);
        let json = serde_json::to_string(&spec).unwrap();
        let back: NormSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(spec, back);
        // The documented flat schema parses.
        let text = "family = \"quadratic\"\ndimension = 2\nA = [4.0, 0.0, 0.0, 1.0]\n";
        let spec: NormSpec = toml::from_str(text).unwrap();
        assert!(Norm::from_spec(&spec).is_ok());
        let text = "family = \"fourier2d\"\nfourier = [[3, 0.05, 0.0]]\n";
        let spec: NormSpec = toml::from_str(text).unwrap();
        assert_eq!(spec.dimension, 2);
        assert!(Norm::from_spec(&spec).is_ok());
    }
}
