//! Numerical verification suites: each check compares two independently
//! computed quantities and reports a [`CheckReport`] with the error and a
//! pass/fail verdict against a stated tolerance.
//!
//! The battery mirrors the structure of the symmetry argument for the
//! Finsler Monge-Ampère problem with second boundary condition:
//!
//! 1. mass balance `L²(Ω) = L²(B_{H₀})` ([`check_step1_mass`]);
//! 2. the pointwise Newton inequality `tr(∇²E(∇u)∇²u) ≥ n·det(…)^{1/n}`
//!    ([`check_newton_pointwise`]);
//! 3. the energy identity `−∫u Δ_H u = 2∫E(∇u)` for zero-boundary `u`
//!    ([`check_energy_identity`]);
//! 4. –8. the chain of integral equalities that pins every inequality of
//!    the argument to equality on Wulff balls
//!    ([`check_chain_equalities`]), together with the matrix equality
//!    condition `∇²E(∇u)·∇²u = I` and the affine structure of
//!    `∇E(∇u)` ([`check_equality_condition`]);
//!
//! and the converse: on a non-Wulff domain the overdetermined problem
//! (second boundary condition *and* constant Dirichlet data) fails, seen
//! as a boundary oscillation of the potential that does not vanish under
//! refinement ([`overdetermined_experiment`], [`converse_suite`]).
//!
//! Radial-path checks run the analytic solution `u = (H₀² − 1)/2` through
//! the quadratures and finite differences, isolating discretization error;
//! solver-path checks run the entropic transport output and carry looser
//! tolerances dominated by the entropic blur.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::convex::{legendre_conjugate, GridFunction};
use crate::error::{Error, Result};
use crate::geometry::{
    build_domain, scale_to_area, wulff_volume_identity, DiscreteDomain, DomainDescriptor,
    DomainKind,
};
use crate::norms::{Family, Norm, NormSpec};
use crate::transport::{
    brenier_weak_check, discretize_target, ma_residual, solve_transport, SolverOpts,
    TransportSolution,
};

/// Spatial dimension of the PDE experiments (the solver is planar).
const N: f64 = 2.0;

/// Outcome of a single numerical check.
///
/// `rel_err` is `abs_err / max(|lhs|, |rhs|)` (zero when both sides
/// vanish); `pass` compares `rel_err` (or `abs_err` for near-zero targets)
/// against `tol` according to `relation`.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// "equal" for two-sided identities, "leq"/"geq" for one-sided bounds
    /// (`lhs ≤ rhs + tol` resp. `lhs ≥ rhs − tol`).
    pub relation: String,
    pub abs_err: f64,
    pub rel_err: f64,
    pub tol: f64,
    pub pass: bool,
    pub notes: String,
}

impl CheckReport {
    /// Two-sided identity `lhs = rhs`, judged on relative error (absolute
    /// error when both sides are below `tol` in magnitude).
    pub fn equality(name: &str, lhs: f64, rhs: f64, tol: f64, notes: &str) -> CheckReport {
        let abs_err = (lhs - rhs).abs();
        let scale = lhs.abs().max(rhs.abs());
        let rel_err = if scale > 0.0 { abs_err / scale } else { 0.0 };
        let pass = if scale <= tol {
            abs_err <= tol
        } else {
            rel_err <= tol
        };
        CheckReport {
            name: name.to_string(),
            lhs,
            rhs,
            relation: "equal".to_string(),
            abs_err,
            rel_err,
            tol,
            pass,
            notes: notes.to_string(),
        }
    }

    /// One-sided bound `lhs ≤ rhs + tol·max(1, |rhs|)`.
    pub fn upper_bound(name: &str, lhs: f64, rhs: f64, tol: f64, notes: &str) -> CheckReport {
        let abs_err = (lhs - rhs).max(0.0);
        let scale = rhs.abs().max(1.0);
        let pass = lhs <= rhs + tol * scale;
        CheckReport {
            name: name.to_string(),
            lhs,
            rhs,
            relation: "leq".to_string(),
            abs_err,
            rel_err: abs_err / scale,
            tol,
            pass,
            notes: notes.to_string(),
        }
    }

    /// One-sided bound `lhs ≥ rhs − tol·max(1, |rhs|)`.
    pub fn lower_bound(name: &str, lhs: f64, rhs: f64, tol: f64, notes: &str) -> CheckReport {
        let abs_err = (rhs - lhs).max(0.0);
        let scale = rhs.abs().max(1.0);
        let pass = lhs >= rhs - tol * scale;
        CheckReport {
            name: name.to_string(),
            lhs,
            rhs,
            relation: "geq".to_string(),
            abs_err,
            rel_err: abs_err / scale,
            tol,
            pass,
            notes: notes.to_string(),
        }
    }

    /// One-line human-readable summary, used by the CLI.
    pub fn summary_line(&self) -> String {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        format!(
            "[{verdict}] {name}: lhs={lhs:.9e} rhs={rhs:.9e} abs_err={abs:.3e} rel_err={rel:.3e} (tol {tol:.1e})",
            name = self.name,
            lhs = self.lhs,
            rhs = self.rhs,
            abs = self.abs_err,
            rel = self.rel_err,
            tol = self.tol,
        )
    }
}

/// A named table of plot-ready rows (written as one CSV by the CLI).
#[derive(Debug, Clone, Serialize)]
pub struct PlotSeries {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl PlotSeries {
    pub fn new(name: &str, columns: &[&str]) -> PlotSeries {
        PlotSeries {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn write_csv(&self, w: &mut impl std::io::Write) -> Result<()> {
        writeln!(w, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }
}

/// Reports plus plot data produced by one verification suite.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteOutput {
    pub reports: Vec<CheckReport>,
    pub plots: Vec<PlotSeries>,
}

impl SuiteOutput {
    pub fn all_pass(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
    }
}

// ---------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------

/// Evaluate `f` on every node of the domain's lattice (masked everywhere),
/// so finite-difference stencils are complete on the whole interior —
/// callers must supply an `f` defined beyond `∂Ω` (analytic extensions
/// and entropic potentials both are).
fn full_lattice_grid(
    domain: &DiscreteDomain,
    mut f: impl FnMut([f64; 2]) -> Result<f64>,
) -> Result<GridFunction> {
    let origin = domain.grid_origin();
    let shape = domain.grid_shape();
    let h = domain.grid_h();
    let mut values = Vec::with_capacity(shape[0] * shape[1]);
    for ix in 0..shape[0] {
        for iy in 0..shape[1] {
            values.push(f([
                origin[0] + ix as f64 * h,
                origin[1] + iy as f64 * h,
            ])?);
        }
    }
    GridFunction::new(origin, [h, h], shape, values, vec![true; shape[0] * shape[1]])
}

/// The potential's mean over boundary nodes (arc-length weighted); the
/// normalization constant for zero-boundary-mean potentials.
fn boundary_mean(domain: &DiscreteDomain, mut u: impl FnMut([f64; 2]) -> f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for b in &domain.boundary_nodes {
        num += b.arc_weight * u(b.point);
        den += b.arc_weight;
    }
    num / den
}

/// True when the domain is a Wulff ball of the given norm (any center and
/// radius — the symmetry class is closed under translation and dilation).
fn is_wulff_ball_of(domain: &DiscreteDomain, spec: &NormSpec) -> bool {
    matches!(&domain.descriptor.kind, DomainKind::WulffBall { norm, .. } if norm == spec)
}

fn require_wulff(domain: &DiscreteDomain, spec: &NormSpec, what: &str) -> Result<()> {
    if !is_wulff_ball_of(domain, spec) {
        return Err(Error::Precondition(format!(
            "{what} is only claimed on Wulff balls of the same norm; got {:?}",
            domain.descriptor.kind
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------
// Step 1: mass balance
// ---------------------------------------------------------------------

/// Step 1 — the compatibility condition `L²(Ω) = L²(B_{H₀})`, compared
/// through two independent quadratures: the domain quadrature of `Ω`
/// against the Φ-weighted lattice quadrature of `B_H` (whose total is
/// `∫_{B_H} Φ = L²(B_{H₀})` by the change of variables `y = ∇E(ξ)`).
///
/// With a solved transport at hand its target discretization is reused
/// (pre-rescale total); otherwise a fresh fine discretization is built.
pub fn check_step1_mass(
    domain: &DiscreteDomain,
    spec: &NormSpec,
    sol: Option<&TransportSolution>,
) -> Result<CheckReport> {
    let lhs = domain.area;
    let (rhs, src) = match sol {
        Some(s) => (s.target_raw_total, "solver target discretization".to_string()),
        None => {
            let cloud = discretize_target(spec, 20_000)?;
            (cloud.total, format!("{} target cells", cloud.points.len()))
        }
    };
    Ok(CheckReport::equality(
        "step1 mass balance L²(Ω) = L²(B_{H₀})",
        lhs,
        rhs,
        1e-3,
        &format!("Ω quadrature vs Φ-weighted quadrature of B_H ({src})"),
    ))
}

// ---------------------------------------------------------------------
// Step 3: energy identity
// ---------------------------------------------------------------------

/// Step 3 — the energy identity `−∫_Ω u Δ_H u = 2∫_Ω E(∇u)` for `u`
/// vanishing on `∂Ω`, with `Δ_H u = div(∇E(∇u))` by nested central
/// differences on the full lattice (so no boundary strip is lost).
///
/// `u` must be defined slightly beyond `∂Ω` and vanish on the boundary
/// nodes to `1e-6·sup|u|`; entropic potentials normalized by their
/// boundary mean generally keep a percent-level boundary oscillation and
/// fail this gate, which exists precisely because the divergence-theorem
/// boundary term is only negligible for pointwise-vanishing `u` — so this
/// check belongs to the analytic radial path.
pub fn check_energy_identity(
    spec: &NormSpec,
    domain: &DiscreteDomain,
    u: &dyn Fn([f64; 2]) -> Result<f64>,
    tol: f64,
) -> Result<CheckReport> {
    let norm = Norm::from_spec(spec)?;
    let grid = full_lattice_grid(domain, u)?;

    let mut sup_u = 0.0f64;
    for node in &domain.interior_nodes {
        sup_u = sup_u.max(u(node.point)?.abs());
    }
    for b in &domain.boundary_nodes {
        let ub = u(b.point)?;
        if ub.abs() > 1e-6 * sup_u.max(1e-12) {
            return Err(Error::Precondition(format!(
                "u does not vanish on the boundary: |u({:.4}, {:.4})| = {:.3e} with sup|u| = {:.3e}",
                b.point[0],
                b.point[1],
                ub.abs(),
                sup_u
            )));
        }
    }

    let shape = grid.shape;
    let (nx, ny) = (shape[0], shape[1]);
    let h = domain.grid_h();
    let grads = grid.gradient_field();
    let mut field = vec![None; nx * ny];
    for ix in 0..nx {
        for iy in 0..ny {
            if let Some(g) = grads[ix * ny + iy] {
                let v = norm.grad_e(&g)?;
                field[ix * ny + iy] = Some([v[0], v[1]]);
            }
        }
    }
    let div_at = |ix: usize, iy: usize| -> Option<f64> {
        if ix == 0 || iy == 0 || ix + 1 >= nx || iy + 1 >= ny {
            return None;
        }
        let vxp = field[(ix + 1) * ny + iy]?;
        let vxm = field[(ix - 1) * ny + iy]?;
        let vyp = field[ix * ny + iy + 1]?;
        let vym = field[ix * ny + iy - 1]?;
        Some((vxp[0] - vxm[0]) / (2.0 * h) + (vyp[1] - vym[1]) / (2.0 * h))
    };

    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for node in &domain.interior_nodes {
        let [ix, iy] = node.lattice;
        let div = div_at(ix, iy).ok_or_else(|| {
            Error::InvalidGrid(format!(
                "divergence stencil incomplete at interior node ({ix}, {iy})"
            ))
        })?;
        let g = grads[ix * ny + iy].expect("gradient exists where divergence does");
        lhs -= node.weight * grid.value(ix, iy) * div;
        rhs += node.weight * 2.0 * norm.e(&g)?;
    }
    Ok(CheckReport::equality(
        "step3 energy identity −∫u·Δ_H u = 2∫E(∇u)",
        lhs,
        rhs,
        tol,
        "Δ_H u = div(∇E(∇u)) by nested central differences on the full lattice",
    ))
}

// ---------------------------------------------------------------------
// Steps 4–8: the chain of integral equalities
// ---------------------------------------------------------------------

/// Which solution the chain is evaluated on.
pub enum ChainInput<'a> {
    /// The analytic radial solution `u = (H₀(x−c)² − r²)/2`.
    Radial,
    /// A solved entropic transport on the same domain.
    Solver(&'a TransportSolution),
}

/// Steps 4–8 — the chain of integral equalities that the symmetry proof
/// forces on a Wulff ball, each compared by independent quadratures:
///
/// (a) `2∫_{B_{H₀}} E₀ = −n∫_Ω u`
/// (b) `∫_{B_{H₀}} E₀ = ∫_Ω E(∇u)`
/// (c) `∫_{B_{H₀}} ũ(∇E₀) dy = −(n+1)∫_Ω u`
/// (d) `∫_{B_{H₀}} ∇ũ(∇E₀)·∇E₀ dy = (n/2)(L²(B_{H₀}) − 2∫E₀)`
///
/// On the radial path `ũ(∇E₀(y)) = E₀(y) + r²/2` and `∇ũ = ∇E` are
/// evaluated through the gradient-roundtrip identities; on the solver
/// path `ũ` is the discrete Legendre conjugate of the normalized
/// potential and `∇ũ(ξ)` the conjugate's exact discrete subgradient
/// (the maximizing source node).
pub fn check_chain_equalities(
    spec: &NormSpec,
    domain: &DiscreteDomain,
    input: ChainInput<'_>,
    tol: f64,
) -> Result<Vec<CheckReport>> {
    require_wulff(domain, spec, "the equality chain")?;
    let norm = Norm::from_spec(spec)?;
    let center = domain.center();
    let radius = match &domain.descriptor.kind {
        DomainKind::WulffBall { radius, .. } => *radius,
        _ => unreachable!("require_wulff passed"),
    };
    let rel = |p: [f64; 2]| [p[0] - center[0], p[1] - center[1]];

    let int_e0 = domain.integrate(|p| norm.e0(&rel(p)).unwrap());
    let area = domain.area;

    // ∫_Ω u and the per-node u values.
    type PotentialFn<'s> = Box<dyn Fn([f64; 2]) -> f64 + 's>;
    let (int_u, u_at): (f64, PotentialFn<'_>) = match &input {
        ChainInput::Radial => {
            let val = domain
                .integrate(|p| norm.e0(&rel(p)).unwrap() - 0.5 * radius * radius);
            let norm2 = norm.clone();
            (
                val,
                Box::new(move |p: [f64; 2]| {
                    norm2.e0(&[p[0] - center[0], p[1] - center[1]]).unwrap()
                        - 0.5 * radius * radius
                }),
            )
        }
        ChainInput::Solver(sol) => {
            let c0 = boundary_mean(domain, |p| sol.potential(p));
            let sol = *sol;
            let val = domain.integrate(|p| sol.potential(p) - c0);
            (val, Box::new(move |p: [f64; 2]| sol.potential(p) - c0))
        }
    };

    let mut reports = Vec::new();
    let label = match input {
        ChainInput::Radial => "radial",
        ChainInput::Solver(_) => "solver",
    };

    reports.push(CheckReport::equality(
        &format!("chain(a)[{label}] 2∫E₀ = −n∫u"),
        2.0 * int_e0,
        -N * int_u,
        tol,
        "Wulff-ball quadrature of E₀ vs domain quadrature of u",
    ));

    let int_e_grad = match &input {
        ChainInput::Radial => domain.integrate(|p| {
            let g = norm.grad_e0(&rel(p)).unwrap();
            norm.e(&g).unwrap()
        }),
        ChainInput::Solver(sol) => domain.integrate(|p| norm.e(&sol.map(p)).unwrap()),
    };
    reports.push(CheckReport::equality(
        &format!("chain(b)[{label}] ∫E₀ = ∫E(∇u)"),
        int_e0,
        int_e_grad,
        tol,
        "gradients: analytic ∇E₀ on the radial path, barycentric map on the solver path",
    ));

    // (c) and (d) need ũ along ∇E₀(B_{H₀}) = B_H.
    match &input {
        ChainInput::Radial => {
            // ũ(∇E₀(y)) = E(∇E₀(y)) + r²/2 = E₀(y) + r²/2.
            let lhs_c = domain.integrate(|p| {
                let g = norm.grad_e0(&rel(p)).unwrap();
                norm.e(&g).unwrap() + 0.5 * radius * radius
            });
            reports.push(CheckReport::equality(
                &format!("chain(c)[{label}] ∫ũ(∇E₀) = −(n+1)∫u"),
                lhs_c,
                -(N + 1.0) * int_u,
                tol,
                "ũ(∇E₀(y)) = E(∇E₀(y)) + r²/2 via the conjugacy of E and E₀",
            ));
            // ∇ũ(∇E₀(y)) = ∇E(∇E₀(y)); the integrand runs the full
            // gradient roundtrip numerically.
            let lhs_d = domain.integrate(|p| {
                let g = norm.grad_e0(&rel(p)).unwrap();
                let back = norm.grad_e(&g).unwrap();
                back[0] * g[0] + back[1] * g[1]
            });
            reports.push(CheckReport::equality(
                &format!("chain(d)[{label}] ∫∇ũ(∇E₀)·∇E₀ = (n/2)(L² − 2∫E₀)"),
                lhs_d,
                (N / 2.0) * (area - 2.0 * int_e0),
                tol,
                "∇ũ(∇E₀(y)) = ∇E(∇E₀(y)) evaluated as the numeric gradient roundtrip",
            ));
        }
        ChainInput::Solver(_) => {
            // Discrete conjugate of the normalized potential, on a lattice
            // covering B_H (the closure of ∇E₀(B_{H₀})).
            let mut u_vals = Vec::with_capacity(domain.interior_nodes.len());
            for node in &domain.interior_nodes {
                u_vals.push(u_at(node.point));
            }
            let u_grid = domain.grid_function_from(&u_vals)?;
            let pad = 0.05;
            let sup_xp = norm.dual(&[1.0, 0.0])? + pad;
            let sup_xm = norm.dual(&[-1.0, 0.0])? + pad;
            let sup_yp = norm.dual(&[0.0, 1.0])? + pad;
            let sup_ym = norm.dual(&[0.0, -1.0])? + pad;
            let n_conj = 161usize;
            let spacing = [
                (sup_xp + sup_xm) / (n_conj - 1) as f64,
                (sup_yp + sup_ym) / (n_conj - 1) as f64,
            ];
            let conj = legendre_conjugate(
                &u_grid,
                [-sup_xm, -sup_ym],
                spacing,
                [n_conj, n_conj],
            )?;
            let lhs_c = domain.integrate(|p| {
                let g = norm.grad_e0(&rel(p)).unwrap();
                conj.bilinear([g[0], g[1]]).unwrap()
            });
            reports.push(CheckReport::equality(
                &format!("chain(c)[{label}] ∫ũ(∇E₀) = −(n+1)∫u"),
                lhs_c,
                -(N + 1.0) * int_u,
                tol,
                "ũ from the discrete Legendre conjugate of the normalized potential",
            ));
            // ∇ũ(ξ) = the maximizing x in sup_x(x·ξ − u(x)): the exact
            // subgradient of the discrete conjugate.
            let points: Vec<[f64; 2]> =
                domain.interior_nodes.iter().map(|n| n.point).collect();
            let argmax = |xi: [f64; 2]| -> [f64; 2] {
                let mut best = f64::NEG_INFINITY;
                let mut arg = points[0];
                for (p, uv) in points.iter().zip(&u_vals) {
                    let v = p[0] * xi[0] + p[1] * xi[1] - uv;
                    if v > best {
                        best = v;
                        arg = *p;
                    }
                }
                arg
            };
            let lhs_d = domain.integrate(|p| {
                let g = norm.grad_e0(&rel(p)).unwrap();
                let x = argmax([g[0], g[1]]);
                x[0] * g[0] + x[1] * g[1]
            });
            reports.push(CheckReport::equality(
                &format!("chain(d)[{label}] ∫∇ũ(∇E₀)·∇E₀ = (n/2)(L² − 2∫E₀)"),
                lhs_d,
                (N / 2.0) * (area - 2.0 * int_e0),
                tol,
                "∇ũ taken as the maximizing source node of the discrete conjugate",
            ));
        }
    }
    Ok(reports)
}

// ---------------------------------------------------------------------
// Equality condition and pointwise Newton inequality
// ---------------------------------------------------------------------

/// Shared admissibility scan: central-difference gradient and Hessian
/// fields plus the gradient-exclusion rule of the residual operator
/// (`‖∇u‖ ≥ max(h, 0.1·sup‖∇u‖)`, keeping the direction of `∇u` — hence
/// `∇²E(∇u)` — first-order accurate).
struct FdFields {
    grads: Vec<Option<[f64; 2]>>,
    hessians: Vec<Option<[[f64; 2]; 2]>>,
    exclusion: f64,
    shape: [usize; 2],
}

fn fd_fields(u: &GridFunction) -> FdFields {
    let grads = u.gradient_field();
    let hessians = u.hessian_field();
    let h = u.spacing[0].max(u.spacing[1]);
    let mut sup = 0.0f64;
    for g in grads.iter().flatten() {
        sup = sup.max(g[0].hypot(g[1]));
    }
    FdFields {
        grads,
        hessians,
        exclusion: h.max(0.1 * sup),
        shape: u.shape,
    }
}

impl FdFields {
    /// Iterate admissible nodes: complete stencils and a gradient above
    /// the exclusion threshold.
    fn admissible(&self) -> impl Iterator<Item = (usize, [f64; 2], [[f64; 2]; 2])> + '_ {
        let ny = self.shape[1];
        (0..self.shape[0] * ny).filter_map(move |idx| {
            let g = self.grads[idx]?;
            let hess = self.hessians[idx]?;
            if g[0].hypot(g[1]) < self.exclusion {
                return None;
            }
            Some((idx, g, hess))
        })
    }
}

/// The equality condition of the argument: `M(x) = ∇²E(∇u(x))·∇²u(x)`
/// must be the identity matrix wherever the chain equalities hold.
/// Reports `sup‖M − I‖_max` over admissible nodes against the caller's
/// bound (`C·h` for radial input); the notes record the least-squares fit
/// of `∇E(∇u(x))` against `x − x̄`, whose residual measures how far the
/// transported gradient is from the affine structure the equality case
/// forces.
pub fn check_equality_condition(
    spec: &NormSpec,
    u: &GridFunction,
    bound: f64,
) -> Result<CheckReport> {
    let norm = Norm::from_spec(spec)?;
    let fields = fd_fields(u);
    let ny = u.shape[1];
    let mut sup_dev = 0.0f64;
    let mut count = 0usize;
    // Affine fit accumulators: x̄ = mean(x − ∇E(∇u(x))).
    let mut sum_dx = [0.0f64; 2];
    let mut pts: Vec<([f64; 2], [f64; 2])> = Vec::new();
    for (idx, g, hess) in fields.admissible() {
        let he = match norm.hessian_e(&g) {
            Ok(m) => m,
            Err(Error::DegeneratePoint) => continue,
            Err(e) => return Err(e),
        };
        // M = ∇²E(∇u)·∇²u, deviation in the max-entry norm.
        let m00 = he[(0, 0)] * hess[0][0] + he[(0, 1)] * hess[1][0];
        let m01 = he[(0, 0)] * hess[0][1] + he[(0, 1)] * hess[1][1];
        let m10 = he[(1, 0)] * hess[0][0] + he[(1, 1)] * hess[1][0];
        let m11 = he[(1, 0)] * hess[0][1] + he[(1, 1)] * hess[1][1];
        let dev = (m00 - 1.0)
            .abs()
            .max(m01.abs())
            .max(m10.abs())
            .max((m11 - 1.0).abs());
        sup_dev = sup_dev.max(dev);
        count += 1;
        let x = u.node(idx / ny, idx % ny);
        let y = norm.grad_e(&g)?;
        sum_dx[0] += x[0] - y[0];
        sum_dx[1] += x[1] - y[1];
        pts.push((x, [y[0], y[1]]));
    }
    if count == 0 {
        return Err(Error::Precondition(
            "no admissible nodes for the equality condition".into(),
        ));
    }
    let xbar = [sum_dx[0] / count as f64, sum_dx[1] / count as f64];
    let mut res2 = 0.0;
    let mut scale2 = 0.0;
    for (x, y) in &pts {
        let rx = y[0] - (x[0] - xbar[0]);
        let ry = y[1] - (x[1] - xbar[1]);
        res2 += rx * rx + ry * ry;
        scale2 += y[0] * y[0] + y[1] * y[1];
    }
    let affine_res = (res2 / scale2.max(1e-300)).sqrt();
    Ok(CheckReport::upper_bound(
        "equality condition sup‖∇²E(∇u)·∇²u − I‖",
        sup_dev,
        bound,
        0.0,
        &format!(
            "{count} admissible nodes; affine fit ∇E(∇u) ≈ x − x̄: rel rms residual {affine_res:.3e}, x̄ = ({:.4}, {:.4})",
            xbar[0], xbar[1]
        ),
    ))
}

/// Step 2 — the pointwise Newton inequality
/// `tr(∇²E(∇u)·∇²u) ≥ n·det(∇²E(∇u)·∇²u)^{1/n}` at admissible nodes.
///
/// Returns the violation-fraction report (against `allowed_violation`,
/// e.g. 0 for radial input, 1% for entropic output whose Hessian carries
/// blur noise) and, when `equality_tol` is given (Wulff radial case), a
/// second report that both sides equal `n` within that tolerance.
pub fn check_newton_pointwise(
    spec: &NormSpec,
    u: &GridFunction,
    allowed_violation: f64,
    equality_tol: Option<f64>,
) -> Result<Vec<CheckReport>> {
    let norm = Norm::from_spec(spec)?;
    let fields = fd_fields(u);
    let mut total = 0usize;
    let mut violations = 0usize;
    let mut worst_margin = f64::INFINITY;
    let mut sup_eq_dev = 0.0f64;
    for (_idx, g, hess) in fields.admissible() {
        let (phi, he_det_ok) = match norm.phi(&g) {
            Ok(p) => (p, true),
            Err(Error::DegeneratePoint) => (0.0, false),
            Err(e) => return Err(e),
        };
        if !he_det_ok {
            continue;
        }
        let he = match norm.hessian_e(&g) {
            Ok(m) => m,
            Err(Error::DegeneratePoint) => continue,
            Err(e) => return Err(e),
        };
        let trace = he[(0, 0)] * hess[0][0]
            + he[(0, 1)] * hess[1][0]
            + he[(1, 0)] * hess[0][1]
            + he[(1, 1)] * hess[1][1];
        let det_u = hess[0][0] * hess[1][1] - hess[0][1] * hess[1][0];
        let det_m = phi * det_u;
        let rhs = N * det_m.max(0.0).powf(1.0 / N);
        let slack = 1e-9 * trace.abs().max(1.0);
        let margin = trace - rhs;
        worst_margin = worst_margin.min(margin);
        total += 1;
        if margin < -slack {
            violations += 1;
        }
        if equality_tol.is_some() {
            sup_eq_dev = sup_eq_dev
                .max((trace / N - 1.0).abs())
                .max((det_m.max(0.0).powf(1.0 / N) - 1.0).abs());
        }
    }
    if total == 0 {
        return Err(Error::Precondition(
            "no admissible nodes for the Newton inequality".into(),
        ));
    }
    let fraction = violations as f64 / total as f64;
    let mut reports = vec![CheckReport::upper_bound(
        "step2 pointwise Newton inequality tr ≥ n·det^{1/n}",
        fraction,
        allowed_violation,
        0.0,
        &format!(
            "{violations}/{total} admissible nodes violate beyond 1e-9 slack; worst margin {worst_margin:.3e}"
        ),
    )];
    if let Some(tol) = equality_tol {
        reports.push(CheckReport::upper_bound(
            "step2 Newton equality: tr/n and det^{1/n} both ≈ 1",
            sup_eq_dev,
            tol,
            0.0,
            "Wulff radial solutions meet the equality case at every admissible node",
        ));
    }
    Ok(reports)
}

// ---------------------------------------------------------------------
// Solver-vs-theory consistency on Wulff balls
// ---------------------------------------------------------------------

/// Uniqueness of the Brenier solution on a Wulff ball: the solver map
/// must agree with the analytic gradient `∇E₀(x − c)` in the mass-weighted
/// mean, within 3% of the domain diameter.
pub fn check_wulff_consistency(
    sol: &TransportSolution,
    domain: &DiscreteDomain,
    spec: &NormSpec,
) -> Result<CheckReport> {
    require_wulff(domain, spec, "solver-vs-radial consistency")?;
    let norm = Norm::from_spec(spec)?;
    let c = domain.center();
    let mut mean = 0.0;
    let mut mass = 0.0;
    for (p, a) in sol.source.points.iter().zip(&sol.source.masses) {
        let t = sol.map(*p);
        let g = norm.grad_e0(&[p[0] - c[0], p[1] - c[1]])?;
        mean += a * (t[0] - g[0]).hypot(t[1] - g[1]);
        mass += a;
    }
    mean /= mass;
    Ok(CheckReport::upper_bound(
        "Wulff consistency: mean ‖map − ∇E₀‖ ≤ 3% diam",
        mean,
        0.03 * domain.diam,
        0.0,
        "uniqueness of the Brenier solution on the Wulff ball",
    ))
}

/// The Neumann-type boundary behavior `H(∇u) = const on ∂Ω`: relative
/// standard deviation of `H(map(b))` over boundary nodes, arc-weighted.
pub fn check_boundary_neumann(
    sol: &TransportSolution,
    domain: &DiscreteDomain,
    spec: &NormSpec,
) -> Result<CheckReport> {
    let norm = Norm::from_spec(spec)?;
    let mut mean = 0.0;
    let mut len = 0.0;
    let mut vals = Vec::with_capacity(domain.boundary_nodes.len());
    for b in &domain.boundary_nodes {
        let hv = norm.eval(&sol.map(b.point))?;
        vals.push((hv, b.arc_weight));
        mean += b.arc_weight * hv;
        len += b.arc_weight;
    }
    mean /= len;
    let mut var = 0.0;
    for (hv, w) in &vals {
        var += w * (hv - mean) * (hv - mean);
    }
    var /= len;
    let rel_std = var.sqrt() / mean;
    Ok(CheckReport::upper_bound(
        "boundary Neumann constancy: rel std of H(map) on ∂Ω",
        rel_std,
        0.05,
        0.0,
        &format!("arc-weighted mean H(map) = {mean:.6}"),
    ))
}

// ---------------------------------------------------------------------
// The overdetermined experiment (Theorem's rigidity, and its converse)
// ---------------------------------------------------------------------

/// Result of one overdetermined run: the solved transport plus the
/// boundary oscillation of the normalized potential.
pub struct OverdeterminedResult {
    pub report: CheckReport,
    /// `(max_{∂Ω} u − min_{∂Ω} u) / sup_Ω |u|` for the zero-boundary-mean
    /// potential.
    pub osc: f64,
    pub domain: DiscreteDomain,
    pub sol: TransportSolution,
    /// Boundary trace: arc length, normalized potential, H(map).
    pub trace: PlotSeries,
}

/// Solve the second-boundary-value transport on `desc` scaled to the
/// compatible area, and measure how badly the *Dirichlet* side of the
/// overdetermined problem fails: the oscillation of the potential along
/// `∂Ω`, normalized by `sup_Ω|u|`.
///
/// On the Wulff ball the oscillation must be ≤ 0.05 (the radial solution
/// is constant on the boundary); on any other convex domain the theorem's
/// rigidity predicts a genuinely positive oscillation, reported here and
/// judged against the Wulff baseline by [`converse_suite`].
pub fn overdetermined_experiment(
    spec: &NormSpec,
    desc: &DomainDescriptor,
    opts: &SolverOpts,
) -> Result<OverdeterminedResult> {
    let norm = Norm::from_spec(spec)?;
    let raw = build_domain(desc)?;
    let wulff_area =
        build_domain(&DomainDescriptor::wulff_ball(spec.clone(), 1.0, desc.grid_h))?.area;
    let domain = scale_to_area(&raw, wulff_area)?;
    let sol = solve_transport(&domain, spec, opts)?;

    let c0 = boundary_mean(&domain, |p| sol.potential(p));
    let mut sup_u = 0.0f64;
    for node in &domain.interior_nodes {
        sup_u = sup_u.max((sol.potential(node.point) - c0).abs());
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut trace = PlotSeries::new("boundary_trace", &["arc_length", "u", "h_of_map"]);
    let mut arc = 0.0;
    for b in &domain.boundary_nodes {
        let ub = sol.potential(b.point) - c0;
        lo = lo.min(ub);
        hi = hi.max(ub);
        trace
            .rows
            .push(vec![arc, ub, norm.eval(&sol.map(b.point))?]);
        arc += b.arc_weight;
    }
    let osc = (hi - lo) / sup_u.max(1e-300);
    let is_wulff = is_wulff_ball_of(&domain, spec);
    let report = if is_wulff {
        CheckReport::upper_bound(
            "overdetermined: boundary oscillation on the Wulff ball",
            osc,
            0.05,
            0.0,
            "Dirichlet and second boundary conditions are simultaneously satisfiable",
        )
    } else {
        CheckReport::lower_bound(
            "overdetermined: boundary oscillation on a non-Wulff domain",
            osc,
            0.0,
            0.0,
            "informational here; judged against the Wulff baseline by the converse suite",
        )
    };
    Ok(OverdeterminedResult {
        report,
        osc,
        domain,
        sol,
        trace,
    })
}

// ---------------------------------------------------------------------
// Suites
// ---------------------------------------------------------------------

/// Tolerance for the norm-calculus identities: the analytic families hit
/// closed forms, the Fourier family goes through a damped-Newton dual
/// gradient.
fn identity_tol(spec: &NormSpec) -> f64 {
    match spec.family {
        Family::Fourier2D => 1e-5,
        _ => 1e-6,
    }
}

/// The norm-calculus identity battery on random points:
/// `H₀(∇H) = 1`, `H(∇H₀) = 1`, `ξ·∇E = 2E`, `E₀(∇E) = E`, both gradient
/// roundtrips `∇E∘∇E₀ = id = ∇E₀∘∇E`, and bidual recovery `H₀₀ = H`.
/// Each report carries the worst deviation over the sample.
pub fn norm_identity_suite(spec: &NormSpec, n_points: usize, seed: u64) -> Result<SuiteOutput> {
    let norm = Norm::from_spec(spec)?;
    let dim = norm.dimension();
    let tol = identity_tol(spec);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n_points);
    while points.len() < n_points {
        let p: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let r: f64 = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r >= 0.3 {
            points.push(p);
        }
    }

    let mut dev_eq2 = 0.0f64;
    let mut dev_eq4 = 0.0f64;
    let mut dev_euler = 0.0f64;
    let mut dev_conj = 0.0f64;
    let mut dev_round_fwd = 0.0f64;
    let mut dev_round_bwd = 0.0f64;
    let mut dev_bidual = 0.0f64;
    for p in &points {
        let nrm: f64 = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        // eq2: H₀(∇H(ξ)) = 1.
        let gh = norm.grad_h(p)?;
        dev_eq2 = dev_eq2.max((norm.dual(&gh)? - 1.0).abs());
        // eq4: H(∇H₀(x)) = 1.
        let gd = norm.grad_dual(p)?;
        dev_eq4 = dev_eq4.max((norm.eval(&gd)? - 1.0).abs());
        // aug330: ξ·∇E = 2E (relative to 2E).
        let ge = norm.grad_e(p)?;
        let e = norm.e(p)?;
        let dot: f64 = p.iter().zip(&ge).map(|(a, b)| a * b).sum();
        dev_euler = dev_euler.max((dot - 2.0 * e).abs() / (2.0 * e).abs().max(1e-12));
        // aug331: E₀(∇E(ξ)) = E(ξ) (relative).
        dev_conj = dev_conj.max((norm.e0(&ge)? - e).abs() / e.abs().max(1e-12));
        // may9 roundtrips, relative to ‖x‖.
        let fwd = norm.grad_e(&norm.grad_e0(p)?)?;
        let bwd = norm.grad_e0(&norm.grad_e(p)?)?;
        let efwd: f64 = fwd
            .iter()
            .zip(p)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let ebwd: f64 = bwd
            .iter()
            .zip(p)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        dev_round_fwd = dev_round_fwd.max(efwd / nrm);
        dev_round_bwd = dev_round_bwd.max(ebwd / nrm);
        // Bidual recovery: H₀₀ = H (relative).
        let h = norm.eval(p)?;
        dev_bidual = dev_bidual.max((norm.bidual(p)? - h).abs() / h.abs().max(1e-12));
    }

    let notes = format!("worst deviation over {n_points} points, seed {seed}");
    let reports = vec![
        CheckReport::equality("identity H₀(∇H) = 1", dev_eq2, 0.0, tol, &notes),
        CheckReport::equality("identity H(∇H₀) = 1", dev_eq4, 0.0, tol, &notes),
        CheckReport::equality("identity ξ·∇E = 2E", dev_euler, 0.0, tol, &notes),
        CheckReport::equality("identity E₀(∇E) = E", dev_conj, 0.0, tol, &notes),
        CheckReport::equality("roundtrip ∇E(∇E₀(x)) = x", dev_round_fwd, 0.0, tol, &notes),
        CheckReport::equality("roundtrip ∇E₀(∇E(ξ)) = ξ", dev_round_bwd, 0.0, tol, &notes),
        CheckReport::equality("bidual recovery H₀₀ = H", dev_bidual, 0.0, tol, &notes),
    ];
    Ok(SuiteOutput {
        reports,
        plots: Vec::new(),
    })
}

/// The radial-path identity suite on the unit Wulff ball: mass balance,
/// the coarea/volume identity, the energy identity, the full equality
/// chain, the matrix equality condition, and the pointwise Newton
/// inequality with its equality case — everything the argument claims,
/// fed with the analytic solution so only quadrature and FD error remain.
pub fn wulff_identity_suite(spec: &NormSpec, grid_h: f64) -> Result<SuiteOutput> {
    let norm = Norm::from_spec(spec)?;
    let domain = build_domain(&DomainDescriptor::wulff_ball(spec.clone(), 1.0, grid_h))?;

    let mut reports = Vec::new();
    reports.push(check_step1_mass(&domain, spec, None)?);
    reports.push(wulff_volume_identity(spec)?);
    let u_radial = |p: [f64; 2]| -> Result<f64> { Ok(norm.e0(&p)? - 0.5) };
    reports.push(check_energy_identity(spec, &domain, &u_radial, 1e-3)?);
    reports.extend(check_chain_equalities(
        spec,
        &domain,
        ChainInput::Radial,
        1e-3,
    )?);

    let grid = domain.grid_function(|p| norm.e0(&p).unwrap() - 0.5);
    reports.push(check_equality_condition(spec, &grid, 2.0 * grid_h)?);
    reports.extend(check_newton_pointwise(spec, &grid, 0.0, Some(0.02))?);

    // Boundary trace of the analytic solution: u ≈ 0 and H(∇u) ≈ 1.
    let mut trace = PlotSeries::new("boundary_trace", &["arc_length", "u", "h_of_grad"]);
    let mut arc = 0.0;
    for b in &domain.boundary_nodes {
        let u = norm.e0(&b.point)? - 0.5;
        let g = norm.grad_e0(&b.point)?;
        trace.rows.push(vec![arc, u, norm.eval(&g)?]);
        arc += b.arc_weight;
    }
    Ok(SuiteOutput {
        reports,
        plots: vec![trace],
    })
}

/// Full solver verification on the Wulff ball: solve the entropic
/// transport, then check mass balance, consistency with the radial
/// gradient, the Neumann boundary behavior, the boundary oscillation, the
/// equality chain through the discrete conjugate, the pointwise Newton
/// inequality (≥ 99% of nodes), and the Brenier weak-form battery.
///
/// When `opts.eps_final` is unset, this suite defaults to
/// `2.5e-4·diam²` — a quarter of the solver's generic default. The chain
/// integrals carry an entropic conditional-variance bias of order
/// `n·ε·L²(Ω)` (the barycentric map averages over a Gaussian-width
/// `√ε` slice of the plan), and for eccentric norms that bias crosses
/// the 2% chain tolerance at the generic ε.
pub fn solve_and_verify_suite(
    spec: &NormSpec,
    desc: &DomainDescriptor,
    opts: &SolverOpts,
    weak_tol: f64,
) -> Result<SuiteOutput> {
    let opts = &match opts.eps_final {
        Some(_) => opts.clone(),
        None => {
            let raw = build_domain(desc)?;
            let wulff_area =
                build_domain(&DomainDescriptor::wulff_ball(spec.clone(), 1.0, desc.grid_h))?
                    .area;
            let diam = raw.diam * (wulff_area / raw.area).sqrt();
            SolverOpts {
                eps_final: Some(2.5e-4 * diam * diam),
                ..opts.clone()
            }
        }
    };
    let run = overdetermined_experiment(spec, desc, opts)?;
    let domain = &run.domain;
    let sol = &run.sol;

    let mut reports = Vec::new();
    reports.push(CheckReport::upper_bound(
        "sinkhorn final marginal error",
        sol.marginal_err,
        0.0,
        opts.marginal_tol,
        &format!("{} dual sweeps, ε = {:.4e}", sol.sweeps, sol.epsilon),
    ));
    reports.push(check_step1_mass(domain, spec, Some(sol))?);
    reports.push(check_wulff_consistency(sol, domain, spec)?);
    reports.push(check_boundary_neumann(sol, domain, spec)?);
    reports.push(run.report.clone());
    reports.extend(check_chain_equalities(
        spec,
        domain,
        ChainInput::Solver(sol),
        2e-2,
    )?);

    // Pointwise Newton inequality on the entropic potential (masked
    // interior grid; entropic blur keeps the potential convex, so
    // violations stay rare).
    let c0 = boundary_mean(domain, |p| sol.potential(p));
    let grid = domain.grid_function(|p| sol.potential(p) - c0);
    reports.extend(check_newton_pointwise(spec, &grid, 0.01, None)?);

    reports.extend(brenier_weak_check(sol, spec, weak_tol)?);

    // Plot data: boundary trace, map sample, and the Monge-Ampère
    // residual heat map of the potential.
    let mut plots = vec![run.trace.clone()];
    let mut map_series = PlotSeries::new("map", &["x", "y", "map_x", "map_y", "potential"]);
    for p in &sol.source.points {
        let t = sol.map(*p);
        map_series
            .rows
            .push(vec![p[0], p[1], t[0], t[1], sol.potential(*p) - c0]);
    }
    plots.push(map_series);
    let mut residual_series = PlotSeries::new("residual_grid", &["x", "y", "residual"]);
    if let Ok(residual) = ma_residual(spec, &grid) {
        for ix in 0..residual.shape[0] {
            for iy in 0..residual.shape[1] {
                if residual.masked(ix, iy) {
                    let p = residual.node(ix, iy);
                    residual_series
                        .rows
                        .push(vec![p[0], p[1], residual.value(ix, iy)]);
                }
            }
        }
    }
    plots.push(residual_series);
    Ok(SuiteOutput { reports, plots })
}

/// The converse experiment: the same norm and solver on its Wulff ball
/// and on a non-Wulff domain of identical area and resolution. The
/// boundary oscillation must be small on the ball, at least 3× larger on
/// the non-Wulff domain, and stable (within a factor 2) under one
/// refinement step — a genuine rigidity feature, not discretization
/// noise.
pub fn converse_suite(
    spec: &NormSpec,
    desc: &DomainDescriptor,
    opts: &SolverOpts,
) -> Result<SuiteOutput> {
    if is_wulff_ball_of(&build_domain(desc)?, spec) {
        return Err(Error::Precondition(
            "the converse experiment needs a non-Wulff domain".into(),
        ));
    }
    let wulff_desc = DomainDescriptor::wulff_ball(spec.clone(), 1.0, desc.grid_h);
    let wulff = overdetermined_experiment(spec, &wulff_desc, opts)?;
    let other = overdetermined_experiment(spec, desc, opts)?;
    let ratio = other.osc / wulff.osc.max(1e-12);

    let mut reports = vec![
        wulff.report.clone(),
        other.report.clone(),
        CheckReport::lower_bound(
            "converse: oscillation ratio non-Wulff / Wulff",
            ratio,
            3.0,
            0.0,
            &format!(
                "osc {:.4e} (non-Wulff) vs {:.4e} (Wulff) at matched resolution",
                other.osc, wulff.osc
            ),
        ),
    ];

    // One refinement step: finer grid, smaller ε, more target cells.
    let mut fine_desc = desc.clone();
    fine_desc.grid_h = desc.grid_h / 1.5;
    let coarse_eps_default = {
        let d = other.domain.diam;
        1e-3 * d * d
    };
    let fine_opts = SolverOpts {
        eps_final: Some(opts.eps_final.unwrap_or(coarse_eps_default) * 0.5),
        target_nodes: opts.target_nodes * 2,
        ..opts.clone()
    };
    let fine = overdetermined_experiment(spec, &fine_desc, &fine_opts)?;
    reports.push(CheckReport::lower_bound(
        "converse: refined oscillation ≥ half the coarse value",
        fine.osc,
        0.5 * other.osc,
        0.0,
        &format!(
            "h {:.4} → {:.4}, ε → ε/2, targets ×2; osc {:.4e} → {:.4e}",
            desc.grid_h, fine_desc.grid_h, other.osc, fine.osc
        ),
    ));
    reports.push(CheckReport::upper_bound(
        "converse: refined oscillation ≤ twice the coarse value",
        fine.osc,
        2.0 * other.osc,
        0.0,
        "the oscillation is a stable feature of the domain, not noise",
    ));

    let mut wulff_trace = wulff.trace.clone();
    wulff_trace.name = "boundary_trace_wulff".to_string();
    let mut other_trace = other.trace.clone();
    other_trace.name = "boundary_trace_non_wulff".to_string();
    let mut fine_trace = fine.trace.clone();
    fine_trace.name = "boundary_trace_non_wulff_refined".to_string();
    Ok(SuiteOutput {
        reports,
        plots: vec![wulff_trace, other_trace, fine_trace],
    })
}

/// Grid-refinement study of the radial Monge-Ampère residual at
/// `h ∈ {1/32, 1/64, 1/128}`.
///
/// Quadratic-family solutions (Euclidean included) are FD-exact, so the
/// sup residual must sit at rounding level (≤ 1e-10); for the other
/// families the quadrature-weighted RMS residual must converge at
/// measured order ≥ 1.8. For `PNorm` the radial Hessian is unbounded on
/// the coordinate axes, so its order report is informational (≥ 0) and
/// the table is still emitted.
pub fn convergence_study_suite(spec: &NormSpec) -> Result<SuiteOutput> {
    let norm = Norm::from_spec(spec)?;
    let steps = [32.0f64, 64.0, 128.0];
    let mut table = PlotSeries::new("convergence_table", &["h", "rms", "sup", "order"]);
    let mut rms_values: Vec<f64> = Vec::new();
    let mut sup_values: Vec<f64> = Vec::new();
    for denom in steps {
        let h = 1.0 / denom;
        let domain = build_domain(&DomainDescriptor::wulff_ball(spec.clone(), 1.0, h))?;
        let grid = domain.grid_function(|p| norm.e0(&p).unwrap() - 0.5);
        let residual = ma_residual(spec, &grid)?;
        let mut sq = 0.0;
        let mut area = 0.0;
        let mut sup = 0.0f64;
        for (v, m) in residual.values().iter().zip(residual.mask()) {
            if *m {
                sq += h * h * v * v;
                area += h * h;
                sup = sup.max(v.abs());
            }
        }
        let rms = (sq / area).sqrt();
        let order = match rms_values.last() {
            Some(&prev) => (prev / rms).ln() / 2.0f64.ln(),
            None => f64::NAN,
        };
        table.rows.push(vec![h, rms, sup, order]);
        rms_values.push(rms);
        sup_values.push(sup);
    }
    let overall_order =
        (rms_values[0] / rms_values[2]).ln() / 4.0f64.ln();

    let quadratic_like = matches!(spec.family, Family::Euclidean | Family::Quadratic);
    let report = if quadratic_like {
        CheckReport::upper_bound(
            "radial residual is FD-exact (sup ≤ 1e-10)",
            sup_values.iter().cloned().fold(0.0, f64::max),
            0.0,
            1e-10,
            "quadratic E₀ makes central differences exact",
        )
    } else if matches!(spec.family, Family::PNorm) {
        CheckReport::lower_bound(
            "radial residual convergence order (informational for PNorm)",
            overall_order,
            0.0,
            0.0,
            "the radial Hessian is unbounded on the axes; order recorded, not asserted",
        )
    } else {
        CheckReport::lower_bound(
            "radial residual convergence order ≥ 1.8",
            overall_order,
            1.8,
            0.0,
            &format!(
                "RMS residual {:.3e} → {:.3e} → {:.3e} over h = 1/32, 1/64, 1/128",
                rms_values[0], rms_values[1], rms_values[2]
            ),
        )
    };
    Ok(SuiteOutput {
        reports: vec![report],
        plots: vec![table],
    })
}
