//! Wavefunctions lifted to phase space and the gauged position and momentum
//! operators acting on them.
//!
//! A generating function `f(q, p)` lifts `ψ(q)` to `Ψ = exp(-if/ħ)·ψ` and
//! fixes the connection `A'_q = ∂_q f`, `A'_p = q − ∂_p f`. The operators
//! `Q = A'_p + iħ∂_p` and `P = A'_q − iħ∂_q` then act on `Ψ` the way `q`
//! and `-iħ∂_q` act on `ψ`.

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::One;
use serde::Serialize;

use crate::classical::HamiltonianSpec;
use crate::error::{Error, Result};
use crate::forms::{Grid2D, OneForm, ScalarField2D};
use crate::poly::BivariatePolynomial;
use crate::quantum::Wavefunction1D;
use crate::stencil::StencilOrder;

/// Fraction of nodes trimmed from each side before residual norms.
pub const DEFAULT_MARGIN: f64 = 0.1;
/// Largest allowed `spacing·max|∂f|/ħ` for a lift.
pub const NYQUIST_LIMIT: f64 = 0.5;

/// Connection components `(A'_q, A'_p)` as exact polynomials. The connection
/// 1-form itself is `(1/iħ)(A'_q dq + A'_p dp)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConnectionPrime {
    pub a_q: BivariatePolynomial,
    pub a_p: BivariatePolynomial,
    pub hbar: f64,
}

impl ConnectionPrime {
    pub fn new(a_q: BivariatePolynomial, a_p: BivariatePolynomial, hbar: f64) -> Self {
        Self { a_q, a_p, hbar }
    }
}

/// `A'_q = ∂_q f`, `A'_p = q − ∂_p f`.
pub fn connection_from_generating(f: &BivariatePolynomial, hbar: f64) -> ConnectionPrime {
    ConnectionPrime {
        a_q: f.d_q(),
        a_p: &BivariatePolynomial::q() - &f.d_p(),
        hbar,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegrabilityReport {
    pub holds: bool,
    /// `∂_q A'_p + ∂_p A'_q − 1`.
    pub defect: BivariatePolynomial,
}

pub fn integrability_check(conn: &ConnectionPrime) -> IntegrabilityReport {
    let one = BivariatePolynomial::constant(BigRational::one());
    let defect = &(&conn.a_p.d_q() + &conn.a_q.d_p()) - &one;
    IntegrabilityReport {
        holds: defect.is_zero(),
        defect,
    }
}

/// A lifted wavefunction together with the generating function that made it.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityDistribution2D {
    pub field: ScalarField2D,
    pub generating: BivariatePolynomial,
}

impl ProbabilityDistribution2D {
    pub fn grid(&self) -> &Grid2D {
        self.field.grid()
    }
}

fn max_over_grid(grid: &Grid2D, poly: &BivariatePolynomial) -> f64 {
    if poly.is_zero() {
        return 0.0;
    }
    let ev = poly.evaluator();
    let ps = grid.ps();
    grid.qs()
        .iter()
        .flat_map(|&q| ps.iter().map(move |&p| (q, p)))
        .map(|(q, p)| ev.eval(q, p).abs())
        .fold(0.0, f64::max)
}

/// Rejects generating functions whose phase `f/ħ` changes by more than
/// [`NYQUIST_LIMIT`] radians between neighbouring nodes.
pub fn check_nyquist(f: &BivariatePolynomial, grid: &Grid2D) -> Result<()> {
    let hbar = grid.hbar();
    let vq = grid.dq * max_over_grid(grid, &f.d_q()) / hbar;
    if vq > NYQUIST_LIMIT {
        return Err(Error::Nyquist {
            axis: "q",
            value: vq,
            limit: NYQUIST_LIMIT,
        });
    }
    let vp = grid.dp * max_over_grid(grid, &f.d_p()) / hbar;
    if vp > NYQUIST_LIMIT {
        return Err(Error::Nyquist {
            axis: "p",
            value: vp,
            limit: NYQUIST_LIMIT,
        });
    }
    Ok(())
}

fn same_axis(psi: &Wavefunction1D, grid: &Grid2D) -> bool {
    let tol = 1e-12 * grid.domain.width_q();
    psi.q.len() == grid.nq
        && psi
            .q
            .iter()
            .enumerate()
            .all(|(i, &x)| (x - grid.q(i)).abs() <= tol)
}

/// `Ψ(q, p) = exp(-(i/ħ) f(q, p))·ψ(q)` at every node. `ψ` must be sampled
/// on the grid's q-axis.
pub fn lift(
    psi: &Wavefunction1D,
    f: &BivariatePolynomial,
    grid: &Grid2D,
) -> Result<ProbabilityDistribution2D> {
    if !same_axis(psi, grid) {
        return Err(Error::GridMismatch(format!(
            "wavefunction has {} points on [{}, {}], grid q-axis has {} on [{}, {}]",
            psi.q.len(),
            psi.q[0],
            psi.q[psi.q.len() - 1],
            grid.nq,
            grid.domain.q_min,
            grid.domain.q_max
        )));
    }
    lift_with(|i, _| psi.values[i], f, grid)
}

/// Like [`lift`], with `ψ` linearly interpolated onto the grid's q-axis.
pub fn lift_interpolated(
    psi: &Wavefunction1D,
    f: &BivariatePolynomial,
    grid: &Grid2D,
) -> Result<ProbabilityDistribution2D> {
    let qs = grid.qs();
    let vals: Vec<Complex64> = qs.iter().map(|&q| psi.interpolate(q)).collect();
    lift_with(|i, _| vals[i], f, grid)
}

fn lift_with<F>(
    psi_at: F,
    f: &BivariatePolynomial,
    grid: &Grid2D,
) -> Result<ProbabilityDistribution2D>
where
    F: Fn(usize, f64) -> Complex64 + Sync,
{
    check_nyquist(f, grid)?;
    let hbar = grid.hbar();
    let ev = f.evaluator();
    let g = *grid;
    let field = ScalarField2D::from_fn(grid, |q, p| {
        let i = ((q - g.domain.q_min) / g.dq).round() as usize;
        Complex64::from_polar(1.0, -ev.eval(q, p) / hbar) * psi_at(i, q)
    });
    Ok(ProbabilityDistribution2D {
        field,
        generating: f.clone(),
    })
}

/// `Q = A'_p + iħ∂_p` and `P = A'_q − iħ∂_q` with sampled components and
/// finite-difference derivatives of a chosen order.
#[derive(Debug, Clone)]
pub struct PhaseSpaceOperators {
    pub conn: ConnectionPrime,
    pub order: StencilOrder,
    a_q: ScalarField2D,
    a_p: ScalarField2D,
}

pub fn operators_qp(conn: &ConnectionPrime, grid: &Grid2D) -> PhaseSpaceOperators {
    operators_qp_with(conn, grid, StencilOrder::default())
}

pub fn operators_qp_with(
    conn: &ConnectionPrime,
    grid: &Grid2D,
    order: StencilOrder,
) -> PhaseSpaceOperators {
    PhaseSpaceOperators {
        conn: conn.clone(),
        order,
        a_q: ScalarField2D::from_polynomial(grid, &conn.a_q),
        a_p: ScalarField2D::from_polynomial(grid, &conn.a_p),
    }
}

impl PhaseSpaceOperators {
    pub fn grid(&self) -> &Grid2D {
        self.a_q.grid()
    }

    fn check(&self, psi: &ScalarField2D) -> Result<()> {
        if psi.grid() != self.grid() {
            return Err(Error::GridMismatch(
                "operand and operator grids differ".into(),
            ));
        }
        Ok(())
    }

    pub fn apply_q(&self, psi: &ScalarField2D) -> Result<ScalarField2D> {
        self.check(psi)?;
        let ih = Complex64::new(0.0, self.conn.hbar);
        let d = psi.d_dp(self.order)?;
        Ok(self
            .a_p
            .zip_with(psi, |a, v| a * v)
            .zip_with(&d, |x, dv| x + ih * dv))
    }

    pub fn apply_p(&self, psi: &ScalarField2D) -> Result<ScalarField2D> {
        self.check(psi)?;
        let ih = Complex64::new(0.0, self.conn.hbar);
        let d = psi.d_dq(self.order)?;
        Ok(self
            .a_q
            .zip_with(psi, |a, v| a * v)
            .zip_with(&d, |x, dv| x - ih * dv))
    }
}

/// `‖([Q,P] − iħ)Ψ‖ / ‖Ψ‖` over the nodes left after trimming `margin`.
pub fn commutator_residual(
    ops: &PhaseSpaceOperators,
    test: &ScalarField2D,
    margin: f64,
) -> Result<f64> {
    let qp = ops.apply_q(&ops.apply_p(test)?)?;
    let pq = ops.apply_p(&ops.apply_q(test)?)?;
    let ih = Complex64::new(0.0, ops.conn.hbar);
    let r = qp.sub(&pq).zip_with(test, |c, v| c - ih * v);
    Ok(r.interior_norm(margin) / test.interior_norm(margin))
}

/// `(1/2m)·P(PΨ) + Σ_k v_k·Q^k Ψ`, powers by repeated application.
pub fn apply_hamiltonian_ps(
    ops: &PhaseSpaceOperators,
    h: &HamiltonianSpec,
    psi: &ScalarField2D,
) -> Result<ScalarField2D> {
    if h.degree() > 4 {
        return Err(Error::UnsupportedDegree(h.degree()));
    }
    let kinetic = ops.apply_p(&ops.apply_p(psi)?)?;
    let mut out = kinetic.scale(Complex64::new(1.0 / (2.0 * h.mass), 0.0));
    let mut power = psi.clone();
    for (k, &c) in h.potential.iter().enumerate() {
        if k > 0 {
            power = ops.apply_q(&power)?;
        }
        if c != 0.0 {
            out = out.zip_with(&power, |o, v| o + c * v);
        }
    }
    Ok(out)
}

/// `‖HΨ − EΨ‖ / ‖Ψ‖` over the nodes left after trimming `margin`.
pub fn schrodinger_residual(
    ops: &PhaseSpaceOperators,
    h: &HamiltonianSpec,
    psi: &ScalarField2D,
    energy: f64,
    margin: f64,
) -> Result<f64> {
    let hpsi = apply_hamiltonian_ps(ops, h, psi)?;
    let r = hpsi.zip_with(psi, |a, v| a - energy * v);
    Ok(r.interior_norm(margin) / psi.interior_norm(margin))
}

/// `d'Ψ = -∂_qΨ dq + ∂_pΨ dp`.
pub fn symplectic_derivative(psi: &ScalarField2D, order: StencilOrder) -> Result<OneForm> {
    let dq = psi.d_dq(order)?.scale(Complex64::new(-1.0, 0.0));
    let dp = psi.d_dp(order)?;
    OneForm::new(dq, dp)
}

/// Anything that can be sampled as the components of a connection 1-form
/// `a_q dq + a_p dp` multiplying `Ψ`.
pub trait ConnectionForm {
    fn components(&self, grid: &Grid2D) -> Result<(ScalarField2D, ScalarField2D)>;
}

impl ConnectionForm for ConnectionPrime {
    /// `(1/iħ)(A'_q, A'_p)`.
    fn components(&self, grid: &Grid2D) -> Result<(ScalarField2D, ScalarField2D)> {
        let s = Complex64::new(0.0, -1.0 / self.hbar);
        Ok((
            ScalarField2D::from_polynomial(grid, &self.a_q).scale(s),
            ScalarField2D::from_polynomial(grid, &self.a_p).scale(s),
        ))
    }
}

impl ConnectionForm for OneForm {
    fn components(&self, grid: &Grid2D) -> Result<(ScalarField2D, ScalarField2D)> {
        if self.grid() != grid {
            return Err(Error::GridMismatch(
                "connection and field grids differ".into(),
            ));
        }
        Ok((self.comp_q.clone(), self.comp_p.clone()))
    }
}

/// `D'Ψ = d'Ψ + A·Ψ`.
pub fn covariant_derivative<C: ConnectionForm + ?Sized>(
    conn: &C,
    psi: &ScalarField2D,
    order: StencilOrder,
) -> Result<OneForm> {
    let (aq, ap) = conn.components(psi.grid())?;
    let d = symplectic_derivative(psi, order)?;
    let comp_q = d.comp_q.add(&aq.zip_with(psi, |a, v| a * v));
    let comp_p = d.comp_p.add(&ap.zip_with(psi, |a, v| a * v));
    OneForm::new(comp_q, comp_p)
}

/// `iħD'Ψ = dq·(PΨ) + dp·(QΨ)`: returns `(PΨ, QΨ)` read off a covariant
/// derivative.
pub fn operators_from_covariant(d: &OneForm, hbar: f64) -> (ScalarField2D, ScalarField2D) {
    let ih = Complex64::new(0.0, hbar);
    (d.comp_q.scale(ih), d.comp_p.scale(ih))
}
