//! Phase-space grids, sampled differential forms, and their integrals.
//!
//! Everything lives on a two-dimensional phase space with Darboux
//! coordinates `(q, p)`. Sign conventions: the canonical 1-form is
//! `θ = -p dq`, the symplectic form is `ω = dq∧dp`, and counterclockwise
//! polygons have positive area.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::HamiltonianSpec;
use crate::error::{Error, Result};
use crate::poly::BivariatePolynomial;
use crate::quad::gauss_legendre;
use crate::stencil::{DerivativeStencil, StencilOrder};

const C0: Complex64 = Complex64::new(0.0, 0.0);

/// A point `(q, p)` of phase space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub q: f64,
    pub p: f64,
}

impl PhasePoint {
    pub const fn new(q: f64, p: f64) -> Self {
        Self { q, p }
    }

    pub fn lerp(self, other: PhasePoint, t: f64) -> PhasePoint {
        PhasePoint::new(
            self.q + t * (other.q - self.q),
            self.p + t * (other.p - self.p),
        )
    }

    pub fn distance(self, other: PhasePoint) -> f64 {
        (self.q - other.q).hypot(self.p - other.p)
    }
}

impl From<(f64, f64)> for PhasePoint {
    fn from((q, p): (f64, f64)) -> Self {
        PhasePoint::new(q, p)
    }
}

/// Rectangular region of phase space together with the action unit ħ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpaceDomain {
    pub q_min: f64,
    pub q_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub hbar: f64,
}

impl PhaseSpaceDomain {
    pub fn new(q_min: f64, q_max: f64, p_min: f64, p_max: f64, hbar: f64) -> Result<Self> {
        let finite = [q_min, q_max, p_min, p_max, hbar]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidDomain("non-finite bound".into()));
        }
        if q_min >= q_max {
            return Err(Error::InvalidDomain(format!(
                "q_min {q_min} >= q_max {q_max}"
            )));
        }
        if p_min >= p_max {
            return Err(Error::InvalidDomain(format!(
                "p_min {p_min} >= p_max {p_max}"
            )));
        }
        if hbar <= 0.0 {
            return Err(Error::InvalidDomain(format!(
                "hbar must be positive, got {hbar}"
            )));
        }
        Ok(Self {
            q_min,
            q_max,
            p_min,
            p_max,
            hbar,
        })
    }

    /// Square domain `[-half, half]²`.
    pub fn symmetric(half: f64, hbar: f64) -> Result<Self> {
        Self::new(-half, half, -half, half, hbar)
    }

    pub fn width_q(&self) -> f64 {
        self.q_max - self.q_min
    }

    pub fn width_p(&self) -> f64 {
        self.p_max - self.p_min
    }

    fn slack(&self) -> (f64, f64) {
        (1e-12 * self.width_q(), 1e-12 * self.width_p())
    }

    /// Closed-domain membership with a relative slack of 1e-12.
    pub fn contains(&self, pt: PhasePoint) -> bool {
        let (sq, sp) = self.slack();
        pt.q >= self.q_min - sq
            && pt.q <= self.q_max + sq
            && pt.p >= self.p_min - sp
            && pt.p <= self.p_max + sp
    }

    pub fn check(&self, pt: PhasePoint) -> Result<()> {
        if self.contains(pt) {
            Ok(())
        } else {
            Err(Error::OutsideDomain { q: pt.q, p: pt.p })
        }
    }
}

/// Uniform tensor grid over a [`PhaseSpaceDomain`], endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub domain: PhaseSpaceDomain,
    pub nq: usize,
    pub np: usize,
    pub dq: f64,
    pub dp: f64,
}

impl Grid2D {
    pub const MIN_NODES: usize = 8;

    pub fn new(domain: PhaseSpaceDomain, nq: usize, np: usize) -> Result<Self> {
        if nq < Self::MIN_NODES || np < Self::MIN_NODES {
            return Err(Error::InvalidGrid(format!(
                "need nq, np >= {}, got {nq} x {np}",
                Self::MIN_NODES
            )));
        }
        Ok(Self {
            domain,
            nq,
            np,
            dq: domain.width_q() / (nq - 1) as f64,
            dp: domain.width_p() / (np - 1) as f64,
        })
    }

    pub fn q(&self, i: usize) -> f64 {
        if i + 1 == self.nq {
            self.domain.q_max
        } else {
            self.domain.q_min + i as f64 * self.dq
        }
    }

    pub fn p(&self, j: usize) -> f64 {
        if j + 1 == self.np {
            self.domain.p_max
        } else {
            self.domain.p_min + j as f64 * self.dp
        }
    }

    pub fn qs(&self) -> Vec<f64> {
        (0..self.nq).map(|i| self.q(i)).collect()
    }

    pub fn ps(&self) -> Vec<f64> {
        (0..self.np).map(|j| self.p(j)).collect()
    }

    pub fn len(&self) -> usize {
        self.nq * self.np
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn hbar(&self) -> f64 {
        self.domain.hbar
    }

    /// Node ranges left after trimming `margin` (a fraction of each axis) off
    /// both ends.
    pub fn interior(&self, margin: f64) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        let mq = (margin * self.nq as f64).floor() as usize;
        let mp = (margin * self.np as f64).floor() as usize;
        (
            mq..self.nq.saturating_sub(mq),
            mp..self.np.saturating_sub(mp),
        )
    }
}

/// Complex samples on a grid; row `i` is `q_i`, column `j` is `p_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField2D {
    grid: Grid2D,
    values: Vec<Complex64>,
}

impl ScalarField2D {
    pub fn from_fn<F>(grid: &Grid2D, f: F) -> Self
    where
        F: Fn(f64, f64) -> Complex64 + Sync,
    {
        let ps = grid.ps();
        let mut values = vec![C0; grid.len()];
        values
            .par_chunks_mut(grid.np)
            .enumerate()
            .for_each(|(i, row)| {
                let q = grid.q(i);
                for (v, &p) in row.iter_mut().zip(&ps) {
                    *v = f(q, p);
                }
            });
        Self {
            grid: *grid,
            values,
        }
    }

    pub fn from_real_fn<F>(grid: &Grid2D, f: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Sync,
    {
        Self::from_fn(grid, |q, p| Complex64::new(f(q, p), 0.0))
    }

    pub fn from_polynomial(grid: &Grid2D, poly: &BivariatePolynomial) -> Self {
        let ev = poly.evaluator();
        Self::from_real_fn(grid, |q, p| ev.eval(q, p))
    }

    pub fn from_values(grid: &Grid2D, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a {}x{} grid",
                values.len(),
                grid.nq,
                grid.np
            )));
        }
        Ok(Self {
            grid: *grid,
            values,
        })
    }

    pub fn constant(grid: &Grid2D, c: Complex64) -> Self {
        Self {
            grid: *grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn zeros(grid: &Grid2D) -> Self {
        Self::constant(grid, C0)
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.grid.np + j]
    }

    pub fn map<F: Fn(Complex64) -> Complex64 + Sync>(&self, f: F) -> Self {
        Self {
            grid: self.grid,
            values: self.values.par_iter().map(|&v| f(v)).collect(),
        }
    }

    /// Nodewise combination; the grids must agree.
    pub fn zip_with<F>(&self, other: &Self, f: F) -> Self
    where
        F: Fn(Complex64, Complex64) -> Complex64 + Sync,
    {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        Self {
            grid: self.grid,
            values: self
                .values
                .par_iter()
                .zip(other.values.par_iter())
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// Multiplies by a function of the node coordinates.
    pub fn mul_fn<F>(&self, f: F) -> Self
    where
        F: Fn(f64, f64) -> Complex64 + Sync,
    {
        let g = self.grid;
        let ps = g.ps();
        let mut out = self.values.clone();
        out.par_chunks_mut(g.np).enumerate().for_each(|(i, row)| {
            let q = g.q(i);
            for (v, &p) in row.iter_mut().zip(&ps) {
                *v *= f(q, p);
            }
        });
        Self {
            grid: g,
            values: out,
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map(|v| v * s)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn is_constant(&self) -> bool {
        self.values.iter().all(|&v| v == self.values[0])
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Max |value| over nodes left after trimming `margin` from each side.
    pub fn interior_max_abs(&self, margin: f64) -> f64 {
        let (ri, rj) = self.grid.interior(margin);
        let mut m = 0.0f64;
        for i in ri {
            for j in rj.clone() {
                m = m.max(self.at(i, j).norm());
            }
        }
        m
    }

    /// Discrete L2 norm (unweighted) over the interior nodes. Summation order
    /// is fixed so the result does not depend on thread count.
    pub fn interior_norm(&self, margin: f64) -> f64 {
        let (ri, rj) = self.grid.interior(margin);
        let mut acc = 0.0;
        for i in ri {
            for j in rj.clone() {
                acc += self.at(i, j).norm_sqr();
            }
        }
        acc.sqrt()
    }

    /// Bilinear interpolation at an in-domain point.
    pub fn interpolate(&self, pt: PhasePoint) -> Result<Complex64> {
        let g = &self.grid;
        g.domain.check(pt)?;
        let locate = |x: f64, lo: f64, h: f64, n: usize| -> (usize, f64) {
            let s = ((x - lo) / h).max(0.0);
            let i = (s.floor() as usize).min(n - 2);
            (i, (s - i as f64).clamp(0.0, 1.0))
        };
        let (i, tq) = locate(pt.q, g.domain.q_min, g.dq, g.nq);
        let (j, tp) = locate(pt.p, g.domain.p_min, g.dp, g.np);
        let v00 = self.at(i, j);
        let v10 = self.at(i + 1, j);
        let v01 = self.at(i, j + 1);
        let v11 = self.at(i + 1, j + 1);
        Ok(v00 * ((1.0 - tq) * (1.0 - tp))
            + v10 * (tq * (1.0 - tp))
            + v01 * ((1.0 - tq) * tp)
            + v11 * (tq * tp))
    }

    /// ∂/∂q by finite differences of the given order.
    pub fn d_dq(&self, order: StencilOrder) -> Result<Self> {
        let g = self.grid;
        let st = DerivativeStencil::new(order, g.nq, g.dq)?;
        let np = g.np;
        let mut out = vec![C0; g.len()];
        out.par_chunks_mut(np).enumerate().for_each(|(i, row)| {
            let (s, w) = st.weights_at(i);
            for (k, wk) in w.iter().enumerate() {
                let src = &self.values[(s + k) * np..(s + k + 1) * np];
                for (o, v) in row.iter_mut().zip(src) {
                    *o += v * *wk;
                }
            }
            let inv_h = st.inv_h();
            for o in row.iter_mut() {
                *o *= inv_h;
            }
        });
        Ok(Self {
            grid: g,
            values: out,
        })
    }

    /// ∂/∂p by finite differences of the given order.
    pub fn d_dp(&self, order: StencilOrder) -> Result<Self> {
        let g = self.grid;
        let st = DerivativeStencil::new(order, g.np, g.dp)?;
        let mut out = vec![C0; g.len()];
        out.par_chunks_mut(g.np)
            .zip(self.values.par_chunks(g.np))
            .for_each(|(o, row)| st.apply(row, o));
        Ok(Self {
            grid: g,
            values: out,
        })
    }
}

/// `comp_q dq + comp_p dp` sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OneForm {
    pub comp_q: ScalarField2D,
    pub comp_p: ScalarField2D,
}

impl OneForm {
    pub fn new(comp_q: ScalarField2D, comp_p: ScalarField2D) -> Result<Self> {
        if comp_q.grid() != comp_p.grid() {
            return Err(Error::GridMismatch(
                "1-form components on different grids".into(),
            ));
        }
        Ok(Self { comp_q, comp_p })
    }

    pub fn grid(&self) -> &Grid2D {
        self.comp_q.grid()
    }

    pub fn zero(grid: &Grid2D) -> Self {
        Self {
            comp_q: ScalarField2D::zeros(grid),
            comp_p: ScalarField2D::zeros(grid),
        }
    }

    /// Gradient `df` of a polynomial, sampled from exact derivatives.
    pub fn exact(grid: &Grid2D, f: &BivariatePolynomial) -> Self {
        Self {
            comp_q: ScalarField2D::from_polynomial(grid, &f.d_q()),
            comp_p: ScalarField2D::from_polynomial(grid, &f.d_p()),
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            comp_q: self.comp_q.scale(s),
            comp_p: self.comp_p.scale(s),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            comp_q: self.comp_q.add(&other.comp_q),
            comp_p: self.comp_p.add(&other.comp_p),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            comp_q: self.comp_q.sub(&other.comp_q),
            comp_p: self.comp_p.sub(&other.comp_p),
        }
    }

    /// Interpolated components at a point.
    pub fn at_point(&self, pt: PhasePoint) -> Result<(Complex64, Complex64)> {
        Ok((self.comp_q.interpolate(pt)?, self.comp_p.interpolate(pt)?))
    }
}

/// `coeff dq∧dp` sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoForm {
    pub coeff: ScalarField2D,
}

impl TwoForm {
    pub fn grid(&self) -> &Grid2D {
        self.coeff.grid()
    }
}

/// `ω = dq∧dp`.
pub fn symplectic_form(grid: &Grid2D) -> TwoForm {
    TwoForm {
        coeff: ScalarField2D::constant(grid, Complex64::new(1.0, 0.0)),
    }
}

/// `θ = -p dq`.
pub fn canonical_one_form(grid: &Grid2D) -> OneForm {
    OneForm {
        comp_q: ScalarField2D::from_real_fn(grid, |_, p| -p),
        comp_p: ScalarField2D::zeros(grid),
    }
}

/// Poincaré–Cartan form restricted to a fixed-time slice, tagged with the
/// Hamiltonian whose `H dt` term trajectory integrals must add back.
#[derive(Debug, Clone, PartialEq)]
pub struct PoincareCartan {
    pub form: OneForm,
    pub hamiltonian: HamiltonianSpec,
}

/// On a fixed-time slice `λ = θ + H dt` reduces to `θ`; the `H dt` part is
/// carried by [`crate::classical::action_along`].
pub fn poincare_cartan(grid: &Grid2D, hamiltonian: &HamiltonianSpec) -> PoincareCartan {
    PoincareCartan {
        form: canonical_one_form(grid),
        hamiltonian: hamiltonian.clone(),
    }
}

/// `d(a dq + b dp) = (∂_q b - ∂_p a) dq∧dp` with second-order differences.
pub fn exterior_derivative(form: &OneForm) -> Result<TwoForm> {
    let dq_b = form.comp_p.d_dq(StencilOrder::Second)?;
    let dp_a = form.comp_q.d_dp(StencilOrder::Second)?;
    Ok(TwoForm {
        coeff: dq_b.sub(&dp_a),
    })
}

/// Composite-trapezoid line integral along a polyline, with each segment
/// split into pieces no longer than half the finer grid spacing.
pub fn line_integral(form: &OneForm, path: &[PhasePoint]) -> Result<Complex64> {
    let g = form.grid();
    let h = 0.5 * g.dq.min(g.dp);
    integrate_polyline(form, path, |len| ((len / h).ceil() as usize).max(1))
}

/// Line integral with a fixed number of trapezoid pieces per segment.
pub fn line_integral_steps(form: &OneForm, path: &[PhasePoint], steps: usize) -> Result<Complex64> {
    integrate_polyline(form, path, |_| steps.max(1))
}

fn integrate_polyline<S: Fn(f64) -> usize>(
    form: &OneForm,
    path: &[PhasePoint],
    steps: S,
) -> Result<Complex64> {
    if path.len() < 2 {
        return Err(Error::PathTooShort {
            needed: 2,
            got: path.len(),
        });
    }
    for pt in path {
        form.grid().domain.check(*pt)?;
    }
    let mut total = C0;
    for seg in path.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let n = steps(a.distance(b));
        let dq = (b.q - a.q) / n as f64;
        let dp = (b.p - a.p) / n as f64;
        let mut prev = form.at_point(a)?;
        for k in 1..=n {
            let x = if k == n {
                b
            } else {
                a.lerp(b, k as f64 / n as f64)
            };
            let cur = form.at_point(x)?;
            total += (prev.0 + cur.0) * (0.5 * dq) + (prev.1 + cur.1) * (0.5 * dp);
            prev = cur;
        }
    }
    Ok(total)
}

/// `∫ df` along a polyline using exact polynomial derivatives and a
/// Gauss–Legendre rule that is exact for the integrand's degree.
pub fn exact_gradient_line_integral(f: &BivariatePolynomial, path: &[PhasePoint]) -> Result<f64> {
    if path.len() < 2 {
        return Err(Error::PathTooShort {
            needed: 2,
            got: path.len(),
        });
    }
    let fq = f.d_q().evaluator();
    let fp = f.d_p().evaluator();
    let rule = gauss_legendre(f.degree() as usize / 2 + 1);
    let mut total = 0.0;
    for seg in path.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let (dq, dp) = (b.q - a.q, b.p - a.p);
        for &(x, w) in &rule {
            let pt = a.lerp(b, 0.5 * (x + 1.0));
            total += 0.5 * w * (fq.eval(pt.q, pt.p) * dq + fp.eval(pt.q, pt.p) * dp);
        }
    }
    Ok(total)
}

/// Signed shoelace area; counterclockwise is positive.
pub fn shoelace_area(vertices: &[PhasePoint]) -> f64 {
    let n = vertices.len();
    if n < 3 {
        return 0.0;
    }
    let mut twice = 0.0;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        twice += a.q * b.p - b.q * a.p;
    }
    0.5 * twice
}

/// Integral of a 2-form over an oriented polygon. Constant coefficients use
/// the exact shoelace area; otherwise a fan triangulation refined to the grid
/// spacing is integrated with the centroid rule.
pub fn surface_integral(form: &TwoForm, polygon: &[PhasePoint]) -> Result<Complex64> {
    if polygon.len() < 3 {
        return Err(Error::DegeneratePolygon(polygon.len()));
    }
    let g = *form.grid();
    for pt in polygon {
        g.domain.check(*pt)?;
    }
    if form.coeff.is_constant() {
        return Ok(form.coeff.values()[0] * shoelace_area(polygon));
    }
    let (sign, canon) = canonical_cycle(polygon);
    let h = g.dq.min(g.dp);
    let a = canon[0];
    let mut total = C0;
    for w in canon[1..].windows(2) {
        let (b, c) = (w[0], w[1]);
        let area = shoelace_area(&[a, b, c]);
        if area == 0.0 {
            continue;
        }
        let longest = a.distance(b).max(b.distance(c)).max(c.distance(a));
        let m = ((longest / h).ceil() as usize).clamp(1, 512);
        let node = |i: usize, j: usize| {
            let (s, t) = (i as f64 / m as f64, j as f64 / m as f64);
            PhasePoint::new(
                a.q + s * (b.q - a.q) + t * (c.q - a.q),
                a.p + s * (b.p - a.p) + t * (c.p - a.p),
            )
        };
        let centroid = |x: PhasePoint, y: PhasePoint, z: PhasePoint| {
            PhasePoint::new((x.q + y.q + z.q) / 3.0, (x.p + y.p + z.p) / 3.0)
        };
        let sub_area = area / (m * m) as f64;
        let mut acc = C0;
        for i in 0..m {
            for j in 0..(m - i) {
                acc +=
                    form.coeff
                        .interpolate(centroid(node(i, j), node(i + 1, j), node(i, j + 1)))?;
                if i + j + 1 < m {
                    acc += form.coeff.interpolate(centroid(
                        node(i + 1, j),
                        node(i + 1, j + 1),
                        node(i, j + 1),
                    ))?;
                }
            }
        }
        total += acc * sub_area;
    }
    Ok(total * sign)
}

/// Rotation and direction of a vertex cycle that does not depend on where
/// the cycle starts or which way it runs, with the sign relating it to the
/// input. Reversed inputs therefore give bitwise negated integrals.
fn canonical_cycle(polygon: &[PhasePoint]) -> (f64, Vec<PhasePoint>) {
    let key = |x: &PhasePoint| (x.q, x.p);
    let cmp = |x: &PhasePoint, y: &PhasePoint| {
        key(x)
            .0
            .total_cmp(&key(y).0)
            .then(key(x).1.total_cmp(&key(y).1))
    };
    let n = polygon.len();
    let start = (0..n)
        .min_by(|&i, &j| cmp(&polygon[i], &polygon[j]))
        .unwrap_or(0);
    let fwd: Vec<PhasePoint> = (0..n).map(|k| polygon[(start + k) % n]).collect();
    let rev: Vec<PhasePoint> = (0..n).map(|k| polygon[(start + n - k) % n]).collect();
    let order = fwd
        .iter()
        .zip(&rev)
        .map(|(x, y)| cmp(x, y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal);
    if order.is_gt() {
        (-1.0, rev)
    } else {
        (1.0, fwd)
    }
}

/// `λ → λ + df` with exact polynomial derivatives sampled at the nodes.
pub fn shift_lambda(form: &OneForm, f: &BivariatePolynomial) -> OneForm {
    form.add(&OneForm::exact(form.grid(), f))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_grid(n: usize) -> Grid2D {
        Grid2D::new(
            PhaseSpaceDomain::new(0.0, 1.0, 0.0, 1.0, 1.0).unwrap(),
            n,
            n,
        )
        .unwrap()
    }

    fn grid(half: f64, n: usize) -> Grid2D {
        Grid2D::new(PhaseSpaceDomain::symmetric(half, 1.0).unwrap(), n, n).unwrap()
    }

    fn pt(q: f64, p: f64) -> PhasePoint {
        PhasePoint::new(q, p)
    }

    #[test]
    fn domain_and_grid_validation() {
        assert!(PhaseSpaceDomain::new(1.0, 0.0, 0.0, 1.0, 1.0).is_err());
        assert!(PhaseSpaceDomain::new(0.0, 1.0, 0.0, 1.0, 0.0).is_err());
        let d = PhaseSpaceDomain::new(0.0, 1.0, 0.0, 2.0, 1.0).unwrap();
        assert!(Grid2D::new(d, 7, 8).is_err());
        let g = Grid2D::new(d, 11, 21).unwrap();
        assert!((g.dq - 0.1).abs() < 1e-15 && (g.dp - 0.1).abs() < 1e-15);
        assert_eq!(g.q(10), 1.0);
        assert_eq!(g.p(20), 2.0);
    }

    #[test]
    fn symplectic_form_is_ones() {
        let g = unit_grid(8);
        let w = symplectic_form(&g);
        assert_eq!(w.coeff.values().len(), 64);
        assert!(w
            .coeff
            .values()
            .iter()
            .all(|v| *v == Complex64::new(1.0, 0.0)));
        let square = [pt(0.0, 0.0), pt(1.0, 0.0), pt(1.0, 1.0), pt(0.0, 1.0)];
        assert!((surface_integral(&w, &square).unwrap().re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn canonical_form_components() {
        let g = Grid2D::new(
            PhaseSpaceDomain::new(0.0, 0.6, -2.0, 2.0, 1.0).unwrap(),
            7 + 1,
            9,
        )
        .unwrap();
        let th = canonical_one_form(&g);
        let v = th.at_point(pt(0.3, 2.0)).unwrap();
        assert!((v.0.re + 2.0).abs() < 1e-14 && v.1 == C0);
        // p = 0 is the middle column
        for i in 0..g.nq {
            assert_eq!(th.comp_q.at(i, 4).re, 0.0);
        }
    }

    #[test]
    fn d_theta_is_omega_exactly() {
        let g = grid(3.0, 33);
        let dth = exterior_derivative(&canonical_one_form(&g)).unwrap();
        for v in dth.coeff.values() {
            assert!((v.re - 1.0).abs() < 1e-12 && v.im.abs() < 1e-12);
        }
    }

    #[test]
    fn poincare_cartan_reduces_to_theta() {
        let g = grid(2.0, 9);
        let h = HamiltonianSpec::harmonic(1.0, 1.0, 1.0);
        let pc = poincare_cartan(&g, &h);
        assert_eq!(pc.form, canonical_one_form(&g));
        assert_eq!(pc.hamiltonian, h);
    }

    #[test]
    fn dd_vanishes_at_second_order() {
        let f: BivariatePolynomial = "q^2*p + p^3*q - q^4".parse().unwrap();
        let mut errs = Vec::new();
        let mut hs = Vec::new();
        for n in [17, 33, 65, 129] {
            let g = grid(1.0, n);
            let dd = exterior_derivative(&OneForm::exact(&g, &f)).unwrap();
            errs.push(dd.coeff.interior_max_abs(0.1));
            hs.push(g.dq);
        }
        for k in 1..errs.len() {
            let rate = (errs[k - 1] / errs[k]).ln() / (hs[k - 1] / hs[k]).ln();
            assert!((rate - 2.0).abs() < 0.2, "rate {rate}");
        }
    }

    #[test]
    fn exterior_derivative_of_polynomial_forms() {
        // φ = (3p/2) dq + (q/2) dp from f = pq/2: dφ = (1/2 - 3/2) dq∧dp = -1
        let g = grid(2.0, 21);
        let phi = OneForm::new(
            ScalarField2D::from_real_fn(&g, |_, p| 1.5 * p),
            ScalarField2D::from_real_fn(&g, |q, _| 0.5 * q),
        )
        .unwrap();
        let d = exterior_derivative(&phi).unwrap();
        assert!(d.coeff.values().iter().all(|v| (v.re + 1.0).abs() < 1e-10));
        // quadratic components: ∂_q(q p) - ∂_p(p^2) = p - 2p = -p, exact for second order
        let quad = OneForm::new(
            ScalarField2D::from_real_fn(&g, |_, p| p * p),
            ScalarField2D::from_real_fn(&g, |q, p| q * p),
        )
        .unwrap();
        let d = exterior_derivative(&quad).unwrap();
        for i in 0..g.nq {
            for j in 0..g.np {
                assert!((d.coeff.at(i, j).re + g.p(j)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn line_integrals() {
        let g = unit_grid(11);
        let th = canonical_one_form(&g);
        let v = line_integral(&th, &[pt(0.0, 1.0), pt(1.0, 1.0)]).unwrap();
        assert!((v.re + 1.0).abs() < 1e-14);
        let a = pt(0.2, 0.3);
        let b = pt(0.9, 0.7);
        assert!(line_integral(&th, &[a, b, a]).unwrap().norm() < 1e-15);
        assert!(matches!(
            line_integral(&th, &[a]),
            Err(Error::PathTooShort { .. })
        ));
        assert!(matches!(
            line_integral(&th, &[a, pt(1.5, 0.0)]),
            Err(Error::OutsideDomain { .. })
        ));
    }

    #[test]
    fn gradient_theorem_for_quadratic_f() {
        let g = grid(2.0, 201);
        let f: BivariatePolynomial = "q^2 - 3*q*p + p^2/2 + q".parse().unwrap();
        let df = OneForm::exact(&g, &f);
        let path = [pt(-1.5, 0.2), pt(0.3, 1.7), pt(1.1, -1.9), pt(1.9, 0.4)];
        let v = line_integral(&df, &path).unwrap();
        let exact = f.eval(1.9, 0.4) - f.eval(-1.5, 0.2);
        assert!((v.re - exact).abs() < 1e-8);
    }

    #[test]
    fn gradient_theorem_converges_at_second_order() {
        // q^2 p is not bilinear, so interpolation error appears and must shrink at h^2
        let f: BivariatePolynomial = "q^2*p + p^3".parse().unwrap();
        let path = [pt(-0.7, -0.4), pt(0.8, 0.9)];
        let exact = f.eval(0.8, 0.9) - f.eval(-0.7, -0.4);
        let mut errs = Vec::new();
        for n in [11, 21, 41, 81] {
            let g = grid(1.0, n);
            let v = line_integral(&OneForm::exact(&g, &f), &path).unwrap();
            errs.push((v.re - exact).abs());
        }
        for k in 1..errs.len() {
            let rate = (errs[k - 1] / errs[k]).log2();
            assert!(rate > 1.7, "rate {rate} errs {errs:?}");
        }
    }

    #[test]
    fn exact_gradient_integral_is_exact() {
        let f: BivariatePolynomial = "q^5*p^2 - 7*q*p^4 + 3".parse().unwrap();
        let path = [pt(0.1, 0.2), pt(-1.3, 0.9), pt(0.4, -1.1)];
        let v = exact_gradient_line_integral(&f, &path).unwrap();
        assert!((v - (f.eval(0.4, -1.1) - f.eval(0.1, 0.2))).abs() < 1e-12);
    }

    #[test]
    fn shoelace_and_orientation() {
        let g = unit_grid(8);
        let w = symplectic_form(&g);
        let tri = [pt(0.0, 0.0), pt(1.0, 0.0), pt(0.0, 1.0)];
        let rev = [pt(0.0, 1.0), pt(1.0, 0.0), pt(0.0, 0.0)];
        assert_eq!(surface_integral(&w, &tri).unwrap().re, 0.5);
        assert_eq!(surface_integral(&w, &rev).unwrap().re, -0.5);
        let flat = [pt(0.0, 0.0), pt(0.5, 0.5), pt(1.0, 1.0)];
        assert_eq!(surface_integral(&w, &flat).unwrap().re, 0.0);
        assert!(matches!(
            surface_integral(&w, &tri[..2]),
            Err(Error::DegeneratePolygon(2))
        ));
    }

    #[test]
    fn surface_integral_of_varying_coefficient() {
        // ∫∫ (q + p) over the unit square = 1
        let g = unit_grid(41);
        let form = TwoForm {
            coeff: ScalarField2D::from_real_fn(&g, |q, p| q + p),
        };
        let square = [pt(0.0, 0.0), pt(1.0, 0.0), pt(1.0, 1.0), pt(0.0, 1.0)];
        let v = surface_integral(&form, &square).unwrap();
        assert!((v.re - 1.0).abs() < 1e-10);
        let rev: Vec<_> = square.iter().rev().copied().collect();
        assert_eq!(surface_integral(&form, &rev).unwrap().re, -v.re);
    }

    #[test]
    fn stokes_for_theta() {
        // ∮θ over a ccw triangle equals its area
        let g = grid(2.0, 41);
        let th = canonical_one_form(&g);
        let tri = [pt(-1.0, -0.5), pt(1.2, 0.1), pt(0.3, 1.4), pt(-1.0, -0.5)];
        let loop_int = line_integral(&th, &tri).unwrap().re;
        assert!((loop_int - shoelace_area(&tri[..3])).abs() < 1e-12);
    }

    #[test]
    fn shift_lambda_cases() {
        let g = grid(1.0, 11);
        let th = canonical_one_form(&g);
        assert_eq!(shift_lambda(&th, &BivariatePolynomial::zero()), th);
        let shifted = shift_lambda(&th, &"p*q".parse().unwrap());
        for i in 0..g.nq {
            for j in 0..g.np {
                assert!(shifted.comp_q.at(i, j).norm() < 1e-15);
                assert!((shifted.comp_p.at(i, j).re - g.q(i)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn interpolation_reproduces_bilinear_fields() {
        let g = grid(1.0, 9);
        let f = ScalarField2D::from_real_fn(&g, |q, p| 1.0 + 2.0 * q - p + 0.5 * q * p);
        for &(q, p) in &[(0.13, -0.77), (1.0, 1.0), (-1.0, 0.3)] {
            let v = f.interpolate(pt(q, p)).unwrap().re;
            assert!((v - (1.0 + 2.0 * q - p + 0.5 * q * p)).abs() < 1e-14);
        }
    }
}
