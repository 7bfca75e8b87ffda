//! Gauge transformations of the gerbe connection with polynomial parameters.
//!
//! Connections appear in two conventions: the gerbe connection is written
//! `A = -(i/ħ)λ`, the phase-space connection `A' = (1/iħ)(A'_q dq + A'_p dp)`.
//! Both are `-(i/ħ)` times a real 1-form in action units, so this module
//! stores that real form ([`PolyOneForm`]) and converts to raw complex
//! components only when sampling ([`PolyOneForm::sample_connection`]). The
//! B-field is stored the same way, `B = -(i/ħ)·b·dq∧dp`.

use num_complex::Complex64;
use num_rational::BigRational;
use serde::Serialize;

use crate::forms::{Grid2D, OneForm, ScalarField2D};
use crate::phase_space::ConnectionPrime;
use crate::poly::BivariatePolynomial;
use crate::quantum::Wavefunction1D;

/// `dq·c_q + dp·c_p` with polynomial coefficients.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolyOneForm {
    pub dq: BivariatePolynomial,
    pub dp: BivariatePolynomial,
}

impl PolyOneForm {
    pub fn new(dq: BivariatePolynomial, dp: BivariatePolynomial) -> Self {
        Self { dq, dp }
    }

    pub fn zero() -> Self {
        Self::new(BivariatePolynomial::zero(), BivariatePolynomial::zero())
    }

    /// `df`.
    pub fn exact(f: &BivariatePolynomial) -> Self {
        Self::new(f.d_q(), f.d_p())
    }

    /// The canonical form `θ = -p dq`, which is also `λ` on a fixed-time slice.
    pub fn canonical() -> Self {
        Self::new(-BivariatePolynomial::p(), BivariatePolynomial::zero())
    }

    /// Action-unit form of a phase-space connection: `A'_q dq + A'_p dp`.
    pub fn from_connection(conn: &ConnectionPrime) -> Self {
        Self::new(conn.a_q.clone(), conn.a_p.clone())
    }

    /// Coefficient of `dq∧dp` in the exterior derivative.
    pub fn d(&self) -> BivariatePolynomial {
        &self.dp.d_q() - &self.dq.d_p()
    }

    pub fn is_zero(&self) -> bool {
        self.dq.is_zero() && self.dp.is_zero()
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(&self.dq + &other.dq, &self.dp + &other.dp)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::new(&self.dq - &other.dq, &self.dp - &other.dp)
    }

    /// Real components sampled on a grid.
    pub fn sample(&self, grid: &Grid2D) -> OneForm {
        OneForm::new(
            ScalarField2D::from_polynomial(grid, &self.dq),
            ScalarField2D::from_polynomial(grid, &self.dp),
        )
        .expect("components share the grid")
    }

    /// Raw components of the connection `-(i/ħ)·self`.
    pub fn sample_connection(&self, grid: &Grid2D, hbar: f64) -> OneForm {
        self.sample(grid).scale(Complex64::new(0.0, -1.0 / hbar))
    }
}

/// Gerbe gauge data `(A, B, H)` with `A = -(i/ħ)a` and `B = -(i/ħ)b dq∧dp`.
/// `H = dB` has no components on a two-dimensional phase space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaugeField {
    pub a: PolyOneForm,
    pub b: BivariatePolynomial,
    pub hbar: f64,
}

impl GaugeField {
    /// `A = -(i/ħ)λ`, `B = -(i/ħ)ω`.
    pub fn gerbe(hbar: f64) -> Self {
        Self {
            a: PolyOneForm::canonical(),
            b: BivariatePolynomial::term(1, 1, 0, 0),
            hbar,
        }
    }

    /// `H = dB`, which vanishes identically in two dimensions.
    pub fn h(&self) -> f64 {
        0.0
    }

    /// Raw `dq∧dp` coefficient of `B`.
    pub fn b_raw(&self) -> (Complex64, BivariatePolynomial) {
        (Complex64::new(0.0, -1.0 / self.hbar), self.b.clone())
    }
}

/// Outcome of a gauge transformation, with the changes it made.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaugeChange {
    pub field: GaugeField,
    /// Action-unit change of `A`; the raw change is `-(i/ħ)` times this.
    pub delta_a: PolyOneForm,
    pub delta_b: BivariatePolynomial,
    pub delta_h: f64,
}

/// `δ0`: `A → A − (i/ħ)df`, `B` and `H` unchanged.
pub fn delta0(field: &GaugeField, f: &BivariatePolynomial) -> GaugeChange {
    let delta_a = PolyOneForm::exact(f);
    GaugeChange {
        field: GaugeField {
            a: field.a.add(&delta_a),
            b: field.b.clone(),
            hbar: field.hbar,
        },
        delta_a,
        delta_b: BivariatePolynomial::zero(),
        delta_h: 0.0,
    }
}

/// `δ1`: `A → A − (i/ħ)φ`, `B → B − (i/ħ)dφ`, `H` unchanged.
pub fn delta1(field: &GaugeField, phi: &PolyOneForm) -> GaugeChange {
    let delta_b = phi.d();
    GaugeChange {
        field: GaugeField {
            a: field.a.add(phi),
            b: &field.b + &delta_b,
            hbar: field.hbar,
        },
        delta_a: phi.clone(),
        delta_b,
        delta_h: 0.0,
    }
}

/// `φ = (p + ∂_q f) dq + (q − ∂_p f) dp`, the δ1 parameter taking the gerbe
/// connection to the phase-space connection generated by `f`.
pub fn phi_for_equivalence(f: &BivariatePolynomial) -> PolyOneForm {
    PolyOneForm::new(
        &BivariatePolynomial::p() + &f.d_q(),
        &BivariatePolynomial::q() - &f.d_p(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceCertificate {
    pub exact: bool,
    /// `λ + φ − (A'_q dq + A'_p dp)` in exact arithmetic.
    pub defect: PolyOneForm,
}

/// Checks `A + δ1A = A'` by coefficient algebra.
pub fn equivalence_certificate(f: &BivariatePolynomial, hbar: f64) -> EquivalenceCertificate {
    let conn = crate::phase_space::connection_from_generating(f, hbar);
    let moved = delta1(&GaugeField::gerbe(hbar), &phi_for_equivalence(f));
    let defect = moved.field.a.sub(&PolyOneForm::from_connection(&conn));
    EquivalenceCertificate {
        exact: defect.is_zero(),
        defect,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Delta0Report {
    pub solvable: bool,
    /// Terms of `f` containing both `q` and `p`.
    pub mixed: BivariatePolynomial,
    /// `g(q)`, including the constant term, when solvable.
    pub g: Option<BivariatePolynomial>,
    /// `h(p)` without constant term, when solvable.
    pub h: Option<BivariatePolynomial>,
}

/// `A'` is δ0-equivalent to the gerbe connection exactly when `f` has no
/// mixed terms, i.e. `f = g(q) + h(p)`.
pub fn delta0_solvable(f: &BivariatePolynomial) -> Delta0Report {
    let mixed = f.mixed_part();
    if !mixed.is_zero() {
        return Delta0Report {
            solvable: false,
            mixed,
            g: None,
            h: None,
        };
    }
    let g = BivariatePolynomial::from_terms(
        f.terms()
            .filter(|(_, k, _)| *k == 0)
            .map(|(j, k, c)| ((j, k), c.clone())),
    );
    let h = f - &g;
    Delta0Report {
        solvable: true,
        mixed,
        g: Some(g),
        h: Some(h),
    }
}

/// Solves `∂_qF = p + ∂_q f`, `∂_pF = q − ∂_p f` by direct integration:
/// integrate the first equation in `q`, then require the leftover of the
/// second to depend on `p` alone. Returns `None` when no such `F` exists.
pub fn delta0_potential(f: &BivariatePolynomial) -> Option<BivariatePolynomial> {
    let phi = phi_for_equivalence(f);
    let partial = phi.dq.integrate_q();
    let rest = &phi.dp - &partial.d_p();
    if !rest.depends_only_on_p() {
        return None;
    }
    Some(&partial + &rest.integrate_p())
}

/// `ψ → exp(iC/ħ)·ψ`.
pub fn rigid_phase(psi: &Wavefunction1D, c: f64, hbar: f64) -> Wavefunction1D {
    let u = Complex64::from_polar(1.0, c / hbar);
    Wavefunction1D {
        q: psi.q.clone(),
        values: psi.values.iter().map(|v| v * u).collect(),
        hbar: psi.hbar,
    }
}

/// Exact `dq∧dp` coefficient of `dφ` for the equivalence form: `-2∂_q∂_p f`.
pub fn equivalence_curl(f: &BivariatePolynomial) -> BivariatePolynomial {
    phi_for_equivalence(f).d()
}

/// Converts a rational to `f64` for reporting.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}
