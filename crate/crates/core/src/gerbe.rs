//! U(1) gerbe data on a two-dimensional phase space: the connection 1-form,
//! triple-overlap cocycles from symplectic areas, patchwise B-field
//! transitions, and the (vanishing) curvature 3-form.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::classical::{action_along, shoot_leg, HamiltonianSpec, ShootOptions, Trajectory};
use crate::cover::{entry_seed, enumerate_overlaps, sample_point, CechCover, SampleMode};
use crate::error::{Error, Result};
use crate::forms::{shoelace_area, Grid2D, OneForm, PhasePoint, PhaseSpaceDomain, ScalarField2D};

/// Largest gap between the end of the last leg and the start of the first.
pub const CLOSURE_TOL: f64 = 1e-10;

/// `A = -(i/ħ)λ` on a fixed-time slice, i.e. `A = (i/ħ) p dq`.
pub fn gerbe_connection_a(grid: &Grid2D, h: &HamiltonianSpec) -> OneForm {
    let scale = Complex64::new(0.0, 1.0 / h.hbar);
    let comp_q = ScalarField2D::from_fn(grid, |_, p| scale * p);
    OneForm::new(comp_q, ScalarField2D::zeros(grid)).expect("components share the grid")
}

/// How the legs of a triple loop are realised.
#[derive(Debug, Clone, PartialEq)]
pub enum LoopMode {
    /// Straight triangle `α1 → α2 → α3 → α1`.
    Polygon,
    /// Six fixed-energy legs `α1 → m → α2 → m → α3 → m → α1` between the
    /// q-coordinates of the points.
    Trajectory {
        hamiltonian: HamiltonianSpec,
        energy: f64,
        max_time: f64,
        options: ShootOptions,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Leg {
    Segment { from: PhasePoint, to: PhasePoint },
    Path(Trajectory),
}

impl Leg {
    pub fn start(&self) -> PhasePoint {
        match self {
            Leg::Segment { from, .. } => *from,
            Leg::Path(t) => t.start(),
        }
    }

    pub fn end(&self) -> PhasePoint {
        match self {
            Leg::Segment { to, .. } => *to,
            Leg::Path(t) => t.end(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Loop {
    pub vertices: [PhasePoint; 3],
    pub midpoint: PhasePoint,
    pub legs: Vec<Leg>,
    hamiltonian: Option<HamiltonianSpec>,
}

impl Loop {
    pub fn is_trajectory(&self) -> bool {
        self.hamiltonian.is_some()
    }

    /// Distance between the end of the loop and its start. Trajectory legs
    /// reverse momentum at the turning vertices, so only `q` is compared.
    pub fn closure_gap(&self) -> f64 {
        let (Some(first), Some(last)) = (self.legs.first(), self.legs.last()) else {
            return 0.0;
        };
        let (a, b) = (first.start(), last.end());
        if self.is_trajectory() {
            (a.q - b.q).abs()
        } else {
            a.distance(b)
        }
    }

    /// The straight six-leg path through the midpoint. Every segment is
    /// traversed once in each direction, so it bounds no area.
    pub fn threaded_path(&self) -> Vec<PhasePoint> {
        let [a1, a2, a3] = self.vertices;
        let m = self.midpoint;
        vec![a1, m, a2, m, a3, m, a1]
    }
}

pub fn build_loop(
    domain: &PhaseSpaceDomain,
    vertices: [PhasePoint; 3],
    midpoint: PhasePoint,
    mode: &LoopMode,
) -> Result<Loop> {
    for pt in vertices.iter().chain(std::iter::once(&midpoint)) {
        domain.check(*pt)?;
    }
    match mode {
        LoopMode::Polygon => {
            let legs = (0..3)
                .map(|k| Leg::Segment {
                    from: vertices[k],
                    to: vertices[(k + 1) % 3],
                })
                .collect();
            Ok(Loop {
                vertices,
                midpoint,
                legs,
                hamiltonian: None,
            })
        }
        LoopMode::Trajectory {
            hamiltonian,
            energy,
            max_time,
            options,
        } => {
            let [a1, a2, a3] = vertices;
            let stops = [a1.q, midpoint.q, a2.q, midpoint.q, a3.q, midpoint.q, a1.q];
            let legs = stops
                .windows(2)
                .map(|w| {
                    shoot_leg(hamiltonian, w[0], w[1], *energy, *max_time, options).map(Leg::Path)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Loop {
                vertices,
                midpoint,
                legs,
                hamiltonian: Some(hamiltonian.clone()),
            })
        }
    }
}

/// A unit-modulus cocycle value `g = exp(i·phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CocycleValue {
    pub g: Complex64,
    pub phase: f64,
}

impl CocycleValue {
    pub fn from_phase(phase: f64) -> Self {
        Self {
            g: Complex64::from_polar(1.0, phase),
            phase,
        }
    }

    pub fn inverse(self) -> Self {
        Self {
            g: self.g.conj(),
            phase: -self.phase,
        }
    }
}

/// `g = exp(-(i/ħ)·area)` for the straight triangle through three points.
pub fn polygon_cocycle(a: PhasePoint, b: PhasePoint, c: PhasePoint, hbar: f64) -> CocycleValue {
    CocycleValue::from_phase(-shoelace_area(&[a, b, c]) / hbar)
}

/// Polygon mode: the flat spanning surface of the triangle. Trajectory mode:
/// `phase = -(1/ħ)∮λ = (1/ħ)ΣS_leg` over the shot legs.
pub fn cocycle(lp: &Loop, hbar: f64) -> Result<CocycleValue> {
    let gap = lp.closure_gap();
    if gap > CLOSURE_TOL {
        return Err(Error::OpenLoop(gap));
    }
    match &lp.hamiltonian {
        None => {
            let [a, b, c] = lp.vertices;
            Ok(polygon_cocycle(a, b, c, hbar))
        }
        Some(h) => {
            let total: f64 = lp
                .legs
                .iter()
                .map(|leg| match leg {
                    Leg::Path(t) => action_along(h, t),
                    Leg::Segment { .. } => 0.0,
                })
                .sum();
            Ok(CocycleValue::from_phase(total / hbar))
        }
    }
}

/// Parity of the permutation sorting `t`, and the sorted tuple.
fn sort_with_parity(t: [usize; 3]) -> ([usize; 3], bool) {
    let mut s = t;
    let mut odd = false;
    for i in 0..3 {
        for j in 0..2 - i {
            if s[j] > s[j + 1] {
                s.swap(j, j + 1);
                odd = !odd;
            }
        }
    }
    (s, odd)
}

/// Cocycle of an ordered triple of patches: the value is computed on the
/// sorted tuple and inverted for odd orderings.
pub fn oriented_cocycle(points: &[PhasePoint], tuple: [usize; 3], hbar: f64) -> CocycleValue {
    let (s, odd) = sort_with_parity(tuple);
    let g = polygon_cocycle(points[s[0]], points[s[1]], points[s[2]], hbar);
    if odd {
        g.inverse()
    } else {
        g
    }
}

/// `|g234·g134⁻¹·g124·g123⁻¹ − 1|` for four points.
pub fn quadruple_deviation(pts: [PhasePoint; 4], hbar: f64) -> f64 {
    let g = |a: usize, b: usize, c: usize| polygon_cocycle(pts[a], pts[b], pts[c], hbar).g;
    let prod = g(1, 2, 3) * g(0, 2, 3).conj() * g(0, 1, 3) * g(0, 1, 2).conj();
    (prod - 1.0).norm()
}

/// How each patch picks the point used as its triangle vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PointRule {
    Center,
    Seeded(u64),
}

/// One representative point per patch, drawn inside the patch.
pub fn patch_points(cover: &CechCover, rule: PointRule) -> Result<Vec<PhasePoint>> {
    cover
        .patches
        .iter()
        .map(|patch| {
            let mode = match rule {
                PointRule::Center => SampleMode::Center,
                PointRule::Seeded(seed) => SampleMode::Seeded(entry_seed(seed, patch.index)),
            };
            sample_point(&patch.rect, mode)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CocycleCheck {
    pub quadruples: usize,
    pub max_deviation: f64,
}

/// Čech condition over every quadruple overlap of the cover, polygon mode.
pub fn verify_cocycle_condition(
    cover: &CechCover,
    rule: PointRule,
    hbar: f64,
) -> Result<CocycleCheck> {
    let quads = enumerate_overlaps(cover, 4)?;
    if quads.is_empty() {
        return Err(Error::NoOverlaps(4));
    }
    let pts = patch_points(cover, rule)?;
    let max_deviation = quads
        .entries
        .par_iter()
        .map(|(t, _)| quadruple_deviation([pts[t[0]], pts[t[1]], pts[t[2]], pts[t[3]]], hbar))
        .reduce(|| 0.0, f64::max);
    Ok(CocycleCheck {
        quadruples: quads.len(),
        max_deviation,
    })
}

/// One row of a triple-overlap cocycle table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TripleEntry {
    pub indices: [usize; 3],
    /// Point of the triple overlap used as the loop midpoint.
    pub point: PhasePoint,
    pub phase: f64,
    pub g_re: f64,
    pub g_im: f64,
}

/// Cocycle values on all triple overlaps. Vertices are the patch points;
/// the midpoint is sampled inside the triple overlap.
pub fn triple_table(
    cover: &CechCover,
    rule: PointRule,
    mode: &LoopMode,
) -> Result<Vec<TripleEntry>> {
    let hbar = cover.domain.hbar;
    let pts = patch_points(cover, rule)?;
    let triples = enumerate_overlaps(cover, 3)?;
    triples
        .entries
        .par_iter()
        .enumerate()
        .map(|(k, (t, rect))| {
            let sm = match rule {
                PointRule::Center => SampleMode::Center,
                PointRule::Seeded(seed) => SampleMode::Seeded(entry_seed(seed ^ 0xA5A5, k)),
            };
            let m = sample_point(rect, sm)?;
            let lp = build_loop(&cover.domain, [pts[t[0]], pts[t[1]], pts[t[2]]], m, mode)?;
            let g = cocycle(&lp, hbar)?;
            Ok(TripleEntry {
                indices: [t[0], t[1], t[2]],
                point: m,
                phase: g.phase,
                g_re: g.g.re,
                g_im: g.g.im,
            })
        })
        .collect()
}

/// Patchwise constant B-field coefficients of `dq∧dp`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BField {
    pub hbar: f64,
    pub coeffs: Vec<Complex64>,
    pub tree_edges: Vec<(usize, usize)>,
    /// `|(b_hi − b_lo) − (−i/ħ)|` for every overlapping pair `lo < hi`.
    pub residuals: Vec<((usize, usize), f64)>,
    pub max_residual: f64,
}

/// Sets `b = 0` on patch 0 and propagates `b_hi − b_lo = −i/ħ` along a
/// breadth-first spanning tree of the overlap graph, then measures the rule
/// on every overlap, tree or not.
pub fn b_field_transitions(cover: &CechCover, hbar: f64) -> Result<BField> {
    let n = cover.len();
    let pairs = enumerate_overlaps(cover, 2)?;
    let mut adj = vec![Vec::new(); n];
    for t in pairs.tuples() {
        adj[t[0]].push(t[1]);
        adj[t[1]].push(t[0]);
    }
    let step = Complex64::new(0.0, -1.0 / hbar);
    let mut coeffs: Vec<Option<Complex64>> = vec![None; n];
    let mut tree_edges = Vec::new();
    coeffs[0] = Some(Complex64::new(0.0, 0.0));
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        let bu = coeffs[u].expect("queued patches are assigned");
        for &v in &adj[u] {
            if coeffs[v].is_none() {
                coeffs[v] = Some(if v > u { bu + step } else { bu - step });
                tree_edges.push((u, v));
                queue.push_back(v);
            }
        }
    }
    let coeffs: Vec<Complex64> = coeffs
        .into_iter()
        .collect::<Option<Vec<_>>>()
        .ok_or(Error::DisconnectedCover)?;
    let residuals: Vec<((usize, usize), f64)> = pairs
        .tuples()
        .map(|t| ((t[0], t[1]), (coeffs[t[1]] - coeffs[t[0]] - step).norm()))
        .collect();
    let max_residual = residuals.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(BField {
        hbar,
        coeffs,
        tree_edges,
        residuals,
        max_residual,
    })
}

/// Certificate that the curvature 3-form `H = dB` vanishes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThreeFormCertificate {
    pub dimension: usize,
    pub independent_components: usize,
    pub value: f64,
    pub note: String,
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// On a two-dimensional phase space a 3-form has `C(2, 3) = 0` independent
/// components, so `H = dB` is zero for any B.
pub fn three_form_h(_b: &BField) -> ThreeFormCertificate {
    let dimension = 2;
    let independent_components = binomial(dimension, 3);
    assert_eq!(independent_components, 0);
    ThreeFormCertificate {
        dimension,
        independent_components,
        value: 0.0,
        note: "H ≡ 0 since dim ℙ = 2".into(),
    }
}
