//! Configuration-space quantum mechanics: finite-difference eigenstates,
//! harmonic-oscillator reference states, WKB wavefunctions and
//! Bohr–Sommerfeld state counting.

use num_complex::Complex64;
use serde::Serialize;

use crate::classical::{closed_orbit_area, turning_points, HamiltonianSpec};
use crate::error::{Error, Result};
use crate::quad::{adaptive_simpson, bisect};
use crate::tridiag::SymTridiagonal;

/// Largest number of eigenpairs [`solve_eigen`] returns.
pub const MAX_STATES: usize = 20;
pub const MIN_EIGEN_NODES: usize = 64;

/// Samples of `ψ(q)` on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Wavefunction1D {
    pub q: Vec<f64>,
    pub values: Vec<Complex64>,
    pub hbar: f64,
}

pub fn uniform_grid(q_min: f64, q_max: f64, n: usize) -> Vec<f64> {
    let h = (q_max - q_min) / (n - 1) as f64;
    (0..n)
        .map(|i| {
            if i + 1 == n {
                q_max
            } else {
                q_min + i as f64 * h
            }
        })
        .collect()
}

impl Wavefunction1D {
    pub fn new(q: Vec<f64>, values: Vec<Complex64>, hbar: f64) -> Result<Self> {
        if q.len() != values.len() {
            return Err(Error::GridMismatch(format!(
                "{} grid points but {} values",
                q.len(),
                values.len()
            )));
        }
        if q.len() < 2 {
            return Err(Error::InvalidGrid(
                "a wavefunction needs at least 2 points".into(),
            ));
        }
        Ok(Self { q, values, hbar })
    }

    pub fn from_real_fn<F: Fn(f64) -> f64>(q: Vec<f64>, hbar: f64, f: F) -> Self {
        let values = q.iter().map(|&x| Complex64::new(f(x), 0.0)).collect();
        Self { q, values, hbar }
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn dq(&self) -> f64 {
        (self.q[self.q.len() - 1] - self.q[0]) / (self.q.len() - 1) as f64
    }

    /// `Σ|ψ|²·dq`.
    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.dq()
    }

    pub fn normalized(&self) -> Self {
        let s = 1.0 / self.norm_sq().sqrt();
        Self {
            q: self.q.clone(),
            values: self.values.iter().map(|v| v * s).collect(),
            hbar: self.hbar,
        }
    }

    /// `Σ conj(ψ)·φ·dq`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * self.dq()
    }

    /// Linear interpolation; zero outside the grid.
    pub fn interpolate(&self, x: f64) -> Complex64 {
        let n = self.q.len();
        let (a, b) = (self.q[0], self.q[n - 1]);
        if x < a || x > b {
            return Complex64::new(0.0, 0.0);
        }
        let t = (x - a) / self.dq();
        let i = (t.floor() as usize).min(n - 2);
        let s = t - i as f64;
        self.values[i] * (1.0 - s) + self.values[i + 1] * s
    }

    /// Sign changes of the real part, ignoring samples below `rel·max|ψ|`.
    pub fn sign_changes(&self, rel: f64) -> usize {
        let max = self.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let mut last = 0.0f64;
        let mut count = 0;
        for v in &self.values {
            if v.re.abs() <= rel * max {
                continue;
            }
            if last != 0.0 && (v.re > 0.0) != (last > 0.0) {
                count += 1;
            }
            last = v.re;
        }
        count
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenSolution {
    pub energies: Vec<f64>,
    pub states: Vec<Wavefunction1D>,
}

fn fd_hamiltonian(h: &HamiltonianSpec, q: &[f64]) -> SymTridiagonal {
    let n = q.len();
    let dq = (q[n - 1] - q[0]) / (n - 1) as f64;
    let kin = h.hbar * h.hbar / (2.0 * h.mass * dq * dq);
    let d = q[1..n - 1].iter().map(|&x| 2.0 * kin + h.v(x)).collect();
    let e = vec![-kin; n - 3];
    SymTridiagonal::new(d, e)
}

fn check_eigen_grid(q_range: (f64, f64), n: usize) -> Result<()> {
    if !q_range.0.is_finite() || !q_range.1.is_finite() || q_range.0 >= q_range.1 {
        return Err(Error::InvalidGrid(format!(
            "q range ({}, {}) is empty",
            q_range.0, q_range.1
        )));
    }
    if n < MIN_EIGEN_NODES {
        return Err(Error::GridTooSmall {
            needed: MIN_EIGEN_NODES,
            got: n,
        });
    }
    Ok(())
}

/// Lowest `k` eigenpairs of `−ħ²/2m·D² + V` with second-order differences
/// and Dirichlet walls at both ends of `q_range`. The grid has `n` points
/// including the walls; states are normalized and the first significant
/// lobe of each is positive.
pub fn solve_eigen(
    h: &HamiltonianSpec,
    q_range: (f64, f64),
    n: usize,
    k: usize,
) -> Result<EigenSolution> {
    check_eigen_grid(q_range, n)?;
    if k > n - 2 {
        return Err(Error::InvalidGrid(format!(
            "k = {k} exceeds the {} interior nodes",
            n - 2
        )));
    }
    if k > MAX_STATES {
        return Err(Error::InvalidGrid(format!(
            "k = {k} exceeds the limit of {MAX_STATES} states"
        )));
    }
    if !h.is_confining() {
        log::warn!("potential is not confining; eigenstates are set by the box walls");
    }
    let q = uniform_grid(q_range.0, q_range.1, n);
    let t = fd_hamiltonian(h, &q);
    let mut energies = Vec::with_capacity(k);
    let mut vecs: Vec<Vec<f64>> = Vec::with_capacity(k);
    for j in 0..k {
        let lam = t.eigenvalue(j);
        if let Some(&prev) = energies.last() {
            if lam <= prev {
                return Err(Error::Eigen(format!(
                    "eigenvalues {j} and {} coincide",
                    j - 1
                )));
            }
        }
        let v = t.eigenvector(lam, &vecs);
        energies.push(lam);
        vecs.push(v);
    }
    let dq = (q_range.1 - q_range.0) / (n - 1) as f64;
    let states = vecs
        .iter()
        .map(|v| {
            let max = v.iter().map(|x| x.abs()).fold(0.0, f64::max);
            let first = v
                .iter()
                .find(|x| x.abs() > 1e-3 * max)
                .copied()
                .unwrap_or(1.0);
            let s = first.signum() / dq.sqrt();
            let mut values = Vec::with_capacity(n);
            values.push(Complex64::new(0.0, 0.0));
            values.extend(v.iter().map(|x| Complex64::new(s * x, 0.0)));
            values.push(Complex64::new(0.0, 0.0));
            Wavefunction1D {
                q: q.clone(),
                values,
                hbar: h.hbar,
            }
        })
        .collect();
    Ok(EigenSolution { energies, states })
}

/// Number of eigenvalues of the finite-difference Hamiltonian at or below
/// `energy`, by Sturm count.
pub fn eigen_count_below(
    h: &HamiltonianSpec,
    q_range: (f64, f64),
    n: usize,
    energy: f64,
) -> Result<usize> {
    check_eigen_grid(q_range, n)?;
    let q = uniform_grid(q_range.0, q_range.1, n);
    let t = fd_hamiltonian(h, &q);
    Ok(t.count_below(energy.next_up()))
}

/// Normalized oscillator eigenfunction `ψ_n(q)` for `V = ½mω²q²`, by the
/// stable Hermite-function recurrence.
pub fn harmonic_eigenfunction(n: usize, mass: f64, omega: f64, hbar: f64, q: f64) -> f64 {
    let alpha = mass * omega / hbar;
    let x = alpha.sqrt() * q;
    let mut prev = 0.0;
    let mut cur = (alpha / std::f64::consts::PI).powf(0.25) * (-0.5 * x * x).exp();
    for k in 0..n {
        let next =
            (2.0 / (k + 1) as f64).sqrt() * x * cur - (k as f64 / (k + 1) as f64).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

pub fn harmonic_eigenstate(
    n: usize,
    mass: f64,
    omega: f64,
    hbar: f64,
    q: Vec<f64>,
) -> Wavefunction1D {
    Wavefunction1D::from_real_fn(q, hbar, |x| harmonic_eigenfunction(n, mass, omega, hbar, x))
}

/// WKB wavefunction with the nodes where it is defined.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WkbWavefunction {
    pub wave: Wavefunction1D,
    /// True where `E > V` by more than a relative 1e-12; turning points and forbidden nodes are
    /// false and carry zero.
    pub mask: Vec<bool>,
    pub action: Vec<f64>,
}

/// `ψ = R·exp(iS/ħ)` with `R = (2m(E − V))^{-1/4}` and `S` integrated from
/// the left end of each allowed stretch: the turning point when one lies
/// inside the grid, otherwise the first grid node.
pub fn wkb_wavefunction(h: &HamiltonianSpec, energy: f64, q: &[f64]) -> Result<WkbWavefunction> {
    let n = q.len();
    let kinetic = |x: f64| energy - h.v(x);
    let momentum = |x: f64| (2.0 * h.mass * kinetic(x).max(0.0)).sqrt();
    let floor = 1e-12 * energy.abs().max(1.0);
    let mask: Vec<bool> = q.iter().map(|&x| kinetic(x) > floor).collect();
    if !mask.iter().any(|&m| m) {
        return Err(Error::NoAllowedRegion(energy));
    }
    let mut action = vec![0.0; n];
    let mut values = vec![Complex64::new(0.0, 0.0); n];
    let mut i = 0;
    while i < n {
        if !mask[i] {
            i += 1;
            continue;
        }
        // allowed stretch starting at node i
        let start = if i == 0 {
            q[0]
        } else {
            bisect(kinetic, q[i - 1], q[i], 1e-15 * (1.0 + q[i].abs()))
        };
        let tol = 1e-13;
        // t² substitution removes the square-root edge at a turning point
        let first = if i == 0 {
            0.0
        } else {
            let span = (q[i] - start).max(0.0).sqrt();
            adaptive_simpson(|t| momentum(start + t * t) * 2.0 * t, 0.0, span, tol)
        };
        let mut s = first;
        let mut j = i;
        while j < n && mask[j] {
            if j > i {
                s += adaptive_simpson(momentum, q[j - 1], q[j], tol);
            }
            action[j] = s;
            let r = momentum(q[j]).powf(-0.5);
            values[j] = Complex64::from_polar(r, s / h.hbar);
            j += 1;
        }
        i = j;
    }
    Ok(WkbWavefunction {
        wave: Wavefunction1D {
            q: q.to_vec(),
            values,
            hbar: h.hbar,
        },
        mask,
        action,
    })
}

/// Semiclassical count of states with energy at most `E`:
/// `⌊area/(2πħ) − ½⌋ + 1`, never negative.
pub fn bohr_sommerfeld_count(h: &HamiltonianSpec, energy: f64) -> Result<usize> {
    let area = closed_orbit_area(h, energy)?;
    let x = (area / (2.0 * std::f64::consts::PI * h.hbar) - 0.5).floor() + 1.0;
    Ok(x.max(0.0) as usize)
}

/// Result of comparing an eigenstate's oscillation-averaged density with
/// the WKB density `R²`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WkbComparison {
    pub turning_points: (f64, f64),
    pub region: (f64, f64),
    pub points: usize,
    pub max_rel_error: f64,
}

/// Compares `|ψ|²` with the WKB density on the central `interior` fraction
/// of the allowed region. `|ψ|²/R²` is averaged over one period `πħ` of the
/// action, which removes the standing-wave oscillation; both densities are
/// normalized over the region before the pointwise relative error is taken.
pub fn compare_wkb_density(
    h: &HamiltonianSpec,
    energy: f64,
    state: &Wavefunction1D,
    interior: f64,
) -> Result<WkbComparison> {
    if !(interior > 0.0 && interior < 1.0) {
        return Err(Error::InvalidGrid(format!(
            "interior fraction must lie in (0, 1), got {interior}"
        )));
    }
    let (ql, qr) = turning_points(h, energy, 1e-12)?;
    let width = qr - ql;
    let cut = 0.5 * (1.0 - interior) * width;
    let (a, b) = (ql + cut, qr - cut);
    let wkb = wkb_wavefunction(h, energy, &state.q)?;
    let q = &state.q;
    let p2: Vec<f64> = q
        .iter()
        .map(|&x| 2.0 * h.mass * (energy - h.v(x)).max(0.0))
        .collect();
    // |ψ|² p² = |ψ|²/R² · dS/dq
    let weight: Vec<f64> = state
        .values
        .iter()
        .zip(&p2)
        .map(|(v, p2)| v.norm_sqr() * p2)
        .collect();
    let dq = state.dq();
    let half = 0.5 * std::f64::consts::PI * state.hbar;
    let s = &wkb.action;
    let nodes: Vec<usize> = (0..q.len()).filter(|&i| q[i] >= a && q[i] <= b).collect();
    if nodes.len() < 3 {
        return Err(Error::InvalidGrid(
            "comparison region holds fewer than 3 nodes".into(),
        ));
    }
    let pos_of = |target: f64, from: usize, dir: isize| -> Result<f64> {
        let mut j = from as isize;
        loop {
            let k = j + dir;
            if k < 0 || k as usize >= q.len() || !wkb.mask[k as usize] {
                return Err(Error::InvalidGrid(
                    "averaging window leaves the allowed region".into(),
                ));
            }
            let (s0, s1) = (s[j as usize], s[k as usize]);
            if (target - s0) * (target - s1) <= 0.0 {
                let t = (target - s0) / (s1 - s0);
                return Ok(q[j as usize] + t * (q[k as usize] - q[j as usize]));
            }
            j = k;
        }
    };
    let weight_at = |x: f64| {
        let t = (x - q[0]) / dq;
        let i = (t.floor() as usize).min(q.len() - 2);
        let f = t - i as f64;
        weight[i] * (1.0 - f) + weight[i + 1] * f
    };
    let integrate = |x0: f64, x1: f64| {
        // trapezoid over the grid nodes inside (x0, x1) plus partial ends
        let mut xs = vec![x0];
        let i0 = ((x0 - q[0]) / dq).floor() as usize + 1;
        let i1 = ((x1 - q[0]) / dq).ceil() as usize;
        xs.extend((i0..i1).map(|i| q[i]).filter(|&x| x > x0 && x < x1));
        xs.push(x1);
        xs.windows(2)
            .map(|w| 0.5 * (weight_at(w[0]) + weight_at(w[1])) * (w[1] - w[0]))
            .sum::<f64>()
    };
    let mut num = Vec::with_capacity(nodes.len());
    let mut wkb_rho = Vec::with_capacity(nodes.len());
    for &i in &nodes {
        let lo = pos_of(s[i] - half, i, -1)?;
        let hi = pos_of(s[i] + half, i, 1)?;
        let avg_ratio = integrate(lo, hi) / (2.0 * half);
        let r2 = 1.0 / p2[i].sqrt();
        num.push(avg_ratio * r2);
        wkb_rho.push(r2);
    }
    let norm = |v: &[f64]| v.windows(2).map(|w| 0.5 * (w[0] + w[1]) * dq).sum::<f64>();
    let (nn, nw) = (norm(&num), norm(&wkb_rho));
    let max_rel_error = num
        .iter()
        .zip(&wkb_rho)
        .map(|(x, y)| ((x / nn) / (y / nw) - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(WkbComparison {
        turning_points: (ql, qr),
        region: (a, b),
        points: nodes.len(),
        max_rel_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn ho() -> HamiltonianSpec {
        HamiltonianSpec::harmonic(1.0, 1.0, 1.0)
    }

    #[test]
    fn harmonic_spectrum() {
        let sol = solve_eigen(&ho(), (-10.0, 10.0), 2000, 6).unwrap();
        for (n, e) in sol.energies.iter().enumerate() {
            let exact = n as f64 + 0.5;
            assert!(((e - exact) / exact).abs() < 1e-3, "n = {n}: {e}");
        }
    }

    #[test]
    fn ground_state_is_gaussian() {
        let sol = solve_eigen(&ho(), (-10.0, 10.0), 2000, 1).unwrap();
        let psi = &sol.states[0];
        let err = psi
            .q
            .iter()
            .zip(&psi.values)
            .map(|(&x, v)| (v.re - (-0.5 * x * x).exp() / PI.powf(0.25)).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-4, "max error {err}");
    }

    #[test]
    fn orthonormal_and_nodes() {
        let sol = solve_eigen(&ho(), (-10.0, 10.0), 2000, 11).unwrap();
        for (i, a) in sol.states.iter().enumerate() {
            assert!((a.norm_sq() - 1.0).abs() < 1e-8);
            assert_eq!(a.sign_changes(1e-8), i, "state {i}");
            for b in &sol.states[..i] {
                assert!(a.inner(b).norm() < 1e-8);
            }
        }
        for w in sol.energies.windows(2) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn constant_shift() {
        let shifted = HamiltonianSpec::new(1.0, vec![3.25, 0.0, 0.5], 1.0).unwrap();
        let a = solve_eigen(&ho(), (-8.0, 8.0), 400, 4).unwrap();
        let b = solve_eigen(&shifted, (-8.0, 8.0), 400, 4).unwrap();
        for (x, y) in a.energies.iter().zip(&b.energies) {
            assert!((y - x - 3.25).abs() < 1e-10);
        }
        for (s, t) in a.states.iter().zip(&b.states) {
            let d = s
                .values
                .iter()
                .zip(&t.values)
                .map(|(u, v)| (u - v).norm())
                .fold(0.0, f64::max);
            assert!(d < 1e-8);
        }
    }

    #[test]
    fn eigen_preconditions() {
        assert!(matches!(
            solve_eigen(&ho(), (-5.0, 5.0), 32, 1),
            Err(Error::GridTooSmall { .. })
        ));
        assert!(solve_eigen(&ho(), (-5.0, 5.0), 64, 63).is_err());
        assert!(solve_eigen(&ho(), (5.0, -5.0), 64, 1).is_err());
        assert_eq!(
            solve_eigen(&ho(), (-5.0, 5.0), 64, 0)
                .unwrap()
                .energies
                .len(),
            0
        );
    }

    #[test]
    fn second_order_convergence() {
        let errs: Vec<f64> = [500, 1000, 2000, 4000]
            .iter()
            .map(|&n| (solve_eigen(&ho(), (-10.0, 10.0), n, 1).unwrap().energies[0] - 0.5).abs())
            .collect();
        for w in errs.windows(2) {
            let rate = (w[0] / w[1]).log2();
            assert!((rate - 2.0).abs() < 0.2, "rate {rate}");
        }
    }

    #[test]
    fn hermite_functions_are_orthonormal() {
        let q = uniform_grid(-12.0, 12.0, 4001);
        let states: Vec<_> = (0..8)
            .map(|n| harmonic_eigenstate(n, 1.0, 1.0, 1.0, q.clone()))
            .collect();
        for (i, a) in states.iter().enumerate() {
            for (j, b) in states.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((a.inner(b).re - expect).abs() < 1e-10);
            }
        }
        // ψ1 = √2 q ψ0
        let x = 0.7;
        assert!(
            (harmonic_eigenfunction(1, 1.0, 1.0, 1.0, x)
                - 2f64.sqrt() * x * harmonic_eigenfunction(0, 1.0, 1.0, 1.0, x))
            .abs()
                < 1e-15
        );
    }

    #[test]
    fn wkb_free_particle_is_plane_wave() {
        let h = HamiltonianSpec::free(1.0, 1.0);
        let q = uniform_grid(-3.0, 3.0, 61);
        let w = wkb_wavefunction(&h, 0.5, &q).unwrap();
        assert!(w.mask.iter().all(|&m| m));
        let c = w.wave.values[0] / Complex64::from_polar(1.0, q[0]);
        for (x, v) in q.iter().zip(&w.wave.values) {
            assert!((v - c * Complex64::from_polar(1.0, *x)).norm() < 1e-10);
        }
    }

    #[test]
    fn wkb_masks_turning_points_and_forbidden_region() {
        // turning points of the oscillator at E = 0.5 are ±1, which are nodes
        let q = uniform_grid(-2.0, 2.0, 41);
        let w = wkb_wavefunction(&ho(), 0.5, &q).unwrap();
        for (x, (&m, v)) in q.iter().zip(w.mask.iter().zip(&w.wave.values)) {
            let inside = x.abs() < 1.0 - 1e-12;
            assert_eq!(m, inside, "q = {x}");
            if !m {
                assert_eq!(*v, Complex64::new(0.0, 0.0));
            }
        }
        // S grows to half the orbit area at the right turning point
        let last = w.mask.iter().rposition(|&m| m).unwrap();
        let s_exact = |x: f64| 0.5 * (x * (1.0 - x * x).sqrt() + x.asin()) + PI / 4.0;
        assert!((w.action[last] - s_exact(q[last])).abs() < 1e-9);
        assert!(matches!(
            wkb_wavefunction(&ho(), -1.0, &q),
            Err(Error::NoAllowedRegion(_))
        ));
    }

    #[test]
    fn wkb_envelope_for_n10() {
        let sol = solve_eigen(&ho(), (-10.0, 10.0), 2000, 11).unwrap();
        let cmp = compare_wkb_density(&ho(), sol.energies[10], &sol.states[10], 0.6).unwrap();
        assert!(cmp.max_rel_error < 0.05, "{cmp:?}");
    }

    #[test]
    fn bohr_sommerfeld() {
        assert_eq!(bohr_sommerfeld_count(&ho(), 5.0).unwrap(), 5);
        assert_eq!(bohr_sommerfeld_count(&ho(), 0.0).unwrap(), 0);
        for n in 0..=10 {
            let e = n as f64 + 0.5 + 1e-6;
            assert_eq!(bohr_sommerfeld_count(&ho(), e).unwrap(), n + 1);
        }
        assert!(bohr_sommerfeld_count(&HamiltonianSpec::free(1.0, 1.0), 1.0).is_err());
    }

    #[test]
    fn bohr_sommerfeld_quartic_against_eigencount() {
        let h = HamiltonianSpec::new(1.0, vec![0.0, 0.0, 0.0, 0.0, 1.0], 1.0).unwrap();
        let bs = bohr_sommerfeld_count(&h, 10.0).unwrap() as i64;
        let exact = eigen_count_below(&h, (-4.0, 4.0), 2000, 10.0).unwrap() as i64;
        assert!((bs - exact).abs() <= 1, "{bs} vs {exact}");
    }
}
