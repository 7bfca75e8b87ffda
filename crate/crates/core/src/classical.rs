//! Classical Hamiltonian flow for `H = p²/2m + V(q)`, fixed-energy shooting
//! between configuration points, and action integrals.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::PhasePoint;
use crate::quad::{adaptive_simpson, bisect};

/// Separable Hamiltonian with a polynomial potential of degree at most 4.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianSpec {
    pub mass: f64,
    /// `V(q) = Σ potential[k] q^k`, trailing zeros trimmed.
    pub potential: Vec<f64>,
    pub hbar: f64,
}

impl HamiltonianSpec {
    pub fn new(mass: f64, potential: Vec<f64>, hbar: f64) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::InvalidHamiltonian(format!(
                "mass must be positive, got {mass}"
            )));
        }
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::InvalidHamiltonian(format!(
                "hbar must be positive, got {hbar}"
            )));
        }
        if potential.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidHamiltonian(
                "non-finite potential coefficient".into(),
            ));
        }
        let mut potential = potential;
        while potential.last() == Some(&0.0) {
            potential.pop();
        }
        if potential.len() > 5 {
            return Err(Error::UnsupportedDegree(potential.len() - 1));
        }
        Ok(Self {
            mass,
            potential,
            hbar,
        })
    }

    /// `V = ½ m ω² q²`.
    pub fn harmonic(mass: f64, omega: f64, hbar: f64) -> Self {
        Self::new(mass, vec![0.0, 0.0, 0.5 * mass * omega * omega], hbar)
            .expect("harmonic parameters must be positive and finite")
    }

    pub fn free(mass: f64, hbar: f64) -> Self {
        Self::new(mass, vec![], hbar).expect("mass and hbar must be positive")
    }

    pub fn degree(&self) -> usize {
        self.potential.len().saturating_sub(1)
    }

    pub fn v(&self, q: f64) -> f64 {
        self.potential.iter().rev().fold(0.0, |acc, &c| acc * q + c)
    }

    pub fn dv(&self, q: f64) -> f64 {
        self.potential
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (k, &c)| acc * q + k as f64 * c)
    }

    pub fn energy(&self, pt: PhasePoint) -> f64 {
        pt.p * pt.p / (2.0 * self.mass) + self.v(pt.q)
    }

    /// Even degree with positive leading coefficient.
    pub fn is_confining(&self) -> bool {
        let d = self.degree();
        d >= 2 && d.is_multiple_of(2) && self.potential[d] > 0.0
    }

    /// Angular frequency when `V = v0 + ½ m ω² q²` exactly.
    pub fn harmonic_frequency(&self) -> Option<f64> {
        match self.potential.as_slice() {
            [_, 0.0, v2] if *v2 > 0.0 => Some((2.0 * v2 / self.mass).sqrt()),
            _ => None,
        }
    }

    fn potential_derivative_coeffs(&self) -> Vec<f64> {
        self.potential
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| k as f64 * c)
            .collect()
    }
}

/// Time-stamped samples of a phase-space path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<PhasePoint>,
    pub energy: f64,
}

impl Trajectory {
    pub fn start(&self) -> PhasePoint {
        self.points[0]
    }

    pub fn end(&self) -> PhasePoint {
        *self
            .points
            .last()
            .expect("trajectory has at least two points")
    }

    pub fn duration(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0) - self.times[0]
    }

    pub fn max_energy_drift(&self, h: &HamiltonianSpec) -> f64 {
        let e0 = h.energy(self.points[0]);
        self.points
            .iter()
            .map(|&pt| (h.energy(pt) - e0).abs())
            .fold(0.0, f64::max)
    }

    /// Appends `other`, which must start where `self` ends; times are shifted
    /// to continue from the end of `self`.
    pub fn concat(&self, other: &Trajectory) -> Trajectory {
        let shift = self.times.last().copied().unwrap_or(0.0) - other.times[0];
        let mut out = self.clone();
        out.times
            .extend(other.times.iter().skip(1).map(|t| t + shift));
        out.points.extend(other.points.iter().skip(1).copied());
        out
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,q,p")?;
        for (t, pt) in self.times.iter().zip(&self.points) {
            writeln!(w, "{t:.17e},{:.17e},{:.17e}", pt.q, pt.p)?;
        }
        Ok(())
    }
}

/// Step and drift limits for [`hamilton_flow_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowLimits {
    pub max_steps: usize,
    pub drift_tol: f64,
}

impl Default for FlowLimits {
    fn default() -> Self {
        Self {
            max_steps: 20_000_000,
            drift_tol: 1e-6,
        }
    }
}

#[inline]
fn leapfrog_step(h: &HamiltonianSpec, q: f64, p: f64, dt: f64) -> (f64, f64) {
    let p_half = p - 0.5 * dt * h.dv(q);
    let q_new = q + dt * p_half / h.mass;
    let p_new = p_half - 0.5 * dt * h.dv(q_new);
    (q_new, p_new)
}

#[inline]
fn kahan_add(sum: &mut f64, comp: &mut f64, x: f64) {
    let y = x - *comp;
    let t = *sum + y;
    *comp = (t - *sum) - y;
    *sum = t;
}

pub fn hamilton_flow(
    h: &HamiltonianSpec,
    start: PhasePoint,
    duration: f64,
    dt: f64,
) -> Result<Trajectory> {
    hamilton_flow_with(h, start, duration, dt, &FlowLimits::default())
}

/// Störmer–Verlet integration of `q̇ = p/m, ṗ = -V'(q)`. The step is shrunk
/// uniformly so that an integer number of steps spans `duration` exactly.
pub fn hamilton_flow_with(
    h: &HamiltonianSpec,
    start: PhasePoint,
    duration: f64,
    dt: f64,
    limits: &FlowLimits,
) -> Result<Trajectory> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidFlow(format!("dt must be positive, got {dt}")));
    }
    if !(duration >= 0.0 && duration.is_finite()) {
        return Err(Error::InvalidFlow(format!(
            "duration must be non-negative, got {duration}"
        )));
    }
    let raw = (duration / dt * (1.0 - 1e-12)).ceil();
    if raw > limits.max_steps as f64 {
        return Err(Error::StepLimit {
            needed: raw as usize,
            limit: limits.max_steps,
        });
    }
    let steps = (raw as usize).max(1);
    let step = duration / steps as f64;
    let mut times = Vec::with_capacity(steps + 1);
    let mut points = Vec::with_capacity(steps + 1);
    // compensated sums keep long runs reversible and V = 0 flow exact
    let (mut q, mut p) = (start.q, start.p);
    let (mut cq, mut cp) = (0.0, 0.0);
    times.push(0.0);
    points.push(start);
    for k in 1..=steps {
        kahan_add(&mut p, &mut cp, -0.5 * step * h.dv(q));
        kahan_add(&mut q, &mut cq, step * p / h.mass);
        kahan_add(&mut p, &mut cp, -0.5 * step * h.dv(q));
        times.push(if k == steps {
            duration
        } else {
            k as f64 * step
        });
        points.push(PhasePoint::new(q, p));
    }
    let traj = Trajectory {
        times,
        points,
        energy: h.energy(start),
    };
    check_drift(h, &traj, limits.drift_tol)?;
    Ok(traj)
}

fn check_drift(h: &HamiltonianSpec, traj: &Trajectory, tol: f64) -> Result<()> {
    let drift = traj.max_energy_drift(h);
    if drift > tol {
        return Err(Error::EnergyDrift { drift, tol });
    }
    Ok(())
}

/// Settings for [`shoot_leg`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootOptions {
    pub dt: f64,
    pub arrival_tol: f64,
    pub drift_tol: f64,
    pub max_steps: usize,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self {
            dt: 2e-5,
            arrival_tol: 1e-8,
            drift_tol: 1e-6,
            max_steps: 20_000_000,
        }
    }
}

/// Fixed-energy leg from `q_a` to `q_b`: the momentum at `q_a` has magnitude
/// `√(2m(E − V(q_a)))` and points toward `q_b`; the flow runs until `q`
/// first crosses `q_b`, and the last step is cut by bisection so the leg
/// ends at `q_b` within `arrival_tol`.
pub fn shoot_leg(
    h: &HamiltonianSpec,
    q_a: f64,
    q_b: f64,
    energy: f64,
    max_time: f64,
    opts: &ShootOptions,
) -> Result<Trajectory> {
    let kinetic = energy - h.v(q_a);
    if kinetic < 0.0 {
        return Err(Error::Shooting(format!(
            "start q = {q_a} is classically forbidden at energy {energy}"
        )));
    }
    let speed = (2.0 * h.mass * kinetic).sqrt();
    let dir = if q_b >= q_a { 1.0 } else { -1.0 };
    let start = PhasePoint::new(q_a, dir * speed);
    if q_a == q_b {
        return Ok(Trajectory {
            times: vec![0.0, 0.0],
            points: vec![start, start],
            energy,
        });
    }
    let max_steps = ((max_time / opts.dt).ceil() as usize).min(opts.max_steps);
    let mut times = vec![0.0];
    let mut points = vec![start];
    let (mut q, mut p) = (start.q, start.p);
    let side = |x: f64| (x - q_b) * dir < 0.0;
    for k in 0..max_steps {
        let (qn, pn) = leapfrog_step(h, q, p, opts.dt);
        if !side(qn) {
            // arrival inside this step: bisect the step length
            let offset = |tau: f64| leapfrog_step(h, q, p, tau).0 - q_b;
            let mut lo = 0.0;
            let mut hi = opts.dt;
            let mut tau = hi;
            for _ in 0..200 {
                tau = 0.5 * (lo + hi);
                let g = offset(tau);
                if g.abs() <= 1e-3 * opts.arrival_tol || hi - lo < 1e-18 {
                    break;
                }
                if (g * dir) < 0.0 {
                    lo = tau;
                } else {
                    hi = tau;
                }
            }
            let (qf, pf) = leapfrog_step(h, q, p, tau);
            if (qf - q_b).abs() > opts.arrival_tol {
                return Err(Error::Shooting(format!(
                    "arrival offset {:e} above tolerance",
                    (qf - q_b).abs()
                )));
            }
            times.push(k as f64 * opts.dt + tau);
            points.push(PhasePoint::new(qf, pf));
            let traj = Trajectory {
                times,
                points,
                energy,
            };
            check_drift(h, &traj, opts.drift_tol)?;
            return Ok(traj);
        }
        q = qn;
        p = pn;
        times.push((k + 1) as f64 * opts.dt);
        points.push(PhasePoint::new(q, p));
    }
    Err(Error::Shooting(format!(
        "no arrival at q = {q_b} from q = {q_a} within time {max_time} at energy {energy}"
    )))
}

/// `S = -∫λ = ∫p dq − ∫H dt`, trapezoid over the stored samples. On an
/// energy-conserving trajectory the second term is `E·T` up to the drift.
pub fn action_along(h: &HamiltonianSpec, traj: &Trajectory) -> f64 {
    traj.points
        .windows(2)
        .zip(traj.times.windows(2))
        .map(|(w, t)| {
            let p_dq = 0.5 * (w[0].p + w[1].p) * (w[1].q - w[0].q);
            let h_dt = 0.5 * (h.energy(w[0]) + h.energy(w[1])) * (t[1] - t[0]);
            p_dq - h_dt
        })
        .sum()
}

/// Real roots of `Σ c[k] x^k`, ascending. Works by splitting the line at the
/// roots of the derivative, so each piece is monotone and bisection applies.
pub(crate) fn real_roots(coeffs: &[f64]) -> Vec<f64> {
    let mut c = coeffs.to_vec();
    while c.last() == Some(&0.0) {
        c.pop();
    }
    match c.len() {
        0 | 1 => return vec![],
        2 => return vec![-c[0] / c[1]],
        _ => {}
    }
    let eval = |x: f64| c.iter().rev().fold(0.0, |acc, &a| acc * x + a);
    let lead = *c.last().unwrap();
    let bound = 1.0
        + c[..c.len() - 1]
            .iter()
            .map(|a| (a / lead).abs())
            .fold(0.0, f64::max);
    let deriv: Vec<f64> = c
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, a)| k as f64 * a)
        .collect();
    let mut knots = vec![-bound];
    knots.extend(real_roots(&deriv).into_iter().filter(|x| x.abs() < bound));
    knots.push(bound);
    let scale = c.iter().map(|a| a.abs()).fold(0.0, f64::max);
    let mut roots: Vec<f64> = Vec::new();
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (fa, fb) = (eval(a), eval(b));
        if fa == 0.0 {
            roots.push(a);
        } else if (fa > 0.0) != (fb > 0.0) && fb != 0.0 {
            roots.push(bisect(eval, a, b, 1e-15 * (1.0 + a.abs().max(b.abs()))));
        }
    }
    if eval(bound) == 0.0 {
        roots.push(bound);
    }
    // touching roots at critical points
    for &k in &knots[1..knots.len() - 1] {
        if eval(k).abs() <= 1e-13 * scale * (1.0 + k.abs()).powi(c.len() as i32 - 1)
            && !roots.iter().any(|r| (r - k).abs() < 1e-9 * (1.0 + k.abs()))
        {
            roots.push(k);
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-12 * (1.0 + a.abs()));
    roots
}

/// Location and value of the lowest local minimum of `V`.
pub fn potential_minimum(h: &HamiltonianSpec) -> Option<(f64, f64)> {
    let crit = real_roots(&h.potential_derivative_coeffs());
    crit.into_iter()
        .filter(|&x| {
            let eps = 1e-6 * (1.0 + x.abs());
            h.v(x - eps) >= h.v(x) && h.v(x + eps) >= h.v(x)
        })
        .map(|x| (x, h.v(x)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
}

/// Turning points `(q_L, q_R)` of the bounded orbit at energy `E` around the
/// lowest minimum of `V`, located by bisection to `tol`.
pub fn turning_points(h: &HamiltonianSpec, energy: f64, tol: f64) -> Result<(f64, f64)> {
    let (q0, v0) = potential_minimum(h).ok_or(Error::Unbounded(energy))?;
    if (energy - v0).abs() <= 1e-12 * (1.0 + v0.abs()) {
        return Ok((q0, q0));
    }
    if energy < v0 {
        return Err(Error::NoAllowedRegion(energy));
    }
    let g = |q: f64| h.v(q) - energy;
    let crit = real_roots(&h.potential_derivative_coeffs());
    let find = |dir: f64| -> Result<f64> {
        // walk monotone pieces of V away from the minimum
        let mut stops: Vec<f64> = crit
            .iter()
            .copied()
            .filter(|&c| (c - q0) * dir > 0.0)
            .collect();
        stops.sort_by(|a, b| ((a - q0) * dir).total_cmp(&((b - q0) * dir)));
        let mut a = q0;
        for &c in &stops {
            if g(c) >= 0.0 {
                return Ok(bisect(g, a, c, tol));
            }
            a = c;
        }
        let mut step = 1.0f64.max(a.abs());
        for _ in 0..200 {
            let b = a + dir * step;
            if g(b) >= 0.0 {
                return Ok(bisect(g, a, b, tol));
            }
            step *= 2.0;
            if !b.is_finite() {
                break;
            }
        }
        Err(Error::Unbounded(energy))
    };
    let left = find(-1.0)?;
    let right = find(1.0)?;
    Ok((left, right))
}

/// `∮p dq = 2∫√(2m(E − V)) dq` between the turning points. The substitution
/// `q = c + r sin θ` removes the square-root endpoint behaviour before
/// adaptive Simpson integration.
pub fn closed_orbit_area(h: &HamiltonianSpec, energy: f64) -> Result<f64> {
    closed_orbit_area_with(h, energy, 1e-10)
}

pub fn closed_orbit_area_with(h: &HamiltonianSpec, energy: f64, turning_tol: f64) -> Result<f64> {
    let (a, b) = turning_points(h, energy, turning_tol)?;
    if a == b {
        return Ok(0.0);
    }
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let integrand = |theta: f64| {
        let q = c + r * theta.sin();
        (2.0 * h.mass * (energy - h.v(q)).max(0.0)).sqrt() * r * theta.cos()
    };
    let half = std::f64::consts::FRAC_PI_2;
    Ok(2.0 * adaptive_simpson(integrand, -half, half, 1e-13 * (1.0 + energy.abs())))
}
