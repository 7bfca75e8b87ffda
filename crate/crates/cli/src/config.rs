//! Flat `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Lists are
//! comma-separated numbers, except `f_list`, whose polynomials are separated
//! by `;`. Every key has a default; unknown keys are rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use phasegauge::classical::HamiltonianSpec;
use phasegauge::cover::{build_cover, CechCover};
use phasegauge::forms::{Grid2D, PhaseSpaceDomain};
use phasegauge::gerbe::PointRule;
use phasegauge::poly::BivariatePolynomial;
use phasegauge::quantum::{MAX_STATES, MIN_EIGEN_NODES};
use phasegauge::stencil::StencilOrder;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            _ => Err(format!("expected json or csv, got {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Rule {
    Center,
    Seeded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LoopKind {
    Polygon,
    Trajectory,
}

/// Resolved configuration. Serialized verbatim into every report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub hbar: f64,
    pub mass: f64,
    /// `v0, v1, ...` with `V(q) = Σ v_k q^k`.
    pub potential: Vec<f64>,
    pub q_min: f64,
    pub q_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub nq: usize,
    pub np: usize,
    #[serde(serialize_with = "ser_stencil")]
    pub stencil: StencilOrder,
    pub margin: f64,
    pub state: usize,
    pub f: BivariatePolynomial,
    pub f_list: Vec<BivariatePolynomial>,
    pub eigen_n: usize,
    pub eigen_q_min: f64,
    pub eigen_q_max: f64,
    pub states: usize,
    pub cover_nx: usize,
    pub cover_ny: usize,
    pub overlap: f64,
    pub point_rule: Rule,
    pub loop_mode: LoopKind,
    pub loop_energy: f64,
    pub loop_max_time: f64,
    pub shoot_dt: f64,
    pub seed: u64,
    pub wkb_state: usize,
    pub wkb_interior: f64,
    pub orbit_energies: Vec<f64>,
    pub flow_q0: f64,
    pub flow_p0: f64,
    pub flow_duration: f64,
    pub flow_dt: f64,
    pub format: Format,
}

fn ser_stencil<S: serde::Serializer>(s: &StencilOrder, ser: S) -> Result<S::Ok, S::Error> {
    ser.serialize_str(stencil_name(*s))
}

fn stencil_name(s: StencilOrder) -> &'static str {
    match s {
        StencilOrder::Second => "second",
        StencilOrder::Fourth => "fourth",
        StencilOrder::Sixth => "sixth",
        StencilOrder::Eighth => "eighth",
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            hbar: 1.0,
            mass: 1.0,
            potential: vec![0.0, 0.0, 0.5],
            q_min: -8.0,
            q_max: 8.0,
            p_min: -8.0,
            p_max: 8.0,
            nq: 512,
            np: 512,
            stencil: StencilOrder::default(),
            margin: phasegauge::phase_space::DEFAULT_MARGIN,
            state: 0,
            f: BivariatePolynomial::zero(),
            f_list: Vec::new(),
            eigen_n: 2000,
            eigen_q_min: -10.0,
            eigen_q_max: 10.0,
            states: 6,
            cover_nx: 3,
            cover_ny: 3,
            overlap: 0.2,
            point_rule: Rule::Center,
            loop_mode: LoopKind::Polygon,
            loop_energy: 8.0,
            loop_max_time: 50.0,
            shoot_dt: 2e-5,
            seed: 0,
            wkb_state: 10,
            wkb_interior: 0.6,
            orbit_energies: vec![1.0, 2.0, 3.0, 4.0, 5.0],
            flow_q0: 1.0,
            flow_p0: 0.0,
            flow_duration: std::f64::consts::TAU,
            flow_dt: 1e-3,
            format: Format::Json,
        }
    }
}

#[derive(Debug, Clone)]
struct KeyError {
    key: String,
    msg: String,
}

impl fmt::Display for KeyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "key `{}`: {}", self.key, self.msg)
    }
}

fn num<T: FromStr>(key: &str, v: &str) -> Result<T, CliError>
where
    T::Err: fmt::Display,
{
    v.parse::<T>()
        .map_err(|e| bad(key, format!("cannot parse {v:?}: {e}")))
}

fn num_list(key: &str, v: &str) -> Result<Vec<f64>, CliError> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|s| num::<f64>(key, s.trim())).collect()
}

fn bad(key: &str, msg: impl Into<String>) -> CliError {
    CliError::Config(
        KeyError {
            key: key.to_string(),
            msg: msg.into(),
        }
        .to_string(),
    )
}

/// Parses `key = value` lines into a map, keeping the last value of a key.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = split_pair(line).ok_or_else(|| {
            CliError::Config(format!(
                "line {}: expected key = value, got {line:?}",
                lineno + 1
            ))
        })?;
        out.insert(k, v);
    }
    Ok(out)
}

/// Splits `k=v`, trimming both sides.
pub fn split_pair(s: &str) -> Option<(String, String)> {
    let (k, v) = s.split_once('=')?;
    let k = k.trim();
    if k.is_empty() {
        return None;
    }
    Some((k.to_string(), v.trim().to_string()))
}

impl RunConfig {
    pub fn set(&mut self, key: &str, v: &str) -> Result<(), CliError> {
        match key {
            "hbar" => self.hbar = num(key, v)?,
            "mass" => self.mass = num(key, v)?,
            "potential" => self.potential = num_list(key, v)?,
            "q_min" => self.q_min = num(key, v)?,
            "q_max" => self.q_max = num(key, v)?,
            "p_min" => self.p_min = num(key, v)?,
            "p_max" => self.p_max = num(key, v)?,
            "nq" => self.nq = num(key, v)?,
            "np" => self.np = num(key, v)?,
            "stencil" => {
                self.stencil = match v {
                    "second" => StencilOrder::Second,
                    "fourth" => StencilOrder::Fourth,
                    "sixth" => StencilOrder::Sixth,
                    "eighth" => StencilOrder::Eighth,
                    _ => {
                        return Err(bad(
                            key,
                            format!("expected second|fourth|sixth|eighth, got {v:?}"),
                        ))
                    }
                }
            }
            "margin" => self.margin = num(key, v)?,
            "state" => self.state = num(key, v)?,
            "f" => self.f = num(key, v)?,
            "f_list" => {
                self.f_list = v
                    .split(';')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| num(key, s))
                    .collect::<Result<_, _>>()?
            }
            "eigen_n" => self.eigen_n = num(key, v)?,
            "eigen_q_min" => self.eigen_q_min = num(key, v)?,
            "eigen_q_max" => self.eigen_q_max = num(key, v)?,
            "states" => self.states = num(key, v)?,
            "cover_nx" => self.cover_nx = num(key, v)?,
            "cover_ny" => self.cover_ny = num(key, v)?,
            "overlap" => self.overlap = num(key, v)?,
            "point_rule" => {
                self.point_rule = match v {
                    "center" => Rule::Center,
                    "seeded" => Rule::Seeded,
                    _ => return Err(bad(key, format!("expected center|seeded, got {v:?}"))),
                }
            }
            "loop_mode" => {
                self.loop_mode = match v {
                    "polygon" => LoopKind::Polygon,
                    "trajectory" => LoopKind::Trajectory,
                    _ => return Err(bad(key, format!("expected polygon|trajectory, got {v:?}"))),
                }
            }
            "loop_energy" => self.loop_energy = num(key, v)?,
            "loop_max_time" => self.loop_max_time = num(key, v)?,
            "shoot_dt" => self.shoot_dt = num(key, v)?,
            "seed" => self.seed = num(key, v)?,
            "wkb_state" => self.wkb_state = num(key, v)?,
            "wkb_interior" => self.wkb_interior = num(key, v)?,
            "orbit_energies" => self.orbit_energies = num_list(key, v)?,
            "flow_q0" => self.flow_q0 = num(key, v)?,
            "flow_p0" => self.flow_p0 = num(key, v)?,
            "flow_duration" => self.flow_duration = num(key, v)?,
            "flow_dt" => self.flow_dt = num(key, v)?,
            "format" => self.format = v.parse().map_err(|e: String| bad(key, e))?,
            _ => return Err(bad(key, "unknown key")),
        }
        Ok(())
    }

    /// Applies pairs in order.
    pub fn apply<'a, I>(&mut self, pairs: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = (&'a String, &'a String)>,
    {
        for (k, v) in pairs {
            self.set(k, v)?;
        }
        Ok(())
    }

    /// Checks every field against the library's preconditions.
    pub fn validate(&self) -> Result<Validated, CliError> {
        let finite = |key: &str, x: f64| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(bad(key, "must be finite"))
            }
        };
        let positive = |key: &str, x: f64| {
            if x.is_finite() && x > 0.0 {
                Ok(())
            } else {
                Err(bad(key, format!("must be positive, got {x}")))
            }
        };
        positive("hbar", self.hbar)?;
        positive("mass", self.mass)?;
        let hamiltonian = HamiltonianSpec::new(self.mass, self.potential.clone(), self.hbar)
            .map_err(|e| bad("potential", e.to_string()))?;
        let domain =
            PhaseSpaceDomain::new(self.q_min, self.q_max, self.p_min, self.p_max, self.hbar)
                .map_err(|e| bad("q_min", e.to_string()))?;
        let grid = Grid2D::new(domain, self.nq, self.np).map_err(|e| bad("nq", e.to_string()))?;
        if !(0.0..0.5).contains(&self.margin) {
            return Err(bad(
                "margin",
                format!("must lie in [0, 0.5), got {}", self.margin),
            ));
        }
        if self.eigen_n < MIN_EIGEN_NODES {
            return Err(bad(
                "eigen_n",
                format!("must be at least {MIN_EIGEN_NODES}, got {}", self.eigen_n),
            ));
        }
        finite("eigen_q_min", self.eigen_q_min)?;
        finite("eigen_q_max", self.eigen_q_max)?;
        if self.eigen_q_min >= self.eigen_q_max {
            return Err(bad("eigen_q_min", "must be below eigen_q_max"));
        }
        if self.states > MAX_STATES {
            return Err(bad(
                "states",
                format!("at most {MAX_STATES}, got {}", self.states),
            ));
        }
        if self.state >= MAX_STATES {
            return Err(bad(
                "state",
                format!("must be below {MAX_STATES}, got {}", self.state),
            ));
        }
        if self.wkb_state >= MAX_STATES {
            return Err(bad(
                "wkb_state",
                format!("must be below {MAX_STATES}, got {}", self.wkb_state),
            ));
        }
        if !(self.wkb_interior > 0.0 && self.wkb_interior < 1.0) {
            return Err(bad(
                "wkb_interior",
                format!("must lie in (0, 1), got {}", self.wkb_interior),
            ));
        }
        let cover = build_cover(domain, self.cover_nx, self.cover_ny, self.overlap)
            .map_err(|e| bad("cover_nx", e.to_string()))?;
        finite("loop_energy", self.loop_energy)?;
        positive("loop_max_time", self.loop_max_time)?;
        positive("shoot_dt", self.shoot_dt)?;
        for &e in &self.orbit_energies {
            finite("orbit_energies", e)?;
        }
        finite("flow_q0", self.flow_q0)?;
        finite("flow_p0", self.flow_p0)?;
        if !(self.flow_duration.is_finite() && self.flow_duration >= 0.0) {
            return Err(bad("flow_duration", "must be finite and non-negative"));
        }
        positive("flow_dt", self.flow_dt)?;
        let rule = match self.point_rule {
            Rule::Center => PointRule::Center,
            Rule::Seeded => PointRule::Seeded(self.seed),
        };
        Ok(Validated {
            hamiltonian,
            domain,
            grid,
            cover,
            rule,
        })
    }
}

/// Objects built from a validated configuration.
#[derive(Debug, Clone)]
pub struct Validated {
    pub hamiltonian: HamiltonianSpec,
    pub domain: PhaseSpaceDomain,
    pub grid: Grid2D,
    pub cover: CechCover,
    pub rule: PointRule,
}
