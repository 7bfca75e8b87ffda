//! One function per subcommand. Each returns JSON results plus a table for
//! CSV output.

use num_complex::Complex64;
use serde_json::{json, Value};

use phasegauge::classical::{
    action_along, closed_orbit_area, hamilton_flow, HamiltonianSpec, ShootOptions,
};
use phasegauge::cover::enumerate_overlaps;
use phasegauge::forms::{Grid2D, PhasePoint, ScalarField2D};
use phasegauge::gauge::{
    delta0_potential, delta0_solvable, equivalence_certificate, equivalence_curl,
    phi_for_equivalence,
};
use phasegauge::gerbe::{
    b_field_transitions, three_form_h, triple_table, verify_cocycle_condition, LoopMode,
};
use phasegauge::phase_space::{
    commutator_residual, connection_from_generating, integrability_check, lift, lift_interpolated,
    operators_qp_with, schrodinger_residual,
};
use phasegauge::quantum::{
    bohr_sommerfeld_count, compare_wkb_density, eigen_count_below, harmonic_eigenstate,
    solve_eigen, wkb_wavefunction, Wavefunction1D,
};
use phasegauge::Result;

use crate::config::{LoopKind, RunConfig, Validated};

/// Rows for `--format csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push_nums(&mut self, row: &[f64]) {
        self.rows.push(row.iter().map(|x| x.to_string()).collect());
    }

    pub fn render(&self) -> String {
        let line = |r: &[String]| r.iter().map(|x| csv_field(x)).collect::<Vec<_>>().join(",");
        let mut out = line(&self.header);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&line(r));
            out.push('\n');
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub struct Output {
    pub results: Value,
    pub table: Table,
}

fn eigen_range(cfg: &RunConfig) -> (f64, f64) {
    (cfg.eigen_q_min, cfg.eigen_q_max)
}

pub fn solve(cfg: &RunConfig, v: &Validated) -> Result<Output> {
    let h = &v.hamiltonian;
    let sol = solve_eigen(h, eigen_range(cfg), cfg.eigen_n, cfg.states)?;
    let nodes: Vec<usize> = sol.states.iter().map(|s| s.sign_changes(1e-8)).collect();
    let mut results = json!({
        "energies": sol.energies,
        "node_counts": nodes,
    });
    if let Some(omega) = h.harmonic_frequency() {
        let v0 = h.potential.first().copied().unwrap_or(0.0);
        let exact: Vec<f64> = (0..cfg.states)
            .map(|n| v0 + (n as f64 + 0.5) * h.hbar * omega)
            .collect();
        let rel: Vec<f64> = sol
            .energies
            .iter()
            .zip(&exact)
            .map(|(e, x)| ((e - x) / x).abs())
            .collect();
        results["reference_energies"] = json!(exact);
        results["relative_errors"] = json!(rel);
    }
    let mut header = vec!["q".to_string()];
    header.extend((0..cfg.states).map(|k| format!("psi_{k}")));
    let mut table = Table {
        header,
        rows: Vec::new(),
    };
    let q = phasegauge::quantum::uniform_grid(cfg.eigen_q_min, cfg.eigen_q_max, cfg.eigen_n);
    for (i, x) in q.iter().enumerate() {
        let mut row = vec![x.to_string()];
        row.extend(sol.states.iter().map(|s| s.values[i].re.to_string()));
        table.rows.push(row);
    }
    Ok(Output { results, table })
}

/// The state used by `lift` and `residual`: the analytic oscillator
/// eigenfunction when the potential is harmonic, else the numerical one.
fn source_state(cfg: &RunConfig, v: &Validated) -> Result<(Wavefunction1D, f64, &'static str)> {
    let h = &v.hamiltonian;
    if let Some(omega) = h.harmonic_frequency() {
        let psi = harmonic_eigenstate(cfg.state, h.mass, omega, h.hbar, v.grid.qs());
        let v0 = h.potential.first().copied().unwrap_or(0.0);
        return Ok((
            psi,
            v0 + (cfg.state as f64 + 0.5) * h.hbar * omega,
            "analytic",
        ));
    }
    let sol = solve_eigen(h, eigen_range(cfg), cfg.eigen_n, cfg.state + 1)?;
    Ok((
        sol.states[cfg.state].clone(),
        sol.energies[cfg.state],
        "numerical",
    ))
}

fn lift_state(
    psi: &Wavefunction1D,
    f: &phasegauge::poly::BivariatePolynomial,
    grid: &Grid2D,
    source: &str,
) -> Result<ScalarField2D> {
    let dist = if source == "analytic" {
        lift(psi, f, grid)?
    } else {
        lift_interpolated(psi, f, grid)?
    };
    Ok(dist.field)
}

pub fn lift_cmd(cfg: &RunConfig, v: &Validated) -> Result<Output> {
    let (psi, energy, source) = source_state(cfg, v)?;
    let field = lift_state(&psi, &cfg.f, &v.grid, source)?;
    let g = &v.grid;
    let mut table = Table::new(&["q", "p", "re", "im"]);
    let mut norm = 0.0;
    for i in 0..g.nq {
        for j in 0..g.np {
            let z = field.at(i, j);
            norm += z.norm_sqr();
            table.push_nums(&[g.q(i), g.p(j), z.re, z.im]);
        }
    }
    let results = json!({
        "energy": energy,
        "f": cfg.f,
        "grid": {"nq": g.nq, "np": g.np, "dq": g.dq, "dp": g.dp},
        "max_abs": field.max_abs(),
        "psi_source": source,
        "sum_abs_sq_dq": norm * g.dq,
    });
    Ok(Output { results, table })
}

fn test_gaussian(g: &Grid2D) -> ScalarField2D {
    ScalarField2D::from_fn(g, |q, p| {
        Complex64::from_polar((-(q * q + p * p) / 2.0).exp(), 0.3 * q - 0.2 * p)
    })
}

/// Lift and residual sweep over `f_list`. A failing entry records its error
/// and the sweep continues.
pub fn residual(cfg: &RunConfig, v: &Validated) -> Result<Output> {
    let (psi, energy, source) = source_state(cfg, v)?;
    let h = &v.hamiltonian;
    let gauss = test_gaussian(&v.grid);
    let mut table = Table::new(&["f", "schrodinger_residual", "commutator_residual", "error"]);
    let mut entries = Vec::new();
    for f in &cfg.f_list {
        let conn = connection_from_generating(f, h.hbar);
        let integrable = integrability_check(&conn).holds;
        let run = || -> Result<(f64, f64)> {
            let field = lift_state(&psi, f, &v.grid, source)?;
            let ops = operators_qp_with(&conn, &v.grid, cfg.stencil);
            let r = schrodinger_residual(&ops, h, &field, energy, cfg.margin)?;
            let c = commutator_residual(&ops, &gauss, cfg.margin)?;
            Ok((r, c))
        };
        match run() {
            Ok((r, c)) => {
                table.rows.push(vec![
                    f.to_string(),
                    r.to_string(),
                    c.to_string(),
                    String::new(),
                ]);
                entries.push(json!({
                    "f": f,
                    "integrable": integrable,
                    "schrodinger_residual": r,
                    "commutator_residual": c,
                }));
            }
            Err(e) => {
                table.rows.push(vec![
                    f.to_string(),
                    String::new(),
                    String::new(),
                    e.to_string(),
                ]);
                entries.push(json!({"f": f, "integrable": integrable, "error": e.to_string()}));
            }
        }
    }
    let results = json!({
        "energy": energy,
        "entries": entries,
        "psi_source": source,
        "state": cfg.state,
    });
    Ok(Output { results, table })
}

pub fn cocycle(cfg: &RunConfig, v: &Validated) -> Result<Output> {
    let cover = &v.cover;
    let hbar = cfg.hbar;
    let mode = match cfg.loop_mode {
        LoopKind::Polygon => LoopMode::Polygon,
        LoopKind::Trajectory => LoopMode::Trajectory {
            hamiltonian: v.hamiltonian.clone(),
            energy: cfg.loop_energy,
            max_time: cfg.loop_max_time,
            options: ShootOptions {
                dt: cfg.shoot_dt,
                ..ShootOptions::default()
            },
        },
    };
    let mut notes = Vec::new();
    let triples = triple_table(cover, v.rule, &mode)?;
    if triples.is_empty() {
        notes.push("no triple overlaps");
    }
    let max_unit_dev = triples
        .iter()
        .map(|t| (Complex64::new(t.g_re, t.g_im).norm() - 1.0).abs())
        .fold(0.0, f64::max);
    let quads = enumerate_overlaps(cover, 4)?;
    let (n_quads, max_dev) = if quads.is_empty() {
        notes.push("no quadruple overlaps");
        (0, Value::Null)
    } else {
        let check = verify_cocycle_condition(cover, v.rule, hbar)?;
        (check.quadruples, json!(check.max_deviation))
    };
    let b = b_field_transitions(cover, hbar)?;
    let hcert = three_form_h(&b);
    let mut table = Table::new(&["i", "j", "k", "q", "p", "phase", "g_re", "g_im"]);
    for t in &triples {
        table.rows.push(vec![
            t.indices[0].to_string(),
            t.indices[1].to_string(),
            t.indices[2].to_string(),
            t.point.q.to_string(),
            t.point.p.to_string(),
            t.phase.to_string(),
            t.g_re.to_string(),
            t.g_im.to_string(),
        ]);
    }
    let results = json!({
        "b_field": {
            "coefficients_im": b.coeffs.iter().map(|c| c.im).collect::<Vec<_>>(),
            "max_residual": b.max_residual,
            "tree_edges": b.tree_edges,
        },
        "h": hcert,
        "max_abs_g_deviation": max_unit_dev,
        "max_quadruple_deviation": max_dev,
        "notes": notes,
        "patches": cover.len(),
        "quadruples": n_quads,
        "triples": triples,
    });
    Ok(Output { results, table })
}

pub fn cover(_cfg: &RunConfig, v: &Validated) -> Result<Output> {
    let cover = &v.cover;
    let mut counts = serde_json::Map::new();
    for arity in 2..=4 {
        counts.insert(
            arity.to_string(),
            json!(enumerate_overlaps(cover, arity)?.len()),
        );
    }
    let mut table = Table::new(&["index", "q_lo", "q_hi", "p_lo", "p_hi"]);
    for patch in &cover.patches {
        let r = patch.rect;
        table.push_nums(&[patch.index as f64, r.q_lo, r.q_hi, r.p_lo, r.p_hi]);
    }
    let results = json!({
        "overlap_counts": counts,
        "patches": cover.patches,
    });
    Ok(Output { results, table })
}

pub fn gauge(cfg: &RunConfig, _v: &Validated) -> Result<Output> {
    let f = &cfg.f;
    let report = delta0_solvable(f);
    let cert = equivalence_certificate(f, cfg.hbar);
    let phi = phi_for_equivalence(f);
    let potential = delta0_potential(f);
    let opt = |p: &Option<phasegauge::poly::BivariatePolynomial>| match p {
        Some(p) => json!(p.to_string()),
        None => Value::Null,
    };
    let results = json!({
        "delta0_potential": opt(&potential),
        "delta0_solvable": report.solvable,
        "equivalence_certificate": if cert.exact { "exact" } else { "failed" },
        "equivalence_defect": {"dp": cert.defect.dp.to_string(), "dq": cert.defect.dq.to_string()},
        "f": f.to_string(),
        "g": opt(&report.g),
        "h": opt(&report.h),
        "mixed": report.mixed.to_string(),
        "phi": {"dp": phi.dp.to_string(), "dq": phi.dq.to_string()},
        "phi_curl": equivalence_curl(f).to_string(),
        "terms": f.num_terms(),
    });
    let mut table = Table::new(&["key", "value"]);
    for (k, val) in results.as_object().expect("object") {
        let s = match val {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        table.rows.push(vec![k.clone(), s]);
    }
    Ok(Output { results, table })
}

pub fn wkb(cfg: &RunConfig, v: &Validated) -> Result<Output> {
    let h = &v.hamiltonian;
    let n = cfg.wkb_state;
    let sol = solve_eigen(h, eigen_range(cfg), cfg.eigen_n, n + 1)?;
    let (energy, state) = (sol.energies[n], &sol.states[n]);
    let cmp = compare_wkb_density(h, energy, state, cfg.wkb_interior)?;
    let w = wkb_wavefunction(h, energy, &state.q)?;
    let mut table = Table::new(&["q", "density", "wkb_density"]);
    for (i, &x) in state.q.iter().enumerate() {
        let wd = if w.mask[i] {
            w.wave.values[i].norm_sqr()
        } else {
            0.0
        };
        table.push_nums(&[x, state.values[i].norm_sqr(), wd]);
    }
    let results = json!({
        "energy": energy,
        "interior_fraction": cfg.wkb_interior,
        "max_rel_error": cmp.max_rel_error,
        "points": cmp.points,
        "region": cmp.region,
        "state": n,
        "turning_points": cmp.turning_points,
    });
    Ok(Output { results, table })
}

pub fn orbit(cfg: &RunConfig, v: &Validated) -> Result<Output> {
    let h = &v.hamiltonian;
    let omega = h.harmonic_frequency();
    let mut rows = Vec::new();
    let mut table = Table::new(&["energy", "area", "bs_count", "eigen_count"]);
    for &e in &cfg.orbit_energies {
        let area = closed_orbit_area(h, e)?;
        let bs = bohr_sommerfeld_count(h, e)?;
        let ec = eigen_count_below(h, eigen_range(cfg), cfg.eigen_n, e)?;
        let mut row = json!({
            "area": area,
            "bs_count": bs,
            "count_difference": bs as i64 - ec as i64,
            "eigen_count": ec,
            "energy": e,
        });
        if let Some(w) = omega {
            let v0 = h.potential.first().copied().unwrap_or(0.0);
            row["reference_area"] = json!(2.0 * std::f64::consts::PI * (e - v0) / w);
        }
        table.push_nums(&[e, area, bs as f64, ec as f64]);
        rows.push(row);
    }
    Ok(Output {
        results: json!({ "orbits": rows }),
        table,
    })
}

pub fn flow(cfg: &RunConfig, v: &Validated) -> Result<Output> {
    let h: &HamiltonianSpec = &v.hamiltonian;
    let start = PhasePoint::new(cfg.flow_q0, cfg.flow_p0);
    let traj = hamilton_flow(h, start, cfg.flow_duration, cfg.flow_dt)?;
    let mut table = Table::new(&["t", "q", "p"]);
    for (t, pt) in traj.times.iter().zip(&traj.points) {
        table.push_nums(&[*t, pt.q, pt.p]);
    }
    let end = traj.end();
    let results = json!({
        "action": action_along(h, &traj),
        "end": {"p": end.p, "q": end.q},
        "energy": traj.energy,
        "max_energy_drift": traj.max_energy_drift(h),
        "steps": traj.times.len() - 1,
    });
    Ok(Output { results, table })
}
