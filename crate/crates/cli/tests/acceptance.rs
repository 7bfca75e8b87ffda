//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::f64::consts::PI;
use std::process::Command;
use std::time::Instant;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use phasegauge::classical::{
    closed_orbit_area, hamilton_flow, shoot_leg, HamiltonianSpec, ShootOptions,
};
use phasegauge::cover::{build_cover, entry_seed, sample_point, Rect, SampleMode};
use phasegauge::forms::{
    canonical_one_form, exact_gradient_line_integral, exterior_derivative, line_integral,
    shift_lambda, symplectic_form, Grid2D, OneForm, PhasePoint, PhaseSpaceDomain, ScalarField2D,
};
use phasegauge::gauge::{delta0_solvable, equivalence_certificate};
use phasegauge::gerbe::{
    build_loop, cocycle, oriented_cocycle, polygon_cocycle, quadruple_deviation, triple_table,
    LoopMode, PointRule,
};
use phasegauge::phase_space::{
    commutator_residual, connection_from_generating, integrability_check, lift, operators_qp,
    operators_qp_with, schrodinger_residual, ConnectionPrime, DEFAULT_MARGIN,
};
use phasegauge::poly::BivariatePolynomial;
use phasegauge::quantum::{
    bohr_sommerfeld_count, compare_wkb_density, eigen_count_below, harmonic_eigenstate, solve_eigen,
};
use phasegauge::stencil::StencilOrder;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn poly(s: &str) -> BivariatePolynomial {
    s.parse().unwrap()
}

fn connection_corpus() -> Vec<BivariatePolynomial> {
    [
        "0",
        "p*q/2",
        "p*q",
        "q^2/2",
        "p*q/2 + q^3/10",
        "q^3 + p^2",
        "q^2 + p^2",
        "-q^2*p/4 + p^3/20",
    ]
    .iter()
    .map(|s| poly(s))
    .collect()
}

fn ho_grid(n: usize) -> Grid2D {
    Grid2D::new(PhaseSpaceDomain::symmetric(8.0, 1.0).unwrap(), n, n).unwrap()
}

fn gaussian(g: &Grid2D) -> ScalarField2D {
    ScalarField2D::from_fn(g, |q, p| {
        Complex64::from_polar((-(q * q + p * p) / 2.0).exp(), 0.3 * q - 0.2 * p)
    })
}

fn slope(hs: &[f64], errs: &[f64]) -> f64 {
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn criterion_1() -> Outcome {
    let g = ho_grid(512);
    let h = HamiltonianSpec::harmonic(1.0, 1.0, 1.0);
    let fs = ["0", "p*q/2", "p*q", "q^2/2"];
    let mut worst: f64 = 0.0;
    for n in 0..3 {
        let psi = harmonic_eigenstate(n, 1.0, 1.0, 1.0, g.qs());
        for f in fs {
            let f = poly(f);
            let field = lift(&psi, &f, &g).unwrap().field;
            let ops = operators_qp(&connection_from_generating(&f, 1.0), &g);
            let r = schrodinger_residual(&ops, &h, &field, n as f64 + 0.5, DEFAULT_MARGIN).unwrap();
            worst = worst.max(r);
        }
    }
    // Ψ lifted with pq/2, operators built from f = 0
    let psi = harmonic_eigenstate(0, 1.0, 1.0, 1.0, g.qs());
    let field = lift(&psi, &poly("p*q/2"), &g).unwrap().field;
    let ops = operators_qp(
        &connection_from_generating(&BivariatePolynomial::zero(), 1.0),
        &g,
    );
    let control = schrodinger_residual(&ops, &h, &field, 0.5, DEFAULT_MARGIN).unwrap();
    outcome(
        worst < 1e-3 && control > 0.1,
        format!("max residual {worst:.3e} (< 1e-3), negative control {control:.3e} (> 0.1)"),
    )
}

fn criterion_2() -> Outcome {
    let g = ho_grid(512);
    let test = gaussian(&g);
    let mut worst: f64 = 0.0;
    for f in connection_corpus() {
        let ops = operators_qp(&connection_from_generating(&f, 1.0), &g);
        worst = worst.max(commutator_residual(&ops, &test, DEFAULT_MARGIN).unwrap());
    }
    let mut slopes = Vec::new();
    for f in ["0", "p*q/2", "q^2/2"] {
        let conn = connection_from_generating(&poly(f), 1.0);
        let (mut hs, mut errs) = (Vec::new(), Vec::new());
        for n in [129, 257, 513, 1025] {
            let g = ho_grid(n);
            let ops = operators_qp_with(&conn, &g, StencilOrder::Second);
            errs.push(commutator_residual(&ops, &gaussian(&g), DEFAULT_MARGIN).unwrap());
            hs.push(g.dq);
        }
        slopes.push(slope(&hs, &errs));
    }
    let slopes_ok = slopes.iter().all(|s| (s - 2.0).abs() <= 0.2);
    outcome(
        worst < 1e-6 && slopes_ok,
        format!("max residual {worst:.3e} (< 1e-6), second-order slopes {slopes:.3?} (2.0 ± 0.2)"),
    )
}

fn criterion_3() -> Outcome {
    let all_exact = connection_corpus().iter().all(|f| {
        let r = integrability_check(&connection_from_generating(f, 1.0));
        r.holds && r.defect.is_zero()
    });
    // adding q p to A'_q raises ∂_p A'_q by q
    let f = poly("p*q/2");
    let good = connection_from_generating(&f, 1.0);
    let broken = ConnectionPrime::new(&good.a_q + &poly("q*p"), good.a_p.clone(), 1.0);
    let r = integrability_check(&broken);
    let predicted = poly("q");
    outcome(
        all_exact && !r.holds && r.defect == predicted,
        format!(
            "corpus certificates exact: {all_exact}, broken defect `{}` (expected `{predicted}`)",
            r.defect
        ),
    )
}

fn criterion_4() -> Outcome {
    let hbar = 1.0;
    let domain = PhaseSpaceDomain::symmetric(8.0, hbar).unwrap();
    let cover = build_cover(domain, 4, 4, 0.2).unwrap();
    let table = triple_table(&cover, PointRule::Seeded(11), &LoopMode::Polygon).unwrap();
    let unit = table
        .iter()
        .map(|t| (Complex64::new(t.g_re, t.g_im).norm() - 1.0).abs())
        .fold(0.0, f64::max);

    let rect = Rect::new(-8.0, 8.0, -8.0, 8.0);
    let draw = |k: usize| sample_point(&rect, SampleMode::Seeded(entry_seed(2024, k))).unwrap();
    let mut quad: f64 = 0.0;
    for k in 0..100 {
        let pts = [
            draw(4 * k),
            draw(4 * k + 1),
            draw(4 * k + 2),
            draw(4 * k + 3),
        ];
        quad = quad.max(quadruple_deviation(pts, hbar));
    }

    let pts: Vec<PhasePoint> = (0..30).map(|k| draw(1000 + k)).collect();
    let mut anti: f64 = 0.0;
    for a in 0..10 {
        for b in 10..20 {
            for c in 20..30 {
                let g = oriented_cocycle(&pts, [a, b, c], hbar).g;
                for perm in [[b, a, c], [a, c, b], [c, b, a]] {
                    let h = oriented_cocycle(&pts, perm, hbar).g;
                    anti = anti.max((g * h - 1.0).norm());
                }
                let cyc = oriented_cocycle(&pts, [b, c, a], hbar).g;
                anti = anti.max((g - cyc).norm());
            }
        }
    }

    let g = Grid2D::new(domain, 401, 401).unwrap();
    let theta = canonical_one_form(&g);
    let mut line: f64 = 0.0;
    for k in 0..20 {
        let (a, b, c) = (draw(2000 + 3 * k), draw(2001 + 3 * k), draw(2002 + 3 * k));
        let phase = polygon_cocycle(a, b, c, hbar).phase;
        let li = line_integral(&theta, &[a, b, c, a]).unwrap().re;
        line = line.max((phase + li / hbar).abs());
    }
    outcome(
        unit < 1e-12 && quad < 1e-12 && anti < 1e-12 && line < 1e-8,
        format!(
            "||g|-1| {unit:.2e}, quadruple {quad:.2e}, antisymmetry {anti:.2e} (all < 1e-12), line-integral phase {line:.2e} (< 1e-8)"
        ),
    )
}

/// Separability by evaluation: `f(q,p) − f(q,0) − f(0,p) + f(0,0)` on a
/// 5×5 set of distinct rationals decides it for degree ≤ 4 per variable.
fn brute_force_separable(f: &BivariatePolynomial) -> bool {
    let zero = BigRational::zero();
    let pts: Vec<BigRational> = (1..=5)
        .map(|k| BigRational::new(BigInt::from(3 * k - 7), BigInt::from(k + 1)))
        .collect();
    pts.iter().all(|q| {
        pts.iter().all(|p| {
            (f.eval_exact(q, p) - f.eval_exact(q, &zero) - f.eval_exact(&zero, p)
                + f.eval_exact(&zero, &zero))
            .is_zero()
        })
    })
}

fn criterion_5() -> Outcome {
    let certs = connection_corpus().iter().all(|f| {
        let c = equivalence_certificate(f, 1.0);
        c.exact && c.defect.is_zero()
    });
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let corpus: Vec<BivariatePolynomial> = (0..50)
        .map(|k| {
            let n_terms = rng.gen_range(1..7);
            let mut f = BivariatePolynomial::zero();
            for _ in 0..n_terms {
                let (j, l) = match k % 3 {
                    0 => (rng.gen_range(0..5), 0),
                    1 => (0, rng.gen_range(0..5)),
                    _ => (rng.gen_range(0..5), rng.gen_range(0..5)),
                };
                let term =
                    BivariatePolynomial::term(rng.gen_range(-9..=9), rng.gen_range(1..=6), j, l);
                f = &f + &term;
            }
            if k % 3 == 0 && rng.gen_bool(0.5) {
                f = &f
                    + &BivariatePolynomial::term(rng.gen_range(1..=4), 1, 0, rng.gen_range(1..5));
            }
            f
        })
        .collect();
    let matches = corpus
        .iter()
        .filter(|f| delta0_solvable(f).solvable == brute_force_separable(f))
        .count();
    let separable = corpus.iter().filter(|f| brute_force_separable(f)).count();
    outcome(
        certs && matches == corpus.len(),
        format!(
            "corpus certificates exact: {certs}, classifier agreement {matches}/{} ({separable} separable)",
            corpus.len()
        ),
    )
}

fn criterion_6() -> Outcome {
    let g = ho_grid(65);
    let dtheta = exterior_derivative(&canonical_one_form(&g)).unwrap();
    let omega = symplectic_form(&g);
    let exact = dtheta
        .coeff
        .sub(&omega.coeff)
        .interior_max_abs(DEFAULT_MARGIN);

    // exact gradient of sin(0.3q)·cos(0.2p²) + 0.1qp²
    let fq = |q: f64, p: f64| 0.3 * (0.3 * q).cos() * (0.2 * p * p).cos() + 0.1 * p * p;
    let fp = |q: f64, p: f64| -0.4 * p * (0.3 * q).sin() * (0.2 * p * p).sin() + 0.2 * q * p;
    let (mut hs, mut errs) = (Vec::new(), Vec::new());
    for n in [33, 65, 129, 257] {
        let g = Grid2D::new(PhaseSpaceDomain::symmetric(2.0, 1.0).unwrap(), n, n).unwrap();
        let df = OneForm::new(
            ScalarField2D::from_real_fn(&g, fq),
            ScalarField2D::from_real_fn(&g, fp),
        )
        .unwrap();
        errs.push(
            exterior_derivative(&df)
                .unwrap()
                .coeff
                .interior_max_abs(DEFAULT_MARGIN),
        );
        hs.push(g.dq);
    }
    let s = slope(&hs, &errs);
    outcome(
        exact < 1e-12 && (s - 2.0).abs() <= 0.2,
        format!("|dθ − ω| {exact:.2e} at interior nodes, d∘d convergence slope {s:.3}"),
    )
}

fn criterion_7() -> Outcome {
    let h = HamiltonianSpec::harmonic(1.0, 1.0, 1.0);
    let sol = solve_eigen(&h, (-10.0, 10.0), 2000, 11).unwrap();
    let rel = (0..=5)
        .map(|n| ((sol.energies[n] - (n as f64 + 0.5)) / (n as f64 + 0.5)).abs())
        .fold(0.0, f64::max);
    let nodes: Vec<usize> = sol.states.iter().map(|s| s.sign_changes(1e-8)).collect();
    let nodes_ok = nodes.iter().enumerate().all(|(k, &c)| c == k);
    outcome(
        rel < 1e-3 && nodes_ok,
        format!("max relative error n ≤ 5: {rel:.2e} (< 1e-3), node counts k ≤ 10: {nodes:?}"),
    )
}

fn criterion_8() -> Outcome {
    let ho = HamiltonianSpec::harmonic(1.0, 1.0, 1.0);
    let area_err = (1..=5)
        .map(|e| (closed_orbit_area(&ho, e as f64).unwrap() - 2.0 * PI * e as f64).abs())
        .fold(0.0, f64::max);
    let quartic = HamiltonianSpec::new(1.0, vec![0.0, 0.0, 0.0, 0.0, 1.0], 1.0).unwrap();
    let mut count_gap = 0i64;
    for (h, energies) in [
        (&ho, [0.7, 2.2, 4.9, 8.3, 12.6]),
        (&quartic, [1.0, 3.0, 6.0, 10.0, 15.0]),
    ] {
        for e in energies {
            let bs = bohr_sommerfeld_count(h, e).unwrap() as i64;
            let ec = eigen_count_below(h, (-8.0, 8.0), 2000, e).unwrap() as i64;
            count_gap = count_gap.max((bs - ec).abs());
        }
    }
    let sol = solve_eigen(&ho, (-10.0, 10.0), 2000, 11).unwrap();
    let wkb = compare_wkb_density(&ho, sol.energies[10], &sol.states[10], 0.6).unwrap();
    outcome(
        area_err < 1e-8 && count_gap <= 1 && wkb.max_rel_error < 0.05,
        format!(
            "orbit area error {area_err:.2e} (< 1e-8), max |BS − eigencount| {count_gap} (≤ 1), WKB density error {:.2}% (< 5%)",
            100.0 * wkb.max_rel_error
        ),
    )
}

fn criterion_9() -> Outcome {
    let fs = [
        poly("p*q/2"),
        poly("q^3 - 2*q*p^2 + p"),
        poly("q^4/7 + q^2*p^3"),
    ];
    let h = HamiltonianSpec::harmonic(1.0, 1.0, 1.0);
    let domain = PhaseSpaceDomain::symmetric(8.0, 1.0).unwrap();
    let tri = [
        PhasePoint::new(-1.5, -0.5),
        PhasePoint::new(1.2, -0.3),
        PhasePoint::new(0.2, 1.8),
    ];
    let mode = LoopMode::Trajectory {
        hamiltonian: h.clone(),
        energy: 3.0,
        max_time: 20.0,
        options: ShootOptions::default(),
    };
    let threaded = build_loop(&domain, tri, PhasePoint::new(0.1, 0.2), &mode).unwrap();
    let orbit = {
        let t = hamilton_flow(&h, PhasePoint::new(1.3, 0.4), 2.0 * PI, 1e-3).unwrap();
        let mut pts = t.points.clone();
        pts.push(pts[0]);
        pts
    };
    let loops: Vec<Vec<PhasePoint>> = vec![
        vec![tri[0], tri[1], tri[2], tri[0]],
        threaded.threaded_path(),
        orbit,
    ];
    let mut closed: f64 = 0.0;
    for f in &fs {
        for lp in &loops {
            closed = closed.max(exact_gradient_line_integral(f, lp).unwrap().abs());
        }
    }
    // trajectory-mode cocycle stays finite on the same loop
    let _ = cocycle(&threaded, 1.0).unwrap();

    let leg = shoot_leg(&h, -1.0, 1.5, 3.0, 20.0, &ShootOptions::default()).unwrap();
    let open_paths: Vec<Vec<PhasePoint>> = vec![
        vec![
            PhasePoint::new(-1.0, 0.3),
            PhasePoint::new(0.5, -1.2),
            PhasePoint::new(1.1, 0.9),
        ],
        leg.points.clone(),
    ];
    let mut open: f64 = 0.0;
    for f in &fs {
        for path in &open_paths {
            let (a, b) = (path[0], *path.last().unwrap());
            let shift = exact_gradient_line_integral(f, path).unwrap();
            open = open.max((shift - (f.eval(b.q, b.p) - f.eval(a.q, a.p))).abs());
        }
    }
    // the same shift through sampled forms, for a quadratic f
    let g = Grid2D::new(PhaseSpaceDomain::symmetric(2.0, 1.0).unwrap(), 201, 201).unwrap();
    let theta = canonical_one_form(&g);
    let f = poly("p*q/2 - q^2/3");
    let path = &open_paths[0];
    let sampled = line_integral(&shift_lambda(&theta, &f), path).unwrap().re
        - line_integral(&theta, path).unwrap().re;
    let (a, b) = (path[0], *path.last().unwrap());
    open = open.max((sampled - (f.eval(b.q, b.p) - f.eval(a.q, a.p))).abs());
    outcome(
        closed < 1e-10 && open < 1e-8,
        format!(
            "closed-loop shift {closed:.2e} (< 1e-10), open-path shift error {open:.2e} (< 1e-8)"
        ),
    )
}

fn run_cli(args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_phasegauge"))
        .args(args)
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

fn criterion_10() -> Outcome {
    let runs: [&[&str]; 4] = [
        &[
            "cocycle",
            "--seed",
            "42",
            "--set",
            "point_rule=seeded",
            "--set",
            "cover_nx=4",
            "--set",
            "cover_ny=4",
        ],
        &["residual", "--set", "f_list=0;p*q/2;p*q", "--seed", "42"],
        &["solve", "--set", "states=8"],
        &["gauge", "--set", "f=p*q/2 + q^3", "--format", "csv"],
    ];
    let mut identical = 0;
    for args in runs {
        let a = run_cli(args);
        let mut threaded: Vec<&str> = args.to_vec();
        threaded.extend(["--threads", "3"]);
        let b = run_cli(&threaded);
        if a == b && !a.is_empty() {
            identical += 1;
        }
    }
    outcome(
        identical == runs.len(),
        format!(
            "{identical}/{} reports byte-identical across reruns",
            runs.len()
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        (
            "equivalence of configuration and phase-space Schrödinger equations",
            criterion_1,
        ),
        ("canonical commutation", criterion_2),
        ("integrability of generated connections", criterion_3),
        ("cocycle structure", criterion_4),
        ("δ1 equivalence and δ0 classifier", criterion_5),
        ("geometry of θ and ω", criterion_6),
        ("eigensolver", criterion_7),
        ("semiclassics", criterion_8),
        ("action bookkeeping", criterion_9),
        ("determinism", criterion_10),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = check();
        let status = if o.pass { "PASS" } else { "FAIL" };
        if !o.pass {
            failed += 1;
        }
        println!(
            "{status} criterion {}: {name}: {} [{:.1} s]",
            k + 1,
            o.detail,
            t.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
