//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fail.

use std::time::Instant;

use rotsmooth::counterexamples::{cancel_growth, default_eps_grid, fit_growth, sphere_kernel_integral, CancelExperiment, GrowthModel};
use rotsmooth::homog_dist::{pair_dalpha, pair_qinv, pair_xplus, RadialTestFunction, TestFunction};
use rotsmooth::rotations::{pushforward_check, real_fn, transfer_norm_check, HaarSampler, PushMode};
use rotsmooth::smoothing::{divergence_witness, lhs_identity, verify_identity, FrequencyProfile, ProfileSpec};
use rotsmooth::sphere::{
    chart_formula_pairing, chart_mollified_pairing, l2_norm_singular, ralpha_norm, restrict_symbol, ChartAtlas, RalphaOptions,
    SphereFunction, SphereQuadrature, DEFAULT_LEVELS,
};
use rotsmooth::symbols::HomogeneousSymbol;
use rotsmooth::{Error, C64};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn criterion_1() -> Outcome {
    let mut pass = true;
    let mut lines = Vec::new();
    for &(n, k, alpha) in &[(2usize, 1usize, 0.1), (2, 1, 0.25), (3, 2, 0.6)] {
        let t0 = Instant::now();
        let sym = HomogeneousSymbol::riesz(k, alpha);
        // a non-constant angular part makes the Haar average non-trivial
        let f = FrequencyProfile::new(n, ProfileSpec { angular: vec![0.5], ..Default::default() }).unwrap();
        let opts = RalphaOptions::defaults(n);
        match verify_identity(&sym, &f, n, 0.0, &opts, Some((10_000, 20_240_601))) {
            Ok(r) => {
                let mc = r.mc.as_ref().unwrap().value;
                let secs = t0.elapsed().as_secs_f64();
                let ok = (mc / r.rhs - 1.0).abs() <= 0.02
                    && (r.lhs / r.rhs - 1.0).abs() <= 0.02
                    && (mc / r.lhs - 1.0).abs() <= 0.02
                    && secs <= 120.0;
                pass &= ok;
                lines.push(format!("({n},{k},{alpha}) mc={mc:.6} lhs={:.6} rhs={:.6} {secs:.1}s", r.lhs, r.rhs));
            }
            Err(e) => {
                pass = false;
                lines.push(format!("({n},{k},{alpha}) error: {e}"));
            }
        }
    }
    outcome(pass, lines.join("; "))
}

fn criterion_2() -> Outcome {
    // ∫_{S¹}|cos φ|^{−2α} dφ by scipy adaptive quadrature
    let oracle = [(0.1, 7.358187960811754), (0.25, 10.488230217168484), (0.4, 22.64617395043138)];
    let mut pass = true;
    let mut lines = Vec::new();
    for &(alpha, want) in &oracle {
        let r = restrict_symbol(&HomogeneousSymbol::riesz(1, alpha), 2).unwrap();
        let got = l2_norm_singular(&r, 2, 1, 64, DEFAULT_LEVELS).unwrap().powi(2);
        let rel = (got / want - 1.0).abs();
        pass &= rel <= 1e-6;
        lines.push(format!("α={alpha}: {got:.12} rel {rel:.1e}"));
    }
    outcome(pass, lines.join("; "))
}

fn criterion_3() -> Outcome {
    let sym = HomogeneousSymbol::cauchy();
    let f = FrequencyProfile::default_for(3);
    let opts = RalphaOptions { l: 512, t_sequence: (2..=10).map(|j| 2f64.powi(j)).collect(), levels: DEFAULT_LEVELS };
    match lhs_identity(&sym, &f, 3, 0.25, &opts) {
        Ok(r) => {
            let a = &r.ralpha;
            let pass = a.cauchy && a.truncation_stable && r.rel_diff < 0.01;
            outcome(
                pass,
                format!(
                    "last t-difference {:.3}%, L vs L/2 {:.3}%, reduced {:.6} vs full {:.6} ({:.3}%)",
                    100.0 * a.last_rel_diff,
                    100.0 * a.truncation_rel_diff,
                    r.reduced(),
                    r.full(),
                    100.0 * r.rel_diff
                ),
            )
        }
        Err(e) => outcome(false, format!("error: {e}")),
    }
}

fn criterion_4() -> Outcome {
    let sym = HomogeneousSymbol::riesz(1, 0.75);
    let flagged = matches!(ralpha_norm(&sym, 2, 0.0, &RalphaOptions::defaults(2)), Err(Error::Divergent { .. }));
    let f = FrequencyProfile::default_for(2);
    let eps: Vec<f64> = (0..10).map(|j| 10f64.powf(-6.0 + j as f64 / 3.0)).collect();
    match divergence_witness(&sym, &f, &rotsmooth::rotations::Rotation::identity(2), &eps) {
        Ok(w) => {
            let rate = w.fit.as_ref().map(|g| g.estimate).unwrap_or(f64::NAN);
            outcome(flagged && (rate - 0.5).abs() <= 0.05, format!("divergent flag {flagged}, fitted rate {rate:.4}"))
        }
        Err(e) => outcome(false, format!("divergent flag {flagged}, witness error: {e}")),
    }
}

fn criterion_5() -> Outcome {
    let grid = default_eps_grid();
    let mut pass = true;
    let mut lines = Vec::new();
    for &(n, k, alpha, model) in &[
        (2usize, 1usize, 0.75, GrowthModel::Power),
        (3, 2, 1.5, GrowthModel::Power),
        (2, 1, 0.5, GrowthModel::Log),
        (3, 2, 1.0, GrowthModel::Log),
    ] {
        let t0 = Instant::now();
        let series: Vec<(f64, f64)> = grid.iter().map(|&e| (e, sphere_kernel_integral(n, k, alpha, e).unwrap())).collect();
        let fit = fit_growth(&series, model).unwrap();
        let secs = t0.elapsed().as_secs_f64();
        let ok = match model {
            GrowthModel::Power => {
                let target = 2.0 * alpha - k as f64;
                ((fit.estimate - target) / target).abs() <= 0.05
            }
            GrowthModel::Log => fit.spread <= 0.10,
        } && secs <= 60.0;
        pass &= ok;
        lines.push(match model {
            GrowthModel::Power => format!("(k={k},α={alpha}) exponent {:.4}", fit.estimate),
            GrowthModel::Log => format!("(k={k},α={alpha}) value/log(1/ε) spread {:.2}%", 100.0 * fit.spread),
        });
    }
    outcome(pass, lines.join("; "))
}

fn criterion_6() -> Outcome {
    let n_list: Vec<f64> = (4..=12).map(|j| 2f64.powi(j)).collect();
    let run =
        |sym| cancel_growth(&CancelExperiment { sym, n: 2, delta: 1.0, t: 16.0, n_list: n_list.clone(), l: 64, levels: DEFAULT_LEVELS });
    let (bad, good) = match (run(HomogeneousSymbol::riesz(1, 1.0)), run(HomogeneousSymbol::transport())) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return outcome(false, format!("error: {e}")),
    };
    let growth_ok = bad.slope > 0.0 && bad.b > 0.0 && bad.bound_margin(0.8) >= 0.0;
    let d_max = good.rows.iter().map(|r| r.d_norm).fold(0.0, f64::max);
    let control_ok = d_max < 1e-6 && good.slope.abs() <= 1e-3;
    outcome(
        growth_ok && control_ok,
        format!(
            "|η|: slope {:.4}, A {:.4}, B {:.4}, margin {:.4}; iη: max d-norm {d_max:.1e}, slope {:.2e}",
            bad.slope,
            bad.a,
            bad.b,
            bad.bound_margin(0.8),
            good.slope
        ),
    )
}

fn criterion_7() -> Outcome {
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    let x = pair_xplus(-1.0, &RadialTestFunction::gaussian(0.0, 1.0, 1.0)).unwrap().value.re;
    let want = 0.5 * (2f64.ln() - EULER_GAMMA);
    let xplus_ok = (x - want).abs() <= 1e-8;

    let phi1 = TestFunction::with_poly(vec![0.3], 1.2, vec![(vec![0], C64::new(1.0, 0.0)), (vec![1], C64::new(0.5, -0.2))]);
    let phi2 = TestFunction::with_poly(
        vec![0.3, -0.4],
        1.1,
        vec![(vec![0, 0], C64::new(1.0, 0.0)), (vec![1, 0], C64::new(0.4, 0.0)), (vec![0, 1], C64::new(0.0, -0.3))],
    );
    let compliant = [
        HomogeneousSymbol::riesz(1, 0.25),
        HomogeneousSymbol::riesz(1, 0.75),
        HomogeneousSymbol::riesz(1, 1.5),
        HomogeneousSymbol::riesz(1, 2.5),
        HomogeneousSymbol::riesz(2, 0.6),
        HomogeneousSymbol::riesz(2, 1.0),
        HomogeneousSymbol::riesz(2, 2.5),
        HomogeneousSymbol::transport(),
        HomogeneousSymbol::cauchy(),
    ];
    let mut max_res: f64 = 0.0;
    for sym in &compliant {
        let phi = if sym.k == 1 { &phi1 } else { &phi2 };
        let base = pair_qinv(sym, phi).unwrap().value;
        for &l in &[0.25, 0.5, 2.0, 4.0] {
            let v = pair_qinv(sym, &phi.dilate(l)).unwrap().value;
            let expect = base * l.powf(sym.alpha);
            max_res = max_res.max((v - expect).norm() / expect.norm());
        }
    }
    let sym = HomogeneousSymbol::riesz(1, 1.0);
    let base = pair_qinv(&sym, &phi1).unwrap().value;
    let mut ledger_res: f64 = 0.0;
    for &l in &[0.25, 0.5, 2.0, 4.0] {
        let d = phi1.dilate(l);
        // L(φ) = ∫ log|η|/q (η·∇)φ = −⟨q⁻¹, φ⟩ for j = 0
        let lhs = -base;
        let rhs = (-pair_qinv(&sym, &d).unwrap().value + pair_dalpha(&sym, &d).unwrap().value * l.ln()) / l;
        ledger_res = ledger_res.max((rhs - lhs).norm() / lhs.norm());
    }
    outcome(
        xplus_ok && max_res < 1e-6 && ledger_res < 1e-6,
        format!("x₊^{{−1}} error {:.1e}; homogeneity residual {max_res:.1e}; |η| ledger residual {ledger_res:.1e}", (x - want).abs()),
    )
}

fn criterion_8() -> Outcome {
    let count = 100_000;
    let mut pass = true;
    let mut worst: f64 = 0.0;
    let mut worst_mode: f64 = 0.0;
    type F = Box<dyn Fn(&[f64]) -> f64 + Sync>;
    let family = || -> Vec<F> {
        vec![
            Box::new(|t: &[f64]| t[0] * t[0]),
            Box::new(|t: &[f64]| t[0].abs().powf(-0.25)),
            Box::new(|t: &[f64]| t[1].exp()),
            Box::new(|t: &[f64]| t[t.len() - 1] + 0.5 * t[0] * t[1]),
            Box::new(|t: &[f64]| (1.0 + t[0]).powi(3)),
        ]
    };
    for n in [2usize, 3] {
        let rule = SphereQuadrature::graded(n, 1, 32, DEFAULT_LEVELS).unwrap();
        let mut v = vec![0.0; n];
        v[n - 1] = 1.0;
        for (i, g) in family().into_iter().enumerate() {
            let f = real_fn(g);
            let seed = 1000 + (10 * n + i) as u64;
            let mut s = HaarSampler::new(n, seed).unwrap();
            let col = pushforward_check(&f as &dyn SphereFunction, &rule, PushMode::Column, &mut s, count).unwrap();
            let row = pushforward_check(&f, &rule, PushMode::Row, &mut s, count).unwrap();
            let tr = transfer_norm_check(&f, &rule, &v, &mut s, count).unwrap();
            let mode_z = (col.mc_mean - row.mc_mean) / (col.std_error.powi(2) + row.std_error.powi(2)).sqrt();
            for z in [col.z_score, row.z_score, tr.z_score] {
                worst = worst.max(z.abs());
            }
            worst_mode = worst_mode.max(mode_z.abs());
        }
    }
    pass &= worst < 3.0 && worst_mode < 3.0;
    outcome(pass, format!("max |z| {worst:.2} over 10 functions × 3 checks; max |z| Qe₁ vs Qᵀe₁ {worst_mode:.2}"))
}

fn criterion_9() -> Outcome {
    let mut ident_ok = true;
    let mut min_margin = f64::INFINITY;
    for n in [2usize, 3] {
        let atlas = ChartAtlas::new(n);
        let rad = atlas.v_radius_sq().sqrt();
        // deterministic low-discrepancy points filling V
        let mut count = 0;
        let mut i = 0u64;
        while count < 10_000 {
            i += 1;
            let u = ((i as f64) * 0.618_033_988_749_894_9).fract();
            let w = ((i as f64) * 0.754_877_666_246_692_8).fract();
            let z: Vec<f64> = if n == 2 { vec![rad * (2.0 * u - 1.0)] } else { vec![rad * (2.0 * u - 1.0), rad * (2.0 * w - 1.0)] };
            if !atlas.in_v(&z) {
                continue;
            }
            count += 1;
            for m in 1..=2 * n {
                let j = (m + 1) / 2;
                let th = atlas.inverse(m, &z).unwrap();
                ident_ok &= (th.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-14;
                ident_ok &= atlas.forward(m, &th).unwrap().as_deref() == Some(&z[..]);
                min_margin = min_margin.min(th[j - 1].powi(2) - 0.5 / n as f64);
            }
        }
    }
    let cases: Vec<(HomogeneousSymbol, usize)> = vec![
        (HomogeneousSymbol::riesz(1, 0.25), 2),
        (HomogeneousSymbol::riesz(1, 1.5), 2),
        (HomogeneousSymbol::cauchy(), 3),
        (HomogeneousSymbol::riesz(1, 1.25), 3),
    ];
    let mut worst: f64 = 0.0;
    let mut err = None;
    for (sym, n) in &cases {
        let center = if *n == 2 { vec![0.15] } else { vec![0.15, -0.1] };
        let phi = TestFunction::gaussian(center, 8.0, C64::new(1.0, 0.0));
        for m in 1..=2 * n {
            match (chart_formula_pairing(sym, *n, m, &phi), chart_mollified_pairing(sym, *n, m, &phi, 2f64.powi(9))) {
                (Ok(a), Ok(b)) => worst = worst.max((a - b).norm() / a.norm()),
                (Err(e), _) | (_, Err(e)) => err = Some(e.to_string()),
            }
        }
    }
    outcome(
        ident_ok && min_margin > 0.0 && worst < 0.01 && err.is_none(),
        format!(
            "identities exact: {ident_ok}; min |e_j·φ_m⁻¹(ζ)|² − 1/(2n) = {min_margin:.3e}; worst chart-vs-mollified pairing {:.3}%{}",
            100.0 * worst,
            err.map(|e| format!("; error: {e}")).unwrap_or_default()
        ),
    )
}

fn main() {
    let criteria: [(u32, fn() -> Outcome); 9] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
    ];
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, f) in criteria {
        if !filter.is_empty() && !filter.contains(&i) {
            continue;
        }
        let t0 = Instant::now();
        let o = f();
        if !o.pass {
            failed += 1;
        }
        println!("criterion {i}: {} ({:.1}s) {}", if o.pass { "PASS" } else { "FAIL" }, t0.elapsed().as_secs_f64(), o.detail);
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
