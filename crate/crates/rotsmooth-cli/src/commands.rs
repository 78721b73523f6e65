//! Dispatch from a materialized config to the library, plus the checks each subcommand reports.

use std::collections::BTreeMap;

use rotsmooth::counterexamples::{cancel_growth, loss_lower_bound, CancelExperiment, GrowthModel, LossExperiment};
use rotsmooth::homog_dist::{pair_dalpha, pair_qinv};
use rotsmooth::rotations::{
    invariance_check, pushforward_check, real_fn, transfer_norm_check, uniformity_check, HaarSampler, InvarianceMode, PushMode, Rotation,
};
use rotsmooth::smoothing::{verify_identity, FrequencyProfile};
use rotsmooth::sphere::{ralpha_norm, RalphaOptions, SphereQuadrature};
use rotsmooth::symbols::{check_conditions, HomogeneousSymbol, DEFAULT_TOL_B};
use rotsmooth::Error;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Subcommand};

/// One pass/fail line of the manifest. `value` is compared against `tolerance` with `relation`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: String,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Check { name: name.into(), value, relation: "<=".into(), tolerance, pass: value <= tolerance }
    }

    fn above(name: &str, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, relation: ">".into(), tolerance: bound, pass: value > bound }
    }

    fn at_least(name: &str, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, relation: ">=".into(), tolerance: bound, pass: value >= bound }
    }
}

/// Everything a subcommand produces before anything is written.
pub struct Outcome {
    pub report: serde_json::Value,
    /// (file name, CSV text)
    pub tables: Vec<(String, String)>,
    pub checks: Vec<Check>,
    pub error_estimates: BTreeMap<String, f64>,
}

pub fn table<T: Serialize>(rows: &[T]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("rows are flat records");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("CSV output is UTF-8")
}

fn json<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn symbol(cfg: &ExperimentConfig) -> Result<HomogeneousSymbol, Error> {
    HomogeneousSymbol::from_spec(cfg.symbol.as_ref().expect("materialized"))
}

fn ralpha_options(cfg: &ExperimentConfig) -> RalphaOptions {
    RalphaOptions { l: cfg.l.unwrap(), t_sequence: cfg.t_sequence.clone().unwrap(), levels: cfg.levels.unwrap() }
}

pub fn run(sub: Subcommand, cfg: &ExperimentConfig) -> Result<Outcome, Error> {
    match sub {
        Subcommand::CheckSymbol => check_symbol(cfg),
        Subcommand::Pair => pair(cfg),
        Subcommand::RalphaNorm => ralpha(cfg),
        Subcommand::VerifyIdentity => identity(cfg),
        Subcommand::HaarCheck => haar(cfg),
        Subcommand::CounterexampleLoss => loss(cfg),
        Subcommand::CounterexampleCancel => cancel(cfg),
    }
}

#[derive(Serialize)]
struct CancellationRow {
    beta: String,
    re: f64,
    im: f64,
}

fn check_symbol(cfg: &ExperimentConfig) -> Result<Outcome, Error> {
    let sym = symbol(cfg)?;
    let r = check_conditions(&sym, cfg.samples.unwrap(), &[0.1, 0.5, 2.0, 10.0], cfg.tol.unwrap());
    let rows: Vec<CancellationRow> = r
        .cancellation_values
        .iter()
        .map(|(b, v)| CancellationRow { beta: b.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(" "), re: v.re, im: v.im })
        .collect();
    let checks = vec![
        Check::above("ellipticity_relative_min_modulus", r.min_modulus_on_sphere / r.max_modulus_on_sphere, r.tol_a_relative),
        Check::at_most("homogeneity_residual", r.max_homogeneity_residual, r.tol_b),
    ];
    let mut err = BTreeMap::new();
    err.insert("homogeneity_residual".into(), r.max_homogeneity_residual);
    Ok(Outcome { report: json(&r), tables: vec![("cancellation.csv".into(), table(&rows))], checks, error_estimates: err })
}

#[derive(Serialize)]
struct PairRow {
    lambda: f64,
    qinv_re: f64,
    qinv_im: f64,
    dalpha_re: Option<f64>,
    dalpha_im: Option<f64>,
    homogeneity_residual: f64,
    ledger_residual: Option<f64>,
}

fn pair(cfg: &ExperimentConfig) -> Result<Outcome, Error> {
    let sym = symbol(cfg)?;
    let phi = cfg.test_function.as_ref().unwrap().build(sym.k).map_err(|e| Error::Config(e.0))?;
    let base = pair_qinv(&sym, &phi)?;
    let breaks = sym.integer_excess().is_some();
    let base_d = if breaks { Some(pair_dalpha(&sym, &phi)?) } else { None };
    let passes_c = check_conditions(&sym, 64, &[0.5, 2.0], DEFAULT_TOL_B).passes_c;
    let scale = base.value.norm();
    let mut rows = Vec::new();
    let mut max_quad: f64 = base.quadrature_error_estimate;
    for &l in cfg.lambdas.as_ref().unwrap() {
        let dl = phi.dilate(l);
        let q = pair_qinv(&sym, &dl)?;
        max_quad = max_quad.max(q.quadrature_error_estimate);
        let la = l.powf(-sym.alpha);
        let hom = (base.value - q.value * la).norm() / scale;
        let d = if breaks { Some(pair_dalpha(&sym, &dl)?) } else { None };
        // ⟨q⁻¹, φ⟩ = λ^{−α}(⟨q⁻¹, φ_λ⟩ − log λ·⟨d, φ_λ⟩)
        let ledger = d.map(|d| (base.value - (q.value - d.value * l.ln()) * la).norm() / scale);
        rows.push(PairRow {
            lambda: l,
            qinv_re: q.value.re,
            qinv_im: q.value.im,
            dalpha_re: d.map(|d| d.value.re),
            dalpha_im: d.map(|d| d.value.im),
            homogeneity_residual: hom,
            ledger_residual: ledger,
        });
    }
    let compliant = passes_c != Some(false);
    let checks = if compliant {
        vec![Check::at_most("homogeneity_residual", rows.iter().map(|r| r.homogeneity_residual).fold(0.0, f64::max), 1e-6)]
    } else {
        vec![Check::at_most("ledger_residual", rows.iter().filter_map(|r| r.ledger_residual).fold(0.0, f64::max), 1e-6)]
    };
    let report = serde_json::json!({
        "symbol": sym.name(),
        "passes_c": passes_c,
        "qinv": base,
        "dalpha": base_d,
    });
    let mut err = BTreeMap::new();
    err.insert("quadrature_error_estimate".into(), max_quad);
    Ok(Outcome { report, tables: vec![("dilations.csv".into(), table(&rows))], checks, error_estimates: err })
}

fn ralpha(cfg: &ExperimentConfig) -> Result<Outcome, Error> {
    let sym = symbol(cfg)?;
    let r = ralpha_norm(&sym, cfg.n.unwrap(), cfg.delta.unwrap(), &ralpha_options(cfg))?;
    let checks = vec![
        Check::at_most("t_cauchy_rel_diff", r.last_rel_diff, 0.01),
        Check::at_most("truncation_rel_diff", r.truncation_rel_diff, 0.01),
    ];
    let mut err = BTreeMap::new();
    err.insert("t_cauchy_rel_diff".into(), r.last_rel_diff);
    err.insert("truncation_rel_diff".into(), r.truncation_rel_diff);
    Ok(Outcome { report: json(&r), tables: vec![("convergence.csv".into(), table(&r.table))], checks, error_estimates: err })
}

#[derive(Serialize)]
struct RadialRow {
    r: f64,
    norm: f64,
}

fn identity(cfg: &ExperimentConfig) -> Result<Outcome, Error> {
    let sym = symbol(cfg)?;
    let n = cfg.n.unwrap();
    let f = FrequencyProfile::new(n, cfg.profile.clone().unwrap())?;
    let mc = match cfg.mc_count.unwrap() {
        0 => None,
        c => Some((c, cfg.seed.unwrap())),
    };
    let r = verify_identity(&sym, &f, n, cfg.delta.unwrap(), &ralpha_options(cfg), mc)?;
    let mut checks = vec![
        Check::at_most("lhs_rhs_rel_diff", (r.ratio - 1.0).abs(), 0.02),
        Check::at_most("t_cauchy_rel_diff", r.lhs_report.ralpha.last_rel_diff, 0.01),
    ];
    if let Some(d) = r.mc_rel_diff {
        checks.push(Check::at_most("mc_rhs_rel_diff", d, 0.02));
    }
    let radial: Vec<RadialRow> = r.lhs_report.radial_norms.iter().map(|&(r, norm)| RadialRow { r, norm }).collect();
    let mut err = BTreeMap::new();
    err.insert("deterministic_error".into(), r.deterministic_error);
    err.insert("statistical_error".into(), r.statistical_error);
    Ok(Outcome {
        report: json(&r),
        tables: vec![("convergence.csv".into(), table(&r.lhs_report.ralpha.table)), ("radial.csv".into(), table(&radial))],
        checks,
        error_estimates: err,
    })
}

#[derive(Serialize)]
struct HaarRow {
    check: String,
    estimate: f64,
    reference: f64,
    std_error: f64,
    z_score: f64,
    p_value: Option<f64>,
}

fn haar(cfg: &ExperimentConfig) -> Result<Outcome, Error> {
    let n = cfg.n.unwrap();
    let count = cfg.mc_count.unwrap();
    let mut s = HaarSampler::new(n, cfg.seed.unwrap())?;
    let quad = if n == 2 { SphereQuadrature::circle(256) } else { SphereQuadrature::gauss_product(48, 96) };
    let f = real_fn(|t: &[f64]| t[0].exp() + 2.0 * t[1] * t[1]);
    let g = |q: &Rotation| q.get(0, 0).exp() + q.get(0, 1).powi(2);
    let p = if n == 2 { Rotation::plane(0.7) } else { Rotation::from_quaternion([0.5, 0.5, -0.5, 0.5]) };
    let mut v = vec![0.0; n];
    v[n - 1] = 1.0;

    let uni = uniformity_check(&mut s, count);
    let col = pushforward_check(&f, &quad, PushMode::Column, &mut s, count)?;
    let row = pushforward_check(&f, &quad, PushMode::Row, &mut s, count)?;
    let inv: Vec<_> = [InvarianceMode::Left, InvarianceMode::Right, InvarianceMode::Transpose]
        .into_iter()
        .map(|m| invariance_check(g, &p, m, &mut s, count))
        .collect();
    let tr = transfer_norm_check(&f, &quad, &v, &mut s, count)?;

    let mut rows = vec![
        HaarRow {
            check: "uniformity".into(),
            estimate: uni.chi_square,
            reference: (uni.bins - 1) as f64,
            std_error: f64::NAN,
            z_score: f64::NAN,
            p_value: Some(uni.p_value),
        },
        HaarRow {
            check: "pushforward_column".into(),
            estimate: col.mc_mean,
            reference: col.sphere_mean,
            std_error: col.std_error,
            z_score: col.z_score,
            p_value: None,
        },
        HaarRow {
            check: "pushforward_row".into(),
            estimate: row.mc_mean,
            reference: row.sphere_mean,
            std_error: row.std_error,
            z_score: row.z_score,
            p_value: None,
        },
    ];
    for r in &inv {
        rows.push(HaarRow {
            check: format!("invariance_{}", serde_json::to_value(r.mode).unwrap().as_str().unwrap()),
            estimate: r.mean_transformed,
            reference: r.mean_original,
            std_error: r.std_error,
            z_score: r.z_score,
            p_value: None,
        });
    }
    rows.push(HaarRow {
        check: "transfer_norm".into(),
        estimate: tr.ratio,
        reference: 1.0,
        std_error: tr.std_error,
        z_score: tr.z_score,
        p_value: None,
    });

    let mut checks = vec![Check::above("uniformity_p_value", uni.p_value, 1e-3)];
    for r in rows.iter().filter(|r| r.p_value.is_none()) {
        checks.push(Check::at_most(&format!("{}_abs_z", r.check), r.z_score.abs(), 3.0));
    }
    let report = serde_json::json!({
        "n": n,
        "count": count,
        "seed": cfg.seed,
        "uniformity": uni,
        "pushforward": [col, row],
        "invariance": inv,
        "transfer": tr,
        "draws": s.counter,
    });
    let mut err = BTreeMap::new();
    err.insert("max_abs_z".into(), rows.iter().filter(|r| r.p_value.is_none()).map(|r| r.z_score.abs()).fold(0.0, f64::max));
    Ok(Outcome { report, tables: vec![("haar.csv".into(), table(&rows))], checks, error_estimates: err })
}

fn loss(cfg: &ExperimentConfig) -> Result<Outcome, Error> {
    let sym = symbol(cfg)?;
    let exp =
        LossExperiment { n: cfg.n.unwrap(), k: sym.k, alpha: sym.alpha, radius: cfg.radius.unwrap(), n_list: cfg.n_list.clone().unwrap() };
    let r = loss_lower_bound(&exp)?;
    let checks = match r.fit.model {
        GrowthModel::Power => {
            let target = 2.0 * sym.alpha - sym.k as f64;
            vec![Check::at_most("exponent_rel_error", ((r.fit.estimate - target) / target).abs(), 0.05)]
        }
        GrowthModel::Log => vec![Check::at_most("log_ratio_spread", r.fit.spread, 0.10)],
    };
    let mut err = BTreeMap::new();
    err.insert("fit_residual".into(), r.fit.residual);
    Ok(Outcome { report: json(&r), tables: vec![("loss.csv".into(), table(&r.rows))], checks, error_estimates: err })
}

fn cancel(cfg: &ExperimentConfig) -> Result<Outcome, Error> {
    let sym = symbol(cfg)?;
    let exp = CancelExperiment {
        sym,
        n: cfg.n.unwrap(),
        delta: cfg.delta.unwrap(),
        t: cfg.t.unwrap(),
        n_list: cfg.n_list.clone().unwrap(),
        l: cfg.l.unwrap(),
        levels: cfg.levels.unwrap(),
    };
    let r = cancel_growth(&exp)?;
    let checks = if r.passes_c == Some(false) {
        vec![
            Check::above("slope", r.slope, 0.0),
            Check::above("d_norm_inf", r.b, 0.0),
            Check::at_least("bound_margin_0.8", r.bound_margin(0.8), 0.0),
        ]
    } else {
        vec![
            Check::at_most("d_norm_max", r.rows.iter().map(|w| w.d_norm).fold(0.0, f64::max), 1e-6),
            Check::at_most("abs_slope", r.slope.abs(), 1e-3),
        ]
    };
    let mut err = BTreeMap::new();
    err.insert("slope".into(), r.slope);
    Ok(Outcome { report: json(&r), tables: vec![("cancel.csv".into(), table(&r.rows))], checks, error_estimates: err })
}
