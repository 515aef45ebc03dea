//! Command implementations. Each returns whether all of its checks passed.

use std::f64::consts::PI;

use anyhow::{bail, Result};
use serde::Serialize;

use purifylab_core::channels::max_entangled_purification;
use purifylab_core::ensembles::{domain, mp_atom, mp_density, mp_mu, mp_support, sample_choi, sample_haar_unitary, EnsembleSpec, RandomStream};
use purifylab_core::fixtures::{evaluate_all, parse_fixtures, FixtureOutcome};
use purifylab_core::index::formula_index;
use purifylab_core::linalg::{kron, ComplexMatrix};
use purifylab_core::metrics::{
    error_append, error_orbit_numeric, error_pure_output, estimate_moments, estimate_named, ks_distance_mp,
    loglog_slope, mean_stderr, ATOM_THRESHOLD, pooled_scaled_spectrum, relative_frobenius_deviation, second_moment_operator,
    ErrorReport, OrbitOptOptions,
};
use purifylab_core::strategies::{purify_exact, StrategyName};
use purifylab_core::theory;

use crate::config::{Format, RunConfig};
use crate::output::{emit, fmt_num, fmt_opt, plot_path, render_json, CsvTable, VERSION};
use crate::plot::{LineChart, Series};

pub const DEFAULT_FIXTURES: &str = include_str!("../../core/fixtures/golden.json");

fn spec_for(cfg: &RunConfig, d_e: usize) -> Result<EnsembleSpec> {
    Ok(EnsembleSpec::new(cfg.d_i, cfg.d_o, d_e, cfg.seed)?)
}

fn write_plot(cfg: &RunConfig, chart: &LineChart) -> Result<()> {
    if cfg.plot {
        emit(Some(&plot_path(cfg)), &chart.render())?;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub check: String,
    pub expected: f64,
    pub observed: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckResult {
    fn within(check: &str, expected: f64, observed: f64, tolerance: f64) -> Self {
        Self {
            check: check.into(),
            expected,
            observed,
            tolerance,
            passed: (observed - expected).abs() <= tolerance,
        }
    }
}

pub const ALL_CHECKS: [&str; 7] = ["purity", "dep", "avg-ue", "pure-separable", "mp-mu", "orbit", "second-moment"];
const DEFAULT_CHECKS: [&str; 6] = ["purity", "dep", "avg-ue", "pure-separable", "mp-mu", "orbit"];
const ORBIT_INSTANCES: usize = 20;

fn run_check(name: &str, spec: &EnsembleSpec, n: usize) -> Result<Option<CheckResult>> {
    let (di, d_o) = (spec.d_i as f64, spec.d_o as f64);
    Ok(Some(match name {
        "purity" => {
            let m = estimate_moments(spec, n)?;
            CheckResult::within(name, theory::avg_purity(spec), m.purity.mean, 3.0 * m.purity.stderr + 1e-12)
        }
        "dep" => {
            let r = estimate_named(StrategyName::Dep, spec, n)?;
            let exact = theory::eps_dep(spec);
            let worst = r.per_sample.iter().map(|e| (e - exact).abs()).fold(0.0, f64::max);
            CheckResult {
                check: name.into(),
                expected: exact,
                observed: r.mean,
                tolerance: 1e-9,
                passed: worst <= 1e-9 && r.stderr == 0.0,
            }
        }
        "avg-ue" => {
            let r = estimate_named(StrategyName::AvgUe, spec, n)?;
            CheckResult::within(name, theory::eps_avg_ue(spec), r.mean, (3.0 * r.stderr).max(1e-10))
        }
        "pure-separable" => {
            if spec.d_o < spec.d_i {
                return Ok(None);
            }
            let r = estimate_named(StrategyName::PureSeparable, spec, n)?;
            CheckResult::within(name, 2.0 * (di * di - di / d_o), r.mean, 3.0 * r.stderr + 1e-12)
        }
        "mp-mu" => CheckResult::within(name, 8.0 / (3.0 * PI), mp_mu(1.0)?, 1e-10),
        "orbit" => {
            let opts = OrbitOptOptions::default();
            let w = max_entangled_purification(spec.d_i, spec.d_o)?;
            let mut worst: f64 = 0.0;
            for i in 0..n.min(ORBIT_INSTANCES) as u64 {
                let mut rs = RandomStream::in_domain(spec.seed, domain::FIXED, i + 1);
                let (c, v) = sample_choi(spec, &mut rs)?;
                let u = sample_haar_unitary(spec.d_e, &mut rs)?;
                let lam: Vec<f64> = (0..spec.d_e).map(|j| 1.0 / (j + 1) as f64).collect();
                let total: f64 = lam.iter().sum();
                let lam: Vec<f64> = lam.iter().map(|x| x / total).collect();
                let rho = u.matmul(&ComplexMatrix::diag_real(&lam)).matmul(&u.adjoint());
                let q = kron(c.matrix(), &rho);
                let num = error_orbit_numeric(&q, &v, &opts, &mut rs)?;
                worst = worst.max((num.error - error_append(&c, &rho)?).abs());
                let num = error_orbit_numeric(&w.projector(), &v, &opts, &mut rs)?;
                worst = worst.max((num.error - error_pure_output(&c, &w)?).abs());
            }
            CheckResult::within(name, 0.0, worst, 1e-6)
        }
        "second-moment" => {
            let mc = second_moment_operator(spec, n)?;
            let exact = theory::second_moment_closed_form(spec)?;
            CheckResult {
                check: name.into(),
                expected: 0.0,
                observed: relative_frobenius_deviation(&mc, &exact),
                tolerance: 0.03,
                passed: relative_frobenius_deviation(&mc, &exact) < 0.03,
            }
        }
        other => bail!("unknown check '{other}' (known: {})", ALL_CHECKS.join(", ")),
    }))
}

pub fn validate(cfg: &RunConfig) -> Result<bool> {
    let names: Vec<String> = match &cfg.checks {
        Some(c) => c.clone(),
        None => DEFAULT_CHECKS.iter().map(|s| s.to_string()).collect(),
    };
    for n in &names {
        if !ALL_CHECKS.contains(&n.as_str()) {
            bail!("unknown check '{n}' (known: {})", ALL_CHECKS.join(", "));
        }
    }
    let spec = spec_for(cfg, cfg.d_e.start)?;
    let mut results = Vec::new();
    for name in &names {
        if let Some(r) = run_check(name, &spec, cfg.n)? {
            results.push(r);
        }
    }
    let passed = results.iter().all(|r| r.passed);
    let text = match cfg.format {
        Format::Csv => {
            let mut t = CsvTable::new(cfg, &["check", "expected", "observed", "tolerance", "passed"]);
            for r in &results {
                t.push(vec![
                    r.check.clone(),
                    fmt_num(r.expected),
                    fmt_num(r.observed),
                    fmt_num(r.tolerance),
                    r.passed.to_string(),
                ]);
            }
            t.render()
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Body<'a> {
                checks: &'a [CheckResult],
                passed: bool,
            }
            render_json(cfg, Body { checks: &results, passed })?
        }
    };
    emit(cfg.out.as_deref(), &text)?;
    Ok(passed)
}

pub fn sweep(cfg: &RunConfig) -> Result<bool> {
    let mut reports: Vec<ErrorReport> = Vec::new();
    for d_e in cfg.d_e.values() {
        let spec = spec_for(cfg, d_e)?;
        for &name in &cfg.strategies {
            reports.push(estimate_named(name, &spec, cfg.n)?);
        }
    }
    let text = match cfg.format {
        Format::Csv => {
            let mut t = CsvTable::new(cfg, &["d_E", "strategy", "mean", "stderr", "closed_form", "n", "seed"]);
            for r in &reports {
                t.push(vec![
                    r.d_e.to_string(),
                    r.strategy.clone(),
                    fmt_num(r.mean),
                    fmt_num(r.stderr),
                    fmt_opt(r.closed_form),
                    r.n.to_string(),
                    r.seed.to_string(),
                ]);
            }
            t.render()
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Body<'a> {
                rows: &'a [ErrorReport],
            }
            render_json(cfg, Body { rows: &reports })?
        }
    };
    emit(cfg.out.as_deref(), &text)?;
    let series = cfg
        .strategies
        .iter()
        .map(|name| {
            let rows: Vec<&ErrorReport> = reports.iter().filter(|r| r.strategy == name.to_string()).collect();
            Series {
                name: name.to_string(),
                points: rows.iter().map(|r| (r.d_e as f64, r.mean)).collect(),
                errors: Some(rows.iter().map(|r| r.stderr).collect()),
            }
        })
        .collect();
    write_plot(
        cfg,
        &LineChart {
            title: format!("average purification error, d_I = {}, d_O = {}", cfg.d_i, cfg.d_o),
            x_label: "environment dimension d_E".into(),
            y_label: "average error".into(),
            log_x: false,
            log_y: false,
            series,
        },
    )?;
    Ok(true)
}

#[derive(Debug, Clone, Serialize)]
pub struct HistogramRow {
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub center: f64,
    pub empirical_density: f64,
    pub mp_density: f64,
    pub atom_weight: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumSummary {
    pub ratio: f64,
    pub eigenvalues: usize,
    pub empirical_atom: f64,
    pub ks_distance: f64,
    pub rows: Vec<HistogramRow>,
}

pub fn spectrum_summary(spec: &EnsembleSpec, draws: usize, bins: usize) -> Result<SpectrumSummary> {
    let xs = pooled_scaled_spectrum(spec, draws)?;
    let c = spec.system_dim() as f64 / spec.d_e as f64;
    let total = xs.len() as f64;
    let atom = mp_atom(c);
    let (_, hi_support) = mp_support(c);
    let max = xs.iter().copied().fold(0.0, f64::max);
    let hi = hi_support.max(max) * 1.02;
    let width = hi / bins as f64;
    let mut counts = vec![0usize; bins];
    let mut zeros = 0usize;
    for &x in &xs {
        if x <= ATOM_THRESHOLD {
            zeros += 1;
        } else {
            counts[((x / width) as usize).min(bins - 1)] += 1;
        }
    }
    let rows = counts
        .iter()
        .enumerate()
        .map(|(b, &k)| {
            let lo = b as f64 * width;
            let center = lo + 0.5 * width;
            HistogramRow {
                bin_lo: lo,
                bin_hi: lo + width,
                center,
                empirical_density: k as f64 / (total * width),
                mp_density: mp_density(c, center),
                atom_weight: atom,
            }
        })
        .collect();
    Ok(SpectrumSummary {
        ratio: c,
        eigenvalues: xs.len(),
        empirical_atom: zeros as f64 / total,
        ks_distance: ks_distance_mp(&xs, c),
        rows,
    })
}

pub fn spectrum(cfg: &RunConfig) -> Result<bool> {
    let spec = spec_for(cfg, cfg.d_e.start)?;
    let s = spectrum_summary(&spec, cfg.n, cfg.bins)?;
    let text = match cfg.format {
        Format::Csv => {
            let mut t = CsvTable::new(
                cfg,
                &["bin_lo", "bin_hi", "center", "empirical_density", "mp_density", "atom_weight"],
            );
            for r in &s.rows {
                t.push(vec![
                    fmt_num(r.bin_lo),
                    fmt_num(r.bin_hi),
                    fmt_num(r.center),
                    fmt_num(r.empirical_density),
                    fmt_num(r.mp_density),
                    fmt_num(r.atom_weight),
                ]);
            }
            t.trailing_comments = vec![
                format!("ratio={}", fmt_num(s.ratio)),
                format!("eigenvalues={}", s.eigenvalues),
                format!("empirical_atom={}", fmt_num(s.empirical_atom)),
                format!("ks_distance={}", fmt_num(s.ks_distance)),
            ];
            t.render()
        }
        Format::Json => render_json(cfg, &s)?,
    };
    emit(cfg.out.as_deref(), &text)?;
    write_plot(
        cfg,
        &LineChart {
            title: format!("spectrum of d_O·C, ratio {}", fmt_num(s.ratio)),
            x_label: "eigenvalue".into(),
            y_label: "density".into(),
            log_x: false,
            log_y: false,
            series: vec![
                Series {
                    name: "empirical".into(),
                    points: s.rows.iter().map(|r| (r.center, r.empirical_density)).collect(),
                    errors: None,
                },
                Series {
                    name: "limit law".into(),
                    points: s.rows.iter().map(|r| (r.center, r.mp_density)).collect(),
                    errors: None,
                },
            ],
        },
    )?;
    Ok(true)
}

#[derive(Debug, Clone, Serialize)]
pub struct TomoRow {
    pub k: usize,
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TomoSummary {
    pub rows: Vec<TomoRow>,
    pub slope: f64,
    /// Mean error of the exact purifier (the infinite-copy limit).
    pub exact_limit_error: f64,
}

pub fn tomo_summary(spec: &EnsembleSpec, ks: &[usize], n: usize) -> Result<TomoSummary> {
    let rows = ks
        .iter()
        .map(|&k| {
            let r = estimate_named(StrategyName::Tomo { k }, spec, n)?;
            Ok(TomoRow {
                k,
                mean: r.mean,
                stderr: r.stderr,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = rows.iter().map(|r| r.k as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.mean).collect();
    let slope = loglog_slope(&xs, &ys)?;
    let exact: Vec<f64> = (0..n as u64)
        .map(|i| {
            let mut rs = RandomStream::in_domain(spec.seed, domain::SAMPLES, i);
            let (c, _) = sample_choi(spec, &mut rs)?;
            Ok(error_pure_output(&c, &purify_exact(&c, &mut rs)?)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(TomoSummary {
        rows,
        slope,
        exact_limit_error: mean_stderr(&exact).0,
    })
}

pub fn tomo_scaling(cfg: &RunConfig) -> Result<bool> {
    let spec = spec_for(cfg, cfg.d_e.start)?;
    let s = tomo_summary(&spec, &cfg.k, cfg.n)?;
    let text = match cfg.format {
        Format::Csv => {
            let mut t = CsvTable::new(cfg, &["k", "mean", "stderr"]);
            for r in &s.rows {
                t.push(vec![r.k.to_string(), fmt_num(r.mean), fmt_num(r.stderr)]);
            }
            t.push(vec!["slope".into(), fmt_num(s.slope), String::new()]);
            t.trailing_comments = vec![format!("exact_limit_error={}", fmt_num(s.exact_limit_error))];
            t.render()
        }
        Format::Json => render_json(cfg, &s)?,
    };
    emit(cfg.out.as_deref(), &text)?;
    write_plot(
        cfg,
        &LineChart {
            title: format!("estimation error, fitted log-log slope {:.3}", s.slope),
            x_label: "copies k".into(),
            y_label: "average error".into(),
            log_x: true,
            log_y: true,
            series: vec![Series {
                name: "estimate and purify".into(),
                points: s.rows.iter().map(|r| (r.k as f64, r.mean)).collect(),
                errors: Some(s.rows.iter().map(|r| r.stderr).collect()),
            }],
        },
    )?;
    Ok(true)
}

/// Fixture outcomes, or a parse error (usage error for the caller).
pub fn fixtures(text: &str, format: Format) -> Result<(String, bool)> {
    let records = parse_fixtures(text)?;
    let report = evaluate_all(&records);
    let passed = report.all_passed();
    let out = match format {
        Format::Csv => {
            let mut s = format!("# purifylab {VERSION}\n# command=fixtures records={}\n", records.len());
            s.push_str("name,source,passed,detail\n");
            for o in &report.outcomes {
                s.push_str(&fixture_line(o));
            }
            s
        }
        Format::Json => serde_json::to_string_pretty(&report)? + "\n",
    };
    Ok((out, passed))
}

fn fixture_line(o: &FixtureOutcome) -> String {
    let source = serde_json::to_value(o.source)
        .ok()
        .and_then(|v| v.as_str().map(String::from))
        .unwrap_or_default();
    let quote = |s: &str| {
        if s.contains([',', '"']) {
            format!("\"{}\"", s.replace('"', "\"\""))
        } else {
            s.to_string()
        }
    };
    format!("{},{},{},{}\n", quote(&o.name), source, o.passed, quote(&o.detail))
}

pub fn index(format: Format) -> Result<String> {
    let entries = formula_index();
    Ok(match format {
        Format::Csv => {
            let mut s = format!("# purifylab {VERSION}\ntopic,owner,coverage\n");
            for e in entries {
                let cov = serde_json::to_value(e.coverage)?;
                s.push_str(&format!("\"{}\",{},{}\n", e.topic, e.owner, cov.as_str().unwrap_or("")));
            }
            s
        }
        Format::Json => serde_json::to_string_pretty(entries)? + "\n",
    })
}
