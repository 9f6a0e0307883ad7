//! Execution of a [`RunConfig`] into a JSON report and its derived views.

use std::f64::consts::LN_10;
use std::path::{Path, PathBuf};

use eigenprod_core::analysis::{
    fit_decay, find_truncation, lower_bound_experiment, lower_bound_fit, sphere_remark_experiment,
    sphere_rotated_sectoral_samples, DecayOptions, NOISE_FLOOR,
};
use eigenprod_core::coefficients::{expand_product, parseval_report, CoefficientSeries, ProductSpec};
use eigenprod_core::extension::{
    cauchy_estimate_check, compute_extension_params, greens_coefficients, harmonic_extension_flat,
    ExtensionOverrides,
};
use eigenprod_core::manifolds::basis_digest;
use eigenprod_core::remez::{
    default_a_grid, doubling_index, good_set_experiment, lift, remez_fit, Cube, Field, FnField, ModeField,
};
use eigenprod_core::{Error, ManifoldModel, Resolution, SpectralBasis};
use serde::Serialize;
use serde_json::{json, Value};

use crate::cache::{cached_basis, CacheStatus, CACHE_ENV};
use crate::config::{Experiment, RunConfig};
use crate::output::{to_json, write_atomic};
use crate::svg::{render, LogPlot};
use crate::CliError;

pub const REPORT_SCHEMA: &str = "eigenprod-report/1";

/// A finished experiment: the JSON report plus optional CSV/SVG views.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Value,
    pub summary: String,
    pub csv: Option<String>,
    pub svg: Option<String>,
}

impl Outcome {
    pub fn json(&self) -> String {
        to_json(&self.report)
    }
}

fn value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report value serializes")
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Cache directory: `EIGENPROD_CACHE` when set, else the configured one.
pub fn cache_dir(cfg: &RunConfig) -> Option<PathBuf> {
    std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from).or_else(|| cfg.output.cache.as_ref().map(PathBuf::from))
}

struct Ctx {
    cache: Option<PathBuf>,
}

impl Ctx {
    fn basis(&self, model: &ManifoldModel, lambda_max: f64, res: &Resolution) -> Result<SpectralBasis, CliError> {
        let (b, status) = cached_basis(model, lambda_max, res, self.cache.as_deref())?;
        match status {
            CacheStatus::Hit => eprintln!("basis cache hit ({} modes)", b.len()),
            CacheStatus::Miss | CacheStatus::Rebuilt => eprintln!("basis cache stored ({} modes)", b.len()),
            CacheStatus::Disabled => {}
        }
        Ok(b)
    }
}

fn model(cfg: &RunConfig) -> Result<ManifoldModel, CliError> {
    let m = cfg.model.clone().ok_or_else(|| invalid(format!("{} needs a model", cfg.experiment.name())))?;
    m.validate()?;
    Ok(m)
}

fn provenance(basis: &SpectralBasis) -> Value {
    let grid: Vec<usize> = basis.axes().iter().map(|a| a.len()).collect();
    json!({
        "basis_digest": basis_digest(basis),
        "model": basis.model.label(),
        "lambda_max": basis.lambda_max,
        "modes": basis.len(),
        "resolution": value(&basis.resolution),
        "galerkin_n": basis.galerkin_n,
        "grid_sizes": grid,
        "grid_exactness": basis.exactness(),
        "provenance": value(&basis.provenance),
        "version": env!("CARGO_PKG_VERSION"),
    })
}

fn tool_provenance() -> Value {
    json!({ "version": env!("CARGO_PKG_VERSION") })
}

/// Basis for the given factor tokens. Without an explicit `lambda_max`, a
/// small probe basis locates the factors and the cutoff becomes
/// `mult · Σλ`, at least the largest factor eigenvalue.
fn resolve_basis(
    ctx: &Ctx,
    cfg: &RunConfig,
    families: &[Vec<String>],
) -> Result<(SpectralBasis, Vec<ProductSpec>), CliError> {
    let model = model(cfg)?;
    let mut res = cfg.basis.resolution.clone();
    let order = families.iter().map(Vec::len).max().unwrap_or(1);
    res.product_order = res.product_order.max(order);
    let specs_of = |b: &SpectralBasis| -> eigenprod_core::Result<Vec<ProductSpec>> {
        families
            .iter()
            .map(|f| {
                let names: Vec<&str> = f.iter().map(String::as_str).collect();
                ProductSpec::from_names(b, &names)
            })
            .collect()
    };
    let lambda_max = match cfg.basis.lambda_max {
        Some(l) => l,
        None => {
            let mult = cfg.basis.lambda_max_mult.unwrap_or(cfg.experiment.default_lambda_mult());
            if !(mult > 0.0) {
                return Err(invalid(format!("lambda_max_mult {mult} must be positive")));
            }
            let probe_res = Resolution { product_order: 1, grid_exactness: None, galerkin_n: None };
            let mut probe = 2.0;
            let specs = loop {
                let b = eigenprod_core::build_basis(&model, probe, &probe_res)?;
                match specs_of(&b) {
                    Ok(s) => break (s, b),
                    Err(Error::Parameter(_)) if probe < 64.0 => probe *= 2.0,
                    Err(e) => return Err(e.into()),
                }
            };
            let (specs, probe_basis) = specs;
            let top_factor = specs
                .iter()
                .flat_map(|s| s.factors.iter().map(|id| probe_basis.modes[*id].lambda))
                .fold(0.0, f64::max);
            let top_sum = specs.iter().map(|s| s.sum_lambda).fold(0.0, f64::max);
            let l = (mult * top_sum).max(top_factor);
            if l > 0.0 {
                l
            } else {
                1.0
            }
        }
    };
    let basis = ctx.basis(&model, lambda_max, &res)?;
    let specs = specs_of(&basis)?;
    Ok((basis, specs))
}

fn series_value(basis: &SpectralBasis, s: &CoefficientSeries) -> Result<Value, CliError> {
    let (ratio, defect) = parseval_report(s)?;
    let entries: Vec<Value> = s
        .entries
        .iter()
        .map(|e| json!({"index": e.index, "name": basis.modes[e.index].rep.name(), "lambda": e.lambda, "coeff": e.coeff}))
        .collect();
    let names: Vec<String> = s.product.factors.iter().map(|id| basis.modes[*id].rep.name()).collect();
    Ok(json!({
        "factors": s.product.factors,
        "factor_names": names,
        "sum_lambda": s.product.sum_lambda,
        "method": value(&s.method),
        "oracle_gap": s.oracle_gap,
        "f_norm_sq": s.f_norm_sq,
        "parseval_ratio": ratio,
        "parseval_defect": defect,
        "entries": entries,
    }))
}

fn series_csv(s: &CoefficientSeries) -> Result<String, CliError> {
    let mut buf = Vec::new();
    s.write_csv(&mut buf)?;
    Ok(String::from_utf8(buf).expect("CSV is UTF-8"))
}

fn coefficient_svg(s: &CoefficientSeries, title: &str, line: Option<(f64, f64, f64, f64)>) -> String {
    let pts: Vec<(f64, f64)> = s.entries.iter().map(|e| (e.lambda, e.coeff.abs())).collect();
    render(&LogPlot { title, x_label: "λ", y_label: "log|c|", points: &pts, line })
}

fn decay_options(cfg: &RunConfig) -> DecayOptions {
    DecayOptions {
        window: cfg.params.window.map(|w| (w[0], w[1])),
        bin_width: cfg.tolerances.bin_width.unwrap_or(1.0),
        noise_floor: cfg.tolerances.noise_floor.unwrap_or(NOISE_FLOOR),
    }
}

fn single_product(ctx: &Ctx, cfg: &RunConfig) -> Result<(SpectralBasis, ProductSpec, CoefficientSeries), CliError> {
    if cfg.factors.is_empty() {
        return Err(invalid(format!("{} needs --factors", cfg.experiment.name())));
    }
    let (basis, mut specs) = resolve_basis(ctx, cfg, std::slice::from_ref(&cfg.factors))?;
    let spec = specs.remove(0);
    let series = expand_product(&basis, &spec)?;
    Ok((basis, spec, series))
}

fn parse_function<'a>(spec: &str, basis: Option<&'a SpectralBasis>) -> Result<Box<dyn Field + 'a>, CliError> {
    let (kind, arg) = spec.split_once(':').unwrap_or((spec, ""));
    match kind {
        "linear" => Ok(Box::new(FnField::new(1, "x", |x: &[f64]| x[0]))),
        "re-power" => {
            let k: u32 = arg.parse().map_err(|_| invalid(format!("re-power needs an integer degree, got {arg:?}")))?;
            Ok(Box::new(FnField::new(2, format!("Re(x+iy)^{k}"), move |x: &[f64]| {
                let (mut re, mut im) = (1.0f64, 0.0f64);
                for _ in 0..k {
                    (re, im) = (re * x[0] - im * x[1], re * x[1] + im * x[0]);
                }
                re
            })))
        }
        "mode" | "lift" => {
            let basis = basis.ok_or_else(|| invalid("mode functions need a model"))?;
            let id = basis.find(arg)?.id;
            if kind == "mode" {
                Ok(Box::new(ModeField::new(basis, id)?))
            } else {
                Ok(Box::new(lift(basis, id)?))
            }
        }
        _ => Err(invalid(format!("unknown function {spec:?}; use linear, re-power:K, mode:NAME or lift:NAME"))),
    }
}

fn function_basis(ctx: &Ctx, cfg: &RunConfig, spec: &str) -> Result<Option<(SpectralBasis, Value)>, CliError> {
    let (kind, arg) = spec.split_once(':').unwrap_or((spec, ""));
    if kind != "mode" && kind != "lift" {
        return Ok(None);
    }
    let (basis, _) = resolve_basis(ctx, cfg, &[vec![arg.to_string()]])?;
    let p = provenance(&basis);
    Ok(Some((basis, p)))
}

fn a_grid(cfg: &RunConfig) -> Vec<f64> {
    cfg.params.a_grid.clone().unwrap_or_else(default_a_grid)
}

/// Run one experiment without touching the output directory.
pub fn execute(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let ctx = Ctx { cache: cache_dir(cfg) };
    let name = cfg.experiment.name();
    let mut csv = None;
    let mut svg = None;
    let (result, prov, summary) = match cfg.experiment {
        Experiment::Basis => {
            let model = model(cfg)?;
            let lambda_max = cfg.basis.lambda_max.ok_or_else(|| invalid("basis needs --lambda-max"))?;
            let basis = ctx.basis(&model, lambda_max, &cfg.basis.resolution)?;
            let summary = format!("basis: {} modes on {} up to lambda {lambda_max}", basis.len(), model.label());
            (value(&basis.export()), provenance(&basis), summary)
        }
        Experiment::Product => {
            let (basis, _, series) = single_product(&ctx, cfg)?;
            let v = series_value(&basis, &series)?;
            csv = Some(series_csv(&series)?);
            svg = Some(coefficient_svg(&series, "product coefficients", None));
            let summary = format!(
                "product: {} coefficients, parseval defect {:.3e}",
                series.entries.len(),
                v["parseval_defect"].as_f64().unwrap_or(f64::NAN)
            );
            (json!({"series": v}), provenance(&basis), summary)
        }
        Experiment::Decay => {
            let (basis, _, series) = single_product(&ctx, cfg)?;
            let fit = fit_decay(&series, &decay_options(cfg))?;
            let dominates = fit.dominates(&series);
            csv = Some(series_csv(&series)?);
            let line = match (fit.c_hat, fit.envelope_intercept) {
                (Some(c), Some(b)) => Some((b / LN_10, -c / LN_10, fit.window.0, fit.window.1)),
                _ => None,
            };
            svg = Some(coefficient_svg(&series, "coefficient decay", line));
            let summary = if fit.band_limited {
                format!("decay: band-limited, onset {}", fit.onset_lambda)
            } else {
                format!(
                    "decay: c_hat = {:.6}, r2 = {:.6}, onset {:.4}",
                    fit.c_hat.unwrap_or(f64::NAN),
                    fit.r_squared.unwrap_or(f64::NAN),
                    fit.onset_lambda
                )
            };
            (
                json!({"fit": value(&fit), "envelope_dominates": dominates, "series": series_value(&basis, &series)?}),
                provenance(&basis),
                summary,
            )
        }
        Experiment::Truncate => {
            let (basis, _, series) = single_product(&ctx, cfg)?;
            let t = find_truncation(&series, cfg.params.target.unwrap_or(0.99), cfg.params.c2)?;
            let summary = format!("truncate: C5 = {}, captured ratio {:.12}, |A| = {}", t.c5, t.captured_ratio, t.set.len());
            let (ratio, defect) = parseval_report(&series)?;
            (
                json!({
                    "truncation": value(&t),
                    "set_size": t.set.len(),
                    "parseval_ratio": ratio,
                    "parseval_defect": defect,
                    "sum_lambda": series.product.sum_lambda,
                }),
                provenance(&basis),
                summary,
            )
        }
        Experiment::LowerBound => {
            if cfg.params.preset.as_deref() == Some("sphere-rotated") {
                let (lo, hi) = (cfg.params.k_min.unwrap_or(2), cfg.params.k_max.unwrap_or(12));
                let samples = sphere_rotated_sectoral_samples(lo..=hi)?;
                let fit = lower_bound_fit(&samples)?;
                let summary = format!("lower-bound: C3 = {:.6e}, C4 = {:.6e} over {} products", fit.c3_hat, fit.c4_hat, samples.len());
                (json!({"fit": value(&fit), "envelope_below": fit.is_below(), "degrees": [lo, hi]}), tool_provenance(), summary)
            } else if let Some(p) = cfg.params.preset.as_deref() {
                return Err(invalid(format!("unknown preset {p:?}; the built-in family is sphere-rotated")));
            } else {
                let products = cfg.params.products.clone().ok_or_else(|| invalid("lower-bound needs --products or --preset"))?;
                let (basis, specs) = resolve_basis(&ctx, cfg, &products)?;
                let fit = lower_bound_experiment(&basis, &specs)?;
                let summary = format!("lower-bound: C3 = {:.6e}, C4 = {:.6e} over {} products", fit.c3_hat, fit.c4_hat, specs.len());
                (json!({"fit": value(&fit), "envelope_below": fit.is_below()}), provenance(&basis), summary)
            }
        }
        Experiment::RemarkS2 => {
            let (lo, hi) = (cfg.params.k_min.unwrap_or(2), cfg.params.k_max.unwrap_or(20));
            let rep = match cfg.params.exactness {
                None => sphere_remark_experiment(lo..=hi)?,
                Some(e) => {
                    // Same report shape, one grid for every k.
                    let samples = (lo..=hi)
                        .map(|k| Ok((k, eigenprod_core::analysis::sphere_remark_norm(k, Some(e))?)))
                        .collect::<eigenprod_core::Result<Vec<_>>>()?;
                    let fit = lower_bound_fit(&samples.iter().map(|(k, n)| (f64::from(*k), *n)).collect::<Vec<_>>())?;
                    eigenprod_core::analysis::RemarkReport {
                        strictly_decreasing: samples.windows(2).all(|w| w[1].1 < w[0].1),
                        samples,
                        slope: fit.slope,
                        intercept: fit.c3_hat.ln(),
                        r_squared: fit.r_squared,
                    }
                }
            };
            let summary = format!(
                "remark-s2: slope {:.6}, r2 {:.6}, strictly decreasing {}",
                rep.slope, rep.r_squared, rep.strictly_decreasing
            );
            csv = Some(rep.samples.iter().fold(String::from("k,norm\n"), |mut s, (k, n)| {
                s.push_str(&format!("{k},{n:.16e}\n"));
                s
            }));
            let pts: Vec<(f64, f64)> = rep.samples.iter().map(|(k, n)| (f64::from(*k), *n)).collect();
            let (x0, x1) = (f64::from(lo), f64::from(hi));
            svg = Some(render(&LogPlot {
                title: "rotated power product norms",
                x_label: "k",
                y_label: "log norm",
                points: &pts,
                line: Some((rep.intercept / LN_10, rep.slope / LN_10, x0, x1)),
            }));
            (value(&rep), tool_provenance(), summary)
        }
        Experiment::Greens => {
            let (basis, _, series) = single_product(&ctx, cfg)?;
            let overrides = ExtensionOverrides { r2: cfg.params.r2, c6: cfg.params.c6, c7: cfg.params.c7 };
            let params = compute_extension_params(&basis.model, &overrides)?;
            let heights = cfg.params.heights.clone().unwrap_or_else(|| vec![params.t, params.t / 2.0]);
            let top = heights.iter().copied().fold(f64::NAN, f64::max);
            let ext = harmonic_extension_flat(&basis, &series, top)?;
            let mut per_height = Vec::new();
            let mut worst: f64 = 0.0;
            for t in &heights {
                let rec = greens_coefficients(&ext, *t)?;
                let err = rec
                    .iter()
                    .map(|(id, c)| (c - series.entries[*id].coeff).abs() / series.entries[*id].coeff.abs().max(1.0))
                    .fold(0.0, f64::max);
                worst = worst.max(err);
                per_height.push(json!({"T": t, "max_error": err, "modes": rec.len()}));
            }
            let radius = cfg.params.cauchy_radius.unwrap_or(params.r3);
            let delta = cfg.params.cauchy_delta.unwrap_or(params.delta);
            let cauchy = cauchy_estimate_check(&ext, radius, delta)?;
            let residual = ext.laplace_residual(cfg.seed)?;
            let summary = format!("greens: max reconstruction error {worst:.3e}, cauchy ok {}", cauchy.ok);
            (
                json!({
                    "params": value(&params),
                    "extension": value(&ext),
                    "heights": per_height,
                    "green_max_error": worst,
                    "laplace_residual": residual,
                    "cauchy_check": value(&cauchy),
                    "cauchy_radius": radius,
                    "cauchy_delta": delta,
                }),
                provenance(&basis),
                summary,
            )
        }
        Experiment::ExtensionParams => {
            let model = model(cfg)?;
            let overrides = ExtensionOverrides { r2: cfg.params.r2, c6: cfg.params.c6, c7: cfg.params.c7 };
            let p = compute_extension_params(&model, &overrides)?;
            let summary = format!("extension-params: delta0 = {:.10}, delta = {:.10}, T = {:.10}", p.delta0, p.delta, p.t);
            (json!({"params": value(&p), "delta_sq_delta0_minus_one": p.delta * p.delta * p.delta0 - 1.0}), tool_provenance(), summary)
        }
        Experiment::Remez | Experiment::Doubling => {
            let spec = cfg.params.function.clone().unwrap_or_else(|| "linear".into());
            let fb = if cfg.model.is_some() { function_basis(&ctx, cfg, &spec)? } else { None };
            let field = parse_function(&spec, fb.as_ref().map(|(b, _)| b))?;
            let prov = fb.as_ref().map_or_else(tool_provenance, |(_, p)| p.clone());
            let center = cfg.params.center.clone().unwrap_or_else(|| vec![0.0; field.dim()]);
            if cfg.experiment == Experiment::Doubling {
                let rep = doubling_index(field.as_ref(), &center, cfg.params.radius.unwrap_or(0.25))?;
                let summary = format!("doubling: N = {:.9} for {}", rep.n, rep.function);
                (value(&rep), prov, summary)
            } else {
                let cube = Cube::new(center, cfg.params.side.unwrap_or(2.0))?;
                let rep = remez_fit(field.as_ref(), &cube, &a_grid(cfg))?;
                let monotone = rep.measures.windows(2).all(|w| w[1] <= w[0]);
                csv = Some(rep.a_grid.iter().zip(&rep.measures).fold(String::from("a,measure\n"), |mut s, (a, m)| {
                    s.push_str(&format!("{a:.16e},{m:.16e}\n"));
                    s
                }));
                let pts: Vec<(f64, f64)> = rep.a_grid.iter().copied().zip(rep.measures.iter().copied()).collect();
                let line = match (rep.slope, rep.cr_hat) {
                    (Some(sl), Some(cr)) => Some((
                        (cr * rep.cube.measure()).log10(),
                        sl / LN_10,
                        rep.a_grid[0],
                        rep.a_grid[rep.a_grid.len() - 1],
                    )),
                    _ => None,
                };
                svg = Some(render(&LogPlot { title: "sublevel measures", x_label: "a", y_label: "log measure", points: &pts, line }));
                let summary = match rep.beta_hat {
                    Some(b) => format!("remez: N = {:.6}, beta_hat = {b:.6}", rep.n),
                    None => format!("remez: N = {:.6}, sublevel sets unresolved, no fit", rep.n),
                };
                (json!({"report": value(&rep), "bound_dominates": rep.dominates(), "monotone": monotone}), prov, summary)
            }
        }
        Experiment::GoodSet => {
            if cfg.factors.is_empty() {
                return Err(invalid("good-set needs --factors"));
            }
            let (basis, mut specs) = resolve_basis(&ctx, cfg, std::slice::from_ref(&cfg.factors))?;
            let spec = specs.remove(0);
            let center = cfg.params.center.clone().unwrap_or_else(|| vec![0.0; basis.model.dim()]);
            let cube = Cube::new(center, cfg.params.side.unwrap_or(2.0))?;
            let rep = good_set_experiment(&basis, &spec, &cube, &a_grid(cfg))?;
            let summary = format!(
                "good-set: thresholds {:?}, mu(E) = {:.6} of mu(Q/2) = {:.6}",
                rep.thresholds, rep.good_measure, rep.half_cube_measure
            );
            (value(&rep), provenance(&basis), summary)
        }
    };
    let report = json!({
        "schema": REPORT_SCHEMA,
        "experiment": name,
        "config": value(cfg),
        "provenance": prov,
        "result": result,
    });
    Ok(Outcome { report, summary, csv: csv.filter(|_| cfg.output.csv), svg: svg.filter(|_| cfg.output.svg) })
}

/// Paths written by [`write_outcome`].
#[derive(Debug, Clone)]
pub struct Written {
    pub json: PathBuf,
    pub csv: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

fn write_at(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    write_atomic(path, bytes).map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())).into())
}

pub fn write_outcome(cfg: &RunConfig, out: &Outcome, dir: &Path) -> Result<Written, CliError> {
    let stem = cfg.experiment.name();
    let json_path = dir.join(format!("{stem}.json"));
    write_at(&json_path, out.json().as_bytes())?;
    let mut written = Written { json: json_path, csv: None, svg: None };
    if let Some(csv) = &out.csv {
        let p = dir.join(format!("{stem}.csv"));
        write_at(&p, csv.as_bytes())?;
        written.csv = Some(p);
    }
    if let Some(svg) = &out.svg {
        let p = dir.join(format!("{stem}.svg"));
        write_at(&p, svg.as_bytes())?;
        written.svg = Some(p);
    }
    Ok(written)
}

/// Re-run the configuration embedded in a report and compare every field.
pub fn replay(report: &Value) -> Result<Outcome, CliError> {
    if report.get("schema").and_then(Value::as_str) != Some(REPORT_SCHEMA) {
        return Err(invalid(format!("not a {REPORT_SCHEMA} report")));
    }
    let cfg: RunConfig = serde_json::from_value(report["config"].clone())
        .map_err(|e| invalid(format!("embedded config is invalid: {e}")))?;
    let fresh = execute(&cfg)?;
    // Compare in the serialized form so that floats must agree to the last digit.
    if to_json(&fresh.report) != to_json(report) {
        let field = ["config", "provenance", "result"]
            .into_iter()
            .find(|k| to_json(&fresh.report[*k]) != to_json(&report[*k]))
            .unwrap_or("report");
        return Err(CliError::Replay(format!("replayed {field} differs from the stored report")));
    }
    Ok(fresh)
}
