use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use fracdiff_core::config::{tower_from_file, tower_hash};
use fracdiff_core::funcspace::{CylFunction, Quotient};
use fracdiff_core::measures::{
    heat_cylinder, heat_cylinder_gamma_route, hypersingular_vs_levy, levy_cylinder, levy_khinchin_check, levy_shells,
    levy_total_outside, rational_string, theorem3_report,
};
use fracdiff_core::process::{build_jump_law, mc_characteristic, poisson_chi_square, simulate_paths};
use fracdiff_core::tower::{build_unramified_tower, min_positive_eigenvalue, spectrum, Tower};
use fracdiff_core::verify::run_all;
use fracdiff_core::vladimirov::{
    apply_hypersingular, apply_spectral, heat_kernel_by_valuation, heat_mass, DEFAULT_SHELL_TOLERANCE,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use crate::report::Report;
use crate::{Common, Format};

/// Unramified tower over Q_2 with residue degrees n!, four levels.
fn default_tower() -> fracdiff_core::Result<Tower> {
    build_unramified_tower(2, &[1, 2, 6, 24])
}

pub fn load_tower(common: &Common) -> Result<Tower> {
    match &common.tower {
        Some(path) => tower_from_file(path).with_context(|| format!("reading tower file {}", path.display())),
        None => Ok(default_tower()?),
    }
}

fn base_config(common: &Common, tower: &Tower, tolerance: f64) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("tower".into(), tower.spec().to_json());
    m.insert("tower_file".into(), common.tower.as_ref().map_or(Value::Null, |p| json!(p.display().to_string())));
    m.insert("tower_hash".into(), json!(tower_hash(tower)));
    m.insert("alpha".into(), json!(common.alpha));
    m.insert("seed".into(), json!(common.seed));
    m.insert("tolerance".into(), json!(tolerance));
    m.insert(
        "format".into(),
        json!(match common.format {
            Format::Csv => "csv",
            Format::Json => "json",
        }),
    );
    m
}

fn c(z: Complex64) -> [Value; 2] {
    [json!(z.re), json!(z.im)]
}

pub fn spectrum_cmd(common: &Common, horizon: Option<usize>, max_value: f64) -> Result<Report> {
    let tower = load_tower(common)?;
    let horizon = horizon.unwrap_or(tower.depth().min(3));
    let mut cfg = base_config(common, &tower, 0.0);
    cfg.insert("horizon".into(), json!(horizon));
    cfg.insert("max_value".into(), json!(max_value));
    let mut r = Report::new("spectrum", cfg, vec!["eigenvalue", "exponent", "pairs", "multiplicity"]);
    for e in spectrum(common.alpha, &tower, horizon, max_value)? {
        let pairs: Vec<String> = e.pairs.iter().map(|(n, big_n)| format!("{n}:{big_n}")).collect();
        r.rows.push(vec![
            json!(e.eigenvalue),
            json!(format!("{}/{}", e.exponent.0, e.exponent.1)),
            json!(pairs.join(";")),
            json!(e.multiplicity.to_string()),
        ]);
    }
    let trend: Vec<f64> =
        (1..=horizon).map(|h| min_positive_eigenvalue(common.alpha, &tower, h)).collect::<fracdiff_core::Result<_>>()?;
    r.check("minimal positive eigenvalue non-increasing in horizon", trend.windows(2).all(|w| w[1] <= w[0]));
    r.summary("min_positive_eigenvalue_by_horizon", json!(trend));
    Ok(r)
}

/// Level and radius recorded in a function file header.
fn function_shape(text: &str, is_json: bool) -> Result<(Option<usize>, Option<u32>, Option<String>)> {
    let mut level = None;
    let (mut support, mut inner) = (None, None);
    let mut hash = None;
    if is_json {
        let v: Value = serde_json::from_str(text).context("function file is not valid JSON")?;
        level = v.get("level").and_then(Value::as_u64).map(|x| x as usize);
        support = v.get("support_exponent").and_then(Value::as_i64);
        inner = v.get("inner_exponent").and_then(Value::as_i64);
        hash = v.get("tower_hash").and_then(Value::as_str).map(String::from);
    } else {
        for line in text.lines().filter(|l| l.starts_with('#')) {
            for tok in line.trim_start_matches('#').split_whitespace() {
                match tok.split_once('=') {
                    Some(("level", x)) => level = x.parse().ok(),
                    Some(("support_exponent", x)) => support = x.parse().ok(),
                    Some(("inner_exponent", x)) => inner = x.parse().ok(),
                    Some(("tower", x)) => hash = Some(x.to_string()),
                    _ => {}
                }
            }
        }
    }
    let radius = match (support, inner) {
        (Some(s), Some(i)) if i >= s => Some((i - s) as u32),
        _ => None,
    };
    Ok((level, radius, hash))
}

/// The function to operate on: from `path`, or seeded random values.
fn load_function(
    tower: &Tower,
    path: Option<&Path>,
    level: Option<usize>,
    radius: Option<u32>,
    seed: u64,
    cfg: &mut Map<String, Value>,
) -> Result<CylFunction> {
    let Some(path) = path else {
        let (n, l) = (level.unwrap_or(1), radius.unwrap_or(4));
        let q = Quotient::new(tower, n, l)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        cfg.insert("function".into(), json!("random"));
        cfg.insert("level".into(), json!(n));
        cfg.insert("radius".into(), json!(l));
        let values = (0..q.size()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        return Ok(CylFunction::new(q, values)?);
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading function file {}", path.display()))?;
    let is_json = path.extension().is_some_and(|e| e == "json");
    let (file_level, file_radius, file_hash) = function_shape(&text, is_json)?;
    let n = level.or(file_level).context("function level unknown: pass --level or include it in the file header")?;
    let l = radius.or(file_radius).context("function radius unknown: pass --radius or include support/inner exponents")?;
    if let Some(h) = file_hash {
        let ours = tower_hash(tower);
        if h != ours {
            bail!("function file was written for tower {h}, but the loaded tower is {ours}");
        }
    }
    let q: Arc<Quotient> = Quotient::new(tower, n, l)?;
    let f = if is_json {
        CylFunction::from_json(q, &serde_json::from_str(&text)?)?
    } else {
        CylFunction::from_csv(q, &text)?
    };
    cfg.insert("function".into(), json!(path.display().to_string()));
    cfg.insert("level".into(), json!(n));
    cfg.insert("radius".into(), json!(l));
    Ok(f)
}

pub fn apply_cmd(common: &Common, function: Option<&Path>, level: Option<usize>, radius: Option<u32>) -> Result<Report> {
    let tower = load_tower(common)?;
    let tol = common.tolerance.unwrap_or(1e-9);
    let mut cfg = base_config(common, &tower, tol);
    let f = load_function(&tower, function, level, radius, common.seed, &mut cfg)?;
    let q = f.quotient.clone();
    let spectral = apply_spectral(common.alpha, &f)?;
    let hyper = apply_hypersingular(&tower, common.alpha, &f)?;
    let levy: Vec<Complex64> =
        (0..q.size()).map(|y| Ok(hypersingular_vs_levy(&tower, common.alpha, &f, y)?.1)).collect::<Result<_>>()?;
    let mut r = Report::new(
        "apply",
        cfg,
        vec!["coset", "f_re", "f_im", "spectral_re", "spectral_im", "hypersingular_re", "hypersingular_im", "levy_re", "levy_im"],
    );
    let mut dev: f64 = 0.0;
    for z in 0..q.size() {
        let (a, b, l) = (spectral.values[z], hyper.values[z], levy[z]);
        dev = dev.max((a - b).norm()).max((a - l).norm()).max((b - l).norm());
        let mut row = vec![json!(q.label(z))];
        for v in [f.values[z], a, b, l] {
            row.extend(c(v));
        }
        r.rows.push(row);
    }
    let sup = f.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    r.summary("max_pairwise_deviation", dev);
    r.summary("sup_norm", sup);
    r.check("routes agree within tolerance times the sup norm", dev <= tol * sup);
    Ok(r)
}

pub fn theorem3_cmd(common: &Common, big_n: u64, t: f64, horizon: Option<usize>) -> Result<Report> {
    let tower = load_tower(common)?;
    let horizon = horizon.unwrap_or(tower.depth().min(3));
    let mut cfg = base_config(common, &tower, 0.0);
    cfg.insert("big_n".into(), json!(big_n));
    cfg.insert("t".into(), json!(t));
    cfg.insert("horizon".into(), json!(horizon));
    let rep = theorem3_report(&tower, big_n, t, common.alpha, horizon)?;
    let mut r = Report::new("theorem3", cfg, vec!["n", "mu_exact", "pi", "lower_bound", "log10_ratio"]);
    for row in &rep.rows {
        r.rows.push(vec![json!(row.n), json!(rational_string(&row.mu)), json!(row.pi), json!(row.lower_bound), json!(row.log10_ratio)]);
    }
    r.summary("ratio_increasing", rep.ratio_increasing);
    r.summary("mu_decreasing", rep.mu_decreasing);
    r.summary("witness_threshold", rep.witness_threshold);
    r.summary("witness_reached", rep.witness);
    r.check("heat mass above the lower bound", rep.rows.iter().all(|x| x.pi >= x.lower_bound));
    if rep.rows.len() < 2 {
        r.indeterminate = true;
    } else {
        r.check("log10(pi/mu) strictly increasing", rep.ratio_increasing);
        r.check("mu strictly decreasing", rep.mu_decreasing);
    }
    Ok(r)
}

#[allow(clippy::too_many_arguments)]
pub fn levy_cmd(
    common: &Common,
    level: usize,
    delta: f64,
    lambda_exponent: i64,
    t: f64,
    function: Option<&Path>,
    radius: Option<u32>,
) -> Result<Report> {
    let tower = load_tower(common)?;
    let tol = common.tolerance.unwrap_or(1e-9);
    let mut cfg = base_config(common, &tower, tol);
    cfg.insert("level".into(), json!(level));
    cfg.insert("delta".into(), json!(delta));
    cfg.insert("lambda_exponent".into(), json!(lambda_exponent));
    cfg.insert("t".into(), json!(t));
    let total = levy_total_outside(&tower, level, common.alpha, delta)?;
    let shells = levy_shells(&tower, level, common.alpha, delta)?;
    let lambda = tower.uniformizer_pow(level, -lambda_exponent)?;
    let (lhs, rhs) = levy_khinchin_check(&tower, level, &lambda, t, common.alpha)?;
    let mut r = Report::new("levy", Map::new(), vec!["valuation", "mass"]);
    for (v, m) in shells {
        r.rows.push(vec![json!(v), json!(m)]);
    }
    r.summary("total_mass_outside_delta", total);
    r.summary("levy_khinchin_lhs", lhs);
    r.summary("levy_khinchin_rhs", rhs);
    r.check("Levy-Khinchin identity", (lhs - rhs).abs() <= tol * rhs.abs().max(1.0));
    if let Some(path) = function {
        let f = load_function(&tower, Some(path), Some(level), radius, common.seed, &mut cfg)?;
        let v = levy_cylinder(&tower, common.alpha, t, &f)?;
        r.summary("integral_kernel_route", v.kernel_route);
        r.summary("integral_fourier_route", v.fourier_route);
        r.check("Levy integral routes agree", (v.kernel_route - v.fourier_route).abs() <= tol * v.kernel_route.abs().max(1.0));
    }
    r.config = cfg;
    Ok(r)
}

pub fn heat_cmd(common: &Common, level: usize, big_n: u64, t: f64, shells: u32) -> Result<Report> {
    let tower = load_tower(common)?;
    let tol = common.tolerance.unwrap_or(1e-12);
    let mut cfg = base_config(common, &tower, tol);
    cfg.insert("level".into(), json!(level));
    cfg.insert("big_n".into(), json!(big_n));
    cfg.insert("t".into(), json!(t));
    cfg.insert("shells".into(), json!(shells));
    let lv = tower.level(level)?.clone();
    let p = tower.prime();
    let mut r = Report::new("heat", cfg, vec!["valuation", "gamma", "first_shell", "last_shell", "tail_bound"]);
    let lo = -lv.d;
    let vals = std::iter::once(None).chain((lo..lo + shells as i64).map(Some));
    for v in vals {
        let s = heat_kernel_by_valuation(&lv, p, v, t, common.alpha)?;
        r.rows.push(vec![
            v.map_or(json!("inf"), |x| json!(x)),
            json!(s.total),
            json!(s.first_shell),
            json!(s.last_shell),
            json!(s.tail_bound),
        ]);
    }
    let mass = heat_mass(&lv, p, t, common.alpha)?;
    let closed = heat_cylinder(&tower, level, big_n, t, common.alpha)?;
    let gamma = heat_cylinder_gamma_route(&tower, level, big_n, t, common.alpha)?;
    r.summary("mass", mass);
    r.summary("ball_mass_closed", closed);
    r.summary("ball_mass_kernel_route", gamma);
    r.summary("series_tolerance", DEFAULT_SHELL_TOLERANCE);
    r.check("total mass 1", (mass - 1.0).abs() <= tol);
    r.check("ball mass routes agree", (closed - gamma).abs() <= tol.max(1e-10));
    Ok(r)
}

#[allow(clippy::too_many_arguments)]
pub fn simulate_cmd(
    common: &Common,
    level: usize,
    lambda_exponent: i64,
    t: f64,
    delta: Option<f64>,
    paths: u64,
) -> Result<Report> {
    let tower = load_tower(common)?;
    let tol = common.tolerance.unwrap_or(0.01);
    let lv = tower.level(level)?;
    let delta = delta.unwrap_or_else(|| (tower.prime() as f64).powf(-(lambda_exponent.max(0) as f64) / lv.e as f64));
    let mut cfg = base_config(common, &tower, tol);
    cfg.insert("level".into(), json!(level));
    cfg.insert("lambda_exponent".into(), json!(lambda_exponent));
    cfg.insert("t".into(), json!(t));
    cfg.insert("delta".into(), json!(delta));
    cfg.insert("paths".into(), json!(paths));
    let lambda = tower.uniformizer_pow(level, -lambda_exponent)?;
    let mc = mc_characteristic(&tower, level, &lambda, t, common.alpha, delta, paths, common.seed)?;
    let law = build_jump_law(&tower, level, delta, common.alpha)?;
    let q = Quotient::new(&tower, level, lambda_exponent.max(1) as u32)?;
    let counts: Vec<usize> = simulate_paths(&law, &q, t, common.seed, paths)?.iter().map(|s| s.events.len()).collect();
    let mean = law.rate * t;
    let chi = poisson_chi_square(&counts, mean)?;
    let mut r = Report::new("simulate", cfg, vec!["jumps", "observed", "expected"]);
    let max_k = counts.iter().copied().max().unwrap_or(0);
    let mut pmf = (-mean).exp();
    for k in 0..=max_k {
        if k > 0 {
            pmf *= mean / k as f64;
        }
        let observed = counts.iter().filter(|&&x| x == k).count();
        r.rows.push(vec![json!(k), json!(observed), json!(pmf * paths as f64)]);
    }
    r.summary("rate", law.rate);
    r.summary("estimate_re", mc.estimate_re);
    r.summary("estimate_im", mc.estimate_im);
    r.summary("stderr_re", mc.stderr_re);
    r.summary("stderr_im", mc.stderr_im);
    r.summary("expected", mc.expected);
    r.summary("chi_square_statistic", chi.statistic);
    r.summary("chi_square_dof", chi.dof);
    r.summary("chi_square_p_value", chi.p_value);
    r.check("estimate within 3 standard errors", mc.within_3_stderr);
    r.check("jump counts Poisson at the tolerance level", chi.p_value > tol);
    Ok(r)
}

pub fn verify_all_cmd(common: &Common) -> Result<Report> {
    let mut cfg = Map::new();
    cfg.insert("seed".into(), json!(common.seed));
    let mut r = Report::new("verify-all", cfg, vec!["criterion", "name", "passed", "time_limit", "detail"]);
    for res in run_all(common.seed) {
        // timings go to stderr so the report stays reproducible
        eprintln!("{}", res.line());
        r.check(&format!("criterion {}", res.id), res.passed);
        r.rows.push(vec![json!(res.id), json!(res.name), json!(res.passed), json!(res.time_limit), json!(res.detail)]);
    }
    Ok(r)
}
