//! Compound-Poisson simulation of the level-`n` projection of the jump process
//! with jumps truncated to `‖x‖ ≥ δ`.

use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, DiscreteCDF, Poisson};

use crate::error::{Error, Result};
use crate::funcspace::{CylFunction, Quotient};
use crate::measures::{levy_shells, levy_total_outside};
use crate::padic::ExtElement;
use crate::tower::Tower;
use crate::vladimirov::{rho, semigroup_apply};

/// Default cap on the jump rate `Λ`.
pub const DEFAULT_RATE_CAP: f64 = 1e6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpShell {
    /// Valuation of the jumps in this shell.
    pub valuation: i64,
    /// Digit position of the leading digit, `valuation - support`.
    pub position: i64,
    pub mass: f64,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpLaw {
    pub n: usize,
    pub delta: f64,
    pub alpha: f64,
    /// `Λ = Π(V_{δ,n})`.
    pub rate: f64,
    pub shells: Vec<JumpShell>,
}

pub fn build_jump_law(tower: &Tower, n: usize, delta: f64, alpha: f64) -> Result<JumpLaw> {
    build_jump_law_capped(tower, n, delta, alpha, DEFAULT_RATE_CAP)
}

pub fn build_jump_law_capped(tower: &Tower, n: usize, delta: f64, alpha: f64, rate_cap: f64) -> Result<JumpLaw> {
    let rate = levy_total_outside(tower, n, alpha, delta)?;
    if rate > rate_cap {
        return Err(Error::CapExceeded { requested: rate.ceil() as u128, cap: rate_cap as u128 });
    }
    let s = tower.level(n)?.support_exponent(tower.prime());
    let raw = levy_shells(tower, n, alpha, delta)?;
    let total: f64 = raw.iter().map(|(_, m)| m).sum();
    let shells = raw
        .into_iter()
        .map(|(v, mass)| JumpShell { valuation: v, position: v - s, mass, probability: mass / total })
        .collect();
    Ok(JumpLaw { n, delta, alpha, rate, shells })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub seed: u64,
    pub path: u64,
    pub n: usize,
    /// Digits kept per element: the state lives in `π^s O / π^{s + resolution} O`.
    pub resolution: u32,
    /// `(time, jump coset)`.
    pub events: Vec<(f64, usize)>,
    pub terminal: usize,
}

/// One path on `[0, t_end]`, using stream `path` of the generator seeded by `seed`.
pub fn simulate_path(law: &JumpLaw, quotient: &Quotient, t_end: f64, seed: u64, path: u64) -> Result<PathSample> {
    if !(t_end > 0.0) {
        return Err(Error::Precondition(format!("t_end must be positive, got {t_end}")));
    }
    if quotient.n != law.n {
        return Err(Error::LevelMismatch(format!("law at level {}, quotient at level {}", law.n, quotient.n)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    let mut sample = PathSample { seed, path, n: law.n, resolution: quotient.radius, events: Vec::new(), terminal: 0 };
    if law.rate <= 0.0 || law.shells.is_empty() {
        return Ok(sample);
    }
    let wait = Exp::new(law.rate).map_err(|e| Error::Precondition(e.to_string()))?;
    let pick = WeightedIndex::new(law.shells.iter().map(|s| s.probability))
        .map_err(|e| Error::Precondition(e.to_string()))?;
    let q = quotient.q;
    let radius = quotient.radius as i64;
    let mut time = wait.sample(&mut rng);
    while time <= t_end {
        let shell = &law.shells[pick.sample(&mut rng)];
        let jump = if shell.position >= radius {
            0
        } else {
            let mut digits = vec![0usize; radius as usize];
            let k = shell.position as usize;
            digits[k] = rng.gen_range(1..q) as usize;
            for d in digits.iter_mut().skip(k + 1) {
                *d = rng.gen_range(0..q) as usize;
            }
            quotient.index_of_digits(&digits)
        };
        sample.events.push((time, jump));
        sample.terminal = quotient.add_index(sample.terminal, jump);
        time += wait.sample(&mut rng);
    }
    Ok(sample)
}

/// Simulate `paths` independent paths in parallel; results are ordered by path index.
pub fn simulate_paths(law: &JumpLaw, quotient: &Quotient, t_end: f64, seed: u64, paths: u64) -> Result<Vec<PathSample>> {
    (0..paths).into_par_iter().map(|i| simulate_path(law, quotient, t_end, seed, i)).collect()
}

/// `path,time,coset` event log.
pub fn event_log_csv(quotient: &Quotient, samples: &[PathSample]) -> String {
    let mut out = String::from("path,time,coset\n");
    for s in samples {
        for (t, j) in &s.events {
            let _ = writeln!(out, "{},{:.17e},{}", s.path, t, quotient.label(*j));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub n: usize,
    pub t: f64,
    pub alpha: f64,
    pub delta: f64,
    pub seed: u64,
    pub paths: u64,
    pub rate: f64,
    pub estimate_re: f64,
    pub estimate_im: f64,
    pub stderr_re: f64,
    pub stderr_im: f64,
    /// `ρ_α(‖λ‖, t)`.
    pub expected: f64,
    pub within_3_stderr: bool,
}

/// Monte Carlo estimate of `E χ(<λ, X_δ(t)>)` at level `n`.
#[allow(clippy::too_many_arguments)]
pub fn mc_characteristic(
    tower: &Tower,
    n: usize,
    lambda: &ExtElement,
    t: f64,
    alpha: f64,
    delta: f64,
    paths: u64,
    seed: u64,
) -> Result<McReport> {
    if paths < 2 {
        return Err(Error::Precondition("need at least 2 paths".into()));
    }
    let lv = tower.level(n)?;
    let need = if lambda.is_zero() { 0 } else { (-tower.chain().valuation_normalized(lambda)?).max(0) as u32 };
    let norm = (tower.prime() as f64).powf(need as f64 / lv.e as f64);
    if delta > 1.0 / norm * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!("δ = {delta} exceeds ‖λ‖^-1 = {}", 1.0 / norm)));
    }
    let law = build_jump_law(tower, n, delta, alpha)?;
    let q = Quotient::new(tower, n, need.max(1))?;
    let xi = q.locate_dual(tower, lambda)?;
    let values: Vec<Complex64> = simulate_paths(&law, &q, t, seed, paths)?
        .iter()
        .map(|s| q.character(xi, s.terminal))
        .collect();
    let k = paths as f64;
    let mean: Complex64 = values.iter().sum::<Complex64>() / k;
    let var_re = values.iter().map(|v| (v.re - mean.re).powi(2)).sum::<f64>() / (k - 1.0);
    let var_im = values.iter().map(|v| (v.im - mean.im).powi(2)).sum::<f64>() / (k - 1.0);
    let (stderr_re, stderr_im) = ((var_re / k).sqrt(), (var_im / k).sqrt());
    let expected = rho(norm, t, alpha);
    Ok(McReport {
        n,
        t,
        alpha,
        delta,
        seed,
        paths,
        rate: law.rate,
        estimate_re: mean.re,
        estimate_im: mean.im,
        stderr_re,
        stderr_im,
        expected,
        within_3_stderr: (mean.re - expected).abs() <= 3.0 * stderr_re + 1e-12 && mean.im.abs() <= 3.0 * stderr_im + 1e-12,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Goodness of fit of jump counts to `Poisson(mean)`; bins with expected count
/// below 5 are pooled with their neighbours.
pub fn poisson_chi_square(counts: &[usize], mean: f64) -> Result<ChiSquareResult> {
    let total = counts.len() as f64;
    let pois = Poisson::new(mean).map_err(|e| Error::Precondition(e.to_string()))?;
    let max_k = counts.iter().copied().max().unwrap_or(0).max(mean.ceil() as usize + 1);
    let mut observed = vec![0f64; max_k + 1];
    for &c in counts {
        observed[c] += 1.0;
    }
    // last bin collects the upper tail
    let mut expected: Vec<f64> = (0..=max_k).map(|k| pois.pmf(k as u64) * total).collect();
    expected[max_k] = if max_k == 0 { total } else { (1.0 - pois.cdf(max_k as u64 - 1)) * total };
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for k in 0..=max_k {
        o += observed[k];
        e += expected[k];
        if e >= 5.0 {
            bins.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    if e > 0.0 || o > 0.0 {
        match bins.last_mut() {
            Some(last) => {
                last.0 += o;
                last.1 += e;
            }
            None => bins.push((o, e)),
        }
    }
    let statistic: f64 = bins.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = bins.len().saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else {
        1.0 - ChiSquared::new(dof as f64).map_err(|e| Error::Precondition(e.to_string()))?.cdf(statistic)
    };
    Ok(ChiSquareResult { statistic, dof, p_value })
}

/// Symmetry of terminal counts under `z ↦ -z`: chi-square over pairs `{z, -z}`.
pub fn negation_symmetry_test(quotient: &Quotient, samples: &[PathSample]) -> Result<ChiSquareResult> {
    let mut counts = vec![0f64; quotient.size()];
    for s in samples {
        counts[s.terminal] += 1.0;
    }
    let mut statistic = 0.0;
    let mut dof = 0;
    for z in 0..quotient.size() {
        let nz = quotient.neg_index(z);
        if nz > z && counts[z] + counts[nz] > 0.0 {
            statistic += (counts[z] - counts[nz]).powi(2) / (counts[z] + counts[nz]);
            dof += 1;
        }
    }
    let p_value = if dof == 0 {
        1.0
    } else {
        1.0 - ChiSquared::new(dof as f64).map_err(|e| Error::Precondition(e.to_string()))?.cdf(statistic)
    };
    Ok(ChiSquareResult { statistic, dof, p_value })
}

/// Total-variation distance between the empirical terminal law and the heat
/// law on the quotient, with the heuristic bound `4 sqrt(|G| / paths)`.
pub fn terminal_tv_distance(quotient: &Arc<Quotient>, samples: &[PathSample], t: f64, alpha: f64) -> Result<(f64, f64)> {
    let delta0 = CylFunction::from_fn(quotient.clone(), |i| Complex64::new(if i == 0 { 1.0 } else { 0.0 }, 0.0));
    let heat = semigroup_apply(t, alpha, &delta0)?;
    let mut counts = vec![0f64; quotient.size()];
    for s in samples {
        counts[s.terminal] += 1.0;
    }
    let k = samples.len() as f64;
    let tv = 0.5 * counts.iter().zip(&heat.values).map(|(c, h)| (c / k - h.re).abs()).sum::<f64>();
    Ok((tv, 4.0 * (quotient.size() as f64 / k).sqrt()))
}
