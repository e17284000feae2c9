//! The Gaussian measure `μ`, heat measures `π(t, ·)` and the Lévy measure `Π`
//! evaluated on cylinder sets.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::funcspace::{fourier, CylFunction, Quotient};
use crate::padic::ExtElement;
use crate::tower::{LevelData, Tower};
use crate::vladimirov::{apply_hypersingular, heat_kernel_by_valuation, HypersingularKernel, DEFAULT_SHELL_CAP, DEFAULT_SHELL_TOLERANCE};

/// Singularity witness threshold on `π/μ` at the last level.
pub const WITNESS_THRESHOLD: f64 = 1e6;

fn qpow_rational(q: u64, k: i64) -> BigRational {
    let b = BigRational::from_integer(BigInt::from(q));
    if k >= 0 {
        num_traits::pow(b, k as usize)
    } else {
        num_traits::pow(b.recip(), (-k) as usize)
    }
}

pub fn rational_string(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Cylinder sets on which the measures are evaluated.
#[derive(Clone, Debug)]
pub enum CylinderSet {
    /// `M_n = {‖T_n x‖ ≤ q_n^{d/m - N/f} ‖m_n‖}`.
    Ball { n: usize, big_n: u64 },
    /// `{φ(T_n x) = 1}` for an indicator-type `φ`.
    Indicator(CylFunction),
    /// `V_{δ,n} = {‖T_n x‖ ≥ δ}`.
    Outside { n: usize, delta: f64 },
}

/// `μ(M_n)` through the integration formula: density `q^{-d} ‖m‖^{-m}` times
/// the Haar volume (`vol O = 1`) of the ball `π^{s + N e} O`.
pub fn mu_cylinder(tower: &Tower, n: usize, big_n: u64) -> Result<BigRational> {
    if big_n == 0 {
        return Err(Error::Precondition("N must be >= 1".into()));
    }
    let lv = tower.level(n)?;
    let p = tower.prime();
    let density = qpow_rational(lv.q, -lv.d) * qpow_rational(lv.q, lv.e as i64 * lv.vp_m(p));
    let inner = lv.support_exponent(p) + (big_n * lv.e) as i64;
    Ok(density * qpow_rational(lv.q, -inner))
}

/// Closed shell form of `π(t, M_n)`.
pub fn heat_cylinder(tower: &Tower, n: usize, big_n: u64, t: f64, alpha: f64) -> Result<f64> {
    let lv = tower.level(n)?;
    heat_ball_closed(lv, tower.prime(), big_n, t, alpha)
}

fn check_t_alpha(t: f64, alpha: f64) -> Result<()> {
    if !(t > 0.0) || !(alpha > 0.0) {
        return Err(Error::Precondition(format!("need t > 0 and alpha > 0, got t={t}, alpha={alpha}")));
    }
    Ok(())
}

pub fn heat_ball_closed(lv: &LevelData, p: u64, big_n: u64, t: f64, alpha: f64) -> Result<f64> {
    check_t_alpha(t, alpha)?;
    let q = lv.q as f64;
    let ne = (big_n * lv.e) as i64;
    let mut s = 1.0;
    for j in 1..=ne {
        s += q.powi(j as i32) * (1.0 - 1.0 / q) * (-t * (p as f64).powf(j as f64 * alpha / lv.e as f64)).exp();
    }
    Ok(q.powf(-(ne as f64)) * s)
}

/// `π(t, M_n)` as the integral of the heat kernel over `v(ζ) ≥ N e - d`.
pub fn heat_cylinder_gamma_route(tower: &Tower, n: usize, big_n: u64, t: f64, alpha: f64) -> Result<f64> {
    let lv = tower.level(n)?;
    let p = tower.prime();
    check_t_alpha(t, alpha)?;
    let g0 = heat_kernel_by_valuation(lv, p, None, t, alpha)?.total;
    let q = lv.q as f64;
    let start = (big_n * lv.e) as i64 - lv.d;
    let mut mass = 0.0;
    for v in start..start + DEFAULT_SHELL_CAP as i64 {
        let g = heat_kernel_by_valuation(lv, p, Some(v), t, alpha)?.total;
        mass += q.powf(-v as f64) * (1.0 - 1.0 / q) * g;
        let rest = q.powf(-(v + 1) as f64);
        if rest * (g0 - g).abs() < DEFAULT_SHELL_TOLERANCE {
            return Ok(mass + rest * g0);
        }
    }
    Err(Error::NoConvergence(format!("heat integral at level {n} did not converge")))
}

/// `∫ f dπ(t, ·) = Σ_ξ c(ξ) e^{-t Δ^α(ξ)}` for a cylindrical `f`.
pub fn heat_integral(f: &CylFunction, t: f64, alpha: f64) -> Result<Complex64> {
    check_t_alpha(t, alpha)?;
    let c = fourier(f);
    let q = &f.quotient;
    Ok(c.coeffs.iter().enumerate().map(|(i, v)| v * (-t * q.dual_norm_pow(i, alpha)).exp()).sum())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureRow {
    pub n: usize,
    #[serde(serialize_with = "ser_rational", deserialize_with = "de_rational")]
    pub mu: BigRational,
    pub pi: f64,
    pub lower_bound: f64,
    pub log10_ratio: f64,
}

fn ser_rational<S: serde::Serializer>(r: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&rational_string(r))
}

fn de_rational<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<BigRational, D::Error> {
    let s: String = serde::Deserialize::deserialize(d)?;
    let (a, b) = s.split_once('/').ok_or_else(|| serde::de::Error::custom("expected num/den"))?;
    let parse = |x: &str| x.parse::<BigInt>().map_err(serde::de::Error::custom);
    Ok(BigRational::new(parse(a)?, parse(b)?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureReport {
    pub big_n: u64,
    pub t: f64,
    pub alpha: f64,
    pub rows: Vec<MeasureRow>,
    pub witness_threshold: f64,
    pub ratio_increasing: bool,
    pub mu_decreasing: bool,
    pub witness: bool,
}

impl MeasureReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,mu_exact,pi,lower_bound,log10_ratio\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{:.17e},{:.17e},{:.17e}", r.n, rational_string(&r.mu), r.pi, r.lower_bound, r.log10_ratio);
        }
        out
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).unwrap_or(json!(null))
    }
}

/// `log10 |r|` for a rational that may underflow a double.
fn log10_rational(r: &BigRational) -> f64 {
    let digits = |x: &BigInt| -> f64 {
        let s = x.magnitude().to_string();
        let lead: f64 = s[..s.len().min(17)].parse().unwrap_or(0.0);
        lead.log10() + (s.len() - s.len().min(17)) as f64
    };
    digits(r.numer()) - digits(r.denom())
}

/// Per-level `μ(M_n)`, `π(t, M_n)`, lower bound and `log10(π/μ)`.
pub fn theorem3_report(tower: &Tower, big_n: u64, t: f64, alpha: f64, horizon: usize) -> Result<MeasureReport> {
    if horizon == 0 || horizon > tower.depth() {
        return Err(Error::Precondition(format!("horizon {horizon} outside 1..={}", tower.depth())));
    }
    let q1 = tower.prime() as f64;
    let lower = (1.0 - 1.0 / q1) * (-t * q1.powf(alpha * big_n as f64)).exp();
    let rows = (1..=horizon)
        .into_par_iter()
        .map(|n| {
            let mu = mu_cylinder(tower, n, big_n)?;
            let pi = heat_cylinder(tower, n, big_n, t, alpha)?;
            Ok(MeasureRow { n, log10_ratio: pi.log10() - log10_rational(&mu), mu, pi, lower_bound: lower })
        })
        .collect::<Result<Vec<_>>>()?;
    let ratio_increasing = rows.windows(2).all(|w| w[1].log10_ratio > w[0].log10_ratio);
    let mu_decreasing = rows.windows(2).all(|w| w[1].mu < w[0].mu);
    let last = rows.last().map_or(f64::NEG_INFINITY, |r| r.log10_ratio);
    Ok(MeasureReport {
        big_n,
        t,
        alpha,
        witness_threshold: WITNESS_THRESHOLD,
        ratio_increasing,
        mu_decreasing,
        witness: ratio_increasing && last > WITNESS_THRESHOLD.log10(),
        rows,
    })
}

/// Two evaluations of `∫ φ dΠ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevyValue {
    /// Coset sum against the Lévy density.
    pub kernel_route: f64,
    /// `-Σ_ξ c(ξ) Δ^α(ξ)`.
    pub fourier_route: f64,
}

fn coset_volume(q: &Quotient) -> f64 {
    (q.q as f64).powf(-((q.support + q.radius as i64) as f64))
}

/// `∫ φ dΠ(t, ·)` for `φ` vanishing on the zero coset.
pub fn levy_cylinder(tower: &Tower, alpha: f64, t: f64, phi: &CylFunction) -> Result<LevyValue> {
    check_t_alpha(t, alpha)?;
    let q = &phi.quotient;
    if phi.values[0].norm() != 0.0 {
        return Err(Error::Precondition("support of φ touches 0".into()));
    }
    let k = HypersingularKernel::new(tower.level(q.n)?, tower.prime(), alpha)?;
    let vol = coset_volume(q);
    let kernel_route: Complex64 = (1..q.size())
        .map(|x| phi.values[x] * (vol * k.levy_density(q.rep_valuation(x).unwrap_or(0))))
        .sum();
    let c = fourier(phi);
    let fourier_route: Complex64 = -c.coeffs.iter().enumerate().map(|(i, v)| v * q.dual_norm_pow(i, alpha)).sum::<Complex64>();
    Ok(LevyValue { kernel_route: t * kernel_route.re, fourier_route: t * fourier_route.re })
}

/// `(∫ [χ(<λ,x>) - 1] dΠ(t, ·), -t ‖λ‖^α or 0)` at level `n`.
pub fn levy_khinchin_check(tower: &Tower, n: usize, lambda: &ExtElement, t: f64, alpha: f64) -> Result<(f64, f64)> {
    check_t_alpha(t, alpha)?;
    let ch = tower.chain();
    let lv = tower.level(n)?;
    let need = if lambda.is_zero() { 0 } else { (-ch.valuation_normalized(lambda)?).max(0) as u32 };
    let rhs = if need == 0 {
        0.0
    } else {
        -t * (tower.prime() as f64).powf(alpha * (need as f64 / lv.e as f64))
    };
    let radius = need.max(1);
    if (lv.q as u128).saturating_pow(radius) > crate::funcspace::MAX_QUOTIENT as u128 {
        return Ok((levy_khinchin_shells(tower, n, need, t, alpha)?, rhs));
    }
    let q = Quotient::new(tower, n, radius)?;
    let xi = q.locate_dual(tower, lambda)?;
    let k = HypersingularKernel::new(lv, tower.prime(), alpha)?;
    let vol = coset_volume(&q);
    let lhs: Complex64 = (1..q.size())
        .map(|x| (q.character(xi, x) - 1.0) * (vol * k.levy_density(q.rep_valuation(x).unwrap_or(0))))
        .sum();
    Ok((t * lhs.re, rhs))
}

/// Shell form of the Lévy-Khinchin integral for `‖λ‖ = p^{J/e}`: on the shell
/// `v = s + k` the character averages to 1 (`k ≥ J`), `-1/(q-1)` (`k = J-1`) or 0.
pub fn levy_khinchin_shells(tower: &Tower, n: usize, big_j: u32, t: f64, alpha: f64) -> Result<f64> {
    let lv = tower.level(n)?;
    let p = tower.prime();
    let k = HypersingularKernel::new(lv, p, alpha)?;
    let s = lv.support_exponent(p);
    let q = lv.q as f64;
    let total: f64 = (0..big_j as i64)
        .map(|j| {
            let v = s + j;
            let avg = if j == big_j as i64 - 1 { -1.0 / (q - 1.0) } else { 0.0 };
            q.powf(-v as f64) * (1.0 - 1.0 / q) * k.levy_density(v) * (avg - 1.0)
        })
        .sum();
    Ok(t * total)
}

/// Largest valuation `v` with `p^{-v/e} ≥ δ`.
fn max_valuation(lv: &LevelData, p: u64, delta: f64) -> i64 {
    let x = -(lv.e as f64) * delta.ln() / (p as f64).ln();
    (x + 1e-9).floor() as i64
}

/// `Π(V_{δ,n})`: Lévy mass of `{x ∈ S^(n) : ‖x‖ ≥ δ}`, a finite shell sum.
pub fn levy_total_outside(tower: &Tower, n: usize, alpha: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Precondition(format!("need 0 < δ ≤ 1, got {delta}")));
    }
    let lv = tower.level(n)?;
    let p = tower.prime();
    let k = HypersingularKernel::new(lv, p, alpha)?;
    let q = lv.q as f64;
    let total: f64 = (lv.support_exponent(p)..=max_valuation(lv, p, delta))
        .map(|v| q.powf(-v as f64) * (1.0 - 1.0 / q) * k.levy_density(v))
        .sum();
    if !total.is_finite() {
        return Err(Error::CapExceeded { requested: u128::MAX, cap: u64::MAX as u128 });
    }
    Ok(total)
}

/// `Π` restricted to the shells `‖x‖ ≥ δ`, as a distribution over valuations.
pub fn levy_shells(tower: &Tower, n: usize, alpha: f64, delta: f64) -> Result<Vec<(i64, f64)>> {
    let lv = tower.level(n)?;
    let p = tower.prime();
    let k = HypersingularKernel::new(lv, p, alpha)?;
    let q = lv.q as f64;
    Ok((lv.support_exponent(p)..=max_valuation(lv, p, delta))
        .map(|v| (v, q.powf(-v as f64) * (1.0 - 1.0 / q) * k.levy_density(v)))
        .collect())
}

/// `(D^α f)(y)` by the hypersingular sum against `∫ [f(y) - f(x + y)] dΠ(x)`.
pub fn hypersingular_vs_levy(tower: &Tower, alpha: f64, f: &CylFunction, y: usize) -> Result<(Complex64, Complex64)> {
    let q = &f.quotient;
    let lhs = apply_hypersingular(tower, alpha, f)?.values[y];
    let k = HypersingularKernel::new(tower.level(q.n)?, tower.prime(), alpha)?;
    let vol = coset_volume(q);
    let rhs = (1..q.size())
        .map(|x| {
            let x_plus_y = q.sub_index(y, q.sub_index(0, x));
            (f.values[y] - f.values[x_plus_y]) * (vol * k.levy_density(q.rep_valuation(x).unwrap_or(0)))
        })
        .sum();
    Ok((lhs, rhs))
}

/// Evaluate `μ` on a cylinder set.
pub fn mu_of(tower: &Tower, set: &CylinderSet) -> Result<f64> {
    match set {
        CylinderSet::Ball { n, big_n } => Ok(mu_cylinder(tower, *n, *big_n)?.to_f64().unwrap_or(0.0)),
        CylinderSet::Indicator(f) => Ok(crate::funcspace::mu_integral(f).re),
        CylinderSet::Outside { n, delta } => {
            let lv = tower.level(*n)?;
            let p = tower.prime();
            let s = lv.support_exponent(p);
            let inner = (max_valuation(lv, p, *delta) + 1).max(s);
            Ok(1.0 - (lv.q as f64).powf(-((inner - s) as f64)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::refine_level;
    use crate::tower::{build_cyclotomic_tower, build_unramified_tower, TowerSpec};
    use num_traits::{One, Zero};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mu_examples() {
        let q2 = Tower::new(TowerSpec::base(2)).unwrap();
        assert_eq!(mu_cylinder(&q2, 1, 1).unwrap(), BigRational::new(1.into(), 2.into()));
        let u = build_unramified_tower(2, &[1, 2, 6, 24]).unwrap();
        let expect = [2i64, 4, 64];
        for (n, e) in expect.iter().enumerate() {
            assert_eq!(mu_cylinder(&u, n + 1, 1).unwrap(), BigRational::new(1.into(), (*e).into()));
        }
        assert_eq!(mu_cylinder(&u, 4, 1).unwrap(), BigRational::new(1.into(), BigInt::from(1u64 << 24)));
        // wild levels: q_1^{-N m} in every case
        let c = build_cyclotomic_tower(2, 5).unwrap();
        for lv in c.levels() {
            for big_n in 1..3 {
                let got = mu_cylinder(&c, lv.n, big_n).unwrap();
                assert_eq!(got, qpow_rational(2, -((big_n * lv.m) as i64)));
            }
        }
    }

    #[test]
    fn heat_examples() {
        let q2 = Tower::new(TowerSpec::base(2)).unwrap();
        let v = heat_cylinder(&q2, 1, 1, 1.0, 1.0).unwrap();
        assert!((v - 0.5 * (1.0 + (-2.0f64).exp())).abs() < 1e-15);
        assert!((v - 0.567668).abs() < 1e-6);
        assert!((heat_cylinder(&q2, 1, 1, 200.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn heat_three_routes() {
        for t in [Tower::new(TowerSpec::eisenstein_over_qp(2, &[-2, 0])).unwrap(), build_cyclotomic_tower(3, 3).unwrap(), build_unramified_tower(2, &[1, 2]).unwrap()] {
            let p = t.prime();
            for lv in t.levels() {
                for (big_n, tt, alpha) in [(1u64, 1.0, 1.0), (1, 0.3, 2.0), (2, 0.7, 0.6)] {
                    let closed = heat_cylinder(&t, lv.n, big_n, tt, alpha).unwrap();
                    let gamma = heat_cylinder_gamma_route(&t, lv.n, big_n, tt, alpha).unwrap();
                    assert!((closed - gamma).abs() < 1e-11, "level {} N {big_n}", lv.n);
                    let lb = (1.0 - 1.0 / p as f64) * (-tt * (p as f64).powf(alpha * big_n as f64)).exp();
                    assert!(closed >= lb);
                    let l = (big_n * lv.e) as u32;
                    if (lv.q as u128).pow(l) <= 1024 {
                        let q = Quotient::new(&t, lv.n, l).unwrap();
                        let ind = CylFunction::indicator_ball(q, l as i64);
                        let fourier_side = heat_integral(&ind, tt, alpha).unwrap();
                        assert!((fourier_side.re - closed).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn theorem3_table() {
        let u = build_unramified_tower(2, &[1, 2, 6, 24]).unwrap();
        let r = theorem3_report(&u, 1, 1.0, 1.0, 3).unwrap();
        assert!(r.rows.iter().all(|row| row.pi >= 0.0676 && (row.lower_bound - 0.5 * (-2.0f64).exp()).abs() < 1e-15));
        assert!(r.rows[2].pi * 64.0 > 4.0);
        assert!(r.ratio_increasing && r.mu_decreasing);
        assert!(!r.witness);
        let r4 = theorem3_report(&u, 1, 1.0, 1.0, 4).unwrap();
        assert!(r4.witness, "{:?}", r4.rows.last());
        let csv = r4.to_csv();
        assert!(csv.starts_with("n,mu_exact,pi,lower_bound,log10_ratio\n1,1/2,"));
        let back: MeasureReport = serde_json::from_value(r4.to_json()).unwrap();
        assert_eq!(back.rows[3].mu, r4.rows[3].mu);
    }

    #[test]
    fn levy_examples() {
        let q2 = Tower::new(TowerSpec::base(2)).unwrap();
        let q = Quotient::new(&q2, 1, 4).unwrap();
        let zero = CylFunction::constant(q.clone(), Complex64::zero());
        assert_eq!(levy_cylinder(&q2, 1.0, 1.0, &zero).unwrap().kernel_route, 0.0);
        let shell = CylFunction::from_fn(q.clone(), |i| if q.rep_valuation(i) == Some(0) { Complex64::one() } else { Complex64::zero() });
        let v = levy_cylinder(&q2, 1.0, 1.0, &shell).unwrap();
        assert!(v.kernel_route > 0.0 && (v.kernel_route - v.fourier_route).abs() < 1e-9);
        assert!((v.kernel_route - 1.0).abs() < 1e-12);
        let v3 = levy_cylinder(&q2, 1.0, 3.0, &shell).unwrap();
        assert!((v3.kernel_route - 3.0 * v.kernel_route).abs() < 1e-12);
        let outer = levy_total_outside(&q2, 1, 1.0, 1.0).unwrap();
        let half = levy_total_outside(&q2, 1, 1.0, 0.5).unwrap();
        assert!((outer - 1.0).abs() < 1e-12 && (half - 2.5).abs() < 1e-12);
        assert!((levy_total_outside(&q2, 1, 2.0, 0.5).unwrap() - 9.0).abs() < 1e-12);
        // shell = difference of two totals
        let shell1 = CylFunction::from_fn(q.clone(), |i| if q.rep_valuation(i) == Some(1) { Complex64::one() } else { Complex64::zero() });
        assert!((levy_cylinder(&q2, 1.0, 1.0, &shell1).unwrap().kernel_route - (half - outer)).abs() < 1e-12);
        let touching = CylFunction::constant(q.clone(), Complex64::one());
        assert!(levy_cylinder(&q2, 1.0, 1.0, &touching).is_err());
    }

    #[test]
    fn levy_positive_and_two_routes() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for (t, n, l) in [
            (build_cyclotomic_tower(2, 4).unwrap(), 4usize, 5u32),
            (Tower::new(TowerSpec::eisenstein_over_qp(3, &[3, 0])).unwrap(), 2, 4),
        ] {
            let q = Quotient::new(&t, n, l).unwrap();
            for _ in 0..10 {
                let f = CylFunction::from_fn(q.clone(), |i| {
                    if i == 0 { Complex64::zero() } else { Complex64::new(if rng.gen_bool(0.5) { 1.0 } else { 0.0 }, 0.0) }
                });
                let v = levy_cylinder(&t, 1.3, 1.0, &f).unwrap();
                assert!(v.kernel_route >= 0.0);
                assert!((v.kernel_route - v.fourier_route).abs() < 1e-9 * (1.0 + v.kernel_route));
            }
            let mut prev = 0.0;
            for k in 0..6 {
                let delta = (t.prime() as f64).powf(-(k as f64) / t.level(n).unwrap().e as f64);
                let tot = levy_total_outside(&t, n, 1.3, delta).unwrap();
                assert!(tot.is_finite() && tot >= prev);
                prev = tot;
            }
        }
    }

    #[test]
    fn levy_khinchin() {
        let q2 = Tower::new(TowerSpec::base(2)).unwrap();
        let ch = q2.chain();
        let half = ch.pow(&ch.uniformizer(0), -1).unwrap();
        let (l, r) = levy_khinchin_check(&q2, 1, &half, 1.0, 1.0).unwrap();
        assert!((l + 2.0).abs() < 1e-9 && r == -2.0);
        let (l2, _) = levy_khinchin_check(&q2, 1, &half, 2.0, 1.0).unwrap();
        assert!((l2 - 2.0 * l).abs() < 1e-12);
        let (l0, r0) = levy_khinchin_check(&q2, 1, &ch.from_int(0, 3), 1.0, 1.0).unwrap();
        assert!(l0.abs() < 1e-10 && r0 == 0.0);
        let c = build_cyclotomic_tower(2, 4).unwrap();
        let lifts = c.residue_lifts(4).unwrap();
        for j in 1..=12i64 {
            let lam = c.chain().mul(&lifts[1], &c.uniformizer_pow(4, -j).unwrap()).unwrap();
            let (l, r) = levy_khinchin_check(&c, 4, &lam, 0.8, 1.4).unwrap();
            assert!((l - r).abs() < 1e-9 * (1.0 + r.abs()), "j={j} {l} {r}");
            if j <= 5 {
                let shells = levy_khinchin_shells(&c, 4, j as u32, 0.8, 1.4).unwrap();
                assert!((shells - l).abs() < 1e-9 * (1.0 + r.abs()));
            }
        }
    }

    #[test]
    fn generator_against_levy() {
        let t = Tower::new(TowerSpec::eisenstein_over_qp(2, &[-2, 0])).unwrap();
        let q = Quotient::new(&t, 2, 5).unwrap();
        let c = CylFunction::constant(q.clone(), Complex64::new(2.0, 1.0));
        let (a, b) = hypersingular_vs_levy(&t, 1.0, &c, 3).unwrap();
        assert!(a.norm() < 1e-12 && b.norm() < 1e-12);
        let phi = CylFunction::character(q.clone(), 5);
        let norm = q.dual_norm_pow(5, 1.0);
        for y in [0usize, 7, 20] {
            let (a, b) = hypersingular_vs_levy(&t, 1.0, &phi, y).unwrap();
            assert!((a - phi.values[y] * norm).norm() < 1e-9 && (b - phi.values[y] * norm).norm() < 1e-9);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let ind = CylFunction::from_fn(q.clone(), |_| Complex64::new(if rng.gen_bool(0.4) { 1.0 } else { 0.0 }, 0.0));
        for _ in 0..20 {
            let y = rng.gen_range(0..q.size());
            let (a, b) = hypersingular_vs_levy(&t, 0.9, &ind, y).unwrap();
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn cylinder_consistency_across_levels() {
        let u = build_unramified_tower(2, &[1, 2]).unwrap();
        let q = Quotient::new(&u, 1, 3).unwrap();
        let ind = CylFunction::indicator_ball(q.clone(), 1);
        let fine = refine_level(&u, &ind, 2).unwrap();
        assert!((heat_integral(&ind, 0.5, 1.2).unwrap() - heat_integral(&fine, 0.5, 1.2).unwrap()).norm() < 1e-10);
        assert!((mu_of(&u, &CylinderSet::Indicator(ind)).unwrap() - mu_of(&u, &CylinderSet::Indicator(fine.clone())).unwrap()).abs() < 1e-12);
        let shell = CylFunction::from_fn(q.clone(), |i| if q.rep_valuation(i) == Some(1) { Complex64::one() } else { Complex64::zero() });
        let shell_fine = refine_level(&u, &shell, 2).unwrap();
        let a = levy_cylinder(&u, 1.1, 1.0, &shell).unwrap();
        let b = levy_cylinder(&u, 1.1, 1.0, &shell_fine).unwrap();
        assert!((a.kernel_route - b.kernel_route).abs() < 1e-10 && (a.fourier_route - b.fourier_route).abs() < 1e-10);
        assert!((mu_of(&u, &CylinderSet::Ball { n: 1, big_n: 1 }).unwrap() - 0.5).abs() < 1e-15);
        assert!((mu_of(&u, &CylinderSet::Outside { n: 1, delta: 1.0 }).unwrap() - 0.5).abs() < 1e-15);
    }
}
