//! The acceptance suite as library functions, shared by the test target and
//! the `verify-all` command.

use std::time::Instant;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::funcspace::{fourier, inverse_fourier, mu_total_mass, plancherel_check, CylFunction, Quotient};
use crate::measures::{heat_cylinder, heat_cylinder_gamma_route, hypersingular_vs_levy, levy_khinchin_check, mu_cylinder, theorem3_report};
use crate::padic::{ExtElement, Padic};
use crate::process::{build_jump_law, mc_characteristic, poisson_chi_square, simulate_paths};
use crate::tower::{build_cyclotomic_tower, build_unramified_tower, spectrum, Tower, TowerSpec};
use crate::vladimirov::{apply_hypersingular, apply_spectral};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
    pub time_limit: f64,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "[{}] criterion {}: {} ({:.2}s, limit {}s) {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.seconds,
            self.time_limit,
            self.detail
        )
    }
}

fn timed(id: u32, name: &str, limit: f64, f: impl FnOnce() -> Result<(bool, String)>) -> CriterionResult {
    let start = Instant::now();
    let (ok, detail) = match f() {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    let seconds = start.elapsed().as_secs_f64();
    CriterionResult {
        id,
        name: name.into(),
        passed: ok && seconds <= limit,
        detail,
        seconds,
        time_limit: limit,
    }
}

fn random_fn(q: &std::sync::Arc<Quotient>, rng: &mut ChaCha8Rng) -> CylFunction {
    let values = (0..q.size()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    CylFunction::new(q.clone(), values).expect("sized")
}

fn sup(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Largest radius with `q^L ≤ cap`.
fn radius_within(q: u64, cap: u128) -> u32 {
    let mut l = 0;
    while (q as u128).pow(l + 1) <= cap {
        l += 1;
    }
    l
}

pub fn sqrt2_tower() -> Result<Tower> {
    Tower::new(TowerSpec::eisenstein_over_qp(2, &[-2, 0]))
}

/// The four route-equivalence towers with their tested levels.
pub fn route_towers() -> Result<Vec<(String, Tower, Vec<usize>)>> {
    Ok(vec![
        ("Q_2".into(), Tower::new(TowerSpec::base(2))?, vec![1]),
        ("unramified quadratic over Q_2".into(), build_unramified_tower(2, &[1, 2])?, vec![1, 2]),
        ("Q_2(sqrt 2)".into(), sqrt2_tower()?, vec![1, 2]),
        ("unramified sextic p=2".into(), build_unramified_tower(2, &[1, 2, 6])?, vec![1, 2, 3]),
    ])
}

pub fn criterion_route_equivalence(seed: u64) -> CriterionResult {
    timed(1, "route equivalence (hypersingular vs spectral)", 60.0, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        let mut worst_abs: f64 = 0.0;
        let mut cases = 0;
        for (_, tower, levels) in route_towers()? {
            let top = *levels.last().expect("levels");
            let lv = tower.level(top)?;
            let q = Quotient::new(&tower, top, radius_within(lv.q, 1024))?;
            for k in 0..100 {
                let alpha = [0.5, 1.0, 1.7, 2.0][k % 4];
                let f = random_fn(&q, &mut rng);
                let a = apply_spectral(alpha, &f)?;
                let b = apply_hypersingular(&tower, alpha, &f)?;
                let dev = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
                worst = worst.max(dev / sup(&f.values));
                worst_abs = worst_abs.max(dev);
                cases += 1;
            }
            for &n in &levels[..levels.len() - 1] {
                let lv = tower.level(n)?;
                let q = Quotient::new(&tower, n, radius_within(lv.q, 256))?;
                let f = random_fn(&q, &mut rng);
                let dev = apply_spectral(1.3, &f)?
                    .values
                    .iter()
                    .zip(&apply_hypersingular(&tower, 1.3, &f)?.values)
                    .map(|(x, y)| (x - y).norm())
                    .fold(0.0, f64::max);
                worst = worst.max(dev / sup(&f.values));
                worst_abs = worst_abs.max(dev);
            }
        }
        Ok((
            worst <= 1e-9 && worst_abs <= 1e-9,
            format!("{cases} functions, max deviation {worst_abs:.3e}, relative to sup norm {worst:.3e}"),
        ))
    })
}

pub fn criterion_eigen_relation() -> CriterionResult {
    timed(2, "eigen-relation on resolved cosets", 30.0, || {
        let towers = vec![
            (Tower::new(TowerSpec::base(2))?, 1usize),
            (Tower::new(TowerSpec::base(3))?, 1),
            (build_unramified_tower(2, &[1, 2])?, 2),
            (sqrt2_tower()?, 2),
        ];
        let mut worst: f64 = 0.0;
        let mut count = 0;
        for (tower, n) in towers {
            let lv = tower.level(n)?;
            // ‖a‖ = p^{J/e} ≤ 16
            let jmax = (lv.e as f64 * 16f64.ln() / (tower.prime() as f64).ln() + 1e-9).floor() as u32;
            let q = Quotient::new(&tower, n, jmax)?;
            let ch = tower.chain();
            for alpha in [0.5, 1.0, 2.0] {
                for xi in 1..q.size() {
                    let a: &ExtElement = q.dual(xi);
                    let v = ch.valuation_normalized(a)?;
                    let expected = (tower.prime() as f64).powf(alpha * (-v) as f64 / lv.e as f64);
                    let phi = CylFunction::character(q.clone(), xi);
                    let dphi = apply_spectral(alpha, &phi)?;
                    let num: Complex64 = dphi.values.iter().zip(&phi.values).map(|(x, y)| x * y.conj()).sum();
                    let den: f64 = phi.values.iter().map(|y| y.norm_sqr()).sum();
                    worst = worst.max((num.re / den / expected - 1.0).abs());
                    count += 1;
                }
            }
        }
        Ok((worst <= 1e-10, format!("{count} (a, α) pairs, max relative error {worst:.3e}")))
    })
}

pub fn criterion_spectrum() -> CriterionResult {
    timed(3, "spectrum structure", 10.0, || {
        let u = build_unramified_tower(2, &[1, 2, 6])?;
        let vals: Vec<f64> = spectrum(1.0, &u, 3, 16.0)?.iter().map(|e| e.eigenvalue).collect();
        let set_ok = vals == vec![0.0, 2.0, 4.0, 8.0, 16.0];
        let c = build_cyclotomic_tower(2, 4)?;
        let quarter = 2f64.powf(0.25);
        let has_quarter = spectrum(1.0, &c, 4, 16.0)?.iter().any(|e| e.eigenvalue == quarter && e.exponent == (1, 4));
        let mults = (1..=3)
            .map(|h| Ok(spectrum(1.0, &u, h, 2.0)?.iter().find(|e| e.eigenvalue == 2.0).map(|e| e.multiplicity.clone())))
            .collect::<Result<Vec<_>>>()?;
        let increasing = mults.iter().all(Option::is_some) && mults.windows(2).all(|w| w[1] > w[0]);
        let shown: Vec<String> = mults.iter().map(|m| m.as_ref().map_or("-".into(), |x| x.to_string())).collect();
        Ok((
            set_ok && has_quarter && increasing,
            format!("values {vals:?}; 2^(1/4) present: {has_quarter}; multiplicity of 2 by horizon {}", shown.join(",")),
        ))
    })
}

pub fn criterion_theorem3() -> CriterionResult {
    timed(4, "singularity witness", 10.0, || {
        let u = build_unramified_tower(2, &[1, 2, 6, 24])?;
        let mut ok = true;
        for (n, fact) in [(1usize, 1u32), (2, 2), (3, 6), (4, 24)] {
            let expect = BigRational::new(BigInt::one(), BigInt::from(2).pow(fact));
            ok &= mu_cylinder(&u, n, 1)? == expect;
        }
        let r = theorem3_report(&u, 1, 1.0, 1.0, 4)?;
        let bound = 0.5 * (-2.0f64).exp();
        ok &= r.rows.iter().all(|row| row.pi >= bound);
        ok &= r.ratio_increasing && r.witness;
        let last = r.rows.last().map_or(0.0, |x| x.log10_ratio);
        Ok((ok, format!("log10 ratios {:?}, final {last:.3}", r.rows.iter().map(|x| (x.log10_ratio * 1e3).round() / 1e3).collect::<Vec<_>>())))
    })
}

pub fn criterion_heat() -> CriterionResult {
    timed(5, "heat measure closed form", 5.0, || {
        let q2 = Tower::new(TowerSpec::base(2))?;
        let closed = heat_cylinder(&q2, 1, 1, 1.0, 1.0)?;
        let gamma = heat_cylinder_gamma_route(&q2, 1, 1, 1.0, 1.0)?;
        let exact = 0.5 * (1.0 + (-2.0f64).exp());
        let ok = (closed - exact).abs() <= 1e-12 && (gamma - exact).abs() <= 1e-12 && (closed - gamma).abs() <= 1e-10;
        Ok((ok, format!("closed {closed:.15}, kernel route {gamma:.15}, exact {exact:.15}")))
    })
}

pub fn criterion_levy_khinchin() -> CriterionResult {
    timed(6, "Levy-Khinchin identity", 10.0, || {
        let mut worst: f64 = 0.0;
        let mut zero_exact = true;
        for tower in [Tower::new(TowerSpec::base(2))?, build_unramified_tower(2, &[1, 2])?] {
            let n = tower.depth();
            let ch = tower.chain();
            let lifts = tower.residue_lifts(n)?;
            let unit = &lifts[lifts.len() - 1];
            for j in 1..=3i64 {
                let lam = ch.mul(unit, &tower.uniformizer_pow(n, -j)?)?;
                for t in [0.5, 1.0, 2.0] {
                    for alpha in [1.0, 2.0] {
                        let (lhs, rhs) = levy_khinchin_check(&tower, n, &lam, t, alpha)?;
                        worst = worst.max((lhs - rhs).abs() / rhs.abs().max(1.0));
                    }
                }
            }
            for lam in [ch.zero(tower.field_of(n)?), unit.clone(), ch.mul(unit, &tower.uniformizer_pow(n, 2)?)?] {
                let (lhs, rhs) = levy_khinchin_check(&tower, n, &lam, 1.0, 1.0)?;
                zero_exact &= lhs == 0.0 && rhs == 0.0;
            }
        }
        Ok((worst <= 1e-9 && zero_exact, format!("max deviation {worst:.3e}; exact zero for ‖λ‖ ≤ 1: {zero_exact}")))
    })
}

pub fn criterion_generator_levy(seed: u64) -> CriterionResult {
    timed(7, "generator as Levy integral", 30.0, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        let cases = vec![
            (Tower::new(TowerSpec::base(2))?, 1usize, 8u32),
            (build_unramified_tower(2, &[1, 2])?, 2, 4),
            (sqrt2_tower()?, 2, 8),
        ];
        for (tower, n, l) in cases {
            let q = Quotient::new(&tower, n, l)?;
            for _ in 0..20 {
                let f = random_fn(&q, &mut rng);
                let alpha = rng.gen_range(0.3..2.5);
                let direct = apply_hypersingular(&tower, alpha, &f)?;
                for _ in 0..20 {
                    let y = rng.gen_range(0..q.size());
                    let (lhs, rhs) = hypersingular_vs_levy(&tower, alpha, &f, y)?;
                    worst = worst.max((lhs - rhs).norm()).max((lhs - direct.values[y]).norm());
                }
            }
        }
        Ok((worst <= 1e-9, format!("max deviation {worst:.3e}")))
    })
}

pub fn criterion_monte_carlo(seed: u64) -> CriterionResult {
    timed(8, "Monte Carlo characteristic function", 120.0, || {
        let q2 = Tower::new(TowerSpec::base(2))?;
        let ch = q2.chain();
        let mut ok = true;
        let mut parts = Vec::new();
        for (j, t, alpha) in [(1i64, 1.0, 1.0), (2, 0.5, 1.0), (1, 1.0, 2.0)] {
            let lam = ch.pow(&ch.uniformizer(0), -j)?;
            let delta = 2f64.powi(-(j as i32));
            let r = mc_characteristic(&q2, 1, &lam, t, alpha, delta, 100_000, seed)?;
            let target = (-t * 2f64.powf(alpha * j as f64)).exp();
            let within = (r.estimate_re - target).abs() <= 3.0 * r.stderr_re;
            let law = build_jump_law(&q2, 1, delta, alpha)?;
            let q = Quotient::new(&q2, 1, j as u32)?;
            let counts: Vec<usize> = simulate_paths(&law, &q, t, seed, 100_000)?.iter().map(|s| s.events.len()).collect();
            let chi = poisson_chi_square(&counts, law.rate * t)?;
            ok &= within && chi.p_value > 0.01;
            parts.push(format!(
                "(‖λ‖={}, t={t}, α={alpha}): {:.5} ± {:.5} vs {target:.5}, Poisson p={:.3}",
                1u32 << j,
                r.estimate_re,
                r.stderr_re,
                chi.p_value
            ));
        }
        Ok((ok, parts.join("; ")))
    })
}

pub fn criterion_structural(seed: u64) -> CriterionResult {
    timed(9, "structural exactness", 30.0, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let towers = vec![
            Tower::new(TowerSpec::base(2))?,
            build_unramified_tower(2, &[1, 2, 6])?,
            sqrt2_tower()?,
            build_cyclotomic_tower(2, 5)?,
            build_cyclotomic_tower(3, 4)?,
        ];
        let mut mass_ok = true;
        let mut worst_planch: f64 = 0.0;
        let mut worst_round: f64 = 0.0;
        let mut trace_ok = true;
        let mut chain_ok = true;
        for tower in &towers {
            let ch = tower.chain();
            for lv in tower.levels() {
                let q = Quotient::new(tower, lv.n, radius_within(lv.q, 256))?;
                mass_ok &= mu_total_mass(&q) == BigRational::one();
                let (f, g) = (random_fn(&q, &mut rng), random_fn(&q, &mut rng));
                let (l, r) = plancherel_check(&f, &g)?;
                worst_planch = worst_planch.max((l - r).norm());
                let back = inverse_fourier(&fourier(&f));
                worst_round = worst_round.max(f.values.iter().zip(&back.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max));
            }
            // T_n ∘ T_ν = T_n on random integral elements of the top field
            let top = tower.field_of(tower.depth())?;
            let p = tower.prime();
            for _ in 0..5 {
                let coords = (0..ch.field(top).degree)
                    .map(|_| Padic::from_int(p, ch.precision(), rng.gen_range(-1000i64..1000)))
                    .collect();
                let x = ch.from_coords(top, coords)?;
                for nu in 1..=tower.depth() {
                    for n in 1..=nu {
                        let (fn_, fnu) = (tower.field_of(n)?, tower.field_of(nu)?);
                        let lhs = ch.project(&ch.project(&x, fnu)?, fn_)?;
                        let rhs = ch.project(&x, fn_)?;
                        trace_ok &= lhs.coords().iter().zip(rhs.coords()).all(|(a, b)| a.eq_at_precision(b));
                    }
                }
            }
            for nu in 1..=tower.depth() {
                for n in 1..=nu {
                    let (e_rel, d_rel) = tower.relative_invariants(n, nu)?;
                    let (ln, lnu) = (tower.level(n)?, tower.level(nu)?);
                    chain_ok &= lnu.d == e_rel as i64 * ln.d + d_rel && lnu.e == e_rel * ln.e;
                }
                chain_ok &= ch.different_from_discriminant(tower.field_of(nu)?)? == tower.level(nu)?.d;
            }
        }
        let ok = mass_ok && worst_planch <= 1e-12 && worst_round <= 1e-12 && trace_ok && chain_ok;
        Ok((
            ok,
            format!(
                "μ(S)=1: {mass_ok}; Plancherel {worst_planch:.2e}; round-trip {worst_round:.2e}; T_n∘T_ν=T_n: {trace_ok}; different chain rule: {chain_ok}"
            ),
        ))
    })
}

pub const DEFAULT_SEED: u64 = 20240917;

pub fn run_all(seed: u64) -> Vec<CriterionResult> {
    vec![
        criterion_route_equivalence(seed),
        criterion_eigen_relation(),
        criterion_spectrum(),
        criterion_theorem3(),
        criterion_heat(),
        criterion_levy_khinchin(),
        criterion_generator_levy(seed),
        criterion_monte_carlo(seed),
        criterion_structural(seed),
    ]
}
