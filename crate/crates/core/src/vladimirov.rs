//! The operator `D^α` on cylindrical functions (spectral and hypersingular
//! forms), its heat kernel and semigroup.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcspace::{compensated_sum, fourier, inverse_fourier, CylFunction, Quotient};
use crate::padic::ExtElement;
use crate::tower::{LevelData, Tower};

pub const DEFAULT_SHELL_CAP: usize = 200;
pub const DEFAULT_SHELL_TOLERANCE: f64 = 1e-12;

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::Precondition(format!("alpha must be positive and finite, got {alpha}")))
    }
}

/// `Δ^α(ξ) = ‖ξ‖^α` for `‖ξ‖ > 1`, else 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiplierSpec {
    pub alpha: f64,
}

impl MultiplierSpec {
    pub fn new(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(MultiplierSpec { alpha })
    }

    pub fn value(&self, norm: f64) -> f64 {
        if norm > 1.0 {
            norm.powf(self.alpha)
        } else {
            0.0
        }
    }

    /// Value on dual coset `i` of a quotient.
    pub fn on_dual(&self, q: &Quotient, i: usize) -> f64 {
        q.dual_norm_pow(i, self.alpha)
    }
}

/// `q^{k}` as a float, `q = p^f`.
fn qpow(lv: &LevelData, p: u64, k: f64) -> f64 {
    (p as f64).powf(lv.f as f64 * k)
}

/// Constants of the hypersingular representation at one level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypersingularKernel {
    pub n: usize,
    pub alpha: f64,
    pub p: u64,
    pub e: u64,
    pub m: u64,
    pub d: i64,
    pub vp_m: i64,
    /// `C_n(α)`.
    pub coefficient: f64,
    /// `κ_n(α)`.
    pub kappa: f64,
}

impl HypersingularKernel {
    pub fn new(lv: &LevelData, p: u64, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let (m, d) = (lv.m as f64, lv.d as f64);
        let coefficient = qpow(lv, p, d * alpha / m) * (1.0 - qpow(lv, p, alpha / m)) / (1.0 - qpow(lv, p, -1.0 - alpha / m));
        let kappa = (1.0 - qpow(lv, p, -1.0)) / (qpow(lv, p, alpha / m) - 1.0) * qpow(lv, p, -d * (1.0 + alpha / m));
        Ok(HypersingularKernel {
            n: lv.n,
            alpha,
            p,
            e: lv.e,
            m: lv.m,
            d: lv.d,
            vp_m: lv.vp_m(p),
            coefficient,
            kappa,
        })
    }

    /// `‖m‖^{-m}`.
    pub fn norm_m_pow(&self) -> f64 {
        (self.p as f64).powf((self.vp_m * self.m as i64) as f64)
    }

    /// `‖x‖^{-m-α} ‖m‖^{m+α}` for `v(x) = v`.
    pub fn radial(&self, v: i64) -> f64 {
        let ma = self.m as f64 + self.alpha;
        (self.p as f64).powf(v as f64 * ma / self.e as f64 - self.vp_m as f64 * ma)
    }

    /// Full kernel `C ‖m‖^{-m} [radial + κ]` at valuation `v`.
    pub fn kernel(&self, v: i64) -> f64 {
        self.coefficient * self.norm_m_pow() * (self.radial(v) + self.kappa)
    }

    /// Lévy density `-kernel(v)`, nonnegative on the support.
    pub fn levy_density(&self, v: i64) -> f64 {
        -self.kernel(v)
    }
}

/// A radial series `Σ_j vol_j · radial_j` with a geometric tail bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellSeries {
    pub n: usize,
    pub first_shell: i64,
    pub last_shell: i64,
    #[serde(skip)]
    pub volumes: Vec<BigRational>,
    pub radial: Vec<f64>,
    pub tail_ratio: f64,
    pub tail_prefactor: f64,
    pub partial_sum: f64,
    pub tail_bound: f64,
    /// `partial_sum + tail_bound`.
    pub total: f64,
}

impl ShellSeries {
    /// Sum shells `start, start+1, ...` until the tail bound drops below `tol`.
    /// `ratio_bound(k)` must bound every term ratio `a_{i+1}/a_i` for `i >= k`.
    pub fn evaluate(
        n: usize,
        start: i64,
        cap: usize,
        tol: f64,
        volume: impl Fn(i64) -> BigRational,
        radial: impl Fn(i64) -> f64,
        ratio_bound: impl Fn(i64) -> f64,
    ) -> Result<Self> {
        let mut s = ShellSeries {
            n,
            first_shell: start,
            last_shell: start - 1,
            volumes: Vec::new(),
            radial: Vec::new(),
            tail_ratio: 1.0,
            tail_prefactor: f64::INFINITY,
            partial_sum: 0.0,
            tail_bound: f64::INFINITY,
            total: f64::INFINITY,
        };
        for k in start..start + cap as i64 {
            let vol = volume(k);
            let r = radial(k);
            let term = vol.to_f64().unwrap_or(f64::NAN) * r;
            s.partial_sum += term;
            s.volumes.push(vol);
            s.radial.push(r);
            s.last_shell = k;
            let ratio = ratio_bound(k);
            if ratio < 1.0 {
                s.tail_ratio = ratio;
                s.tail_prefactor = term;
                s.tail_bound = term.abs() * ratio / (1.0 - ratio);
                if s.tail_bound < tol {
                    s.total = s.partial_sum + s.tail_bound;
                    return Ok(s);
                }
            }
        }
        Err(Error::NoConvergence(format!(
            "shell series at level {n} not below tolerance {tol} after {cap} shells (tail {})",
            s.tail_bound
        )))
    }
}

/// `inverse_fourier(Δ^α · fourier(f))`.
pub fn apply_spectral(alpha: f64, f: &CylFunction) -> Result<CylFunction> {
    let spec = MultiplierSpec::new(alpha)?;
    let q = f.quotient.clone();
    Ok(inverse_fourier(&fourier(f).multiply(|i| spec.on_dual(&q, i))))
}

/// `ψ(z) = Σ_{x ≠ 0} vol(coset) · kernel(v(x)) · (φ(z - x) - φ(z))` over the quotient.
pub fn apply_hypersingular(tower: &Tower, alpha: f64, f: &CylFunction) -> Result<CylFunction> {
    let q = f.quotient.clone();
    let lv = tower.level(q.n)?;
    let k = HypersingularKernel::new(lv, tower.prime(), alpha)?;
    let vol = (q.q as f64).powf(-((q.support + q.radius as i64) as f64));
    let weights: Vec<f64> = (0..q.size())
        .map(|x| q.rep_valuation(x).map_or(0.0, |v| vol * k.kernel(v)))
        .collect();
    let values = (0..q.size())
        .into_par_iter()
        .map(|z| {
            let fz = f.values[z];
            compensated_sum((1..q.size()).map(|x| (f.values[q.sub_index(z, x)] - fz) * weights[x]))
        })
        .collect();
    CylFunction::new(q, values)
}

/// Rayleigh quotient of `D^α` on `φ_a` against `‖a‖^α`.
///
/// `a` lives in the field of level `n`; the quotient radius defaults to the
/// smallest one resolving `a`.
pub fn eigencheck(tower: &Tower, n: usize, a: &ExtElement, alpha: f64, radius: Option<u32>) -> Result<(f64, f64)> {
    check_alpha(alpha)?;
    if a.is_zero() {
        return Ok((0.0, 0.0));
    }
    let ch = tower.chain();
    let v = ch.valuation_normalized(a)?;
    if v >= 0 {
        return Err(Error::Precondition("a must satisfy ‖a‖ > 1 or a = 0".into()));
    }
    let need = (-v) as u32;
    let radius = radius.unwrap_or(need);
    if radius < need {
        return Err(Error::Precondition(format!("quotient radius {radius} cannot resolve ‖a‖ = p^({need}/e)")));
    }
    let q = Quotient::new(tower, n, radius)?;
    let xi = q.locate_dual(tower, a)?;
    let phi = CylFunction::character(q.clone(), xi);
    let dphi = apply_spectral(alpha, &phi)?;
    let num: Complex64 = dphi.values.iter().zip(&phi.values).map(|(x, y)| x * y.conj()).sum();
    let den: f64 = phi.values.iter().map(|y| y.norm_sqr()).sum();
    let e = tower.level(n)?.e;
    let expected = (tower.prime() as f64).powf(alpha * (need as f64 / e as f64));
    Ok((num.re / den, expected))
}

/// `e^{-t s^α}` for `s > 1`, else 1.
pub fn rho(s: f64, t: f64, alpha: f64) -> f64 {
    if s > 1.0 {
        (-t * s.powf(alpha)).exp()
    } else {
        1.0
    }
}

fn rho_shell(p: u64, e: u64, j: i64, t: f64, alpha: f64) -> f64 {
    (-t * (p as f64).powf(j as f64 * alpha / e as f64)).exp()
}

fn rational_qpow(q: u64, k: i64) -> BigRational {
    let b = BigRational::from_integer(BigInt::from(q));
    if k >= 0 {
        num_traits::pow(b, k as usize)
    } else {
        num_traits::pow(b.recip(), (-k) as usize)
    }
}

/// Heat kernel `Γ(ζ, t)` at level `n` for `v(ζ) = v` (`None` for ζ = 0), density
/// with respect to Haar measure with `vol(O_n) = 1`. Supported on `π^{-d} O_n`.
pub fn heat_kernel_by_valuation(lv: &LevelData, p: u64, v: Option<i64>, t: f64, alpha: f64) -> Result<ShellSeries> {
    check_alpha(alpha)?;
    if !(t > 0.0) {
        return Err(Error::Precondition(format!("t must be positive, got {t}")));
    }
    let q = lv.q;
    let lead = rational_qpow(q, -lv.d);
    let shell_vol = |j: i64| -> BigRational {
        // q^{-d} q^{j-1} (q - 1)
        &lead * rational_qpow(q, j - 1) * BigRational::from_integer(BigInt::from(q - 1))
    };
    let rho_j = |j: i64| rho_shell(p, lv.e, j, t, alpha);
    match v {
        Some(v) if v + lv.d < 0 => Ok(ShellSeries {
            n: lv.n,
            first_shell: 0,
            last_shell: -1,
            volumes: Vec::new(),
            radial: Vec::new(),
            tail_ratio: 0.0,
            tail_prefactor: 0.0,
            partial_sum: 0.0,
            tail_bound: 0.0,
            total: 0.0,
        }),
        Some(v) => {
            let big_j = v + lv.d;
            let mut volumes = vec![lead.clone()];
            let mut radial = vec![1.0];
            for j in 1..=big_j {
                volumes.push(shell_vol(j));
                radial.push(rho_j(j));
            }
            // boundary shell: the character averages to -1/(q-1) there
            volumes.push(-&lead * rational_qpow(q, big_j));
            radial.push(rho_j(big_j + 1));
            let partial_sum = volumes.iter().zip(&radial).map(|(a, b)| a.to_f64().unwrap_or(f64::NAN) * b).sum();
            Ok(ShellSeries {
                n: lv.n,
                first_shell: 0,
                last_shell: big_j + 1,
                volumes,
                radial,
                tail_ratio: 0.0,
                tail_prefactor: 0.0,
                partial_sum,
                tail_bound: 0.0,
                total: partial_sum,
            })
        }
        None => {
            let mut s = ShellSeries::evaluate(
                lv.n,
                1,
                DEFAULT_SHELL_CAP,
                DEFAULT_SHELL_TOLERANCE,
                shell_vol,
                rho_j,
                |k| {
                    let step = (p as f64).powf(k as f64 * alpha / lv.e as f64) * ((p as f64).powf(alpha / lv.e as f64) - 1.0);
                    q as f64 * (-t * step).exp()
                },
            )?;
            let base = lead.to_f64().unwrap_or(f64::NAN);
            s.first_shell = 0;
            s.volumes.insert(0, lead);
            s.radial.insert(0, 1.0);
            s.partial_sum += base;
            s.total += base;
            Ok(s)
        }
    }
}

/// `Γ(z, t)` for `z` in the field of level `n`.
pub fn heat_kernel(tower: &Tower, n: usize, z: &ExtElement, t: f64, alpha: f64) -> Result<f64> {
    let v = if z.is_zero() { None } else { Some(tower.chain().valuation_normalized(z)?) };
    Ok(heat_kernel_by_valuation(tower.level(n)?, tower.prime(), v, t, alpha)?.total)
}

/// `∫ Γ(ζ, t) dζ` summed shell by shell; the ball beyond the last shell is
/// charged with `Γ(0)`, which bounds `Γ` there from above.
pub fn heat_mass(lv: &LevelData, p: u64, t: f64, alpha: f64) -> Result<f64> {
    let g0 = heat_kernel_by_valuation(lv, p, None, t, alpha)?.total;
    let q = lv.q as f64;
    let mut mass = 0.0;
    let mut v = -lv.d;
    loop {
        let g = heat_kernel_by_valuation(lv, p, Some(v), t, alpha)?.total;
        mass += q.powf(-v as f64) * (1.0 - 1.0 / q) * g;
        let rest = q.powf(-(v + 1) as f64);
        if rest * (g0 - g).abs() < DEFAULT_SHELL_TOLERANCE || v - (-lv.d) > DEFAULT_SHELL_CAP as i64 {
            return Ok(mass + rest * g0);
        }
        v += 1;
    }
}

/// `inverse_fourier(e^{-tΔ^α} · fourier(f))`.
pub fn semigroup_apply(t: f64, alpha: f64, f: &CylFunction) -> Result<CylFunction> {
    check_alpha(alpha)?;
    if !(t > 0.0) {
        return Err(Error::Precondition(format!("t must be positive, got {t}")));
    }
    let q = f.quotient.clone();
    Ok(inverse_fourier(&fourier(f).multiply(|i| (-t * q.dual_norm_pow(i, alpha)).exp())))
}

/// Dense matrix of `D^α` on the quotient, row-major: column `j` is the image of
/// the indicator of coset `j`.
pub fn operator_matrix(alpha: f64, q: &std::sync::Arc<Quotient>) -> Result<Vec<Complex64>> {
    let s = q.size();
    let mut out = vec![Complex64::zero(); s * s];
    for j in 0..s {
        let delta = CylFunction::from_fn(q.clone(), |i| if i == j { Complex64::new(1.0, 0.0) } else { Complex64::zero() });
        let col = apply_spectral(alpha, &delta)?;
        for i in 0..s {
            out[i * s + j] = col.values[i];
        }
    }
    Ok(out)
}

/// `row,col,re,im` CSV of a square matrix.
pub fn matrix_csv(size: usize, m: &[Complex64]) -> String {
    let mut out = String::from("row,col,re,im\n");
    for i in 0..size {
        for j in 0..size {
            let v = m[i * size + j];
            let _ = writeln!(out, "{i},{j},{:e},{:e}", v.re, v.im);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tower::{build_cyclotomic_tower, build_unramified_tower, TowerSpec};
    use num_traits::One;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    fn random_fn(q: &std::sync::Arc<Quotient>, rng: &mut ChaCha8Rng) -> CylFunction {
        let values = (0..q.size()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        CylFunction::new(q.clone(), values).unwrap()
    }

    #[test]
    fn kernel_constants_q2() {
        let t = Tower::new(TowerSpec::base(2)).unwrap();
        let k = HypersingularKernel::new(t.level(1).unwrap(), 2, 1.0).unwrap();
        assert!(close(k.coefficient, -4.0 / 3.0, 1e-15));
        assert!(close(k.kappa, 0.5, 1e-15));
        let k2 = HypersingularKernel::new(t.level(1).unwrap(), 2, 2.0).unwrap();
        assert!(close(k2.coefficient, -24.0 / 7.0, 1e-15));
        assert!(close(k2.kappa, 1.0 / 6.0, 1e-15));
    }

    #[test]
    fn levy_density_nonnegative_on_shells() {
        for t in [build_cyclotomic_tower(2, 5).unwrap(), build_unramified_tower(3, &[1, 2, 6]).unwrap()] {
            for lv in t.levels() {
                for alpha in [0.3, 1.0, 2.5] {
                    let k = HypersingularKernel::new(lv, t.prime(), alpha).unwrap();
                    assert!(k.coefficient < 0.0);
                    for v in lv.support_exponent(t.prime())..lv.support_exponent(t.prime()) + 12 {
                        assert!(k.levy_density(v) >= 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn spectral_examples() {
        let t = Tower::new(TowerSpec::base(2)).unwrap();
        let q = Quotient::new(&t, 1, 4).unwrap();
        let c = CylFunction::constant(q.clone(), Complex64::new(3.0, -1.0));
        assert!(apply_spectral(1.0, &c).unwrap().values.iter().all(|v| v.norm() < 1e-12));
        // ‖a‖ = 2 at α = 2 gives 4 φ_a
        let phi = CylFunction::character(q.clone(), 1);
        assert_eq!(q.dual_level(1), 1);
        let out = apply_spectral(2.0, &phi).unwrap();
        assert!(out.values.iter().zip(&phi.values).all(|(a, b)| (a - b * 4.0).norm() < 1e-12));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = random_fn(&q, &mut rng);
        let twice = apply_spectral(0.7, &apply_spectral(1.1, &f).unwrap()).unwrap();
        let once = inverse_fourier(&fourier(&f).multiply(|i| q.dual_norm_pow(i, 0.7) * q.dual_norm_pow(i, 1.1)));
        assert!(twice.values.iter().zip(&once.values).all(|(a, b)| (a - b).norm() < 1e-12));
    }

    #[test]
    fn route_equivalence_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let cases = vec![
            (Tower::new(TowerSpec::base(2)).unwrap(), 1, 6),
            (Tower::new(TowerSpec::eisenstein_over_qp(2, &[-2, 0])).unwrap(), 2, 5),
            (Tower::new(TowerSpec::eisenstein_over_qp(3, &[3, 0])).unwrap(), 2, 4),
            (build_unramified_tower(2, &[1, 2]).unwrap(), 2, 3),
            (build_cyclotomic_tower(3, 3).unwrap(), 3, 3),
            (build_cyclotomic_tower(2, 4).unwrap(), 4, 6),
        ];
        for (t, n, l) in cases {
            let q = Quotient::new(&t, n, l).unwrap();
            for alpha in [0.5, 1.0, 2.0] {
                for _ in 0..3 {
                    let f = random_fn(&q, &mut rng);
                    let a = apply_spectral(alpha, &f).unwrap();
                    let b = apply_hypersingular(&t, alpha, &f).unwrap();
                    let sup = f.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
                    let err = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
                    assert!(err <= 1e-9 * sup, "n={n} alpha={alpha} err={err}");
                }
            }
        }
    }

    #[test]
    fn hypersingular_on_indicator() {
        // indicator of 2Z_2 inside Z_2: D^1 at 0 is 1, elsewhere -1 (oracle: hand sum)
        let t = Tower::new(TowerSpec::base(2)).unwrap();
        let q = Quotient::new(&t, 1, 3).unwrap();
        let f = CylFunction::indicator_ball(q.clone(), 1);
        let h = apply_hypersingular(&t, 1.0, &f).unwrap();
        let s = apply_spectral(1.0, &f).unwrap();
        for i in 0..q.size() {
            let expect = if q.rep_valuation(i).map_or(true, |v| v >= 1) { 1.0 } else { -1.0 };
            assert!((h.values[i].re - expect).abs() < 1e-10);
            assert!((h.values[i] - s.values[i]).norm() < 1e-10);
        }
    }

    #[test]
    fn eigen_relation() {
        let t = Tower::new(TowerSpec::base(2)).unwrap();
        let ch = t.chain();
        let half = ch.pow(&ch.uniformizer(0), -1).unwrap();
        let (meas, exp) = eigencheck(&t, 1, &half, 1.0, None).unwrap();
        assert!(close(meas, 2.0, 1e-12) && exp == 2.0);
        assert_eq!(eigencheck(&t, 1, &ch.zero(0), 1.0, None).unwrap(), (0.0, 0.0));
        assert!(eigencheck(&t, 1, &ch.one(0), 1.0, None).is_err());
        let u = build_unramified_tower(2, &[1, 2]).unwrap();
        let fld = u.field_of(2).unwrap();
        let lifts = u.residue_lifts(2).unwrap();
        for (k, lift) in [(1i64, 3usize), (2, 2)] {
            let a = ch_mul(&u, &lifts[lift], &u.uniformizer_pow(2, -k).unwrap());
            assert_eq!(a.field(), fld);
            let (meas, exp) = eigencheck(&u, 2, &a, 1.3, None).unwrap();
            assert!(close(meas / exp, 1.0, 1e-10));
        }
    }

    fn ch_mul(t: &Tower, a: &ExtElement, b: &ExtElement) -> ExtElement {
        t.chain().mul(a, b).unwrap()
    }

    #[test]
    fn operator_matrix_hermitian_psd() {
        let t = Tower::new(TowerSpec::eisenstein_over_qp(2, &[-2, 0])).unwrap();
        let q = Quotient::new(&t, 2, 3).unwrap();
        let a = operator_matrix(1.5, &q).unwrap();
        let s = q.size();
        for i in 0..s {
            for j in 0..s {
                assert!((a[i * s + j] - a[j * s + i].conj()).norm() < 1e-12);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let x: Vec<Complex64> = (0..s).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let quad: Complex64 = (0..s).map(|i| x[i].conj() * (0..s).map(|j| a[i * s + j] * x[j]).sum::<Complex64>()).sum();
            assert!(quad.re >= -1e-12 && quad.im.abs() < 1e-10);
        }
        let csv = matrix_csv(s, &a);
        assert_eq!(csv.lines().count(), s * s + 1);
    }

    #[test]
    fn rho_values() {
        assert_eq!(rho(1.0, 3.0, 2.0), 1.0);
        assert_eq!(rho(0.5, 3.0, 2.0), 1.0);
        assert!(close(rho(2.0, 1.0, 1.0), (-2.0f64).exp(), 1e-15));
        assert!(rho(3.0, 1.0, 1.0) > rho(3.0, 2.0, 1.0));
    }

    #[test]
    fn heat_mass_is_one() {
        for t in [Tower::new(TowerSpec::base(2)).unwrap(), build_cyclotomic_tower(2, 5).unwrap(), build_unramified_tower(3, &[1, 2]).unwrap()] {
            for lv in t.levels() {
                for (tt, alpha) in [(0.1, 1.0), (1.0, 0.5), (2.0, 2.0)] {
                    let mass = heat_mass(lv, t.prime(), tt, alpha).unwrap();
                    assert!((mass - 1.0).abs() < 1e-12, "level {} mass {mass}", lv.n);
                }
            }
        }
    }

    #[test]
    fn heat_kernel_matches_quotient_kernel_and_semigroup() {
        // On the quotient the truncated kernel is inverse_fourier(ρ); it agrees
        // with the shell formula (rescaled by vol π^{-d}O = q^d) below the cutoff.
        let t = Tower::new(TowerSpec::eisenstein_over_qp(2, &[-2, 0])).unwrap();
        let lv = t.level(2).unwrap().clone();
        let q = Quotient::new(&t, 2, 6).unwrap();
        let (tt, ss, alpha) = (0.4, 0.7, 1.2);
        let kernel = |time: f64| {
            let c = crate::funcspace::SpectralCoefficients {
                quotient: q.clone(),
                coeffs: (0..q.size()).map(|i| Complex64::new((-time * q.dual_norm_pow(i, alpha)).exp(), 0.0)).collect(),
            };
            inverse_fourier(&c)
        };
        let (gt, gs, gts) = (kernel(tt), kernel(ss), kernel(tt + ss));
        let qd = (lv.q as f64).powi(lv.d as i32);
        for z in 1..q.size() {
            let pos = q.rep_valuation(z).unwrap() - q.support;
            let shell = heat_kernel_by_valuation(&lv, 2, Some(pos - lv.d), tt, alpha).unwrap().total;
            assert!((gt.values[z].re - qd * shell).abs() < 1e-10);
            let conv: Complex64 = (0..q.size()).map(|x| gt.values[q.sub_index(z, x)] * gs.values[x]).sum::<Complex64>() / q.size() as f64;
            assert!((conv - gts.values[z]).norm() < 1e-10);
        }
        for z in 0..q.size() {
            assert!(gt.values[z].re >= -1e-12);
        }
    }

    #[test]
    fn semigroup_properties() {
        let t = build_unramified_tower(2, &[1, 2]).unwrap();
        let q = Quotient::new(&t, 2, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let f = random_fn(&q, &mut rng);
        let near = semigroup_apply(1e-8, 1.0, &f).unwrap();
        assert!(near.values.iter().zip(&f.values).all(|(a, b)| (a - b).norm() <= 1e-6));
        let phi = CylFunction::character(q.clone(), 1);
        let out = semigroup_apply(0.3, 1.5, &phi).unwrap();
        let factor = (-0.3 * 2f64.powf(1.5)).exp();
        assert!(out.values.iter().zip(&phi.values).all(|(a, b)| (a - b * factor).norm() < 1e-12));
        let pos = CylFunction::from_fn(q.clone(), |i| Complex64::new(if i % 3 == 0 { 1.0 } else { 0.0 }, 0.0));
        assert!(semigroup_apply(0.05, 0.8, &pos).unwrap().values.iter().all(|v| v.re >= -1e-12));
        let composed = semigroup_apply(0.2, 1.0, &semigroup_apply(0.3, 1.0, &f).unwrap()).unwrap();
        let direct = semigroup_apply(0.5, 1.0, &f).unwrap();
        assert!(composed.values.iter().zip(&direct.values).all(|(a, b)| (a - b).norm() < 1e-12));
        assert!(mass_of_one_is_exact());
    }

    fn mass_of_one_is_exact() -> bool {
        let t = Tower::new(TowerSpec::base(2)).unwrap();
        let q = Quotient::new(&t, 1, 2).unwrap();
        crate::funcspace::mu_total_mass(&q) == BigRational::one()
    }
}
