//! Towers `Q_p = K_1 ⊂ K_2 ⊂ ...` described by extension steps, their
//! arithmetic invariants, and the spectrum of the fractional operator.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::padic::{ExtElement, FieldChain, IntElem, Step, StepKind, DEFAULT_PRECISION};

/// Above this total degree the tower keeps invariants only.
pub const ARITHMETIC_DEGREE_CAP: usize = 64;

/// Default cap on brute-force coset enumeration.
pub const ENUMERATION_CAP: u128 = 10_000_000;

#[derive(Clone, Debug, PartialEq)]
pub enum StepSpec {
    /// Unramified step multiplying the residue degree by `f_factor`. Without an
    /// explicit polynomial the first irreducible one over the residue field is used.
    Unramified { f_factor: usize, poly: Option<Vec<IntElem>> },
    /// Eisenstein step: non-leading coefficients over the previous field.
    Eisenstein { degree: usize, poly: Vec<IntElem> },
}

/// A tower: level 1 is `Q_p`, and `levels[i]` lists the steps leading from
/// level `i + 1` to level `i + 2`. An empty step list repeats the previous field.
#[derive(Clone, Debug, PartialEq)]
pub struct TowerSpec {
    pub p: u64,
    pub levels: Vec<Vec<StepSpec>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelData {
    /// Level index, starting at 1.
    pub n: usize,
    /// Index into the field chain, `None` above the arithmetic cap.
    pub field: Option<usize>,
    pub m: u64,
    pub e: u64,
    pub f: u64,
    pub q: u64,
    pub d: i64,
}

impl LevelData {
    /// `v_p(m_n)`.
    pub fn vp_m(&self, p: u64) -> i64 {
        let mut m = self.m;
        let mut v = 0;
        while m % p == 0 {
            m /= p;
            v += 1;
        }
        v
    }

    /// `S^(n) = π^s O_n` with `s = e v_p(m) - d`.
    pub fn support_exponent(&self, p: u64) -> i64 {
        self.e as i64 * self.vp_m(p) - self.d
    }
}

#[derive(Clone, Debug)]
pub struct Tower {
    spec: TowerSpec,
    chain: FieldChain,
    levels: Vec<LevelData>,
    /// Step differents `(e_step, d_step)` of each chain step, in order.
    step_invariants: Vec<(u64, i64)>,
    /// Number of chain steps below each level.
    steps_below: Vec<usize>,
}

pub(crate) fn is_prime(p: u64) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| p % d != 0)
}

impl Tower {
    pub fn new(spec: TowerSpec) -> Result<Self> {
        Self::with_precision(spec, DEFAULT_PRECISION)
    }

    pub fn with_precision(spec: TowerSpec, prec: u32) -> Result<Self> {
        let p = spec.p;
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        let mut chain = FieldChain::new(p, prec);
        let mut levels = vec![LevelData { n: 1, field: Some(0), m: 1, e: 1, f: 1, q: p, d: 0 }];
        let mut step_invariants = Vec::new();
        let mut steps_below = vec![0];
        let (mut e, mut f, mut d) = (1u64, 1u64, 0i64);
        let mut arithmetic = true;
        for (i, steps) in spec.levels.iter().enumerate() {
            for st in steps {
                let (kind, degree, poly) = match st {
                    StepSpec::Unramified { f_factor, poly } => (StepKind::Unramified, *f_factor, poly.clone()),
                    StepSpec::Eisenstein { degree, poly } => (StepKind::Eisenstein, *degree, Some(poly.clone())),
                };
                if degree == 0 {
                    return Err(Error::InvalidTower("step degree must be positive".into()));
                }
                if degree == 1 {
                    if kind == StepKind::Eisenstein {
                        return Err(Error::InvalidTower("degree-1 Eisenstein step is trivial".into()));
                    }
                    continue;
                }
                let total = (e * f) as usize * degree;
                if arithmetic && total > ARITHMETIC_DEGREE_CAP {
                    arithmetic = false;
                }
                let d_step = if arithmetic {
                    let step = match poly {
                        Some(poly) => Step { kind, degree, poly },
                        None => chain.default_unramified_step(degree),
                    };
                    chain.push_step(step)?;
                    chain.field(chain.top()).step_different
                } else if kind == StepKind::Unramified {
                    if poly.is_some() {
                        return Err(Error::InvalidTower(
                            "explicit polynomials are not supported above the arithmetic cap".into(),
                        ));
                    }
                    0
                } else {
                    return Err(Error::InvalidTower(format!(
                        "Eisenstein step at total degree {total} exceeds the arithmetic cap {ARITHMETIC_DEGREE_CAP}"
                    )));
                };
                let e_step = if kind == StepKind::Eisenstein { degree as u64 } else { 1 };
                step_invariants.push((e_step, d_step));
                e *= e_step;
                f *= if kind == StepKind::Unramified { degree as u64 } else { 1 };
                d = e_step as i64 * d + d_step;
            }
            let q = p
                .checked_pow(f as u32)
                .ok_or_else(|| Error::InvalidTower(format!("residue field {p}^{f} overflows u64")))?;
            levels.push(LevelData {
                n: i + 2,
                field: arithmetic.then(|| chain.top()),
                m: e * f,
                e,
                f,
                q,
                d,
            });
            steps_below.push(step_invariants.len());
        }
        let tower = Tower { spec, chain, levels, step_invariants, steps_below };
        tower.check_invariants()?;
        Ok(tower)
    }

    fn check_invariants(&self) -> Result<()> {
        for w in self.levels.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if b.e % a.e != 0 || b.f % a.f != 0 || a.m != a.e * a.f {
                return Err(Error::InvalidTower(format!("invariant chain broken at level {}", b.n)));
            }
        }
        Ok(())
    }

    pub fn spec(&self) -> &TowerSpec {
        &self.spec
    }

    pub fn prime(&self) -> u64 {
        self.spec.p
    }

    pub fn chain(&self) -> &FieldChain {
        &self.chain
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[LevelData] {
        &self.levels
    }

    pub fn level(&self, n: usize) -> Result<&LevelData> {
        if n == 0 || n > self.levels.len() {
            return Err(Error::Precondition(format!("level {n} outside 1..={}", self.levels.len())));
        }
        Ok(&self.levels[n - 1])
    }

    /// Chain field index of level `n`, failing above the arithmetic cap.
    pub fn field_of(&self, n: usize) -> Result<usize> {
        self.level(n)?.field.ok_or_else(|| {
            Error::Precondition(format!("level {n} has no arithmetic (degree above cap)"))
        })
    }

    /// Exponent of the different of `K_n / Q_p`.
    pub fn different_exponent(&self, n: usize) -> Result<i64> {
        Ok(self.level(n)?.d)
    }

    /// Ramification index and different exponent of `K_ν / K_n`, composed from
    /// the steps between the two levels only.
    pub fn relative_invariants(&self, n: usize, nu: usize) -> Result<(u64, i64)> {
        if nu < n {
            return Err(Error::Precondition(format!("need ν >= n, got ν={nu}, n={n}")));
        }
        self.level(nu)?;
        let (lo, hi) = (self.steps_below[n - 1], self.steps_below[nu - 1]);
        Ok(self.step_invariants[lo..hi]
            .iter()
            .fold((1, 0), |(e, d), &(es, ds)| (e * es, es as i64 * d + ds)))
    }

    /// `π_n^k` in the field of level `n`.
    pub fn uniformizer_pow(&self, n: usize, k: i64) -> Result<ExtElement> {
        let fld = self.field_of(n)?;
        self.chain.pow(&self.chain.uniformizer(fld), k)
    }

    /// Residue representatives of level `n` in index order (zero first).
    pub fn residue_lifts(&self, n: usize) -> Result<Vec<ExtElement>> {
        let fld = self.field_of(n)?;
        let res = self.chain.residue_field(fld);
        Ok((0..res.order())
            .map(|i| self.chain.from_int_elem(fld, &self.chain.lift_residue(fld, &res.from_index(i))))
            .collect())
    }
}

/// Unramified tower with residue degrees `f_list` (`f_list[0] = 1`).
pub fn build_unramified_tower(p: u64, f_list: &[u64]) -> Result<Tower> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if f_list.first() != Some(&1) {
        return Err(Error::InvalidTower("f_list must start with 1".into()));
    }
    let mut levels = Vec::new();
    for w in f_list.windows(2) {
        if w[1] <= w[0] || w[1] % w[0] != 0 {
            return Err(Error::InvalidTower(format!(
                "residue degrees must strictly increase by divisibility: {} -> {}",
                w[0], w[1]
            )));
        }
        levels.push(vec![StepSpec::Unramified { f_factor: (w[1] / w[0]) as usize, poly: None }]);
    }
    Tower::new(TowerSpec { p, levels })
}

fn multiplicative_order(p: u64, modulus: u64) -> u64 {
    if modulus == 1 {
        return 1;
    }
    let mut x = p % modulus;
    let mut k = 1;
    while x != 1 {
        x = x * p % modulus;
        k += 1;
    }
    k
}

fn binomial(n: u64, k: u64) -> BigInt {
    (0..k).fold(BigInt::one(), |acc, i| acc * BigInt::from(n - i) / BigInt::from(i + 1))
}

/// `n! = n' p^l` with `gcd(n', p) = 1`.
pub fn factorial_split(p: u64, n: u64) -> (u64, u32) {
    let mut tame = 1u64;
    let mut l = 0;
    for mut k in 2..=n {
        while k % p == 0 {
            k /= p;
            l += 1;
        }
        tame *= k;
    }
    (tame, l)
}

/// Ramification index of `Q_p(W_{n!})` over `Q_p`.
pub fn cyclotomic_ramification(p: u64, n: u64) -> u64 {
    let (_, l) = factorial_split(p, n);
    if l == 0 {
        1
    } else {
        (p - 1) * p.pow(l - 1)
    }
}

/// Tower `K_n = Q_p(W_{n!})`, `n = 1..=depth`.
pub fn build_cyclotomic_tower(p: u64, depth: usize) -> Result<Tower> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if depth < 2 {
        return Err(Error::InvalidTower("cyclotomic tower needs depth >= 2".into()));
    }
    let mut levels = Vec::new();
    let mut f_prev = 1u64;
    let mut l_prev = 0u32;
    // field degree accumulated so far and the chain position of ζ_{p^l} - 1
    let mut degree = 1usize;
    let mut zeta_minus_one: Option<IntElem> = None;
    for n in 2..=depth as u64 {
        let (tame, l) = factorial_split(p, n);
        // tame n' modulo p^(f): residue degree is the order of p mod the tame part
        let f = multiplicative_order(p, tame);
        let mut steps = Vec::new();
        if f != f_prev {
            let r = f / f_prev;
            steps.push(StepSpec::Unramified { f_factor: r as usize, poly: None });
            degree *= r as usize;
            if let Some(z) = zeta_minus_one.as_mut() {
                z.resize(degree, BigInt::zero());
            }
            f_prev = f;
        }
        for k in l_prev + 1..=l {
            let poly: Vec<IntElem> = if k == 1 {
                // Φ_p(1+x) = ((1+x)^p - 1)/x
                (0..p - 1).map(|i| vec![binomial(p, i + 1)]).collect()
            } else {
                let mut coeffs: Vec<IntElem> = (0..p).map(|i| vec![binomial(p, i)]).collect();
                // (1+x)^p - (1 + (ζ - 1)): constant term is -(ζ - 1)
                coeffs[0] = match &zeta_minus_one {
                    Some(z) => z.iter().map(|c| -c).collect(),
                    None => vec![BigInt::from(2)], // ζ_2 - 1 = -2
                };
                coeffs
            };
            let deg = poly.len();
            if deg == 1 {
                continue;
            }
            steps.push(StepSpec::Eisenstein { degree: deg, poly });
            let mut z = vec![BigInt::zero(); degree * deg];
            z[degree] = BigInt::one();
            degree *= deg;
            zeta_minus_one = Some(z);
        }
        l_prev = l;
        levels.push(steps);
    }
    Tower::new(TowerSpec { p, levels })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub eigenvalue: f64,
    /// Eigenvalue as `p^{α · num/den}` with `num/den` in lowest terms.
    pub exponent: (u64, u64),
    /// Generating pairs `(n, N)` with `eigenvalue = q_1^{αN/e_n}`.
    pub pairs: Vec<(usize, u64)>,
    /// Number of cosets of `K_H/O_H` with this norm, `H` the horizon.
    pub multiplicity: BigUint,
}

fn eigen_exponent(p: u64, alpha: f64, num: u64, den: u64) -> f64 {
    (p as f64).powf(alpha * (num as f64 / den as f64))
}

/// Distinct values `q_1^{αN/e_n} <= max_value` for levels up to `horizon`, preceded by 0.
pub fn spectrum(alpha: f64, tower: &Tower, horizon: usize, max_value: f64) -> Result<Vec<SpectrumEntry>> {
    if !(alpha > 0.0) {
        return Err(Error::Precondition(format!("alpha must be positive, got {alpha}")));
    }
    if horizon == 0 || horizon > tower.depth() {
        return Err(Error::Precondition(format!("horizon {horizon} outside 1..={}", tower.depth())));
    }
    let p = tower.prime();
    let top = tower.level(horizon)?;
    let bound = max_value * (1.0 + 1e-11);
    let mut by_exponent: BTreeMap<(u64, u64), Vec<(usize, u64)>> = BTreeMap::new();
    for lv in &tower.levels()[..horizon] {
        let mut big_n = 1u64;
        while eigen_exponent(p, alpha, big_n, lv.e) <= bound {
            let g = big_n.gcd(&lv.e);
            by_exponent.entry((big_n / g, lv.e / g)).or_default().push((lv.n, big_n));
            big_n += 1;
        }
    }
    let mut out = vec![SpectrumEntry {
        eigenvalue: 0.0,
        exponent: (0, 1),
        pairs: Vec::new(),
        multiplicity: BigUint::one(),
    }];
    let mut rest: Vec<SpectrumEntry> = by_exponent
        .into_iter()
        .map(|((num, den), pairs)| {
            let n_top = num * top.e / den;
            let q = BigUint::from(top.q);
            SpectrumEntry {
                eigenvalue: eigen_exponent(p, alpha, num, den),
                exponent: (num, den),
                pairs,
                multiplicity: (&q - 1u32) * q.pow(n_top as u32 - 1),
            }
        })
        .collect();
    rest.sort_by(|a, b| a.eigenvalue.total_cmp(&b.eigenvalue));
    out.extend(rest);
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiplicityCount {
    pub count: u128,
    /// False when the enumeration cap was hit and the closed form substituted.
    pub enumerated: bool,
}

/// Closed-form number of cosets `a ∈ K_n/O_n` with `|a|_n = q_n^N`.
pub fn multiplicity_closed_form(q: u64, big_n: u64) -> Option<u128> {
    (q as u128).checked_pow(big_n as u32 - 1).and_then(|x| x.checked_mul(q as u128 - 1))
}

/// Count cosets `a ∈ K_n/O_n` with `|a|_n = q_n^N` by enumerating the digit
/// expansions `π^{-N}(σ_1 + σ_2 π + ... + σ_N π^{N-1})` and measuring each.
pub fn multiplicity_count(tower: &Tower, n: usize, big_n: u64, cap: u128) -> Result<MultiplicityCount> {
    if big_n == 0 {
        return Err(Error::Precondition("N must be >= 1".into()));
    }
    let lv = tower.level(n)?;
    let total = (lv.q as u128).checked_pow(big_n as u32);
    match total {
        Some(t) if t <= cap && lv.field.is_some() => {}
        _ => {
            let count = multiplicity_closed_form(lv.q, big_n).ok_or(Error::CapExceeded {
                requested: u128::MAX,
                cap,
            })?;
            return Ok(MultiplicityCount { count, enumerated: false });
        }
    }
    let ch = tower.chain();
    let lifts = tower.residue_lifts(n)?;
    let pi = tower.uniformizer_pow(n, 1)?;
    let pi_inv = tower.uniformizer_pow(n, -(big_n as i64))?;
    let q = lv.q as u128;
    let mut count = 0u128;
    for idx in 0..q.pow(big_n as u32) {
        // Horner evaluation of σ_1 + σ_2 π + ... from the top digit down
        let mut acc = ch.zero(pi.field());
        let mut rest = idx;
        let mut digits = Vec::with_capacity(big_n as usize);
        for _ in 0..big_n {
            digits.push((rest % q) as usize);
            rest /= q;
        }
        for &dgt in digits.iter().rev() {
            acc = ch.add(&ch.mul(&acc, &pi)?, &lifts[dgt])?;
        }
        if acc.is_zero() {
            continue;
        }
        let a = ch.mul(&acc, &pi_inv)?;
        if ch.valuation_normalized(&a)? == -(big_n as i64) {
            count += 1;
        }
    }
    Ok(MultiplicityCount { count, enumerated: true })
}

/// `q_1^{α/e_H}`, `e_H` the largest ramification index up to the horizon.
pub fn min_positive_eigenvalue(alpha: f64, tower: &Tower, horizon: usize) -> Result<f64> {
    if horizon == 0 || horizon > tower.depth() {
        return Err(Error::Precondition(format!("horizon {horizon} outside 1..={}", tower.depth())));
    }
    let e = tower.levels()[..horizon].iter().map(|l| l.e).max().unwrap_or(1);
    Ok(eigen_exponent(tower.prime(), alpha, 1, e))
}

impl TowerSpec {
    /// Single Eisenstein step over `Q_p` with integer coefficients `g_0..g_{e-1}`.
    pub fn eisenstein_over_qp(p: u64, coeffs: &[i64]) -> Self {
        TowerSpec {
            p,
            levels: vec![vec![StepSpec::Eisenstein {
                degree: coeffs.len(),
                poly: coeffs.iter().map(|&c| vec![BigInt::from(c)]).collect(),
            }]],
        }
    }

    /// `Q_p` alone.
    pub fn base(p: u64) -> Self {
        TowerSpec { p, levels: Vec::new() }
    }
}

/// q_n as a float for normalizations; exact integers stay in `LevelData`.
pub fn level_q_f64(lv: &LevelData) -> f64 {
    lv.q.to_f64().unwrap_or(f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unramified_factorial_tower() {
        let t = build_unramified_tower(2, &[1, 2, 6]).unwrap();
        let m: Vec<u64> = t.levels().iter().map(|l| l.m).collect();
        let e: Vec<u64> = t.levels().iter().map(|l| l.e).collect();
        let d: Vec<i64> = t.levels().iter().map(|l| l.d).collect();
        assert_eq!(m, vec![1, 2, 6]);
        assert_eq!(e, vec![1, 1, 1]);
        assert_eq!(d, vec![0, 0, 0]);
    }

    #[test]
    fn trivial_tower() {
        let t = build_unramified_tower(2, &[1]).unwrap();
        assert_eq!(t.depth(), 1);
        assert_eq!(t.level(1).unwrap().q, 2);
    }

    #[test]
    fn unramified_p3_residue_cardinalities() {
        let t = build_unramified_tower(3, &[1, 2, 6, 24]).unwrap();
        let q: Vec<u64> = t.levels().iter().map(|l| l.q).collect();
        assert_eq!(q, vec![3, 9, 729, 3u64.pow(24)]);
        assert!(t.levels().iter().all(|l| l.e == 1));
        // independent degree computation: the chain's field degrees
        for lv in t.levels() {
            if let Some(fld) = lv.field {
                assert_eq!(t.chain().field(fld).degree as u64, lv.m);
            }
        }
    }

    #[test]
    fn bad_inputs() {
        assert_eq!(build_unramified_tower(4, &[1, 2]).unwrap_err(), Error::NotPrime(4));
        assert!(build_unramified_tower(2, &[1, 3, 6, 8]).is_err());
        assert!(build_unramified_tower(2, &[1, 2, 2]).is_err());
        assert!(build_cyclotomic_tower(2, 1).is_err());
    }

    #[test]
    fn cyclotomic_ramification_indices() {
        // oracle: factor n! and apply e = (p-1)p^(l-1)
        assert_eq!(factorial_split(3, 3), (2, 1));
        assert_eq!(cyclotomic_ramification(3, 3), 2);
        assert_eq!(factorial_split(2, 4), (3, 3));
        assert_eq!(cyclotomic_ramification(2, 4), 4);
        assert_eq!(cyclotomic_ramification(2, 2), 1);
        let t = build_cyclotomic_tower(3, 3).unwrap();
        assert_eq!(t.level(3).unwrap().e, 2);
        let t = build_cyclotomic_tower(2, 5).unwrap();
        let e: Vec<u64> = t.levels().iter().map(|l| l.e).collect();
        assert_eq!(e, vec![1, 1, 1, 4, 4]);
        let m: Vec<u64> = t.levels().iter().map(|l| l.m).collect();
        assert_eq!(m, vec![1, 1, 2, 8, 16]);
        for n in 1..=5 {
            assert_eq!(t.level(n).unwrap().e, cyclotomic_ramification(2, n as u64));
        }
    }

    #[test]
    fn eisenstein_different() {
        for (p, e) in [(2u64, 3usize), (3, 2), (5, 4), (3, 4)] {
            let mut coeffs = vec![0i64; e];
            coeffs[0] = -(p as i64);
            let t = Tower::new(TowerSpec::eisenstein_over_qp(p, &coeffs)).unwrap();
            assert_eq!(t.different_exponent(2).unwrap(), e as i64 - 1, "p={p} e={e}");
        }
    }

    #[test]
    fn different_chain_rule_two_ways() {
        for t in [
            build_cyclotomic_tower(2, 5).unwrap(),
            build_cyclotomic_tower(3, 6).unwrap(),
            Tower::new(TowerSpec::eisenstein_over_qp(2, &[-2, 0])).unwrap(),
        ] {
            for nu in 1..=t.depth() {
                let direct = t.chain().different_from_discriminant(t.field_of(nu).unwrap()).unwrap();
                assert_eq!(direct, t.level(nu).unwrap().d, "discriminant route at level {nu}");
                for n in 1..=nu {
                    let (e_rel, d_rel) = t.relative_invariants(n, nu).unwrap();
                    let (ln, lnu) = (t.level(n).unwrap(), t.level(nu).unwrap());
                    assert_eq!(lnu.e, e_rel * ln.e);
                    assert_eq!(lnu.d, e_rel as i64 * ln.d + d_rel);
                }
            }
        }
    }

    #[test]
    fn spectrum_examples() {
        let t = build_unramified_tower(2, &[1, 2, 6]).unwrap();
        let s = spectrum(1.0, &t, 3, 16.0).unwrap();
        let vals: Vec<f64> = s.iter().map(|e| e.eigenvalue).collect();
        assert_eq!(vals, vec![0.0, 2.0, 4.0, 8.0, 16.0]);
        let s1 = spectrum(0.7, &t, 1, 2f64.powf(0.7)).unwrap();
        assert_eq!(s1.len(), 2);
        let c = build_cyclotomic_tower(2, 4).unwrap();
        let s = spectrum(1.0, &c, 4, 4.0).unwrap();
        assert!(s.iter().any(|e| (e.eigenvalue - 2f64.powf(0.25)).abs() < 1e-15));
        assert!(s.iter().any(|e| e.pairs.contains(&(4, 1))));
    }

    #[test]
    fn spectrum_entries_reproduce_their_pairs() {
        let c = build_cyclotomic_tower(2, 5).unwrap();
        for alpha in [0.5, 1.0, 1.7] {
            for entry in spectrum(alpha, &c, 5, 20.0).unwrap().iter().skip(1) {
                for &(n, big_n) in &entry.pairs {
                    let e = c.level(n).unwrap().e;
                    assert_eq!(eigen_exponent(2, alpha, big_n, e), entry.eigenvalue);
                }
            }
        }
    }

    #[test]
    fn multiplicity_enumeration() {
        let q2 = Tower::new(TowerSpec::base(2)).unwrap();
        let q3 = Tower::new(TowerSpec::base(3)).unwrap();
        assert_eq!(multiplicity_count(&q2, 1, 1, ENUMERATION_CAP).unwrap().count, 1);
        assert_eq!(multiplicity_count(&q3, 1, 1, ENUMERATION_CAP).unwrap().count, 2);
        assert_eq!(multiplicity_count(&q2, 1, 2, ENUMERATION_CAP).unwrap().count, 2);
        let sq = Tower::new(TowerSpec::eisenstein_over_qp(2, &[-2, 0])).unwrap();
        let u = build_unramified_tower(2, &[1, 2]).unwrap();
        for (t, n) in [(&sq, 2usize), (&u, 2), (&q3, 1)] {
            let q = t.level(n).unwrap().q;
            for big_n in 1..=3 {
                let c = multiplicity_count(t, n, big_n, ENUMERATION_CAP).unwrap();
                assert!(c.enumerated);
                assert_eq!(Some(c.count), multiplicity_closed_form(q, big_n));
            }
        }
        let capped = multiplicity_count(&u, 2, 3, 10).unwrap();
        assert!(!capped.enumerated);
        assert_eq!(capped.count, 3 * 16);
    }

    #[test]
    fn minimum_eigenvalue_trend() {
        let u = build_unramified_tower(2, &[1, 2, 6]).unwrap();
        for h in 1..=3 {
            assert_eq!(min_positive_eigenvalue(1.0, &u, h).unwrap(), 2.0);
        }
        let c = build_cyclotomic_tower(2, 5).unwrap();
        assert_eq!(min_positive_eigenvalue(1.0, &c, 4).unwrap(), 2f64.powf(0.25));
        assert_eq!(min_positive_eigenvalue(1.0, &c, 5).unwrap(), 2f64.powf(0.25));
        let trend: Vec<f64> = (1..=5).map(|h| min_positive_eigenvalue(1.0, &c, h).unwrap()).collect();
        assert!(trend.windows(2).all(|w| w[1] <= w[0]));
    }
}
