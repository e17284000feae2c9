//! Locally constant functions on finite ball quotients `S^(n) / π^{s+L} O_n`
//! and their Fourier analysis.
//!
//! The quotient group `G = π^s O / π^{s+L} O` (`s` the support exponent of the
//! level) has `q^L` elements. Its dual under `(ξ, z) ↦ χ(T_1(ξ z))` is
//! `π^{-L} O / O`. Phases are computed exactly as residues modulo `p^K`.

use std::collections::HashMap;
use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;
use std::sync::{Arc, OnceLock};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::tower_hash;
use crate::error::{Error, Result};
use crate::padic::ExtElement;
use crate::tower::Tower;

/// Largest quotient for which the phase matrix is materialized.
pub const MAX_QUOTIENT: usize = 4096;

/// Root-of-unity table size limit.
const ROOT_TABLE_LIMIT: u64 = 1 << 22;

fn mod_inv(a: u64, m: u64) -> Option<u64> {
    let g = (a as i128).extended_gcd(&(m as i128));
    (g.gcd == 1).then(|| g.x.mod_floor(&(m as i128)) as u64)
}

fn big_mod(x: &BigInt, m: u64) -> u64 {
    x.mod_floor(&BigInt::from(m)).to_u64().expect("reduced residue")
}

/// The finite group `G` at a level together with its dual and phase matrix.
#[derive(Debug)]
pub struct Quotient {
    pub n: usize,
    field: usize,
    pub p: u64,
    pub q: u64,
    pub e: u64,
    pub m: u64,
    pub d: i64,
    /// `S^(n) = π^{support} O_n`.
    pub support: i64,
    /// Number of residue digits `L`.
    pub radius: u32,
    size: usize,
    modulus: u64,
    b_scale: i64,
    k_exp: i64,
    reps: Vec<ExtElement>,
    duals: Vec<ExtElement>,
    /// Dual weights: `r(ξ, z) = Σ_b w[ξ][b] Z_b mod p^K`.
    dual_weights: Vec<Vec<u64>>,
    key_weights: Vec<Vec<u64>>,
    keys: Vec<Vec<u64>>,
    key_index: HashMap<Vec<u64>, usize>,
    phases: Vec<u32>,
    roots: Vec<Complex64>,
    sub_table: OnceLock<Vec<u32>>,
    pub tower_hash: String,
}

impl Quotient {
    /// `π^s O_n / π^{s+L} O_n` at level `n`.
    pub fn new(tower: &Tower, n: usize, radius: u32) -> Result<Arc<Self>> {
        let lv = tower.level(n)?.clone();
        let field = tower.field_of(n)?;
        let p = tower.prime();
        let size = (lv.q as u128)
            .checked_pow(radius)
            .filter(|&s| s <= MAX_QUOTIENT as u128)
            .ok_or(Error::CapExceeded {
                requested: (lv.q as u128).saturating_pow(radius),
                cap: MAX_QUOTIENT as u128,
            })? as usize;
        let ch = tower.chain();
        let support = lv.support_exponent(p);
        let e = lv.e as i64;
        let a_scale = (radius as i64 + e - 1) / e;
        let b_scale = (-Integer::div_floor(&support, &e)).max(0);
        let c = lv.vp_m(p);
        let k_exp = a_scale + b_scale + c;
        let modulus = p
            .checked_pow(k_exp as u32)
            .filter(|&x| x <= u32::MAX as u64)
            .ok_or_else(|| Error::Precondition(format!("phase modulus {p}^{k_exp} exceeds 32 bits")))?;
        let unit = lv.m / p.pow(c as u32);
        let unit_inv = mod_inv(unit % modulus, modulus).unwrap_or(0);

        let lifts = tower.residue_lifts(n)?;
        let q = lv.q as usize;
        let build = |offset: i64, sign: i64| -> Result<Vec<ExtElement>> {
            let mut terms = Vec::with_capacity(radius as usize);
            for j in 0..radius as i64 {
                let pw = tower.uniformizer_pow(n, offset + sign * j)?;
                terms.push(lifts.iter().map(|l| ch.mul(l, &pw)).collect::<Result<Vec<_>>>()?);
            }
            let mut out = Vec::with_capacity(size);
            out.push(ch.zero(field));
            let mut block = 1usize;
            for term in &terms {
                for d in 1..q {
                    for i in 0..block {
                        let next = ch.add(&out[i], &term[d])?;
                        out.push(next);
                    }
                }
                block *= q;
            }
            Ok(out)
        };
        let reps = build(support, 1)?;
        let duals = build(-1, -1)?;

        let trace = ch.trace_form(field);
        let tmod: Vec<Vec<u64>> = trace.iter().map(|r| r.iter().map(|x| big_mod(x, modulus)).collect()).collect();
        let weights = |xi: &ExtElement| -> Result<Vec<u64>> {
            let xs = xi
                .coords()
                .iter()
                .map(|c| c.scaled_residue(a_scale, k_exp).map(|r| r as u64))
                .collect::<Result<Vec<_>>>()?;
            Ok((0..tmod.len())
                .map(|b| {
                    let s = xs.iter().zip(&tmod).fold(0u128, |acc, (x, row)| {
                        (acc + *x as u128 * row[b] as u128) % modulus as u128
                    });
                    (s * unit_inv as u128 % modulus as u128) as u64
                })
                .collect())
        };
        let dual_weights = duals.iter().map(&weights).collect::<Result<Vec<_>>>()?;
        let pi_l = tower.uniformizer_pow(n, -(radius as i64))?;
        let mut key_weights = Vec::new();
        for b in 0..lv.m as usize {
            let mut unit_vec = vec![BigInt::zero(); lv.m as usize];
            unit_vec[b] = BigInt::one();
            key_weights.push(weights(&ch.mul(&ch.from_int_elem(field, &unit_vec), &pi_l)?)?);
        }

        let mut quotient = Quotient {
            n,
            field,
            p,
            q: lv.q,
            e: lv.e,
            m: lv.m,
            d: lv.d,
            support,
            radius,
            size,
            modulus,
            b_scale,
            k_exp,
            reps,
            duals,
            dual_weights,
            key_weights,
            keys: Vec::new(),
            key_index: HashMap::new(),
            phases: Vec::new(),
            roots: Vec::new(),
            sub_table: OnceLock::new(),
            tower_hash: tower_hash(tower),
        };
        let zs = quotient.reps.iter().map(|z| quotient.scaled_coords(z)).collect::<Result<Vec<_>>>()?;
        quotient.keys = zs.iter().map(|z| quotient.key_of_scaled(z)).collect();
        for (i, k) in quotient.keys.iter().enumerate() {
            if quotient.key_index.insert(k.clone(), i).is_some() {
                return Err(Error::Precondition("coset keys are not injective".into()));
            }
        }
        let md = modulus as u128;
        quotient.phases = quotient
            .dual_weights
            .par_iter()
            .flat_map_iter(|w| {
                zs.iter().map(move |z| {
                    (w.iter().zip(z).fold(0u128, |acc, (a, b)| (acc + *a as u128 * *b as u128) % md)) as u32
                })
            })
            .collect();
        if modulus <= ROOT_TABLE_LIMIT {
            quotient.roots = (0..modulus)
                .map(|r| root_of_unity(r, modulus))
                .collect();
        }
        Ok(Arc::new(quotient))
    }

    fn scaled_coords(&self, z: &ExtElement) -> Result<Vec<u64>> {
        z.coords()
            .iter()
            .map(|c| c.scaled_residue(self.b_scale, self.k_exp).map(|r| r as u64))
            .collect()
    }

    fn key_of_scaled(&self, z: &[u64]) -> Vec<u64> {
        let md = self.modulus as u128;
        self.key_weights
            .iter()
            .map(|w| (w.iter().zip(z).fold(0u128, |acc, (a, b)| (acc + *a as u128 * *b as u128) % md)) as u64)
            .collect()
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn field(&self) -> usize {
        self.field
    }

    /// `p^K`, the denominator of all phases.
    pub fn phase_modulus(&self) -> u64 {
        self.modulus
    }

    pub fn rep(&self, i: usize) -> &ExtElement {
        &self.reps[i]
    }

    pub fn dual(&self, i: usize) -> &ExtElement {
        &self.duals[i]
    }

    /// Residue-digit indices of group element `i`, lowest position first.
    pub fn digits(&self, mut i: usize) -> Vec<usize> {
        let q = self.q as usize;
        (0..self.radius)
            .map(|_| {
                let d = i % q;
                i /= q;
                d
            })
            .collect()
    }

    pub fn index_of_digits(&self, digits: &[usize]) -> usize {
        digits.iter().rev().fold(0, |acc, &d| acc * self.q as usize + d)
    }

    /// Valuation of group element `i` (`None` for the zero coset).
    pub fn rep_valuation(&self, i: usize) -> Option<i64> {
        self.digits(i).iter().position(|&d| d != 0).map(|j| self.support + j as i64)
    }

    /// `J` with `‖ξ_i‖ = p^{J/e}`; 0 for the zero coset.
    pub fn dual_level(&self, i: usize) -> u32 {
        self.digits(i).iter().rposition(|&d| d != 0).map_or(0, |j| j as u32 + 1)
    }

    /// `‖ξ_i‖^α`, 0 for the zero coset.
    pub fn dual_norm_pow(&self, i: usize, alpha: f64) -> f64 {
        match self.dual_level(i) {
            0 => 0.0,
            j => (self.p as f64).powf(alpha * (j as f64 / self.e as f64)),
        }
    }

    /// Exact phase numerator `r` with `<ξ_i, z_j> ≡ r / p^K`.
    pub fn phase(&self, xi: usize, z: usize) -> u32 {
        self.phases[xi * self.size + z]
    }

    pub fn unit_root(&self, r: u32) -> Complex64 {
        if self.roots.is_empty() {
            root_of_unity(r as u64, self.modulus)
        } else {
            self.roots[r as usize]
        }
    }

    /// `χ(<ξ_i, z_j>)`.
    pub fn character(&self, xi: usize, z: usize) -> Complex64 {
        self.unit_root(self.phase(xi, z))
    }

    /// Index of the coset containing `x ∈ S^(n)`.
    pub fn locate(&self, x: &ExtElement) -> Result<usize> {
        if x.field() != self.field {
            return Err(Error::LevelMismatch(format!("element in field {}, quotient in field {}", x.field(), self.field)));
        }
        let key = self.key_of_scaled(&self.scaled_coords(x)?);
        self.key_index
            .get(&key)
            .copied()
            .ok_or_else(|| Error::Precondition("element lies outside the support ball".into()))
    }

    /// Index of the dual coset containing `a ∈ π^{-L} O_n`, by peeling digits.
    pub fn locate_dual(&self, tower: &Tower, a: &ExtElement) -> Result<usize> {
        let ch = tower.chain();
        let res = ch.residue_field(self.field);
        let lifts = tower.residue_lifts(self.n)?;
        let mut rest = a.clone();
        let mut digits = vec![0usize; self.radius as usize];
        for j in (1..=self.radius as i64).rev() {
            if rest.is_zero() || ch.valuation_bound(&rest) >= 0 {
                break;
            }
            let y = ch.mul(&rest, &tower.uniformizer_pow(self.n, j)?)?;
            if ch.valuation_normalized(&y)? < 0 {
                return Err(Error::Precondition(format!("dual element has norm above p^{{{}/e}}", self.radius)));
            }
            let dgt = res.to_index(&ch.reduce(&y)?) as usize;
            digits[j as usize - 1] = dgt;
            rest = ch.sub(&rest, &ch.mul(&lifts[dgt], &tower.uniformizer_pow(self.n, -j)?)?)?;
        }
        if !rest.is_zero() && ch.valuation_bound(&rest) < 0 {
            return Err(Error::Precondition(format!("dual element has norm above p^{{{}/e}}", self.radius)));
        }
        Ok(self.index_of_digits(&digits))
    }

    /// Index of `z_i + z_j`, through the additive keys.
    pub fn add_index(&self, i: usize, j: usize) -> usize {
        let md = self.modulus;
        let k: Vec<u64> = self.keys[i].iter().zip(&self.keys[j]).map(|(x, y)| (x + y) % md).collect();
        self.key_index[&k]
    }

    /// Index of `-z_i`.
    pub fn neg_index(&self, i: usize) -> usize {
        let md = self.modulus;
        let k: Vec<u64> = self.keys[i].iter().map(|x| (md - x) % md).collect();
        self.key_index[&k]
    }

    /// Index of `z_i - z_j`.
    pub fn sub_index(&self, i: usize, j: usize) -> usize {
        let table = self.sub_table.get_or_init(|| {
            let md = self.modulus;
            (0..self.size * self.size)
                .into_par_iter()
                .map(|ij| {
                    let (a, b) = (&self.keys[ij / self.size], &self.keys[ij % self.size]);
                    let k: Vec<u64> = a.iter().zip(b).map(|(x, y)| (x + md - y) % md).collect();
                    self.key_index[&k] as u32
                })
                .collect()
        });
        table[i * self.size + j] as usize
    }

    /// Coset label: residue-digit indices joined by `:`, lowest position first.
    pub fn label(&self, i: usize) -> String {
        let digits = self.digits(i);
        if digits.is_empty() {
            return "0".into();
        }
        digits.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(":")
    }

    pub fn parse_label(&self, s: &str) -> Result<usize> {
        let digits = if self.radius == 0 {
            Vec::new()
        } else {
            s.split(':')
                .map(|x| x.trim().parse::<usize>().map_err(|_| Error::Parse(format!("bad coset label {s:?}"))))
                .collect::<Result<Vec<_>>>()?
        };
        if digits.len() != self.radius as usize || digits.iter().any(|&d| d as u64 >= self.q) {
            return Err(Error::Parse(format!("coset label {s:?} does not fit q={} L={}", self.q, self.radius)));
        }
        Ok(self.index_of_digits(&digits))
    }

    /// Exact `μ`-mass of one coset: `q^{-d} ‖m‖^{-m} vol(π^{s+L} O)`, `vol(O) = 1`.
    pub fn coset_mu_weight(&self) -> BigRational {
        let q = BigInt::from(self.q);
        let pow = |k: i64| -> BigRational {
            let base = BigRational::from_integer(q.clone());
            if k >= 0 {
                num_traits::pow(base, k as usize)
            } else {
                num_traits::pow(base.recip(), (-k) as usize)
            }
        };
        let vp_m = self.e as i64 * {
            let mut v = 0;
            let mut m = self.m;
            while m % self.p == 0 {
                m /= self.p;
                v += 1;
            }
            v
        };
        // ‖m‖^{-m} = p^{m v_p(m)} = q^{e v_p(m)}
        pow(-self.d) * pow(vp_m) * pow(-(self.support + self.radius as i64))
    }
}

pub type BallCoset = usize;

/// A function on the cosets of a quotient.
#[derive(Clone, Debug)]
pub struct CylFunction {
    pub quotient: Arc<Quotient>,
    pub values: Vec<Complex64>,
}

#[derive(Clone, Debug)]
pub struct SpectralCoefficients {
    pub quotient: Arc<Quotient>,
    pub coeffs: Vec<Complex64>,
}

impl CylFunction {
    pub fn new(quotient: Arc<Quotient>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != quotient.size() {
            return Err(Error::Precondition(format!("{} values for {} cosets", values.len(), quotient.size())));
        }
        Ok(CylFunction { quotient, values })
    }

    pub fn from_fn(quotient: Arc<Quotient>, f: impl FnMut(BallCoset) -> Complex64) -> Self {
        let values = (0..quotient.size()).map(f).collect();
        CylFunction { quotient, values }
    }

    pub fn constant(quotient: Arc<Quotient>, c: Complex64) -> Self {
        Self::from_fn(quotient, |_| c)
    }

    /// Indicator of `{z : v(z) >= support + k}`.
    pub fn indicator_ball(quotient: Arc<Quotient>, k: i64) -> Self {
        let s = quotient.support;
        let qq = quotient.clone();
        Self::from_fn(quotient, move |i| match qq.rep_valuation(i) {
            Some(v) if v < s + k => Complex64::zero(),
            _ => Complex64::one(),
        })
    }

    /// `z ↦ χ(<ξ_j, z>)`.
    pub fn character(quotient: Arc<Quotient>, xi: usize) -> Self {
        let qq = quotient.clone();
        Self::from_fn(quotient, move |z| qq.character(xi, z))
    }

    pub fn level(&self) -> usize {
        self.quotient.n
    }

    pub fn to_csv(&self) -> String {
        let q = &self.quotient;
        let mut out = format!(
            "# level={} support_exponent={} inner_exponent={} tower={}\ncoset,real,imag\n",
            q.n,
            q.support,
            q.support + q.radius as i64,
            q.tower_hash
        );
        for (i, v) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{},{:e},{:e}", q.label(i), v.re, v.im);
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let q = &self.quotient;
        json!({
            "level": q.n,
            "support_exponent": q.support,
            "inner_exponent": q.support + q.radius as i64,
            "tower_hash": q.tower_hash,
            "values": self.values.iter().enumerate()
                .map(|(i, v)| json!({"coset": q.label(i), "real": v.re, "imag": v.im}))
                .collect::<Vec<_>>(),
        })
    }

    /// Read values from CSV (`coset,real,imag`, `#` comments allowed). Missing
    /// cosets are zero.
    pub fn from_csv(quotient: Arc<Quotient>, text: &str) -> Result<Self> {
        let mut values = vec![Complex64::zero(); quotient.size()];
        let mut header_seen = false;
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !header_seen {
                header_seen = true;
                if line.starts_with("coset") {
                    continue;
                }
            }
            let cols: Vec<&str> = line.split(',').collect();
            let bad = || Error::Parse(format!("line {}: expected coset,real,imag", ln + 1));
            if cols.len() < 2 || cols.len() > 3 {
                return Err(bad());
            }
            let idx = quotient.parse_label(cols[0]).map_err(|e| Error::Parse(format!("line {}: {e}", ln + 1)))?;
            let re: f64 = cols[1].trim().parse().map_err(|_| bad())?;
            let im: f64 = cols.get(2).map_or(Ok(0.0), |s| s.trim().parse()).map_err(|_| bad())?;
            values[idx] = Complex64::new(re, im);
        }
        Ok(CylFunction { quotient, values })
    }

    pub fn from_json(quotient: Arc<Quotient>, v: &Value) -> Result<Self> {
        let rows = v
            .get("values")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Parse("values: expected a list".into()))?;
        let mut values = vec![Complex64::zero(); quotient.size()];
        for (i, row) in rows.iter().enumerate() {
            let label = row
                .get("coset")
                .and_then(Value::as_str)
                .ok_or_else(|| Error::Parse(format!("values[{i}].coset: missing")))?;
            let idx = quotient.parse_label(label)?;
            let re = row.get("real").and_then(Value::as_f64).unwrap_or(0.0);
            let im = row.get("imag").and_then(Value::as_f64).unwrap_or(0.0);
            values[idx] = Complex64::new(re, im);
        }
        Ok(CylFunction { quotient, values })
    }
}

fn same_domain(a: &Quotient, b: &Quotient) -> Result<()> {
    if a.n != b.n || a.radius != b.radius || a.tower_hash != b.tower_hash {
        return Err(Error::LevelMismatch("functions live on different quotients".into()));
    }
    Ok(())
}

/// Normalized Haar integral over `S^(n)`: every coset has mass `1/|G|`.
pub fn haar_integral(f: &CylFunction) -> Complex64 {
    f.values.iter().sum::<Complex64>() / f.quotient.size() as f64
}

/// `∫ f dμ` with the coset mass `q^{-d} ‖m‖^{-m} vol(coset)`.
pub fn mu_integral(f: &CylFunction) -> Complex64 {
    let w = f.quotient.coset_mu_weight().to_f64().unwrap_or(f64::NAN);
    f.values.iter().sum::<Complex64>() * w
}

/// `μ(S)` in exact arithmetic.
pub fn mu_total_mass(q: &Quotient) -> BigRational {
    q.coset_mu_weight() * BigRational::from_integer(BigInt::from(q.size()))
}

/// `c(ξ) = ∫ χ(<ξ, x>) φ(x) dμ`.
/// `e^{2πi r/m}`, reduced to the first octant in integer arithmetic so that
/// quarter turns are exact and the rounded angle never exceeds π/4.
pub fn root_of_unity(r: u64, m: u64) -> Complex64 {
    let (r, m) = ((r % m) as u128, m as u128);
    let quadrant = 4 * r / m;
    let rem = 4 * r - quadrant * m;
    let (c, s) = if 2 * rem <= m {
        let th = FRAC_PI_2 * rem as f64 / m as f64;
        (th.cos(), th.sin())
    } else {
        let th = FRAC_PI_2 * (m - rem) as f64 / m as f64;
        (th.sin(), th.cos())
    };
    match quadrant {
        0 => Complex64::new(c, s),
        1 => Complex64::new(-s, c),
        2 => Complex64::new(-c, -s),
        _ => Complex64::new(s, -c),
    }
}

/// Neumaier summation, componentwise. The spectral multipliers can reach
/// 1e6 and amplify plain rounding error past useful tolerances.
pub fn compensated_sum(terms: impl IntoIterator<Item = Complex64>) -> Complex64 {
    fn step(sum: &mut f64, comp: &mut f64, x: f64) {
        let t = *sum + x;
        *comp += if sum.abs() >= x.abs() { (*sum - t) + x } else { (x - t) + *sum };
        *sum = t;
    }
    let (mut re, mut im, mut cre, mut cim) = (0.0, 0.0, 0.0, 0.0);
    for z in terms {
        step(&mut re, &mut cre, z.re);
        step(&mut im, &mut cim, z.im);
    }
    Complex64::new(re + cre, im + cim)
}

pub fn fourier(f: &CylFunction) -> SpectralCoefficients {
    let q = f.quotient.clone();
    let size = q.size();
    let coeffs = (0..size)
        .into_par_iter()
        .map(|xi| compensated_sum((0..size).map(|z| q.character(xi, z) * f.values[z])) / size as f64)
        .collect();
    SpectralCoefficients { quotient: q, coeffs }
}

/// `φ(z) = Σ_ξ conj(χ(<ξ, z>)) c(ξ)`.
pub fn inverse_fourier(c: &SpectralCoefficients) -> CylFunction {
    let q = c.quotient.clone();
    let size = q.size();
    let values = (0..size)
        .into_par_iter()
        .map(|z| compensated_sum((0..size).map(|xi| q.character(xi, z).conj() * c.coeffs[xi])))
        .collect();
    CylFunction { quotient: q, values }
}

impl SpectralCoefficients {
    /// Multiply coefficient `ξ` by `g(ξ)`.
    pub fn multiply(&self, g: impl Fn(usize) -> f64) -> Self {
        SpectralCoefficients {
            quotient: self.quotient.clone(),
            coeffs: self.coeffs.iter().enumerate().map(|(i, c)| c * g(i)).collect(),
        }
    }
}

/// `(∫ φ conj(ψ) dμ, Σ_ξ c_φ(ξ) conj(c_ψ(ξ)))`.
pub fn plancherel_check(phi: &CylFunction, psi: &CylFunction) -> Result<(Complex64, Complex64)> {
    same_domain(&phi.quotient, &psi.quotient)?;
    let n = phi.quotient.size() as f64;
    let lhs = phi.values.iter().zip(&psi.values).map(|(a, b)| a * b.conj()).sum::<Complex64>() / n;
    let (cp, cs) = (fourier(phi), fourier(psi));
    let rhs = cp.coeffs.iter().zip(&cs.coeffs).map(|(a, b)| a * b.conj()).sum();
    Ok((lhs, rhs))
}

/// Smallest radius `L'` at level `ν` with `T_n(π_ν^{s'+L'} O_ν) ⊂ π_n^{s+L} O_n`.
pub fn refinement_radius(tower: &Tower, q: &Quotient, nu: usize) -> Result<u32> {
    let ch = tower.chain();
    let lv = tower.level(nu)?;
    let fld = tower.field_of(nu)?;
    let s_nu = lv.support_exponent(tower.prime());
    let target = q.support + q.radius as i64;
    for l in 0u32.. {
        if (lv.q as u128).saturating_pow(l) > MAX_QUOTIENT as u128 {
            return Err(Error::CapExceeded { requested: (lv.q as u128).saturating_pow(l), cap: MAX_QUOTIENT as u128 });
        }
        let pw = tower.uniformizer_pow(nu, s_nu + l as i64)?;
        let mut ok = true;
        for b in 0..lv.m as usize {
            let mut unit = vec![BigInt::zero(); lv.m as usize];
            unit[b] = BigInt::one();
            let t = ch.project(&ch.mul(&ch.from_int_elem(fld, &unit), &pw)?, q.field())?;
            if !t.is_zero() && ch.valuation_bound(&t) < target {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(l);
        }
    }
    unreachable!()
}

/// Express `f` over the quotient at level `ν >= n`: `f'(z) = f(T_n z)`.
pub fn refine_level(tower: &Tower, f: &CylFunction, nu: usize) -> Result<CylFunction> {
    let q = &f.quotient;
    if nu == q.n {
        return Ok(f.clone());
    }
    if nu < q.n {
        return Err(Error::Precondition(format!("target level {nu} below {}", q.n)));
    }
    let radius = refinement_radius(tower, q, nu)?;
    let target = Quotient::new(tower, nu, radius)?;
    let ch = tower.chain();
    let values = (0..target.size())
        .map(|i| Ok(f.values[q.locate(&ch.project(target.rep(i), q.field())?)?]))
        .collect::<Result<Vec<_>>>()?;
    Ok(CylFunction { quotient: target, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tower::{build_cyclotomic_tower, build_unramified_tower, TowerSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_fn(q: &Arc<Quotient>, rng: &mut ChaCha8Rng) -> CylFunction {
        let values = (0..q.size()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        CylFunction::new(q.clone(), values).unwrap()
    }

    fn towers() -> Vec<(Tower, usize, u32)> {
        vec![
            (Tower::new(TowerSpec::base(2)).unwrap(), 1, 5),
            (Tower::new(TowerSpec::base(3)).unwrap(), 1, 3),
            (Tower::new(TowerSpec::eisenstein_over_qp(2, &[-2, 0])).unwrap(), 2, 5),
            (build_unramified_tower(2, &[1, 2]).unwrap(), 2, 3),
            (build_cyclotomic_tower(3, 3).unwrap(), 3, 2),
        ]
    }

    #[test]
    fn phases_match_direct_pairing() {
        for (t, n, l) in towers() {
            let q = Quotient::new(&t, n, l).unwrap();
            for xi in (0..q.size()).step_by(3) {
                for z in (0..q.size()).step_by(5) {
                    let ph = crate::padic::pairing_phase(t.chain(), q.dual(xi), q.rep(z)).unwrap();
                    let direct = ph.as_f64();
                    let fast = q.phase(xi, z) as f64 / q.phase_modulus() as f64;
                    let diff = (direct - fast).rem_euclid(1.0);
                    assert!(diff < 1e-12 || diff > 1.0 - 1e-12, "n={n} xi={xi} z={z}");
                }
            }
        }
    }

    #[test]
    fn character_matrix_is_orthogonal() {
        for (t, n, l) in towers() {
            let q = Quotient::new(&t, n, l).unwrap();
            let s = q.size();
            for a in 0..s {
                for b in 0..s {
                    let ip: Complex64 = (0..s).map(|z| q.character(a, z) * q.character(b, z).conj()).sum::<Complex64>() / s as f64;
                    let expect = if a == b { 1.0 } else { 0.0 };
                    assert!((ip - expect).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn integrals() {
        let t = Tower::new(TowerSpec::base(3)).unwrap();
        let q = Quotient::new(&t, 1, 2).unwrap();
        assert_eq!(mu_total_mass(&q), BigRational::one());
        assert!((mu_integral(&CylFunction::constant(q.clone(), Complex64::one())) - 1.0).norm() < 1e-15);
        let delta = CylFunction::from_fn(q.clone(), |i| if i == 4 { Complex64::one() } else { Complex64::zero() });
        assert!((haar_integral(&delta) - 1.0 / 9.0).norm() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (f, g) = (random_fn(&q, &mut rng), random_fn(&q, &mut rng));
        let sum = CylFunction::from_fn(q.clone(), |i| f.values[i] * 2.0 + g.values[i]);
        assert!((mu_integral(&sum) - (mu_integral(&f) * 2.0 + mu_integral(&g))).norm() < 1e-14);
        for (t, n, l) in towers() {
            let q = Quotient::new(&t, n, l).unwrap();
            assert_eq!(mu_total_mass(&q), BigRational::one());
        }
    }

    #[test]
    fn m_n_indicator_measure() {
        for (t, n, l) in towers() {
            let q = Quotient::new(&t, n, l).unwrap();
            let lv = t.level(n).unwrap();
            for big_n in 0..=(l as u64 / lv.e) {
                let f = CylFunction::indicator_ball(q.clone(), (big_n * lv.e) as i64);
                let expect = (t.prime() as f64).powf(-((big_n * lv.m) as f64));
                assert!((mu_integral(&f).re - expect).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn omega_reproduction() {
        // ∫ χ(<a, x>) dμ = 1 iff ‖a‖ <= 1; a ranges over the dual reps
        for (t, n, l) in towers() {
            let q = Quotient::new(&t, n, l).unwrap();
            for a in 0..q.size() {
                let v = mu_integral(&CylFunction::character(q.clone(), a));
                let expect = if q.dual_level(a) == 0 { 1.0 } else { 0.0 };
                assert!((v - expect).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn fourier_roundtrip_and_characters() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (t, n, l) in towers() {
            let q = Quotient::new(&t, n, l).unwrap();
            let f = random_fn(&q, &mut rng);
            let back = inverse_fourier(&fourier(&f));
            assert!(f.values.iter().zip(&back.values).all(|(a, b)| (a - b).norm() < 1e-12));
            let one = fourier(&CylFunction::constant(q.clone(), Complex64::one()));
            assert!((one.coeffs[0] - 1.0).norm() < 1e-12);
            assert!(one.coeffs[1..].iter().all(|c| c.norm() < 1e-12));
            // φ_a has its single unit coefficient at -a
            let ch = t.chain();
            for a in [1usize, q.size() - 1] {
                let c = fourier(&CylFunction::character(q.clone(), a));
                let neg = q.locate_dual(&t, &ch.neg(q.dual(a))).unwrap();
                for (i, v) in c.coeffs.iter().enumerate() {
                    let expect = if i == neg { 1.0 } else { 0.0 };
                    assert!((v - expect).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn plancherel() {
        let t = Tower::new(TowerSpec::eisenstein_over_qp(2, &[-2, 0])).unwrap();
        let q = Quotient::new(&t, 2, 4).unwrap();
        let one = CylFunction::constant(q.clone(), Complex64::one());
        let (l, r) = plancherel_check(&one, &one).unwrap();
        assert!((l - 1.0).norm() < 1e-12 && (r - 1.0).norm() < 1e-12);
        let delta = CylFunction::from_fn(q.clone(), |i| if i == 3 { Complex64::one() } else { Complex64::zero() });
        let (l, r) = plancherel_check(&delta, &delta).unwrap();
        assert!((l - 1.0 / 16.0).norm() < 1e-14 && (r - 1.0 / 16.0).norm() < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (f, g) = (random_fn(&q, &mut rng), random_fn(&q, &mut rng));
        let (l, r) = plancherel_check(&f, &g).unwrap();
        assert!((l - r).norm() < 1e-12);
    }

    #[test]
    fn locate_and_subtraction() {
        for (t, n, l) in towers() {
            let q = Quotient::new(&t, n, l).unwrap();
            let ch = t.chain();
            for i in 0..q.size() {
                assert_eq!(q.locate(q.rep(i)).unwrap(), i);
            }
            for (i, j) in [(0usize, 1usize), (q.size() - 1, 2 % q.size()), (3 % q.size(), 3 % q.size())] {
                let diff = ch.sub(q.rep(i), q.rep(j)).unwrap();
                assert_eq!(q.sub_index(i, j), q.locate(&diff).unwrap());
            }
            for a in 0..q.size() {
                assert_eq!(q.locate_dual(&t, q.dual(a)).unwrap(), a);
            }
        }
    }

    #[test]
    fn refinement_preserves_integrals() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u = build_unramified_tower(2, &[1, 2]).unwrap();
        let q = Quotient::new(&u, 1, 3).unwrap();
        for _ in 0..20 {
            let f = random_fn(&q, &mut rng);
            let g = refine_level(&u, &f, 2).unwrap();
            assert!((mu_integral(&f) - mu_integral(&g)).norm() < 1e-12);
        }
        let c = CylFunction::constant(q.clone(), Complex64::new(0.5, 0.25));
        assert!(refine_level(&u, &c, 2).unwrap().values.iter().all(|v| (v - Complex64::new(0.5, 0.25)).norm() == 0.0));
        let s = Tower::new(TowerSpec::eisenstein_over_qp(2, &[-2, 0])).unwrap();
        let q1 = Quotient::new(&s, 1, 3).unwrap();
        let ind = CylFunction::indicator_ball(q1.clone(), 2);
        let r = refine_level(&s, &ind, 2).unwrap();
        assert!((mu_integral(&r).re - 0.25).abs() < 1e-14);
        for _ in 0..5 {
            let f = random_fn(&q1, &mut rng);
            let g = refine_level(&s, &f, 2).unwrap();
            assert!((mu_integral(&f) - mu_integral(&g)).norm() < 1e-12);
        }
    }

    #[test]
    fn serialization_roundtrip() {
        let t = Tower::new(TowerSpec::base(3)).unwrap();
        let q = Quotient::new(&t, 1, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = random_fn(&q, &mut rng);
        let g = CylFunction::from_csv(q.clone(), &f.to_csv()).unwrap();
        let h = CylFunction::from_json(q.clone(), &f.to_json()).unwrap();
        assert_eq!(f.values, g.values);
        assert_eq!(f.values, h.values);
        assert!(CylFunction::from_csv(q.clone(), "coset,real,imag\n9:9,1,0\n").is_err());
    }
}
