//! Arithmetic in a chain of finite extensions `Q_p = F_0 ⊂ F_1 ⊂ ... ⊂ F_k`,
//! each step either unramified or Eisenstein.
//!
//! Every field carries the product power basis of its steps. Index layout is
//! mixed radix with the bottom step fastest, so `F_j` sits inside `F_k` as the
//! prefix of the coordinate vector. The product basis is an integral basis of
//! the ring of integers, which makes valuations, reductions and traces
//! computable coordinate-wise. Structure constants are exact integers.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::residue::{FfElem, ResidueField};
use super::scalar::{int_valuation, Padic};
use crate::error::{Error, Result};

/// Exact integer coordinates of an element of some field of the chain.
pub type IntElem = Vec<BigInt>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepKind {
    Unramified,
    Eisenstein,
}

/// One extension step: a monic polynomial of `degree` over the previous field,
/// stored as its non-leading coefficients `g_0 .. g_{degree-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub kind: StepKind,
    pub degree: usize,
    pub poly: Vec<IntElem>,
}

type Table<T> = Vec<Vec<Vec<(usize, T)>>>;

#[derive(Clone, Debug)]
pub struct FieldData {
    pub degree: usize,
    pub e: u64,
    pub f: u64,
    /// Exponent of the different of `F_k / F_{k-1}`.
    pub step_different: i64,
    /// Exponent of the different of `F_k / Q_p`, composed step by step.
    pub different: i64,
    table: Table<BigInt>,
    ptable: Table<Padic>,
    trace: Vec<BigInt>,
    residue: ResidueField,
    residue_positions: Vec<usize>,
    uniformizer: IntElem,
}

/// An element of field `field` of a chain, with p-adic coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtElement {
    field: usize,
    coords: Vec<Padic>,
}

impl ExtElement {
    pub fn field(&self) -> usize {
        self.field
    }

    pub fn coords(&self) -> &[Padic] {
        &self.coords
    }

    /// Guaranteed absolute precision (in powers of p) over all coordinates.
    pub fn precision_watermark(&self) -> i64 {
        self.coords
            .iter()
            .filter(|c| !c.is_exact_zero())
            .map(|c| c.absolute_precision())
            .min()
            .unwrap_or(i64::MAX)
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| c.is_zero())
    }
}

#[derive(Clone, Debug)]
pub struct FieldChain {
    p: u64,
    prec: u32,
    steps: Vec<Step>,
    fields: Vec<FieldData>,
}

fn bigint_vec(n: usize) -> IntElem {
    vec![BigInt::zero(); n]
}

fn mul_with(table: &Table<BigInt>, a: &[BigInt], b: &[BigInt]) -> IntElem {
    let mut out = bigint_vec(table.len());
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if y.is_zero() {
                continue;
            }
            let xy = x * y;
            for (k, c) in &table[i][j] {
                out[*k] += &xy * c;
            }
        }
    }
    out
}

fn pad(a: &[BigInt], n: usize) -> IntElem {
    let mut v = a.to_vec();
    v.resize(n, BigInt::zero());
    v
}

fn sparse(v: IntElem) -> Vec<(usize, BigInt)> {
    v.into_iter().enumerate().filter(|(_, c)| !c.is_zero()).collect()
}

impl FieldChain {
    pub fn new(p: u64, prec: u32) -> Self {
        let base = FieldData {
            degree: 1,
            e: 1,
            f: 1,
            step_different: 0,
            different: 0,
            table: vec![vec![vec![(0, BigInt::one())]]],
            ptable: vec![vec![vec![(0, Padic::one(p, prec))]]],
            trace: vec![BigInt::one()],
            residue: ResidueField::prime_field(p),
            residue_positions: vec![0],
            uniformizer: vec![BigInt::from(p)],
        };
        FieldChain { p, prec, steps: Vec::new(), fields: vec![base] }
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn precision(&self) -> u32 {
        self.prec
    }

    pub fn top(&self) -> usize {
        self.fields.len() - 1
    }

    pub fn field(&self, k: usize) -> &FieldData {
        &self.fields[k]
    }

    pub fn step(&self, k: usize) -> &Step {
        &self.steps[k - 1]
    }

    pub fn residue_field(&self, k: usize) -> &ResidueField {
        &self.fields[k].residue
    }

    /// Lift a residue element of field `k` to integer coordinates.
    pub fn lift_residue(&self, k: usize, r: &FfElem) -> IntElem {
        let fd = &self.fields[k];
        let mut out = bigint_vec(fd.degree);
        for (pos, c) in fd.residue_positions.iter().zip(r) {
            out[*pos] = BigInt::from(*c);
        }
        out
    }

    /// Uniformizer of field `k` in integer coordinates.
    pub fn uniformizer_int(&self, k: usize) -> &IntElem {
        &self.fields[k].uniformizer
    }

    /// Multiply two exact elements of field `k`.
    pub fn mul_int(&self, k: usize, a: &[BigInt], b: &[BigInt]) -> IntElem {
        mul_with(&self.fields[k].table, a, b)
    }

    /// Absolute trace `Tr_{F_k/Q_p}` of an exact element.
    pub fn trace_int(&self, k: usize, a: &[BigInt]) -> BigInt {
        a.iter().zip(&self.fields[k].trace).map(|(x, t)| x * t).sum()
    }

    /// The trace form `Tr(e_a e_b)` of the integral basis of field `k`.
    pub fn trace_form(&self, k: usize) -> Vec<Vec<BigInt>> {
        let fd = &self.fields[k];
        (0..fd.degree)
            .map(|a| {
                (0..fd.degree)
                    .map(|b| fd.table[a][b].iter().map(|(c, v)| v * &fd.trace[*c]).sum())
                    .collect()
            })
            .collect()
    }

    /// Append an extension step on top of the chain.
    pub fn push_step(&mut self, step: Step) -> Result<()> {
        let k = self.fields.len();
        let prev = &self.fields[k - 1];
        let mprev = prev.degree;
        let r = step.degree;
        if r < 1 {
            return Err(Error::InvalidTower("step degree must be positive".into()));
        }
        if step.poly.len() != r {
            return Err(Error::InvalidTower(format!(
                "step of degree {r} needs {r} non-leading coefficients, got {}",
                step.poly.len()
            )));
        }
        for c in &step.poly {
            if c.len() > mprev {
                return Err(Error::InvalidTower(
                    "polynomial coefficient has more coordinates than the base field".into(),
                ));
            }
        }
        let poly: Vec<IntElem> = step.poly.iter().map(|c| pad(c, mprev)).collect();

        match step.kind {
            StepKind::Unramified => self.check_unramified(k - 1, &poly)?,
            StepKind::Eisenstein => self.check_eisenstein(k - 1, &poly)?,
        }

        let m = mprev * r;
        // products of basis elements, reduced by the step polynomial
        let block_mul = |a: &[IntElem], b: &[IntElem]| -> Vec<IntElem> {
            let mut c = vec![bigint_vec(mprev); 2 * r - 1];
            for (i, x) in a.iter().enumerate() {
                if x.iter().all(|v| v.is_zero()) {
                    continue;
                }
                for (j, y) in b.iter().enumerate() {
                    let t = mul_with(&prev.table, x, y);
                    for (s, v) in c[i + j].iter_mut().zip(t) {
                        *s += v;
                    }
                }
            }
            for s in (r..2 * r - 1).rev() {
                let top = std::mem::replace(&mut c[s], bigint_vec(mprev));
                if top.iter().all(|v| v.is_zero()) {
                    continue;
                }
                for (i, g) in poly.iter().enumerate() {
                    let t = mul_with(&prev.table, &top, g);
                    for (dst, v) in c[s - r + i].iter_mut().zip(t) {
                        *dst -= v;
                    }
                }
            }
            c.truncate(r);
            c
        };
        let basis_blocks = |idx: usize| -> Vec<IntElem> {
            let mut blocks = vec![bigint_vec(mprev); r];
            blocks[idx / mprev][idx % mprev] = BigInt::one();
            blocks
        };
        let mut table: Table<BigInt> = vec![vec![Vec::new(); m]; m];
        for i in 0..m {
            for j in i..m {
                let prod: IntElem =
                    block_mul(&basis_blocks(i), &basis_blocks(j)).into_iter().flatten().collect();
                let sp = sparse(prod);
                table[i][j] = sp.clone();
                table[j][i] = sp;
            }
        }
        let ptable = table
            .iter()
            .map(|row| {
                row.iter()
                    .map(|cell| {
                        cell.iter()
                            .map(|(k, c)| (*k, Padic::from_int(self.p, self.prec, c.clone())))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let trace = (0..m)
            .map(|i| {
                (0..m)
                    .map(|j| {
                        table[i][j]
                            .iter()
                            .find(|(k, _)| *k == j)
                            .map(|(_, c)| c.clone())
                            .unwrap_or_default()
                    })
                    .sum()
            })
            .collect();

        let (e, f, residue_positions, uniformizer) = match step.kind {
            StepKind::Unramified => {
                let pos = (0..r)
                    .flat_map(|a| prev.residue_positions.iter().map(move |p| p + mprev * a))
                    .collect::<Vec<_>>();
                (prev.e, prev.f * r as u64, pos, pad(&prev.uniformizer, m))
            }
            StepKind::Eisenstein => {
                let mut u = bigint_vec(m);
                u[mprev] = BigInt::one();
                (prev.e * r as u64, prev.f, prev.residue_positions.clone(), u)
            }
        };

        // residue multiplication over the unramified monomials
        let index_of = |k: usize| residue_positions.iter().position(|&p| p == k);
        let dim = residue_positions.len();
        let mut rtable = vec![vec![Vec::new(); dim]; dim];
        for a in 0..dim {
            for b in 0..dim {
                for (k, c) in &table[residue_positions[a]][residue_positions[b]] {
                    let c = c.mod_floor_u64(self.p);
                    if c == 0 {
                        continue;
                    }
                    let idx = index_of(*k).ok_or_else(|| {
                        Error::InvalidTower(
                            "unramified polynomial must have residue-lift coefficients".into(),
                        )
                    })?;
                    rtable[a][b].push((idx, c));
                }
            }
        }
        let residue = ResidueField::from_table(self.p, rtable);

        let prev_different = prev.different;
        self.steps.push(step.clone());
        self.fields.push(FieldData {
            degree: m,
            e,
            f,
            step_different: 0,
            different: 0,
            table,
            ptable,
            trace,
            residue,
            residue_positions,
            uniformizer,
        });
        let step_different = match step.kind {
            StepKind::Unramified => 0,
            StepKind::Eisenstein => {
                // v(g'(pi)) in the new field
                let pi = self.from_int_elem(k, &self.fields[k].uniformizer.clone());
                let mut deriv = self.scale_int(&self.pow(&pi, r as i64 - 1)?, r as i64);
                for (i, g) in poly.iter().enumerate().skip(1) {
                    let gi = self.from_int_elem(k, &pad(g, m));
                    let term = self.mul(&self.scale_int(&gi, i as i64), &self.pow(&pi, i as i64 - 1)?)?;
                    deriv = self.add(&deriv, &term)?;
                }
                self.valuation_normalized(&deriv)?
            }
        };
        let e_step = match step.kind {
            StepKind::Unramified => 1,
            StepKind::Eisenstein => r as i64,
        };
        let fd = self.fields.last_mut().expect("just pushed");
        fd.step_different = step_different;
        fd.different = e_step * prev_different + step_different;
        Ok(())
    }

    fn check_unramified(&self, k: usize, poly: &[IntElem]) -> Result<()> {
        let fd = &self.fields[k];
        let mut red = Vec::with_capacity(poly.len() + 1);
        for c in poly {
            for (i, v) in c.iter().enumerate() {
                if !v.is_zero() && !fd.residue_positions.contains(&i) {
                    return Err(Error::InvalidTower(
                        "unramified polynomial must have residue-lift coefficients".into(),
                    ));
                }
            }
            red.push(fd.residue_positions.iter().map(|&p| c[p].mod_floor_u64(self.p)).collect());
        }
        red.push(fd.residue.one());
        if !fd.residue.is_irreducible(&red) {
            return Err(Error::InvalidTower(
                "unramified step polynomial is reducible modulo the uniformizer".into(),
            ));
        }
        Ok(())
    }

    fn check_eisenstein(&self, k: usize, poly: &[IntElem]) -> Result<()> {
        for (i, c) in poly.iter().enumerate() {
            let x = self.from_int_elem(k, c);
            let v = if x.is_zero() { None } else { Some(self.valuation_normalized(&x)?) };
            match (i, v) {
                (0, Some(1)) => {}
                (0, _) => {
                    return Err(Error::NotEisenstein(format!(
                        "constant term must have valuation exactly 1, found {v:?}"
                    )))
                }
                (_, Some(v)) if v < 1 => {
                    return Err(Error::NotEisenstein(format!(
                        "coefficient of x^{i} has valuation {v} < 1"
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// The unramified step of degree `r` over the current top field with the
    /// first irreducible residue polynomial.
    pub fn default_unramified_step(&self, r: usize) -> Step {
        let k = self.top();
        let res = &self.fields[k].residue;
        let g = res.first_irreducible(r);
        let poly = g[..r].iter().map(|c| self.lift_residue(k, c)).collect();
        Step { kind: StepKind::Unramified, degree: r, poly }
    }

    // ---- element construction ----

    pub fn zero(&self, k: usize) -> ExtElement {
        ExtElement { field: k, coords: vec![Padic::zero(self.p, self.prec); self.fields[k].degree] }
    }

    pub fn one(&self, k: usize) -> ExtElement {
        self.from_int(k, 1)
    }

    pub fn from_int(&self, k: usize, n: i64) -> ExtElement {
        let mut x = self.zero(k);
        x.coords[0] = Padic::from_int(self.p, self.prec, n);
        x
    }

    pub fn from_padic(&self, k: usize, a: Padic) -> ExtElement {
        let mut x = self.zero(k);
        x.coords[0] = a;
        x
    }

    pub fn from_int_elem(&self, k: usize, a: &[BigInt]) -> ExtElement {
        let mut x = self.zero(k);
        for (c, v) in x.coords.iter_mut().zip(a) {
            *c = Padic::from_int(self.p, self.prec, v.clone());
        }
        x
    }

    pub fn from_coords(&self, k: usize, coords: Vec<Padic>) -> Result<ExtElement> {
        if coords.len() != self.fields[k].degree {
            return Err(Error::LevelMismatch(format!(
                "field {k} has degree {}, got {} coordinates",
                self.fields[k].degree,
                coords.len()
            )));
        }
        Ok(ExtElement { field: k, coords })
    }

    pub fn uniformizer(&self, k: usize) -> ExtElement {
        self.from_int_elem(k, &self.fields[k].uniformizer)
    }

    /// Embed into a larger field of the chain.
    pub fn embed(&self, x: &ExtElement, k: usize) -> Result<ExtElement> {
        if k < x.field {
            return Err(Error::LevelMismatch(format!("cannot embed field {} into {k}", x.field)));
        }
        let mut y = self.zero(k);
        y.coords[..x.coords.len()].clone_from_slice(&x.coords);
        Ok(y)
    }

    fn align(&self, x: &ExtElement, y: &ExtElement) -> Result<(ExtElement, ExtElement)> {
        let k = x.field.max(y.field);
        Ok((self.embed(x, k)?, self.embed(y, k)?))
    }

    // ---- arithmetic ----

    pub fn add(&self, x: &ExtElement, y: &ExtElement) -> Result<ExtElement> {
        let (x, y) = self.align(x, y)?;
        let coords = x.coords.iter().zip(&y.coords).map(|(a, b)| a.add(b)).collect();
        Ok(ExtElement { field: x.field, coords })
    }

    pub fn neg(&self, x: &ExtElement) -> ExtElement {
        ExtElement { field: x.field, coords: x.coords.iter().map(Padic::neg).collect() }
    }

    pub fn sub(&self, x: &ExtElement, y: &ExtElement) -> Result<ExtElement> {
        self.add(x, &self.neg(y))
    }

    pub fn scale(&self, x: &ExtElement, a: &Padic) -> ExtElement {
        ExtElement { field: x.field, coords: x.coords.iter().map(|c| c.mul(a)).collect() }
    }

    pub fn scale_int(&self, x: &ExtElement, n: i64) -> ExtElement {
        self.scale(x, &Padic::from_int(self.p, self.prec, n))
    }

    pub fn mul(&self, x: &ExtElement, y: &ExtElement) -> Result<ExtElement> {
        let (x, y) = self.align(x, y)?;
        let k = x.field;
        let tab = &self.fields[k].ptable;
        let mut out = self.zero(k);
        for (i, a) in x.coords.iter().enumerate() {
            if a.is_exact_zero() {
                continue;
            }
            for (j, b) in y.coords.iter().enumerate() {
                if b.is_exact_zero() {
                    continue;
                }
                let ab = a.mul(b);
                for (kk, c) in &tab[i][j] {
                    out.coords[*kk] = out.coords[*kk].add(&ab.mul(c));
                }
            }
        }
        Ok(out)
    }

    pub fn pow(&self, x: &ExtElement, n: i64) -> Result<ExtElement> {
        if n < 0 {
            return self.pow(&self.inv(x)?, -n);
        }
        let mut out = self.one(x.field);
        let mut base = x.clone();
        let mut n = n as u64;
        while n > 0 {
            if n & 1 == 1 {
                out = self.mul(&out, &base)?;
            }
            n >>= 1;
            if n > 0 {
                base = self.mul(&base, &base)?;
            }
        }
        Ok(out)
    }

    /// Multiplicative inverse via the multiplication matrix, pivoting on
    /// minimal valuation.
    pub fn inv(&self, x: &ExtElement) -> Result<ExtElement> {
        if x.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let k = x.field;
        let m = self.fields[k].degree;
        // columns: x * e_j
        let mut cols = Vec::with_capacity(m);
        for j in 0..m {
            let mut ej = self.zero(k);
            ej.coords[j] = Padic::one(self.p, self.prec);
            cols.push(self.mul(x, &ej)?.coords);
        }
        // augmented rows
        let mut a: Vec<Vec<Padic>> = (0..m)
            .map(|i| {
                let mut row: Vec<Padic> = (0..m).map(|j| cols[j][i].clone()).collect();
                row.push(if i == 0 {
                    Padic::one(self.p, self.prec)
                } else {
                    Padic::zero(self.p, self.prec)
                });
                row
            })
            .collect();
        for c in 0..m {
            let piv = (c..m)
                .filter(|&r| !a[r][c].is_zero())
                .min_by_key(|&r| a[r][c].valuation_bound())
                .ok_or(Error::DivisionByZero)?;
            a.swap(c, piv);
            let pinv = a[c][c].inv()?;
            let pivot_row: Vec<Padic> = a[c].iter().map(|v| v.mul(&pinv)).collect();
            a[c] = pivot_row.clone();
            for (r, row) in a.iter_mut().enumerate() {
                if r == c || row[c].is_exact_zero() {
                    continue;
                }
                let factor = row[c].clone();
                for (dst, src) in row.iter_mut().zip(&pivot_row) {
                    *dst = dst.sub(&src.mul(&factor));
                }
            }
        }
        let coords = a.into_iter().map(|row| row[m].clone()).collect();
        Ok(ExtElement { field: k, coords })
    }

    pub fn div(&self, x: &ExtElement, y: &ExtElement) -> Result<ExtElement> {
        self.mul(x, &self.inv(y)?)
    }

    // ---- valuation and norm ----

    fn valuation_rec(&self, k: usize, coords: &[Padic]) -> (Option<i64>, i64) {
        if k == 0 {
            let c = &coords[0];
            if c.is_exact_zero() {
                return (None, i64::MAX / 8);
            }
            return (c.valuation(), c.valuation_bound());
        }
        let mprev = self.fields[k - 1].degree;
        let step = &self.steps[k - 1];
        let mut exact: Option<i64> = None;
        let mut bound = i64::MAX / 8;
        for (i, block) in coords.chunks(mprev).enumerate() {
            let (v, b) = self.valuation_rec(k - 1, block);
            let map = |x: i64| match step.kind {
                StepKind::Unramified => x,
                StepKind::Eisenstein => x.saturating_mul(step.degree as i64) + i as i64,
            };
            match v {
                Some(v) => exact = Some(exact.map_or(map(v), |e| e.min(map(v)))),
                None => bound = bound.min(if b >= i64::MAX / 8 { b } else { map(b) }),
            }
        }
        match exact {
            Some(e) if e < bound => (Some(e), e),
            Some(e) => (None, e.min(bound)),
            None => (None, bound),
        }
    }

    /// Valuation normalized so the uniformizer of the element's field has valuation 1.
    pub fn valuation_normalized(&self, x: &ExtElement) -> Result<i64> {
        match self.valuation_rec(x.field, &x.coords) {
            (Some(v), _) => Ok(v),
            (None, b) => Err(Error::PrecisionExhausted(format!(
                "element is zero at working precision (valuation >= {b})"
            ))),
        }
    }

    /// Lower bound on the normalized valuation; exact when the element is nonzero.
    pub fn valuation_bound(&self, x: &ExtElement) -> i64 {
        self.valuation_rec(x.field, &x.coords).1
    }

    /// Valuation normalized by `v(p) = 1`, as `(numerator, e)`.
    pub fn valuation(&self, x: &ExtElement) -> Result<(i64, u64)> {
        Ok((self.valuation_normalized(x)?, self.fields[x.field].e))
    }

    /// `‖x‖ = p^{-v(x)}`.
    pub fn norm(&self, x: &ExtElement) -> Result<f64> {
        let (v, e) = self.valuation(x)?;
        Ok((self.p as f64).powf(-(v as f64) / e as f64))
    }

    /// Reduction of an integral element to the residue field.
    pub fn reduce(&self, x: &ExtElement) -> Result<FfElem> {
        let fd = &self.fields[x.field];
        fd.residue_positions
            .iter()
            .map(|&pos| {
                let c = &x.coords[pos];
                if !c.is_zero() && c.valuation_bound() < 0 {
                    return Err(Error::Precondition("element is not integral".into()));
                }
                Ok(c.scaled_residue(0, 1)? as u64)
            })
            .collect()
    }

    // ---- traces ----

    /// `Tr_{F_k/F_j}(x)` as the trace of multiplication by `x` on the
    /// `F_j`-basis of upper monomials.
    pub fn trace(&self, x: &ExtElement, target: usize) -> Result<ExtElement> {
        let k = x.field;
        if target > k {
            return Err(Error::LevelMismatch(format!("trace from field {k} to {target}")));
        }
        let mj = self.fields[target].degree;
        let mk = self.fields[k].degree;
        let mut out = self.zero(target);
        for u in 0..mk / mj {
            let mut w = self.zero(k);
            w.coords[u * mj] = Padic::one(self.p, self.prec);
            let y = self.mul(x, &w)?;
            for (dst, src) in out.coords.iter_mut().zip(&y.coords[u * mj..(u + 1) * mj]) {
                *dst = dst.add(src);
            }
        }
        Ok(out)
    }

    /// Absolute trace from the precomputed trace vector.
    pub fn absolute_trace(&self, x: &ExtElement) -> Padic {
        let fd = &self.fields[x.field];
        x.coords.iter().zip(&fd.trace).fold(Padic::zero(self.p, self.prec), |acc, (c, t)| {
            acc.add(&c.mul(&Padic::from_int(self.p, self.prec, t.clone())))
        })
    }

    /// Averaged trace `(m_j/m_k) Tr_{F_k/F_j}(x)`; identity when `x` already lies in `F_j`.
    pub fn project(&self, x: &ExtElement, target: usize) -> Result<ExtElement> {
        let k = x.field;
        if k == target {
            return Ok(x.clone());
        }
        if k < target {
            return self.embed(x, target);
        }
        let ratio = (self.fields[k].degree / self.fields[target].degree) as i64;
        let t = self.trace(x, target)?;
        let inv = Padic::from_int(self.p, self.prec, ratio).inv()?;
        Ok(self.scale(&t, &inv))
    }

    /// Exponent of the different of `F_k/Q_p`, read off the discriminant of
    /// the integral basis: `v_p(disc) = f_k d_k`.
    pub fn different_from_discriminant(&self, k: usize) -> Result<i64> {
        let det = bareiss_det(self.trace_form(k));
        if det.is_zero() {
            return Err(Error::InvalidTower("degenerate trace form".into()));
        }
        let (v, _) = int_valuation(self.p, &det.abs());
        let f = self.fields[k].f as i64;
        if v % f != 0 {
            return Err(Error::InvalidTower(format!("discriminant valuation {v} not divisible by f={f}")));
        }
        Ok(v / f)
    }
}

trait ModFloorU64 {
    fn mod_floor_u64(&self, p: u64) -> u64;
}

impl ModFloorU64 for BigInt {
    fn mod_floor_u64(&self, p: u64) -> u64 {
        use num_integer::Integer;
        self.mod_floor(&BigInt::from(p)).to_u64().unwrap_or(0)
    }
}

fn bareiss_det(mut a: Vec<Vec<BigInt>>) -> BigInt {
    let n = a.len();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&r| !a[r][k].is_zero()) {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
                a[i][j] = v;
            }
        }
        prev = a[k][k].clone();
    }
    sign * &a[n - 1][n - 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eis(_p: u64, coeffs: &[i64]) -> Step {
        Step {
            kind: StepKind::Eisenstein,
            degree: coeffs.len(),
            poly: coeffs.iter().map(|&c| vec![BigInt::from(c)]).collect(),
        }
    }

    #[test]
    fn sqrt_two_over_q2() {
        let mut ch = FieldChain::new(2, 64);
        ch.push_step(eis(2, &[-2, 0])).unwrap();
        let pi = ch.uniformizer(1);
        let sq = ch.mul(&pi, &pi).unwrap();
        assert!(ch.sub(&sq, &ch.from_int(1, 2)).unwrap().is_zero());
        assert_eq!(ch.valuation(&pi).unwrap(), (1, 2));
        assert!((ch.norm(&pi).unwrap() - 2f64.powf(-0.5)).abs() < 1e-15);
        assert_eq!(ch.field(1).different, 3);
        assert_eq!(ch.different_from_discriminant(1).unwrap(), 3);
    }

    #[test]
    fn eisenstein_validation() {
        let mut ch = FieldChain::new(2, 64);
        assert!(matches!(ch.push_step(eis(2, &[-4, 0])), Err(Error::NotEisenstein(_))));
        assert!(matches!(ch.push_step(eis(2, &[2, 1])), Err(Error::NotEisenstein(_))));
        assert!(ch.push_step(eis(2, &[2, 2])).is_ok());
    }

    #[test]
    fn unramified_quadratic() {
        let mut ch = FieldChain::new(2, 64);
        let st = ch.default_unramified_step(2);
        ch.push_step(st).unwrap();
        let fd = ch.field(1);
        assert_eq!((fd.degree, fd.e, fd.f, fd.different), (2, 1, 2, 0));
        assert_eq!(ch.residue_field(1).order(), 4);
        // reducible x^2 + 1 over F_2 is rejected
        let bad = Step {
            kind: StepKind::Unramified,
            degree: 2,
            poly: vec![vec![BigInt::one()], vec![BigInt::zero()]],
        };
        let mut ch2 = FieldChain::new(2, 64);
        assert!(ch2.push_step(bad).is_err());
    }

    #[test]
    fn inverse_in_extension() {
        let mut ch = FieldChain::new(3, 40);
        ch.push_step(ch.default_unramified_step(2)).unwrap();
        ch.push_step(Step {
            kind: StepKind::Eisenstein,
            degree: 2,
            poly: vec![vec![BigInt::from(3)], vec![BigInt::zero()]],
        })
        .unwrap();
        let x = ch.from_int_elem(2, &[1, 2, 5, 7].map(BigInt::from));
        let y = ch.inv(&x).unwrap();
        let one = ch.mul(&x, &y).unwrap();
        assert!(ch.sub(&one, &ch.one(2)).unwrap().is_zero());
    }

    #[test]
    fn trace_of_one_is_degree() {
        let mut ch = FieldChain::new(2, 64);
        ch.push_step(ch.default_unramified_step(2)).unwrap();
        ch.push_step(eis(2, &[2, 0])).unwrap();
        let one = ch.one(2);
        let t = ch.trace(&one, 0).unwrap();
        assert!(t.coords()[0].eq_at_precision(&Padic::from_int(2, 64, 4)));
        let t1 = ch.trace(&one, 1).unwrap();
        assert!(ch.sub(&t1, &ch.from_int(1, 2)).unwrap().is_zero());
    }
}
