//! Residue fields `F_q` of tower levels, realized as `F_p`-algebras with an
//! explicit multiplication table over the unramified monomial basis.

pub type FfElem = Vec<u64>;

#[derive(Clone, Debug)]
pub struct ResidueField {
    p: u64,
    dim: usize,
    /// `table[i][j]` lists `(k, c)` with `b_i b_j = sum c b_k`.
    table: Vec<Vec<Vec<(usize, u64)>>>,
}

impl ResidueField {
    pub fn prime_field(p: u64) -> Self {
        ResidueField { p, dim: 1, table: vec![vec![vec![(0, 1)]]] }
    }

    pub fn from_table(p: u64, table: Vec<Vec<Vec<(usize, u64)>>>) -> Self {
        let dim = table.len();
        ResidueField { p, dim, table }
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> u128 {
        (self.p as u128).pow(self.dim as u32)
    }

    pub fn zero(&self) -> FfElem {
        vec![0; self.dim]
    }

    pub fn one(&self) -> FfElem {
        let mut e = self.zero();
        e[0] = 1;
        e
    }

    /// The element whose coordinates are the base-p digits of `idx`.
    pub fn from_index(&self, mut idx: u128) -> FfElem {
        let mut e = self.zero();
        for c in e.iter_mut() {
            *c = (idx % self.p as u128) as u64;
            idx /= self.p as u128;
        }
        e
    }

    pub fn to_index(&self, e: &FfElem) -> u128 {
        e.iter().rev().fold(0u128, |acc, &c| acc * self.p as u128 + c as u128)
    }

    pub fn is_zero(&self, a: &FfElem) -> bool {
        a.iter().all(|&c| c == 0)
    }

    pub fn add(&self, a: &FfElem, b: &FfElem) -> FfElem {
        a.iter().zip(b).map(|(x, y)| (x + y) % self.p).collect()
    }

    pub fn sub(&self, a: &FfElem, b: &FfElem) -> FfElem {
        a.iter().zip(b).map(|(x, y)| (x + self.p - y) % self.p).collect()
    }

    pub fn mul(&self, a: &FfElem, b: &FfElem) -> FfElem {
        let p = self.p as u128;
        let mut acc = vec![0u128; self.dim];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                if y == 0 {
                    continue;
                }
                let xy = (x as u128 * y as u128) % p;
                for &(k, c) in &self.table[i][j] {
                    acc[k] = (acc[k] + xy * c as u128) % p;
                }
            }
        }
        acc.into_iter().map(|c| c as u64).collect()
    }

    pub fn pow(&self, a: &FfElem, mut e: u128) -> FfElem {
        let mut base = a.clone();
        let mut out = self.one();
        while e > 0 {
            if e & 1 == 1 {
                out = self.mul(&out, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        out
    }

    pub fn inv(&self, a: &FfElem) -> Option<FfElem> {
        if self.is_zero(a) {
            return None;
        }
        Some(self.pow(a, self.order() - 2))
    }

    // ---- polynomials over the field, coefficient vectors low to high ----

    fn trim(&self, a: &mut Vec<FfElem>) {
        while a.last().is_some_and(|c| self.is_zero(c)) {
            a.pop();
        }
    }

    fn poly_rem(&self, a: &[FfElem], g: &[FfElem]) -> Vec<FfElem> {
        let mut r = a.to_vec();
        self.trim(&mut r);
        let dg = g.len() - 1;
        let lead_inv = self.inv(&g[dg]).expect("nonzero leading coefficient");
        while r.len() > dg {
            let top = r.len() - 1;
            let c = self.mul(&r[top], &lead_inv);
            for (i, gi) in g.iter().enumerate() {
                let t = self.mul(&c, gi);
                r[top - dg + i] = self.sub(&r[top - dg + i], &t);
            }
            self.trim(&mut r);
        }
        r
    }

    fn poly_mul(&self, a: &[FfElem], b: &[FfElem]) -> Vec<FfElem> {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let mut out = vec![self.zero(); a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            if self.is_zero(x) {
                continue;
            }
            for (j, y) in b.iter().enumerate() {
                let t = self.mul(x, y);
                out[i + j] = self.add(&out[i + j], &t);
            }
        }
        self.trim(&mut out);
        out
    }

    fn poly_powmod(&self, a: &[FfElem], mut e: u128, g: &[FfElem]) -> Vec<FfElem> {
        let mut base = self.poly_rem(a, g);
        let mut out = vec![self.one()];
        while e > 0 {
            if e & 1 == 1 {
                out = self.poly_rem(&self.poly_mul(&out, &base), g);
            }
            base = self.poly_rem(&self.poly_mul(&base, &base), g);
            e >>= 1;
        }
        out
    }

    fn poly_gcd(&self, a: &[FfElem], b: &[FfElem]) -> Vec<FfElem> {
        let mut a = a.to_vec();
        let mut b = b.to_vec();
        self.trim(&mut a);
        self.trim(&mut b);
        while !b.is_empty() {
            let r = self.poly_rem(&a, &b);
            a = b;
            b = r;
        }
        a
    }

    /// Rabin's test for a monic polynomial `g` (coefficients low to high).
    pub fn is_irreducible(&self, g: &[FfElem]) -> bool {
        let r = g.len() - 1;
        if r == 0 {
            return false;
        }
        if r == 1 {
            return true;
        }
        let q = self.order();
        let x = vec![self.zero(), self.one()];
        // frob[k] = x^(q^k) mod g
        let mut frob = vec![self.poly_rem(&x, g)];
        for k in 1..=r {
            let next = self.poly_powmod(&frob[k - 1], q, g);
            frob.push(next);
        }
        let minus_x = |h: &[FfElem]| -> Vec<FfElem> {
            let mut d = h.to_vec();
            d.resize(d.len().max(2), self.zero());
            d[1] = self.sub(&d[1], &self.one());
            self.trim(&mut d);
            d
        };
        if !minus_x(&frob[r]).is_empty() {
            return false;
        }
        for l in prime_factors(r) {
            let h = minus_x(&frob[r / l]);
            let gcd = self.poly_gcd(g, &h);
            if gcd.len() != 1 {
                return false;
            }
        }
        true
    }

    /// The first monic irreducible polynomial of the given degree in the
    /// lexicographic order of coefficient indices (constant term fastest).
    pub fn first_irreducible(&self, degree: usize) -> Vec<FfElem> {
        let q = self.order();
        let total = q.checked_pow(degree as u32).expect("search space fits in u128");
        for idx in 0..total {
            let mut rest = idx;
            let mut g = Vec::with_capacity(degree + 1);
            for _ in 0..degree {
                g.push(self.from_index(rest % q));
                rest /= q;
            }
            if self.is_zero(&g[0]) {
                continue;
            }
            g.push(self.one());
            if self.is_irreducible(&g) {
                return g;
            }
        }
        unreachable!("irreducible polynomials exist in every degree")
    }
}

pub(crate) fn prime_factors(mut n: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}
