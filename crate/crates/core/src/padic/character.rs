use std::f64::consts::TAU;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::Zero;

use super::field::{ExtElement, FieldChain};
use super::scalar::{ratio_f64, Padic};
use crate::error::Result;

/// An exact element of `Q_p/Z_p`: `numerator / p^exp` with `0 <= numerator < p^exp`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Phase {
    pub p: u64,
    pub numerator: BigInt,
    pub exp: i64,
}

impl Phase {
    pub fn is_trivial(&self) -> bool {
        self.numerator.is_zero()
    }

    pub fn as_f64(&self) -> f64 {
        if self.exp == 0 {
            return 0.0;
        }
        ratio_f64(&self.numerator, &num_traits::pow(BigInt::from(self.p), self.exp as usize))
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::from_polar(1.0, TAU * self.as_f64())
    }
}

fn phase_of(x: &Padic) -> Result<Phase> {
    let (numerator, exp) = x.fractional_part()?;
    Ok(Phase { p: x.prime(), numerator, exp })
}

/// The rank-zero additive character `exp(2πi {x})` of `Q_p`.
pub fn character_chi(x: &Padic) -> Result<Complex64> {
    Ok(phase_of(x)?.to_complex())
}

/// `T_1(a · T_n(x)) mod Z_p` where `n` is the field of `a`.
pub fn pairing_phase(chain: &FieldChain, a: &ExtElement, x: &ExtElement) -> Result<Phase> {
    let n = a.field();
    let xn = chain.project(x, n)?;
    let prod = chain.mul(a, &xn)?;
    let m = chain.field(n).degree as i64;
    let t = chain.absolute_trace(&prod).mul(&Padic::from_int(chain.prime(), chain.precision(), m).inv()?);
    phase_of(&t)
}

/// The character `φ_a` evaluated at `x`: `χ(T_1(a · T_n(x)))`.
pub fn pairing_character(chain: &FieldChain, a: &ExtElement, x: &ExtElement) -> Result<Complex64> {
    Ok(pairing_phase(chain, a, x)?.to_complex())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn character_values_on_q2() {
        let x = Padic::from_int(2, 64, 12345);
        assert!(close(character_chi(&x).unwrap(), Complex64::new(1.0, 0.0)));
        let half = Padic::from_scaled_int(2, 64, 1, 1);
        assert!(close(character_chi(&half).unwrap(), Complex64::new(-1.0, 0.0)));
        let quarter = Padic::from_scaled_int(2, 64, 1, 2);
        assert!(close(character_chi(&quarter).unwrap(), Complex64::new(0.0, 1.0)));
    }

    #[test]
    fn character_is_a_homomorphism() {
        for (a, ka, b, kb) in [(3, 2, 5, 3), (7, 4, -9, 1), (1, 5, 31, 5)] {
            let x = Padic::from_scaled_int(2, 64, a, ka);
            let y = Padic::from_scaled_int(2, 64, b, kb);
            let lhs = character_chi(&x.add(&y)).unwrap();
            let rhs = character_chi(&x).unwrap() * character_chi(&y).unwrap();
            assert!(close(lhs, rhs));
        }
    }

    #[test]
    fn zero_pairing_is_trivial() {
        let ch = FieldChain::new(3, 32);
        let a = ch.zero(0);
        let x = ch.from_padic(0, Padic::from_scaled_int(3, 32, 2, 3));
        assert!(close(pairing_character(&ch, &a, &x).unwrap(), Complex64::new(1.0, 0.0)));
    }
}
