// SPDX-License-Identifier: Apache-2.0

//! Arithmetic in F_p for the Mersenne prime p = 2^61 − 1.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use rand::RngCore;

pub const MODULUS: u64 = (1 << 61) - 1;

/// A canonical field element, always `< MODULUS`.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fp(u64);

impl Fp {
    pub const ZERO: Fp = Fp(0);
    pub const ONE: Fp = Fp(1);

    /// Reduces any `u64` into the field.
    pub fn new(v: u64) -> Fp {
        Fp(reduce(v as u128))
    }

    /// Accepts only already-canonical values.
    pub fn from_canonical(v: u64) -> Option<Fp> {
        (v < MODULUS).then_some(Fp(v))
    }

    pub fn from_i64(v: i64) -> Fp {
        if v >= 0 {
            Fp::new(v as u64)
        } else {
            -Fp::new(v.unsigned_abs())
        }
    }

    pub fn value(self) -> u64 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn pow(self, mut e: u64) -> Fp {
        let mut base = self;
        let mut acc = Fp::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc *= base;
            }
            base *= base;
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via Fermat; `None` for zero.
    pub fn inverse(self) -> Option<Fp> {
        (!self.is_zero()).then(|| self.pow(MODULUS - 2))
    }

    /// Uniform sample by rejection on 61-bit draws.
    pub fn random<R: RngCore + ?Sized>(rng: &mut R) -> Fp {
        loop {
            let v = rng.next_u64() & MODULUS;
            if v < MODULUS {
                return Fp(v);
            }
        }
    }

    pub fn to_le_bytes(self) -> [u8; 8] {
        self.0.to_le_bytes()
    }
}

fn reduce(v: u128) -> u64 {
    // 2^61 ≡ 1 (mod p), so fold the high bits down twice.
    let folded = (v & MODULUS as u128) + (v >> 61);
    let folded = (folded & MODULUS as u128) + (folded >> 61);
    let r = folded as u64;
    if r >= MODULUS {
        r - MODULUS
    } else {
        r
    }
}

impl fmt::Debug for Fp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fp({})", self.0)
    }
}

impl fmt::Display for Fp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Add for Fp {
    type Output = Fp;
    fn add(self, rhs: Fp) -> Fp {
        let s = self.0 + rhs.0;
        Fp(if s >= MODULUS { s - MODULUS } else { s })
    }
}

impl Sub for Fp {
    type Output = Fp;
    fn sub(self, rhs: Fp) -> Fp {
        self + (-rhs)
    }
}

impl Neg for Fp {
    type Output = Fp;
    fn neg(self) -> Fp {
        if self.0 == 0 {
            self
        } else {
            Fp(MODULUS - self.0)
        }
    }
}

impl Mul for Fp {
    type Output = Fp;
    fn mul(self, rhs: Fp) -> Fp {
        Fp(reduce(self.0 as u128 * rhs.0 as u128))
    }
}

impl AddAssign for Fp {
    fn add_assign(&mut self, rhs: Fp) {
        *self = *self + rhs;
    }
}

impl SubAssign for Fp {
    fn sub_assign(&mut self, rhs: Fp) {
        *self = *self - rhs;
    }
}

impl MulAssign for Fp {
    fn mul_assign(&mut self, rhs: Fp) {
        *self = *self * rhs;
    }
}

impl std::iter::Sum for Fp {
    fn sum<I: Iterator<Item = Fp>>(iter: I) -> Fp {
        iter.fold(Fp::ZERO, Add::add)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Reference arithmetic through plain u128 modulo.
    fn ref_mul(a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % MODULUS as u128) as u64
    }

    #[test]
    fn edge_values() {
        assert_eq!(Fp::new(MODULUS), Fp::ZERO);
        assert_eq!(Fp::new(u64::MAX).value(), u64::MAX % MODULUS);
        assert_eq!(Fp::from_i64(-1), Fp::new(MODULUS - 1));
        assert_eq!(Fp::from_canonical(MODULUS), None);
        assert_eq!(Fp::ZERO.inverse(), None);
        assert_eq!(-Fp::ZERO, Fp::ZERO);
    }

    proptest! {
        #[test]
        fn matches_reference_modular_arithmetic(a in 0..MODULUS, b in 0..MODULUS) {
            let (x, y) = (Fp::new(a), Fp::new(b));
            prop_assert_eq!((x * y).value(), ref_mul(a, b));
            prop_assert_eq!((x + y).value(), ((a as u128 + b as u128) % MODULUS as u128) as u64);
            prop_assert_eq!(x - y + y, x);
        }

        #[test]
        fn inverse_is_inverse(a in 1..MODULUS) {
            let x = Fp::new(a);
            prop_assert_eq!(x * x.inverse().unwrap(), Fp::ONE);
        }
    }
}
