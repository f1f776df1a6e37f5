//! GF(2^8) arithmetic.
//!
//! Elements are bytes interpreted as polynomials over GF(2) of degree < 8,
//! reduced modulo x^8 + x^4 + x^3 + x^2 + 1 (0x11D). Addition is XOR;
//! multiplication and inversion go through exp/log tables generated at
//! compile time with generator 2.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Sub};

use crate::error::{Error, Result};

/// Reduction polynomial x^8 + x^4 + x^3 + x^2 + 1.
pub const PRIMITIVE_POLY: u16 = 0x11D;

/// Generator of the multiplicative group (order 255).
pub const GENERATOR: u8 = 0x02;

const fn build_tables() -> ([u8; 512], [u8; 256]) {
    let mut exp = [0u8; 512];
    let mut log = [0u8; 256];
    let mut x: u16 = 1;
    let mut i = 0;
    while i < 255 {
        exp[i] = x as u8;
        exp[i + 255] = x as u8;
        log[x as usize] = i as u8;
        x <<= 1;
        if x & 0x100 != 0 {
            x ^= PRIMITIVE_POLY;
        }
        i += 1;
    }
    // exp[510], exp[511] are never indexed: log sums stay below 509.
    (exp, log)
}

const TABLES: ([u8; 512], [u8; 256]) = build_tables();
static EXP: [u8; 512] = TABLES.0;
static LOG: [u8; 256] = TABLES.1;

/// An element of GF(2^8).
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Gf256(pub u8);

impl Gf256 {
    pub const ZERO: Gf256 = Gf256(0);
    pub const ONE: Gf256 = Gf256(1);

    #[inline]
    pub const fn value(self) -> u8 {
        self.0
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// `GENERATOR^k`, with `k` taken modulo 255.
    #[inline]
    pub fn exp(k: usize) -> Gf256 {
        Gf256(EXP[k % 255])
    }

    /// Multiplicative inverse; fails for zero.
    pub fn inv(self) -> Result<Gf256> {
        if self.0 == 0 {
            return Err(Error::ZeroDivisor);
        }
        Ok(Gf256(EXP[255 - LOG[self.0 as usize] as usize]))
    }

    /// `self / rhs`; fails when `rhs` is zero.
    pub fn checked_div(self, rhs: Gf256) -> Result<Gf256> {
        if rhs.0 == 0 {
            return Err(Error::ZeroDivisor);
        }
        if self.0 == 0 {
            return Ok(Gf256::ZERO);
        }
        let l = LOG[self.0 as usize] as usize + 255 - LOG[rhs.0 as usize] as usize;
        Ok(Gf256(EXP[l]))
    }
}

/// Field addition (XOR).
#[inline]
pub fn add(a: Gf256, b: Gf256) -> Gf256 {
    Gf256(a.0 ^ b.0)
}

#[inline]
pub fn mul(a: Gf256, b: Gf256) -> Gf256 {
    Gf256(mul_u8(a.0, b.0))
}

pub fn inv(a: Gf256) -> Result<Gf256> {
    a.inv()
}

pub fn div(a: Gf256, b: Gf256) -> Result<Gf256> {
    a.checked_div(b)
}

#[inline]
fn mul_u8(a: u8, b: u8) -> u8 {
    if a == 0 || b == 0 {
        return 0;
    }
    EXP[LOG[a as usize] as usize + LOG[b as usize] as usize]
}

/// `dst[j] ^= c * src[j]` for every byte; the inner loop of encoding and
/// row reduction.
pub fn mul_add_slice(dst: &mut [u8], src: &[u8], c: Gf256) {
    debug_assert_eq!(dst.len(), src.len());
    match c.0 {
        0 => {}
        1 => dst.iter_mut().zip(src).for_each(|(d, s)| *d ^= s),
        _ => {
            let lc = LOG[c.0 as usize] as usize;
            for (d, &s) in dst.iter_mut().zip(src) {
                if s != 0 {
                    *d ^= EXP[lc + LOG[s as usize] as usize];
                }
            }
        }
    }
}

/// `buf[j] *= c` for every byte.
pub fn scale_slice(buf: &mut [u8], c: Gf256) {
    match c.0 {
        0 => buf.fill(0),
        1 => {}
        _ => {
            let lc = LOG[c.0 as usize] as usize;
            for b in buf.iter_mut().filter(|b| **b != 0) {
                *b = EXP[lc + LOG[*b as usize] as usize];
            }
        }
    }
}

impl Add for Gf256 {
    type Output = Gf256;
    #[inline]
    fn add(self, rhs: Gf256) -> Gf256 {
        add(self, rhs)
    }
}

impl Sub for Gf256 {
    type Output = Gf256;
    #[inline]
    fn sub(self, rhs: Gf256) -> Gf256 {
        add(self, rhs)
    }
}

impl AddAssign for Gf256 {
    #[inline]
    fn add_assign(&mut self, rhs: Gf256) {
        self.0 ^= rhs.0;
    }
}

impl Mul for Gf256 {
    type Output = Gf256;
    #[inline]
    fn mul(self, rhs: Gf256) -> Gf256 {
        mul(self, rhs)
    }
}

impl MulAssign for Gf256 {
    #[inline]
    fn mul_assign(&mut self, rhs: Gf256) {
        *self = mul(*self, rhs);
    }
}

impl From<u8> for Gf256 {
    fn from(v: u8) -> Self {
        Gf256(v)
    }
}

impl From<Gf256> for u8 {
    fn from(v: Gf256) -> Self {
        v.0
    }
}

impl fmt::Debug for Gf256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Gf256({:#04x})", self.0)
    }
}

impl fmt::Display for Gf256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#04x}", self.0)
    }
}
