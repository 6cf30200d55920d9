//! Exact Gaussian-rational coefficients.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// An element `re + i·im` of ℚ(i).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Coeff {
    pub re: BigRational,
    pub im: BigRational,
}

impl Coeff {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        Coeff { re, im }
    }

    pub fn zero() -> Self {
        Coeff::new(BigRational::zero(), BigRational::zero())
    }

    pub fn one() -> Self {
        Coeff::from_int(1)
    }

    pub fn i() -> Self {
        Coeff::new(BigRational::zero(), BigRational::one())
    }

    pub fn from_int(n: i64) -> Self {
        Coeff::new(BigRational::from_integer(BigInt::from(n)), BigRational::zero())
    }

    pub fn from_ratio(p: i64, q: i64) -> Self {
        Coeff::new(
            BigRational::new(BigInt::from(p), BigInt::from(q)),
            BigRational::zero(),
        )
    }

    pub fn real(re: BigRational) -> Self {
        Coeff::new(re, BigRational::zero())
    }

    /// Exact binary value of a finite double.
    pub fn from_f64(x: f64) -> Option<Self> {
        BigRational::from_float(x).map(Coeff::real)
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.re.is_one() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        Coeff::new(self.re.clone(), -self.im.clone())
    }

    pub fn norm_sqr(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn recip(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let n = self.norm_sqr();
        Some(Coeff::new(&self.re / &n, -&self.im / &n))
    }

    pub fn div(&self, other: &Coeff) -> Option<Self> {
        other.recip().map(|r| self * &r)
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::new(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }

    /// The integer value when this coefficient is a real integer.
    pub fn as_integer(&self) -> Option<i64> {
        if self.im.is_zero() && self.re.is_integer() {
            self.re.to_integer().to_i64()
        } else {
            None
        }
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Coeff::one();
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    /// Whether the printed form needs a leading minus sign and what remains.
    pub(crate) fn split_sign(&self) -> (bool, Coeff) {
        if self.im.is_zero() && self.re.is_negative() {
            (true, -self.clone())
        } else if self.re.is_zero() && self.im.is_negative() {
            (true, -self.clone())
        } else {
            (false, self.clone())
        }
    }
}

fn fmt_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for Coeff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.re.is_zero(), self.im.is_zero()) {
            (_, true) => write!(f, "{}", fmt_rational(&self.re)),
            (true, false) => {
                if self.im.is_one() {
                    write!(f, "i")
                } else if (-&self.im).is_one() {
                    write!(f, "-i")
                } else {
                    write!(f, "{}*i", fmt_rational(&self.im))
                }
            }
            (false, false) => {
                let sign = if self.im.is_negative() { '-' } else { '+' };
                let mag = self.im.abs();
                if mag.is_one() {
                    write!(f, "({} {} i)", fmt_rational(&self.re), sign)
                } else {
                    write!(f, "({} {} {}*i)", fmt_rational(&self.re), sign, fmt_rational(&mag))
                }
            }
        }
    }
}

impl<'a> Add<&'a Coeff> for &'a Coeff {
    type Output = Coeff;
    fn add(self, rhs: &Coeff) -> Coeff {
        Coeff::new(&self.re + &rhs.re, &self.im + &rhs.im)
    }
}

impl<'a> Sub<&'a Coeff> for &'a Coeff {
    type Output = Coeff;
    fn sub(self, rhs: &Coeff) -> Coeff {
        Coeff::new(&self.re - &rhs.re, &self.im - &rhs.im)
    }
}

impl<'a> Mul<&'a Coeff> for &'a Coeff {
    type Output = Coeff;
    fn mul(self, rhs: &Coeff) -> Coeff {
        Coeff::new(
            &self.re * &rhs.re - &self.im * &rhs.im,
            &self.re * &rhs.im + &self.im * &rhs.re,
        )
    }
}

impl Neg for Coeff {
    type Output = Coeff;
    fn neg(self) -> Coeff {
        Coeff::new(-self.re, -self.im)
    }
}

impl Neg for &Coeff {
    type Output = Coeff;
    fn neg(self) -> Coeff {
        Coeff::new(-&self.re, -&self.im)
    }
}
