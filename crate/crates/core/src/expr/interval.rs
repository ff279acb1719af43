use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed interval `[lo, hi]` with finite endpoints.
///
/// Endpoints are not outward-rounded; enclosures are sound up to
/// floating-point rounding of the endpoint images.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::domain(format!("unbounded interval [{lo}, {hi}]")));
        }
        if lo > hi {
            return Err(Error::argument(format!("empty interval [{lo}, {hi}]")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn point(v: f64) -> Self {
        Interval { lo: v, hi: v }
    }

    pub fn unit() -> Self {
        Interval { lo: 0.0, hi: 1.0 }
    }

    pub fn symmetric(r: f64) -> Self {
        Interval { lo: -r, hi: r }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(0.0)
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    pub fn split(&self) -> (Interval, Interval) {
        let m = self.mid();
        (
            Interval { lo: self.lo, hi: m },
            Interval { lo: m, hi: self.hi },
        )
    }

    fn checked(lo: f64, hi: f64, what: &str) -> Result<Interval> {
        if lo.is_nan() || hi.is_nan() || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::domain(format!("{what} overflows to a non-finite bound")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn add(self, o: Interval) -> Result<Interval> {
        Self::checked(self.lo + o.lo, self.hi + o.hi, "sum")
    }

    pub fn sub(self, o: Interval) -> Result<Interval> {
        Self::checked(self.lo - o.hi, self.hi - o.lo, "difference")
    }

    pub fn neg(self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }

    pub fn mul(self, o: Interval) -> Result<Interval> {
        let p = [
            self.lo * o.lo,
            self.lo * o.hi,
            self.hi * o.lo,
            self.hi * o.hi,
        ];
        let lo = p.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self::checked(lo, hi, "product")
    }

    pub fn recip(self) -> Result<Interval> {
        if self.contains_zero() {
            return Err(Error::domain(format!("division by an interval containing 0: {self}")));
        }
        Self::checked(1.0 / self.hi, 1.0 / self.lo, "reciprocal")
    }

    pub fn div(self, o: Interval) -> Result<Interval> {
        self.mul(o.recip()?)
    }

    pub fn powi(self, n: i32) -> Result<Interval> {
        if n == 0 {
            return Ok(Interval::point(1.0));
        }
        if n < 0 {
            return self.powi(-n)?.recip();
        }
        let a = self.lo.powi(n);
        let b = self.hi.powi(n);
        if n % 2 == 1 {
            Self::checked(a, b, "power")
        } else if self.contains_zero() {
            Self::checked(0.0, a.max(b), "power")
        } else {
            Self::checked(a.min(b), a.max(b), "power")
        }
    }

    /// Real exponent; requires a nonnegative base (a base with lo slightly
    /// below zero and hi ≥ 0 is clamped).
    pub fn powf(self, p: f64) -> Result<Interval> {
        if p.fract() == 0.0 && p.abs() <= i32::MAX as f64 {
            return self.powi(p as i32);
        }
        if self.hi < 0.0 {
            return Err(Error::domain(format!("fractional power of negative interval {self}")));
        }
        if self.lo < 0.0 && self.lo < -1e-9 {
            return Err(Error::domain(format!("fractional power of interval {self} reaching below 0")));
        }
        let lo = self.lo.max(0.0);
        if p < 0.0 && lo == 0.0 {
            return Err(Error::domain("negative fractional power of an interval touching 0"));
        }
        let a = lo.powf(p);
        let b = self.hi.powf(p);
        Self::checked(a.min(b), a.max(b), "power")
    }

    /// Interval exponent: exp(y · ln x) for a positive base.
    pub fn pow(self, e: Interval) -> Result<Interval> {
        if e.lo == e.hi {
            return self.powf(e.lo);
        }
        if self.lo <= 0.0 {
            return Err(Error::domain(format!("variable exponent needs a positive base, got {self}")));
        }
        let ln = Interval {
            lo: self.lo.ln(),
            hi: self.hi.ln(),
        };
        ln.mul(e)?.exp()
    }

    pub fn sqrt(self) -> Result<Interval> {
        if self.hi < 0.0 {
            return Err(Error::domain(format!("sqrt of negative interval {self}")));
        }
        Ok(Interval {
            lo: self.lo.max(0.0).sqrt(),
            hi: self.hi.sqrt(),
        })
    }

    pub fn exp(self) -> Result<Interval> {
        Self::checked(self.lo.exp(), self.hi.exp(), "exp")
    }

    pub fn abs(self) -> Interval {
        if self.lo >= 0.0 {
            self
        } else if self.hi <= 0.0 {
            self.neg()
        } else {
            Interval {
                lo: 0.0,
                hi: (-self.lo).max(self.hi),
            }
        }
    }

    /// Exact range of sin: endpoint images plus any interior extremum.
    pub fn sin(self) -> Interval {
        if self.width() >= 2.0 * PI {
            return Interval { lo: -1.0, hi: 1.0 };
        }
        let a = self.lo.sin();
        let b = self.hi.sin();
        let mut lo = a.min(b);
        let mut hi = a.max(b);
        if contains_shifted(self, FRAC_PI_2) {
            hi = 1.0;
        }
        if contains_shifted(self, -FRAC_PI_2) {
            lo = -1.0;
        }
        Interval { lo, hi }
    }

    pub fn cos(self) -> Interval {
        Interval {
            lo: self.lo + FRAC_PI_2,
            hi: self.hi + FRAC_PI_2,
        }
        .sin()
    }
}

/// Whether `[x.lo, x.hi]` contains `phase + 2kπ` for some integer k.
fn contains_shifted(x: Interval, phase: f64) -> bool {
    let k = ((x.lo - phase) / (2.0 * PI)).ceil();
    phase + 2.0 * PI * k <= x.hi
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    #[test]
    fn constructor_rejects_bad_bounds() {
        assert!(Interval::new(1.0, 0.0).is_err());
        assert!(Interval::new(0.0, f64::INFINITY).is_err());
    }

    #[test]
    fn sin_and_cos_ranges() {
        let s = iv(-2.0, 2.0).sin();
        assert_eq!((s.lo, s.hi), (-1.0, 1.0));
        let s = iv(0.1, 0.5).sin();
        assert!((s.lo - 0.1f64.sin()).abs() < 1e-15 && (s.hi - 0.5f64.sin()).abs() < 1e-15);
        let c = iv(-0.5, 0.25).cos();
        assert!((c.hi - 1.0).abs() < 1e-15);
        assert!((c.lo - 0.5f64.cos()).abs() < 1e-15);
    }

    #[test]
    fn even_powers_through_zero() {
        let p = iv(-2.0, 1.0).powi(2).unwrap();
        assert_eq!((p.lo, p.hi), (0.0, 4.0));
        let p = iv(-2.0, 1.0).powi(3).unwrap();
        assert_eq!((p.lo, p.hi), (-8.0, 1.0));
        assert!(iv(-1.0, 1.0).powi(-2).is_err());
    }

    #[test]
    fn sqrt_clamps_and_rejects() {
        let r = iv(-0.5, 4.0).sqrt().unwrap();
        assert_eq!((r.lo, r.hi), (0.0, 2.0));
        assert!(iv(-2.0, -1.0).sqrt().is_err());
        assert!(iv(1.0, 2.0).div(iv(-1.0, 1.0)).is_err());
    }

    proptest! {
        #[test]
        fn sin_cos_enclose_samples(lo in -20.0f64..20.0, w in 0.0f64..8.0, f in 0.0f64..1.0) {
            let x = iv(lo, lo + w);
            let p = lo + f * w;
            let s = x.sin();
            let c = x.cos();
            prop_assert!(s.lo - 1e-12 <= p.sin() && p.sin() <= s.hi + 1e-12);
            prop_assert!(c.lo - 1e-12 <= p.cos() && p.cos() <= c.hi + 1e-12);
        }

        #[test]
        fn products_enclose_samples(a in -5.0f64..5.0, wa in 0.0f64..3.0, b in -5.0f64..5.0,
                                    wb in 0.0f64..3.0, fa in 0.0f64..1.0, fb in 0.0f64..1.0) {
            let x = iv(a, a + wa);
            let y = iv(b, b + wb);
            let px = a + fa * wa;
            let py = b + fb * wb;
            let m = x.mul(y).unwrap();
            prop_assert!(m.contains(px * py));
            let q = x.powi(4).unwrap();
            prop_assert!(q.lo <= px.powi(4) * (1.0 + 1e-15) && px.powi(4) <= q.hi * (1.0 + 1e-15));
        }
    }
}
