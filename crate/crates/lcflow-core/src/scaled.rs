//! Nonnegative reals in scaled-exponent form.
//!
//! Dual weights start at (1/m)^zeta where zeta grows like 12/eps, far below
//! what an f64 exponent can hold, so magnitudes are kept as a significand in
//! [1,2) together with a wide base-2 exponent. Only the operations the
//! solver needs exist: add, multiply, powers of two, and tolerant compare.
//! There is deliberately no subtraction; callers rearrange inequalities into
//! all-nonnegative form instead.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;

/// Relative tolerance used by [`ScaledReal::cmp_tol`].
pub const REL_TOL: f64 = 1e-9;

/// A nonnegative real `sig * 2^exp` with `sig` in `[1,2)`, plus 0 and +inf.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaledReal {
    sig: f64,
    exp: i64,
}

/// frexp for a positive, finite, normal-or-subnormal f64: returns (m, e)
/// with m in [1,2) and m * 2^e == x.
fn frexp(x: f64) -> (f64, i64) {
    debug_assert!(x > 0.0 && x.is_finite());
    let bits = x.to_bits();
    let exp_field = ((bits >> 52) & 0x7ff) as i64;
    if exp_field == 0 {
        // subnormal: renormalize by 2^64 first
        let (m, e) = frexp(x * 18446744073709551616.0);
        return (m, e - 64);
    }
    let m = f64::from_bits((bits & !(0x7ffu64 << 52)) | (1023u64 << 52));
    (m, exp_field - 1023)
}

impl ScaledReal {
    pub fn zero() -> Self {
        ScaledReal { sig: 0.0, exp: 0 }
    }

    pub fn one() -> Self {
        ScaledReal { sig: 1.0, exp: 0 }
    }

    pub fn infinity() -> Self {
        ScaledReal {
            sig: f64::INFINITY,
            exp: 0,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.sig == 0.0
    }

    pub fn is_infinite(&self) -> bool {
        self.sig.is_infinite()
    }

    pub fn is_finite(&self) -> bool {
        self.sig.is_finite()
    }

    /// Raw significand (0, +inf, or in [1,2)).
    pub fn significand(&self) -> f64 {
        self.sig
    }

    /// Raw base-2 exponent (0 for zero and infinity).
    pub fn exponent(&self) -> i64 {
        self.exp
    }

    /// Rebuild from serialized parts. Returns None if the pair violates the
    /// normalization invariant.
    pub fn from_parts(sig: f64, exp: i64) -> Option<Self> {
        if sig == 0.0 || sig.is_infinite() {
            if exp == 0 && sig >= 0.0 {
                return Some(ScaledReal { sig, exp });
            }
            return None;
        }
        if !(1.0..2.0).contains(&sig) {
            return None;
        }
        Some(ScaledReal { sig, exp })
    }

    /// From a finite nonnegative f64.
    pub fn from_f64(x: f64) -> Self {
        assert!(x >= 0.0 && x.is_finite(), "from_f64 needs finite x >= 0");
        if x == 0.0 {
            return Self::zero();
        }
        let (sig, exp) = frexp(x);
        ScaledReal { sig, exp }
    }

    pub fn from_u64(x: u64) -> Self {
        Self::from_f64(x as f64)
    }

    /// num/den as a ScaledReal (f64 rounding, well within tolerance).
    pub fn from_ratio_u64(num: u64, den: u64) -> Self {
        assert!(den > 0);
        Self::from_f64(num as f64 / den as f64)
    }

    /// Exact-shape conversion from a nonnegative BigRational: significand
    /// carries the top 53 bits, the exponent absorbs the rest.
    pub fn from_bigrational(r: &BigRational) -> Self {
        assert!(!r.is_negative(), "from_bigrational needs r >= 0");
        if r.is_zero() {
            return Self::zero();
        }
        let n: &BigUint = r.numer().magnitude();
        let d: &BigUint = r.denom().magnitude();
        let bn = n.bits() as i64;
        let bd = d.bits() as i64;
        // scale so the integer quotient keeps ~96 significant bits
        let s = bd - bn + 96;
        let q: BigUint = if s >= 0 {
            (n << s as u64) / d
        } else {
            n / (d << (-s) as u64)
        };
        let qb = q.bits() as i64;
        debug_assert!(qb >= 54);
        let top = (&q >> (qb - 53) as u64).to_u64().expect("53-bit slice");
        let (sig, e) = frexp(top as f64);
        ScaledReal {
            sig,
            exp: e + (qb - 53) - s,
        }
    }

    /// Exact rational value: the significand is a dyadic rational and the
    /// exponent a power-of-two shift, so nothing is lost. Panics on infinity.
    pub fn to_bigrational(&self) -> BigRational {
        assert!(!self.is_infinite(), "no rational form for infinity");
        if self.is_zero() {
            return BigRational::zero();
        }
        let sig = BigRational::from_float(self.sig).expect("finite significand");
        let shift = BigUint::one() << self.exp.unsigned_abs();
        let shift = BigRational::from_integer(shift.into());
        if self.exp >= 0 {
            sig * shift
        } else {
            sig / shift
        }
    }

    /// 2^x for finite x, splitting integer and fractional parts.
    pub fn exp2(x: f64) -> Self {
        assert!(x.is_finite());
        let fl = x.floor();
        let mut sig = (x - fl).exp2();
        let mut exp = fl as i64;
        if sig >= 2.0 {
            sig /= 2.0;
            exp += 1;
        }
        debug_assert!((1.0..2.0).contains(&sig));
        ScaledReal { sig, exp }
    }

    /// log2 of the value as f64 (-inf for zero, +inf for infinity). Good to
    /// ~1e-16 relative on the exponent; used for grid jumps, never for
    /// feasibility decisions.
    pub fn log2_value(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        if self.is_infinite() {
            return f64::INFINITY;
        }
        self.exp as f64 + self.sig.log2()
    }

    pub fn mul(&self, other: &ScaledReal) -> ScaledReal {
        if self.is_zero() || other.is_zero() {
            // 0 * inf never arises; treat as 0
            return Self::zero();
        }
        if self.is_infinite() || other.is_infinite() {
            return Self::infinity();
        }
        let mut sig = self.sig * other.sig; // in [1,4)
        let mut exp = self.exp + other.exp;
        if sig >= 2.0 {
            sig /= 2.0;
            exp += 1;
        }
        ScaledReal { sig, exp }
    }

    pub fn mul_u64(&self, k: u64) -> ScaledReal {
        if k == 0 {
            return Self::zero();
        }
        self.mul(&Self::from_u64(k))
    }

    pub fn mul_pow2(&self, k: i64) -> ScaledReal {
        if self.is_zero() || self.is_infinite() {
            return *self;
        }
        ScaledReal {
            sig: self.sig,
            exp: self.exp + k,
        }
    }

    pub fn add(&self, other: &ScaledReal) -> ScaledReal {
        if self.is_infinite() || other.is_infinite() {
            return Self::infinity();
        }
        if self.is_zero() {
            return *other;
        }
        if other.is_zero() {
            return *self;
        }
        let (hi, lo) = if self.cmp_exact(other) == Ordering::Less {
            (other, self)
        } else {
            (self, other)
        };
        let shift = hi.exp - lo.exp;
        if shift >= 64 {
            return *hi; // below 2^-63 relative, far under tolerance
        }
        let mut sig = hi.sig + lo.sig * (0.5f64).powi(shift as i32);
        let mut exp = hi.exp;
        if sig >= 2.0 {
            sig /= 2.0;
            exp += 1;
        }
        ScaledReal { sig, exp }
    }

    /// Exact total order on the represented values.
    pub fn cmp_exact(&self, other: &ScaledReal) -> Ordering {
        match (self.is_infinite(), other.is_infinite()) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Greater,
            (false, true) => return Ordering::Less,
            _ => {}
        }
        match (self.is_zero(), other.is_zero()) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            _ => {}
        }
        match self.exp.cmp(&other.exp) {
            Ordering::Equal => self.sig.partial_cmp(&other.sig).unwrap(),
            ord => ord,
        }
    }

    pub fn min_exact(self, other: ScaledReal) -> ScaledReal {
        if self.cmp_exact(&other) == Ordering::Greater {
            other
        } else {
            self
        }
    }

    pub fn max_exact(self, other: ScaledReal) -> ScaledReal {
        if self.cmp_exact(&other) == Ordering::Less {
            other
        } else {
            self
        }
    }

    /// Weak order with relative tolerance [`REL_TOL`]: values within the
    /// tolerance compare Equal. Callers treat Equal as "feasible".
    pub fn cmp_tol(&self, other: &ScaledReal) -> Ordering {
        match (self.is_infinite(), other.is_infinite()) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Greater,
            (false, true) => return Ordering::Less,
            _ => {}
        }
        match (self.is_zero(), other.is_zero()) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            _ => {}
        }
        let gap = self.exp - other.exp;
        if gap >= 2 {
            return Ordering::Greater;
        }
        if gap <= -2 {
            return Ordering::Less;
        }
        let ratio = (self.sig / other.sig) * (gap as f64).exp2();
        if (ratio - 1.0).abs() <= REL_TOL {
            Ordering::Equal
        } else if ratio > 1.0 {
            Ordering::Greater
        } else {
            Ordering::Less
        }
    }

    /// `self >= other` up to tolerance (Equal counts as holding).
    pub fn ge_tol(&self, other: &ScaledReal) -> bool {
        self.cmp_tol(other) != Ordering::Less
    }

    /// `self <= other` up to tolerance.
    pub fn le_tol(&self, other: &ScaledReal) -> bool {
        self.cmp_tol(other) != Ordering::Greater
    }

    /// Lossy f64 view (0 or inf when out of range); display only.
    pub fn to_f64_lossy(&self) -> f64 {
        if self.is_zero() || self.is_infinite() {
            return self.sig;
        }
        if self.exp > 1023 {
            return f64::INFINITY;
        }
        if self.exp < -1070 {
            return 0.0;
        }
        self.sig * (self.exp as f64).exp2()
    }
}
