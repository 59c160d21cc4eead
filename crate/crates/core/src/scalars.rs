//! Working-precision context, real/complex coercion, and the per-interval
//! wavenumber `kappa = sqrt(lambda - qbar_i)`.
//!
//! All arithmetic in the crate runs on `rug` (MPFR/MPC) scalars at the
//! precision carried by a [`PrecisionContext`]. Values are immutable and the
//! context is passed explicitly, so everything here is safe to share across
//! threads.

use std::cmp::Ordering as CmpOrdering;

use rug::float::{Constant, Round};
use rug::ops::{AssignRound, CompleteRound, Pow};
use rug::{Complex, Float};

use crate::{Error, Result};

/// Decimal digits -> MPFR bits, with a small fixed headroom.
fn bits_for_digits(digits: u32) -> u32 {
    // log2(10) = 3.3219...; round up and add one limb's worth of slack.
    (digits * 3322) / 1000 + 16
}

/// Explicit working precision plus the derived comparison tolerance.
///
/// `decimal_digits` is the full working precision, `guard_digits` of which are
/// sacrificial: results are trusted to `decimal_digits - guard_digits` places
/// and the tolerance is `10^-(decimal_digits - guard_digits)`.
#[derive(Debug, Clone)]
pub struct PrecisionContext {
    decimal_digits: u32,
    guard_digits: u32,
    prec: u32,
    tolerance: Float,
}

impl PrecisionContext {
    /// Create a context working at `decimal_digits` of which `guard_digits`
    /// are guard. Requires `decimal_digits >= 30`, `guard_digits >= 10` and
    /// at least ten trusted digits.
    pub fn new(decimal_digits: u32, guard_digits: u32) -> Result<Self> {
        if decimal_digits < 30 {
            return Err(Error::InvalidConfig(format!(
                "decimal_digits = {decimal_digits} must be at least 30"
            )));
        }
        if guard_digits < 10 {
            return Err(Error::InvalidConfig(format!(
                "guard_digits = {guard_digits} must be at least 10"
            )));
        }
        if guard_digits + 10 > decimal_digits {
            return Err(Error::InvalidConfig(format!(
                "guard_digits = {guard_digits} leaves fewer than 10 trusted digits of {decimal_digits}"
            )));
        }
        let prec = bits_for_digits(decimal_digits);
        let trusted = decimal_digits - guard_digits;
        let tolerance = Float::with_val(prec, 10).pow(-(trusted as i32));
        Ok(Self {
            decimal_digits,
            guard_digits,
            prec,
            tolerance,
        })
    }

    /// Context for a rank-`m` run on a potential of degree `r`, requesting
    /// `requested_digits` trusted digits.
    ///
    /// The guard absorbs the factorial growth of intermediate magnitudes in
    /// the coefficient recursions, whose polynomial degree reaches
    /// `M(m) = (m+1)(r+1)`: guard = 10 + ceil(M log10 M).
    pub fn for_run(requested_digits: u32, degree: usize, rank: usize) -> Result<Self> {
        let requested_digits = requested_digits.max(20);
        let m_top = ((rank + 1) * (degree + 1)) as f64;
        let factorial_guard = if m_top >= 2.0 {
            (m_top * m_top.log10()).ceil() as u32
        } else {
            0
        };
        let guard = 10 + factorial_guard;
        Self::new(requested_digits + guard, guard)
    }

    /// Same trusted digits, `extra` more working digits.
    pub fn with_extra_digits(&self, extra: u32) -> Self {
        Self::new(self.decimal_digits + extra, self.guard_digits + extra)
            .expect("widening a valid context cannot fail")
    }

    pub fn decimal_digits(&self) -> u32 {
        self.decimal_digits
    }

    pub fn guard_digits(&self) -> u32 {
        self.guard_digits
    }

    /// Digits actually trusted by comparisons: `decimal_digits - guard_digits`.
    pub fn trusted_digits(&self) -> u32 {
        self.decimal_digits - self.guard_digits
    }

    /// MPFR precision in bits.
    pub fn prec(&self) -> u32 {
        self.prec
    }

    /// `10^-(decimal_digits - guard_digits)`.
    pub fn tolerance(&self) -> &Float {
        &self.tolerance
    }

    /// A fresh real at this precision.
    pub fn float<T>(&self, value: T) -> Float
    where
        Float: AssignRound<T, Round = Round, Ordering = CmpOrdering>,
    {
        Float::with_val(self.prec, value)
    }

    /// Parse a decimal string at this precision.
    pub fn float_from_str(&self, s: &str) -> Result<Float> {
        let parsed = Float::parse(s)
            .map_err(|e| Error::InvalidConfig(format!("cannot parse '{s}' as a number: {e}")))?;
        Ok(Float::with_val(self.prec, parsed))
    }

    pub fn zero(&self) -> Float {
        Float::new(self.prec)
    }

    pub fn one(&self) -> Float {
        Float::with_val(self.prec, 1)
    }

    pub fn pi(&self) -> Float {
        Float::with_val(self.prec, Constant::Pi)
    }

    pub fn complex_zero(&self) -> Complex {
        Complex::new(self.prec)
    }

    /// Complex from real and imaginary parts.
    pub fn complex(&self, re: Float, im: Float) -> Complex {
        Complex::with_val(self.prec, (re, im))
    }

    /// Embed a real into the complex plane.
    pub fn complex_from_real(&self, re: &Float) -> Complex {
        Complex::with_val(self.prec, (re.clone(), Float::new(self.prec)))
    }

    /// `10^k` at this precision.
    pub fn pow10(&self, k: i32) -> Float {
        Float::with_val(self.prec, 10).pow(k)
    }

    /// True when `|value| <= tolerance * max(1, |scale|)`.
    pub fn below_tol(&self, value: &Float, scale: &Float) -> bool {
        let mut bound = self.float(&*scale.as_abs());
        if bound < 1 {
            bound = self.one();
        }
        bound *= &self.tolerance;
        *value.as_abs() <= bound
    }

    /// Coerce a complex to a real, requiring the imaginary part to sit below
    /// tolerance relative to `max(1, |re|)`.
    pub fn to_real(&self, z: &Complex) -> Result<Float> {
        if self.below_tol(z.imag(), z.real()) {
            Ok(z.real().clone())
        } else {
            Err(Error::CoercionFailure {
                imag_magnitude: z.imag().clone().abs(),
            })
        }
    }
}

/// `|z|` computed at the context precision.
pub fn complex_abs(z: &Complex, ctx: &PrecisionContext) -> Float {
    let re2 = (z.real() * z.real()).complete(ctx.prec());
    let im2 = (z.imag() * z.imag()).complete(ctx.prec());
    (re2 + im2).sqrt()
}

/// Per-subinterval wavenumber of the basic problem.
///
/// `kappa_squared = lambda0 - qbar_i` is real; `kappa` is its principal square
/// root, real and positive for a positive argument and `+i sqrt(|.|)` for a
/// negative one. The entire functions `sin(kappa x)/kappa`, `cos(kappa x)` and
/// `kappa sin(kappa x)` depend on `kappa_squared` only and are therefore
/// real-valued in both branches; they are exposed directly so the
/// characteristic matrix can be assembled in real arithmetic.
#[derive(Debug, Clone)]
pub struct Kappa {
    kappa_squared: Float,
    kappa: Complex,
}

impl Kappa {
    /// `kappa = sqrt(lambda0 - qbar)`. Rejects `|lambda0 - qbar|` within
    /// tolerance of zero (relative to `max(1, |lambda0|)`): the method looks
    /// for basic eigenvalues different from every base-potential value.
    pub fn new(lambda0: &Float, qbar: &Float, ctx: &PrecisionContext) -> Result<Self> {
        let diff = (lambda0 - qbar).complete(ctx.prec());
        if ctx.below_tol(&diff, lambda0) {
            return Err(Error::DegenerateKappa {
                difference: diff.abs(),
            });
        }
        let kappa = if diff.is_sign_positive() {
            ctx.complex(diff.clone().sqrt(), ctx.zero())
        } else {
            ctx.complex(ctx.zero(), diff.clone().abs().sqrt())
        };
        Ok(Self {
            kappa_squared: diff,
            kappa,
        })
    }

    pub fn kappa_squared(&self) -> &Float {
        &self.kappa_squared
    }

    /// The principal square root, purely real or purely imaginary.
    pub fn kappa(&self) -> &Complex {
        &self.kappa
    }

    /// True when `kappa_squared < 0` (hyperbolic branch).
    pub fn is_imaginary(&self) -> bool {
        self.kappa_squared.is_sign_negative()
    }

    /// Magnitude `|kappa| = sqrt(|kappa_squared|)`, real in both branches.
    fn magnitude(&self) -> Float {
        if self.is_imaginary() {
            self.kappa.imag().clone()
        } else {
            self.kappa.real().clone()
        }
    }

    /// `(sin(kappa x), cos(kappa x))` as complex values. In the hyperbolic
    /// branch these are `(i sinh(|kappa| x), cosh(|kappa| x))`, so the
    /// imaginary parts stay exact zeros where the combination is real.
    pub fn trig(&self, x: &Float) -> (Complex, Complex) {
        let prec = x.prec();
        let mag = self.magnitude();
        let theta = (&mag * x).complete(prec);
        if self.is_imaginary() {
            let (sh, ch) = theta.sinh_cosh(Float::new(prec));
            (
                Complex::with_val(prec, (Float::new(prec), sh)),
                Complex::with_val(prec, (ch, Float::new(prec))),
            )
        } else {
            let (s, c) = theta.sin_cos(Float::new(prec));
            (
                Complex::with_val(prec, (s, Float::new(prec))),
                Complex::with_val(prec, (c, Float::new(prec))),
            )
        }
    }

    /// `sin(kappa x)/kappa`, entire in `kappa_squared`, hence real.
    pub fn sin_over_kappa(&self, x: &Float) -> Float {
        let prec = x.prec();
        let mag = self.magnitude();
        let theta = (&mag * x).complete(prec);
        if self.is_imaginary() {
            theta.sinh() / mag
        } else {
            theta.sin() / mag
        }
    }

    /// `cos(kappa x)`, real in both branches.
    pub fn cos_at(&self, x: &Float) -> Float {
        let prec = x.prec();
        let mag = self.magnitude();
        let theta = (&mag * x).complete(prec);
        if self.is_imaginary() {
            theta.cosh()
        } else {
            theta.cos()
        }
    }

    /// `kappa sin(kappa x) = kappa_squared * (sin(kappa x)/kappa)`, real.
    pub fn kappa_sin(&self, x: &Float) -> Float {
        let prec = x.prec();
        let mag = self.magnitude();
        let theta = (&mag * x).complete(prec);
        if self.is_imaginary() {
            -(theta.sinh() * mag)
        } else {
            theta.sin() * mag
        }
    }

    /// `(sin(2 kappa x), cos(2 kappa x))` as complex values (used by the
    /// closed-form integrals).
    pub fn trig_double(&self, x: &Float) -> (Complex, Complex) {
        let two_x = (x + x).complete(x.prec());
        self.trig(&two_x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(60, 10).unwrap()
    }

    #[test]
    fn kappa_of_pi_squared_is_pi() {
        let c = ctx();
        let lambda = c.pi().square();
        let kappa = Kappa::new(&lambda, &c.zero(), &c).unwrap();
        let diff = (kappa.kappa().real() - &c.pi()).complete(c.prec()).abs();
        assert!(diff < *c.tolerance());
        assert!(!kappa.is_imaginary());
    }

    #[test]
    fn degenerate_kappa_is_rejected() {
        let c = ctx();
        let q = c.float(30);
        assert!(matches!(
            Kappa::new(&c.float(30), &q, &c),
            Err(Error::DegenerateKappa { .. })
        ));
        // A separation above tolerance is accepted.
        let lambda = c.float(30) + c.tolerance().clone() * 100 * c.float(31);
        assert!(Kappa::new(&lambda, &q, &c).is_ok());
    }

    #[test]
    fn kappa_below_potential_is_imaginary() {
        // lambda near the first eigenvalue of q(x) = -60 + 120x, qbar = 30 on
        // the right half-interval of a two-interval mesh.
        let c = ctx();
        let lambda = c.float_from_str("-3.08815211843854844862886684381").unwrap();
        let kappa = Kappa::new(&lambda, &c.float(30), &c).unwrap();
        assert!(kappa.is_imaginary());
        // kappa = i * sqrt(33.088...) = i * 5.75223...
        let expected = c.float_from_str("33.08815211843854844862886684381").unwrap().sqrt();
        let diff = (kappa.kappa().imag() - &expected).complete(c.prec()).abs();
        assert!(diff < *c.tolerance());
        assert!(kappa.kappa().real().is_zero());
    }

    #[test]
    fn trig_matches_trivial_values() {
        let c = ctx();
        let lambda = c.pi().square();
        let kappa = Kappa::new(&lambda, &c.zero(), &c).unwrap();
        let half = c.float(1) / 2u32;
        let (s, co) = kappa.trig(&half);
        assert!(c.below_tol(&(s.real() - 1u32).complete(c.prec()), &c.one()));
        assert!(c.below_tol(co.real(), &c.one()));

        // kappa = 2 at x = pi/4 also lands on (1, 0).
        let kappa2 = Kappa::new(&c.float(4), &c.zero(), &c).unwrap();
        let quarter_pi = c.pi() / 4u32;
        let (s2, c2) = kappa2.trig(&quarter_pi);
        assert!(c.below_tol(&(s2.real() - 1u32).complete(c.prec()), &c.one()));
        assert!(c.below_tol(c2.real(), &c.one()));
    }

    #[test]
    fn trig_hyperbolic_branch() {
        // kappa = i: sin(i x) = i sinh x, cos(i x) = cosh x at x = 1.
        let c = ctx();
        let kappa = Kappa::new(&c.float(-1), &c.zero(), &c).unwrap();
        let one = c.one();
        let (s, co) = kappa.trig(&one);
        let sinh1 = c.one().sinh();
        let cosh1 = c.one().cosh();
        assert!(s.real().is_zero());
        assert!(c.below_tol(&(s.imag() - &sinh1).complete(c.prec()), &c.one()));
        assert!(c.below_tol(&(co.real() - &cosh1).complete(c.prec()), &c.one()));
        assert!(co.imag().is_zero());
    }

    #[test]
    fn pythagorean_identity_on_random_points() {
        // s^2 + c^2 = 1 for both branches, 100 points in [-2, 2].
        let c = ctx();
        let kappas = [
            Kappa::new(&c.float(2), &c.zero(), &c).unwrap(),
            Kappa::new(&c.float(-3), &c.zero(), &c).unwrap(),
            Kappa::new(&c.pi().square(), &c.zero(), &c).unwrap(),
        ];
        let mut state = 0x9e3779b97f4a7c15u64;
        for _ in 0..100 {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            // map to [-2, 2]
            let x = c.float(state >> 11) / c.float(1u64 << 53) * 4 - 2;
            for kappa in &kappas {
                let (s, co) = kappa.trig(&x);
                let ident = s.square() + co.square();
                assert!(c.below_tol(&(ident.real() - 1u32).complete(c.prec()), &c.one()));
                assert!(c.below_tol(ident.imag(), &c.one()));
            }
        }
    }

    #[test]
    fn real_complex_round_trip_is_identity() {
        let c = ctx();
        let x = c.float_from_str("1.279538402").unwrap();
        let z = c.complex_from_real(&x);
        let back = c.to_real(&z).unwrap();
        assert_eq!(back, x);
    }

    #[test]
    fn coercion_above_tolerance_fails() {
        let c = ctx();
        let z = c.complex(c.one(), c.pow10(-10));
        assert!(matches!(c.to_real(&z), Err(Error::CoercionFailure { .. })));
    }

    #[test]
    fn context_invariants() {
        assert!(PrecisionContext::new(29, 10).is_err());
        assert!(PrecisionContext::new(40, 9).is_err());
        assert!(PrecisionContext::new(40, 35).is_err());
        let c = PrecisionContext::new(120, 20).unwrap();
        assert_eq!(c.trusted_digits(), 100);
        assert!(c.tolerance().is_sign_positive());
        // for_run guards against M(m) log10 M(m) growth
        let c = PrecisionContext::for_run(120, 1, 20).unwrap();
        // M(20) = 42, guard = 10 + ceil(42 log10 42) = 10 + 69
        assert_eq!(c.guard_digits(), 79);
        assert_eq!(c.decimal_digits(), 199);
    }
}
