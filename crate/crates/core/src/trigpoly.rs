//! Functions of the form `w(x) = sum_p x^p (A_p sin(kappa x) + B_p cos(kappa x))`
//! on one subinterval.
//!
//! The family is closed under differentiation and under multiplication by
//! polynomials, and inner products of two members reduce to the closed-form
//! integrals S, R, T. Corrections, right-hand sides and residuals all live in
//! this family, which is what makes the whole method exact.

use rug::ops::CompleteRound;
use rug::{Complex, Float};

use crate::scalars::{Kappa, PrecisionContext};
#[cfg(test)]
use crate::scalars::complex_abs;
use crate::trig_integrals::IntegralTable;

#[derive(Debug, Clone)]
pub(crate) struct TrigPoly {
    /// Coefficient of `x^p sin(kappa x)`.
    sin_c: Vec<Complex>,
    /// Coefficient of `x^p cos(kappa x)`.
    cos_c: Vec<Complex>,
}

impl TrigPoly {
    pub fn new(sin_c: Vec<Complex>, cos_c: Vec<Complex>) -> Self {
        debug_assert_eq!(sin_c.len(), cos_c.len());
        Self { sin_c, cos_c }
    }

    pub fn zero(degree: usize, ctx: &PrecisionContext) -> Self {
        Self {
            sin_c: vec![ctx.complex_zero(); degree + 1],
            cos_c: vec![ctx.complex_zero(); degree + 1],
        }
    }

    /// Build from layer coefficients `a_p`, `b_p`, where the represented
    /// function is `sum_p x^p (a_p/kappa sin(kappa x) + b_p cos(kappa x))`.
    pub fn from_layer_coeffs(
        a: &[Complex],
        b: &[Complex],
        kappa: &Kappa,
        ctx: &PrecisionContext,
    ) -> Self {
        let prec = ctx.prec();
        let sin_c = a
            .iter()
            .map(|ap| (ap / kappa.kappa()).complete((prec, prec)))
            .collect();
        Self {
            sin_c,
            cos_c: b.to_vec(),
        }
    }

    pub fn degree(&self) -> usize {
        self.sin_c.len() - 1
    }

    pub fn sin_coeff(&self, p: usize) -> &Complex {
        &self.sin_c[p]
    }

    pub fn cos_coeff(&self, p: usize) -> &Complex {
        &self.cos_c[p]
    }

    pub fn eval(&self, kappa: &Kappa, x: &Float, ctx: &PrecisionContext) -> Complex {
        let prec = ctx.prec();
        let (s, c) = kappa.trig(x);
        let mut acc = ctx.complex_zero();
        // Horner in x over the combined sin/cos brackets
        for p in (0..self.sin_c.len()).rev() {
            acc = (&acc * x).complete((prec, prec));
            acc += (&self.sin_c[p] * &s).complete((prec, prec));
            acc += (&self.cos_c[p] * &c).complete((prec, prec));
        }
        acc
    }

    /// Derivative with respect to `x`; stays in the family with the same degree.
    pub fn derivative(&self, kappa: &Kappa, ctx: &PrecisionContext) -> Self {
        let prec = ctx.prec();
        let deg = self.degree();
        let k = kappa.kappa();
        let mut sin_c = Vec::with_capacity(deg + 1);
        let mut cos_c = Vec::with_capacity(deg + 1);
        for p in 0..=deg {
            // d/dx [x^q A_q sin + x^q B_q cos] contributes to x^p:
            //   (p+1) A_{p+1} - kappa B_p   on sin
            //   (p+1) B_{p+1} + kappa A_p   on cos
            let mut s = -((k * &self.cos_c[p]).complete((prec, prec)));
            let mut c = (k * &self.sin_c[p]).complete((prec, prec));
            if p + 1 <= deg {
                s += (&self.sin_c[p + 1] * &ctx.complex_from_real(&ctx.float((p + 1) as u64)))
                    .complete((prec, prec));
                c += (&self.cos_c[p + 1] * &ctx.complex_from_real(&ctx.float((p + 1) as u64)))
                    .complete((prec, prec));
            }
            sin_c.push(s);
            cos_c.push(c);
        }
        Self { sin_c, cos_c }
    }

    /// Multiply by a real polynomial given by ascending coefficients.
    pub fn mul_poly(&self, poly: &[Float], ctx: &PrecisionContext) -> Self {
        let prec = ctx.prec();
        if poly.is_empty() {
            return Self::zero(0, ctx);
        }
        let deg = self.degree() + poly.len() - 1;
        let mut sin_c = vec![ctx.complex_zero(); deg + 1];
        let mut cos_c = vec![ctx.complex_zero(); deg + 1];
        for (q, coeff) in poly.iter().enumerate() {
            if coeff.is_zero() {
                continue;
            }
            for p in 0..=self.degree() {
                sin_c[p + q] += (&self.sin_c[p] * coeff).complete((prec, prec));
                cos_c[p + q] += (&self.cos_c[p] * coeff).complete((prec, prec));
            }
        }
        Self { sin_c, cos_c }
    }

    pub fn scale(&self, factor: &Complex, ctx: &PrecisionContext) -> Self {
        let prec = ctx.prec();
        Self {
            sin_c: self
                .sin_c
                .iter()
                .map(|c| (c * factor).complete((prec, prec)))
                .collect(),
            cos_c: self
                .cos_c
                .iter()
                .map(|c| (c * factor).complete((prec, prec)))
                .collect(),
        }
    }

    pub fn scale_real(&self, factor: &Float, ctx: &PrecisionContext) -> Self {
        self.scale(&ctx.complex_from_real(factor), ctx)
    }

    pub fn add(&self, other: &Self, ctx: &PrecisionContext) -> Self {
        let prec = ctx.prec();
        let deg = self.degree().max(other.degree());
        let mut out = Self::zero(deg, ctx);
        for p in 0..=deg {
            let mut s = ctx.complex_zero();
            let mut c = ctx.complex_zero();
            if p <= self.degree() {
                s += &self.sin_c[p];
                c += &self.cos_c[p];
            }
            if p <= other.degree() {
                s += &other.sin_c[p];
                c += &other.cos_c[p];
            }
            out.sin_c[p] = Complex::with_val(prec, &s);
            out.cos_c[p] = Complex::with_val(prec, &c);
        }
        out
    }

    pub fn sub(&self, other: &Self, ctx: &PrecisionContext) -> Self {
        let minus_one = ctx.complex(ctx.float(-1), ctx.zero());
        self.add(&other.scale(&minus_one, ctx), ctx)
    }

    /// `int w(x) v(x) dx` over subinterval `i` of the table's mesh, assembled
    /// from the S, R, T integrals at indices `p + q`.
    pub fn inner_product(
        &self,
        other: &Self,
        table: &IntegralTable,
        interval: usize,
        ctx: &PrecisionContext,
    ) -> Complex {
        let prec = ctx.prec();
        let mut acc = ctx.complex_zero();
        for p in 0..=self.degree() {
            for q in 0..=other.degree() {
                let idx = p + q;
                let ss = (&self.sin_c[p] * &other.sin_c[q]).complete((prec, prec));
                let cc = (&self.cos_c[p] * &other.cos_c[q]).complete((prec, prec));
                let sc = (&self.sin_c[p] * &other.cos_c[q]).complete((prec, prec))
                    + (&self.cos_c[p] * &other.sin_c[q]).complete((prec, prec));
                acc += ss * table.s(interval, idx);
                acc += sc * table.t(interval, idx);
                acc += cc * table.r(interval, idx);
            }
        }
        acc
    }

    /// Sum of the magnitudes of all terms entering [`Self::inner_product`];
    /// `result_magnitude / bound` measures how much cancellation the assembly
    /// suffered, hence how many working digits it consumed.
    pub fn inner_product_bound(
        &self,
        other: &Self,
        table: &IntegralTable,
        interval: usize,
        ctx: &PrecisionContext,
    ) -> Float {
        use crate::scalars::complex_abs;
        let prec = ctx.prec();
        let mut acc = ctx.zero();
        for p in 0..=self.degree() {
            for q in 0..=other.degree() {
                let idx = p + q;
                let sp = complex_abs(&self.sin_c[p], ctx);
                let cp = complex_abs(&self.cos_c[p], ctx);
                let sq = complex_abs(&other.sin_c[q], ctx);
                let cq = complex_abs(&other.cos_c[q], ctx);
                let ss = (&sp * &sq).complete(prec);
                let cc = (&cp * &cq).complete(prec);
                let sc = (&sp * &cq).complete(prec) + (&cp * &sq).complete(prec);
                acc += ss * complex_abs(table.s(interval, idx), ctx);
                acc += sc * complex_abs(table.t(interval, idx), ctx);
                acc += cc * complex_abs(table.r(interval, idx), ctx);
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential_mesh::Mesh;
    use crate::trig_integrals::IntegralTable;

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(60, 10).unwrap()
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        let c = ctx();
        let kappa = Kappa::new(&c.float(5), &c.zero(), &c).unwrap();
        // w = (1 + 2x) sin(kx) + x^2 cos(kx)
        let w = TrigPoly::new(
            vec![
                c.complex(c.one(), c.zero()),
                c.complex(c.float(2), c.zero()),
                c.complex_zero(),
            ],
            vec![c.complex_zero(), c.complex_zero(), c.complex(c.one(), c.zero())],
        );
        let dw = w.derivative(&kappa, &c);
        let x = c.float(7) / 10u32;
        let h = c.pow10(-20);
        let up = w.eval(&kappa, &(x.clone() + &h), &c);
        let dn = w.eval(&kappa, &(x.clone() - &h), &c);
        let numeric = (up - dn) / c.complex_from_real(&(h.clone() * 2u32));
        let exact = dw.eval(&kappa, &x, &c);
        let diff = complex_abs(&(numeric - exact), &c);
        assert!(diff < c.pow10(-18));
    }

    #[test]
    fn second_derivative_of_pure_trig_is_minus_kappa_squared() {
        let c = ctx();
        let kappa = Kappa::new(&c.float(-7), &c.zero(), &c).unwrap();
        let w = TrigPoly::new(
            vec![c.complex(c.float(3), c.zero())],
            vec![c.complex(c.float(-2), c.zero())],
        );
        let ddw = w.derivative(&kappa, &c).derivative(&kappa, &c);
        let x = c.float(1) / 3u32;
        let lhs = ddw.eval(&kappa, &x, &c);
        let val = w.eval(&kappa, &x, &c);
        let rhs = (&val * &c.complex_from_real(kappa.kappa_squared())).complete((c.prec(), c.prec()));
        let diff = complex_abs(&(lhs + rhs), &c);
        assert!(c.below_tol(&diff, &c.one()));
    }

    #[test]
    fn inner_product_matches_known_integral() {
        // <sin(pi x), sin(pi x)> over [0,1] = 1/2
        let c = ctx();
        let kappa = Kappa::new(&c.pi().square(), &c.zero(), &c).unwrap();
        let mesh = Mesh::uniform(&c.zero(), &c.one(), 1, &c).unwrap();
        let table = IntegralTable::build(&mesh, std::slice::from_ref(&kappa), 2, &c);
        let w = TrigPoly::new(
            vec![c.complex(c.one(), c.zero())],
            vec![c.complex_zero()],
        );
        let ip = w.inner_product(&w, &table, 0, &c);
        let half = c.one() / 2u32;
        assert!(c.below_tol(&(ip.real() - &half).complete(c.prec()), &c.one()));
    }
}
