//! Closed-form integrals of `x^p sin^2(kappa x)`, `x^p cos^2(kappa x)` and
//! `x^p sin(kappa x) cos(kappa x)` over a subinterval.
//!
//! These are the only integrals the method needs: every inner product of two
//! functions of the form `sum_p x^p (A_p sin(kappa x) + B_p cos(kappa x))`
//! reduces to them. The antiderivatives are rational-trigonometric in `kappa`
//! and extend to purely imaginary `kappa` by analytic continuation, which the
//! complex evaluation below performs directly.

use rug::ops::{CompleteRound, Pow};
use rug::{Complex, Float};

use crate::scalars::{Kappa, PrecisionContext};

/// `S_p = int x^p sin^2(kappa x) dx` over `[x_lo, x_hi]`.
///
/// The closed-form antiderivative difference cancels catastrophically when
/// `|kappa| max(|x|)` is small compared to `p` (its prefactor is
/// `p!/kappa^{p+1}` against a bracket of order `(kappa x)^{p+1}/p!`), so that
/// regime switches to the power series of `sin^2 = (1 - cos(2 kappa x))/2`,
/// which is the same analytic object with no cancellation.
pub fn integral_s(kappa: &Kappa, p: usize, x_lo: &Float, x_hi: &Float, ctx: &PrecisionContext) -> Complex {
    if series_preferred(kappa, p, x_lo, x_hi) {
        return integral_s_series(kappa, p, x_lo, x_hi, ctx);
    }
    antiderivative_s(kappa, p, x_hi, ctx) - antiderivative_s(kappa, p, x_lo, ctx)
}

/// `R_p = int x^p cos^2(kappa x) dx = (x_hi^{p+1} - x_lo^{p+1})/(p+1) - S_p`.
pub fn integral_r(kappa: &Kappa, p: usize, x_lo: &Float, x_hi: &Float, ctx: &PrecisionContext) -> Complex {
    let s = integral_s(kappa, p, x_lo, x_hi, ctx);
    let power_term = (x_hi.clone().pow((p + 1) as u32) - x_lo.clone().pow((p + 1) as u32))
        / ctx.float((p + 1) as u64);
    ctx.complex_from_real(&power_term) - s
}

/// `T_p = (1/2) int x^p sin(2 kappa x) dx` over `[x_lo, x_hi]`.
pub fn integral_t(kappa: &Kappa, p: usize, x_lo: &Float, x_hi: &Float, ctx: &PrecisionContext) -> Complex {
    if series_preferred(kappa, p, x_lo, x_hi) {
        return integral_t_series(kappa, p, x_lo, x_hi, ctx);
    }
    antiderivative_t(kappa, p, x_hi, ctx) - antiderivative_t(kappa, p, x_lo, ctx)
}

/// Decide between the closed form and the series: the closed form loses about
/// `log10(p!) - (p+1) log10(|kappa| xmax)` digits to cancellation; the series
/// needs roughly `|kappa| xmax` terms past the decay point.
fn series_preferred(kappa: &Kappa, p: usize, x_lo: &Float, x_hi: &Float) -> bool {
    let mag = if kappa.is_imaginary() {
        kappa.kappa().imag()
    } else {
        kappa.kappa().real()
    };
    let xmax = x_lo.clone().abs().max(&x_hi.clone().abs());
    let y = (mag.to_f64() * xmax.to_f64()).abs();
    if y > 40.0 {
        return false;
    }
    let ln_fact: f64 = (1..=p).map(|k| (k as f64).ln()).sum();
    let cancellation = ln_fact - (p as f64 + 1.0) * y.max(1e-300).ln();
    cancellation > 6.0 * std::f64::consts::LN_10
}

/// `int x^p sin^2(kappa x) dx` by the series of `(1 - cos(2 kappa x))/2`:
/// `x^{p+1}/(2(p+1)) - (1/2) sum_k (-1)^k (4 kappa^2)^k (x^{2k+p+1})/((2k)!(2k+p+1))`
/// evaluated as an endpoint difference term by term.
fn integral_s_series(
    kappa: &Kappa,
    p: usize,
    x_lo: &Float,
    x_hi: &Float,
    ctx: &PrecisionContext,
) -> Complex {
    let prec = ctx.prec();
    let power_term = (x_hi.clone().pow((p + 1) as u32) - x_lo.clone().pow((p + 1) as u32))
        / ctx.float(2 * (p + 1) as u64);
    let four_kappa_sq = ctx.float(4) * kappa.kappa_squared();
    let mut cos_part = ctx.zero();
    // k = 0 term of the cosine series is the plain power integral
    let mut term = (x_hi.clone().pow((p + 1) as u32) - x_lo.clone().pow((p + 1) as u32))
        / ctx.float((p + 1) as u64);
    let mut coeff = ctx.one();
    // decay gate: past (2k)(2k-1) > 4 (2 kappa xmax)^2 the term ratio is < 1/4
    let gate = 16.0 * kappa.kappa_squared().to_f64().abs()
        * x_lo.to_f64().abs().max(x_hi.to_f64().abs()).powi(2);
    let mut k = 0usize;
    loop {
        let signed = if k % 2 == 0 { term.clone() } else { -term.clone() };
        cos_part += (&coeff * &signed).complete(prec);
        k += 1;
        // next coefficient (4 kappa^2)^k / (2k)!
        coeff = (&coeff * &four_kappa_sq).complete(prec)
            / ctx.float((2 * k * (2 * k - 1)) as u64);
        let e = 2 * k + p + 1;
        term = (x_hi.clone().pow(e as u32) - x_lo.clone().pow(e as u32)) / ctx.float(e as u64);
        // stop once terms decay below the working ulp of the accumulated value
        if k > 8 && (2 * k * (2 * k - 1)) as f64 > gate {
            let bound = (coeff.clone().abs() * term.clone().abs()) * 2u32;
            let floor = ctx.pow10(-(ctx.decimal_digits() as i32 + 10));
            let scale = cos_part.clone().abs().max(&ctx.one());
            if bound < floor * scale {
                break;
            }
        }
        if k > 8 * (ctx.decimal_digits() as usize) {
            break;
        }
    }
    ctx.complex_from_real(&(power_term - cos_part / 2u32))
}

/// `(1/2) int x^p sin(2 kappa x) dx` by series. The result is the sin
/// coefficient times `kappa`, i.e. purely imaginary in the hyperbolic branch:
/// `T = (1/2) sum_k (-1)^k (2 kappa)^{2k+1} x^{2k+p+2} / ((2k+1)!(2k+p+2))`,
/// computed as `kappa * (real series in kappa^2)`.
fn integral_t_series(
    kappa: &Kappa,
    p: usize,
    x_lo: &Float,
    x_hi: &Float,
    ctx: &PrecisionContext,
) -> Complex {
    let prec = ctx.prec();
    let four_kappa_sq = ctx.float(4) * kappa.kappa_squared();
    let gate = 16.0 * kappa.kappa_squared().to_f64().abs()
        * x_lo.to_f64().abs().max(x_hi.to_f64().abs()).powi(2);
    // series in kappa^2 with one factor 2 kappa pulled out:
    // T = kappa sum_k (-1)^k (4 kappa^2)^k x^{2k+p+2} / ((2k+1)!(2k+p+2))
    let mut acc = ctx.zero();
    let mut coeff = ctx.one();
    let mut k = 0usize;
    loop {
        let e = 2 * k + p + 2;
        let term = (x_hi.clone().pow(e as u32) - x_lo.clone().pow(e as u32)) / ctx.float(e as u64);
        let signed = if k % 2 == 0 { term } else { -term };
        acc += (&coeff * &signed).complete(prec);
        k += 1;
        coeff = (&coeff * &four_kappa_sq).complete(prec)
            / ctx.float((2 * k * (2 * k + 1)) as u64);
        if k > 8 && (2 * k * (2 * k + 1)) as f64 > gate {
            let e_next = 2 * k + p + 2;
            let term_bound = (x_hi.clone().abs().max(&x_lo.clone().abs())).pow(e_next as u32);
            let bound = coeff.clone().abs() * term_bound * 2u32;
            let floor = ctx.pow10(-(ctx.decimal_digits() as i32 + 10));
            let scale = acc.clone().abs().max(&ctx.one());
            if bound < floor * scale {
                break;
            }
        }
        if k > 8 * (ctx.decimal_digits() as usize) {
            break;
        }
    }
    let acc_c = ctx.complex_from_real(&acc);
    (&acc_c * kappa.kappa()).complete((prec, prec))
}

/// Antiderivative of `x^p sin^2(kappa x)`:
///
/// `(p!/kappa^{p+1}) [ (kappa x)^{p+1} / (2 (p+1)!)`
/// `  + sin(2 kappa x) sum_{k=0}^{[[p/2]]}     (-1)^{k+1} (kappa x)^{p-2k}   / ((p-2k)!   2^{2k+2})`
/// `  + cos(2 kappa x) sum_{k=0}^{[[(p-1)/2]]} (-1)^{k+1} (kappa x)^{p-2k-1} / ((p-2k-1)! 2^{2k+3})`
/// `  - (-1)^{[[(2p+1)/4]]} sin^2(p pi/2) / 2^{p+2} ]`
///
/// with `[[y]]` the greatest integer `<= y`. The constant term cancels in the
/// endpoint difference; it is kept so the antiderivative itself matches the
/// printed closed form.
fn antiderivative_s(kappa: &Kappa, p: usize, x: &Float, ctx: &PrecisionContext) -> Complex {
    let prec = ctx.prec();
    let kx = (kappa.kappa() * x).complete((prec, prec));
    // powers (kappa x)^0 .. (kappa x)^{p+1}
    let powers = complex_powers(&kx, p + 1, ctx);
    let (sin2, cos2) = kappa.trig_double(x);

    let mut bracket = (&powers[p + 1] / &twice_factorial(p + 1, ctx)).complete((prec, prec));

    // sin(2 kappa x) series
    let mut sin_sum = ctx.complex_zero();
    for k in 0..=(p / 2) {
        let idx = p - 2 * k;
        let denom = factorial(idx, ctx) * two_pow(2 * k + 2, ctx);
        let mut term = (&powers[idx] / &ctx.complex_from_real(&denom)).complete((prec, prec));
        if k % 2 == 0 {
            term = -term;
        }
        sin_sum += term;
    }
    bracket += sin_sum * &sin2;

    // cos(2 kappa x) series (empty for p = 0)
    if p >= 1 {
        let mut cos_sum = ctx.complex_zero();
        for k in 0..=((p - 1) / 2) {
            let idx = p - 2 * k - 1;
            let denom = factorial(idx, ctx) * two_pow(2 * k + 3, ctx);
            let mut term = (&powers[idx] / &ctx.complex_from_real(&denom)).complete((prec, prec));
            if k % 2 == 0 {
                term = -term;
            }
            cos_sum += term;
        }
        bracket += cos_sum * &cos2;
    }

    // constant term: nonzero only for odd p, where sin^2(p pi/2) = 1 and
    // [[(2p+1)/4]] = (p-1)/2.
    if p % 2 == 1 {
        let mut constant = ctx.one() / two_pow(p + 2, ctx);
        if ((p - 1) / 2) % 2 == 1 {
            constant = -constant;
        }
        bracket -= ctx.complex_from_real(&constant);
    }

    let kappa_pow = complex_powers(kappa.kappa(), p + 1, ctx)
        .pop()
        .expect("powers up to p+1");
    let scale = (&ctx.complex_from_real(&factorial(p, ctx)) / &kappa_pow).complete((prec, prec));
    bracket * scale
}

/// Antiderivative of `(1/2) x^p sin(2 kappa x)`:
///
/// `-(p!/2) sum_{k=0}^{p} x^{p-k} cos(2 kappa x + k pi/2) / ((p-k)! (2 kappa)^{k+1})`
fn antiderivative_t(kappa: &Kappa, p: usize, x: &Float, ctx: &PrecisionContext) -> Complex {
    let prec = ctx.prec();
    let (sin2, cos2) = kappa.trig_double(x);
    let two_kappa = (kappa.kappa() + kappa.kappa()).complete((prec, prec));
    let two_kappa_pows = complex_powers(&two_kappa, p + 1, ctx);
    let x_pows = real_powers(x, p, ctx);

    let mut sum = ctx.complex_zero();
    for k in 0..=p {
        // cos(2 kappa x + k pi/2) cycles through cos, -sin, -cos, sin
        let phase = match k % 4 {
            0 => cos2.clone(),
            1 => (-&sin2).complete((prec, prec)),
            2 => (-&cos2).complete((prec, prec)),
            _ => sin2.clone(),
        };
        let num = (&ctx.complex_from_real(&x_pows[p - k]) * &phase).complete((prec, prec));
        let denom =
            (&ctx.complex_from_real(&factorial(p - k, ctx)) * &two_kappa_pows[k + 1]).complete((prec, prec));
        sum += num / denom;
    }
    let minus_half_pfact = -(factorial(p, ctx) / 2u32);
    sum * ctx.complex_from_real(&minus_half_pfact)
}

/// Bundled `S, R, T` values for one subinterval and power, plus the data that
/// produced them.
#[derive(Debug, Clone)]
pub struct IntegralTriple {
    pub s: Complex,
    pub r: Complex,
    pub t: Complex,
    pub p: usize,
}

/// Precomputed `S_{i,p}`, `R_{i,p}`, `T_{i,p}` for every subinterval `i` and
/// power `p = 0..=p_max`.
#[derive(Debug, Clone)]
pub struct IntegralTable {
    s: Vec<Vec<Complex>>,
    r: Vec<Vec<Complex>>,
    t: Vec<Vec<Complex>>,
}

impl IntegralTable {
    pub fn build(
        mesh: &crate::potential_mesh::Mesh,
        kappas: &[Kappa],
        p_max: usize,
        ctx: &PrecisionContext,
    ) -> Self {
        let mut s = Vec::with_capacity(kappas.len());
        let mut r = Vec::with_capacity(kappas.len());
        let mut t = Vec::with_capacity(kappas.len());
        for (i, kappa) in kappas.iter().enumerate() {
            let (lo, hi) = mesh.interval(i);
            let mut si = Vec::with_capacity(p_max + 1);
            let mut ri = Vec::with_capacity(p_max + 1);
            let mut ti = Vec::with_capacity(p_max + 1);
            for p in 0..=p_max {
                si.push(integral_s(kappa, p, lo, hi, ctx));
                ri.push(integral_r(kappa, p, lo, hi, ctx));
                ti.push(integral_t(kappa, p, lo, hi, ctx));
            }
            s.push(si);
            r.push(ri);
            t.push(ti);
        }
        Self { s, r, t }
    }

    pub fn p_max(&self) -> usize {
        self.s[0].len() - 1
    }

    pub fn s(&self, interval: usize, p: usize) -> &Complex {
        &self.s[interval][p]
    }

    pub fn r(&self, interval: usize, p: usize) -> &Complex {
        &self.r[interval][p]
    }

    pub fn t(&self, interval: usize, p: usize) -> &Complex {
        &self.t[interval][p]
    }

    pub fn triple(&self, interval: usize, p: usize) -> IntegralTriple {
        IntegralTriple {
            s: self.s[interval][p].clone(),
            r: self.r[interval][p].clone(),
            t: self.t[interval][p].clone(),
            p,
        }
    }
}

// ---------------------------------------------------------------------------
// small helpers
// ---------------------------------------------------------------------------

/// `z^0..z^n` by repeated multiplication (keeps exact real/imaginary parity).
fn complex_powers(z: &Complex, n: usize, ctx: &PrecisionContext) -> Vec<Complex> {
    let prec = ctx.prec();
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = Complex::with_val(prec, (1, 0));
    out.push(acc.clone());
    for _ in 0..n {
        acc = (&acc * z).complete((prec, prec));
        out.push(acc.clone());
    }
    out
}

fn real_powers(x: &Float, n: usize, ctx: &PrecisionContext) -> Vec<Float> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = ctx.one();
    out.push(acc.clone());
    for _ in 0..n {
        acc = (&acc * x).complete(ctx.prec());
        out.push(acc.clone());
    }
    out
}

pub(crate) fn factorial(n: usize, ctx: &PrecisionContext) -> Float {
    ctx.float(Float::factorial(n as u32))
}

fn two_pow(n: usize, ctx: &PrecisionContext) -> Float {
    ctx.float(1u32) << (n as u32)
}

/// `2 n!` as a complex, used for the leading bracket term.
fn twice_factorial(p_plus_1: usize, ctx: &PrecisionContext) -> Complex {
    ctx.complex_from_real(&(factorial(p_plus_1, ctx) * 2u32))
}
