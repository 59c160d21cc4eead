//! The polynomial potential `q(x)`, the mesh, the piecewise-constant base
//! potential `qbar(x)`, and the exact sup-norm `||q - qbar||_inf`.
//!
//! The sup-norm enters the a-priori convergence bound, so it is computed from
//! polynomial extrema (real roots of `q'` isolated by Sturm sequences and
//! refined by bisection) rather than by sampling.

use rug::ops::CompleteRound;
use rug::Float;

use crate::scalars::PrecisionContext;
use crate::{Error, Result};

/// `q(x) = sum_p c_p x^p`, coefficients in ascending order.
///
/// Trailing zero coefficients are trimmed on construction, so the leading
/// coefficient is nonzero unless the polynomial is identically zero (the zero
/// potential is admitted as a trivial case).
#[derive(Debug, Clone)]
pub struct PolynomialPotential {
    coeffs: Vec<Float>,
}

impl PolynomialPotential {
    pub fn new(mut coeffs: Vec<Float>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    /// Parse coefficients `c_0..c_r` from decimal strings.
    pub fn from_strs(coeffs: &[&str], ctx: &PrecisionContext) -> Result<Self> {
        let parsed = coeffs
            .iter()
            .map(|s| ctx.float_from_str(s))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(parsed))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree `r`; zero for constant and identically-zero potentials.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Coefficient `c_p`, zero beyond the degree.
    pub fn coeff(&self, p: usize, ctx: &PrecisionContext) -> Float {
        self.coeffs
            .get(p)
            .cloned()
            .unwrap_or_else(|| ctx.zero())
    }

    pub fn coeffs(&self) -> &[Float] {
        &self.coeffs
    }

    pub fn eval(&self, x: &Float, ctx: &PrecisionContext) -> Float {
        poly_eval(&self.coeffs, x, ctx)
    }

    pub fn derivative(&self, ctx: &PrecisionContext) -> Self {
        Self::new(poly_derivative(&self.coeffs, ctx))
    }
}

/// Mesh `A = x_0 < x_1 < ... < x_N = B`.
#[derive(Debug, Clone)]
pub struct Mesh {
    points: Vec<Float>,
}

impl Mesh {
    pub fn from_points(points: Vec<Float>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidConfig(
                "mesh needs at least two points".into(),
            ));
        }
        for w in points.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidConfig(format!(
                    "mesh points must be strictly increasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self { points })
    }

    /// Uniform mesh with `n` subintervals on `[a, b]`.
    pub fn uniform(a: &Float, b: &Float, n: usize, ctx: &PrecisionContext) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidConfig("mesh needs at least one subinterval".into()));
        }
        let width = (b - a).complete(ctx.prec());
        let mut points = Vec::with_capacity(n + 1);
        points.push(a.clone());
        for k in 1..n {
            let frac = (&width * &ctx.float(k as u64)).complete(ctx.prec()) / ctx.float(n as u64);
            points.push((a + &frac).complete(ctx.prec()));
        }
        points.push(b.clone());
        Self::from_points(points)
    }

    pub fn a(&self) -> &Float {
        self.points.first().unwrap()
    }

    pub fn b(&self) -> &Float {
        self.points.last().unwrap()
    }

    pub fn points(&self) -> &[Float] {
        &self.points
    }

    /// Number of subintervals `N`.
    pub fn n_intervals(&self) -> usize {
        self.points.len() - 1
    }

    /// Endpoints `(x_{i-1}, x_i)` of subinterval `i` (0-based).
    pub fn interval(&self, i: usize) -> (&Float, &Float) {
        (&self.points[i], &self.points[i + 1])
    }

    /// Subinterval containing `x`: intervals are left-closed, the last one
    /// closed, matching the representation of the basic solution.
    pub fn interval_index(&self, x: &Float) -> Option<usize> {
        if x < self.a() || x > self.b() {
            return None;
        }
        let n = self.n_intervals();
        // binary search for the largest mesh point <= x
        let mut lo = 0usize;
        let mut hi = n; // candidate interval indices 0..n-1; points index hi+1 below
        while lo < hi {
            let mid = (lo + hi + 1) / 2;
            if self.points[mid] <= *x {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        Some(lo.min(n - 1))
    }
}

/// How the piecewise-constant base potential is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum BasePolicy {
    /// `qbar_i = (q(x_{i-1}) + q(x_i)) / 2`.
    EndpointAverage,
    /// `qbar = 0` everywhere (the simplest variant of the method).
    Zero,
    /// Explicit per-subinterval values.
    Explicit(Vec<Float>),
}

/// Piecewise-constant base potential: one value per subinterval.
#[derive(Debug, Clone)]
pub struct BasePotential {
    values: Vec<Float>,
}

impl BasePotential {
    pub fn values(&self) -> &[Float] {
        &self.values
    }

    pub fn value(&self, i: usize) -> &Float {
        &self.values[i]
    }

    pub fn min(&self) -> &Float {
        self.values.iter().min_by(|a, b| a.partial_cmp(b).unwrap()).unwrap()
    }

    pub fn max(&self) -> &Float {
        self.values.iter().max_by(|a, b| a.partial_cmp(b).unwrap()).unwrap()
    }
}

/// Build the base potential per policy.
pub fn build_base_potential(
    q: &PolynomialPotential,
    mesh: &Mesh,
    policy: &BasePolicy,
    ctx: &PrecisionContext,
) -> Result<BasePotential> {
    let n = mesh.n_intervals();
    let values = match policy {
        BasePolicy::EndpointAverage => (0..n)
            .map(|i| {
                let (lo, hi) = mesh.interval(i);
                (q.eval(lo, ctx) + q.eval(hi, ctx)) / 2u32
            })
            .collect(),
        BasePolicy::Zero => (0..n).map(|_| ctx.zero()).collect(),
        BasePolicy::Explicit(values) => {
            if values.len() != n {
                return Err(Error::InvalidConfig(format!(
                    "explicit base potential has {} values for {} subintervals",
                    values.len(),
                    n
                )));
            }
            values.iter().map(|v| ctx.float(v)).collect()
        }
    };
    Ok(BasePotential { values })
}

/// `max_i sup_{[x_{i-1}, x_i]} |q(x) - qbar_i|`, from endpoint values and the
/// real critical points of `q` inside each subinterval.
pub fn sup_norm_diff(
    q: &PolynomialPotential,
    qbar: &BasePotential,
    mesh: &Mesh,
    ctx: &PrecisionContext,
) -> Float {
    let critical = real_roots_in_interval(&q.derivative(ctx), mesh.a(), mesh.b(), ctx);
    let mut best = ctx.zero();
    for i in 0..mesh.n_intervals() {
        let (lo, hi) = mesh.interval(i);
        let mut consider = |x: &Float| {
            let mut d = q.eval(x, ctx);
            d -= qbar.value(i);
            let d = d.abs();
            if d > best {
                best = d;
            }
        };
        consider(lo);
        consider(hi);
        for root in &critical {
            if root >= lo && root <= hi {
                consider(root);
            }
        }
    }
    best
}

// ---------------------------------------------------------------------------
// polynomial helpers over &[Float], ascending coefficients
// ---------------------------------------------------------------------------

pub(crate) fn poly_eval(coeffs: &[Float], x: &Float, ctx: &PrecisionContext) -> Float {
    let mut acc = ctx.zero();
    for c in coeffs.iter().rev() {
        acc *= x;
        acc += c;
    }
    acc
}

pub(crate) fn poly_derivative(coeffs: &[Float], ctx: &PrecisionContext) -> Vec<Float> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(p, c)| (c * &ctx.float(p as u64)).complete(ctx.prec()))
        .collect()
}

fn poly_trim(mut coeffs: Vec<Float>, eps: &Float) -> Vec<Float> {
    while coeffs.last().is_some_and(|c| *c.as_abs() <= *eps) {
        coeffs.pop();
    }
    coeffs
}

/// Remainder of polynomial division, with tolerance-based trimming of the
/// leading coefficients to keep the Sturm chain from chasing rounding noise.
fn poly_rem(num: &[Float], den: &[Float], eps: &Float, ctx: &PrecisionContext) -> Vec<Float> {
    let mut rem: Vec<Float> = num.to_vec();
    let dn = den.len();
    debug_assert!(dn >= 1);
    while rem.len() >= dn {
        let factor = (rem.last().unwrap() / den.last().unwrap()).complete(ctx.prec());
        let shift = rem.len() - dn;
        for (k, d) in den.iter().enumerate() {
            let sub = (&factor * d).complete(ctx.prec());
            rem[shift + k] -= sub;
        }
        rem.pop();
        rem = poly_trim(rem, eps);
    }
    rem
}

/// Sturm chain of `p` with tolerance truncation. Returns the chain; if the
/// remainder sequence terminates early with a nontrivial GCD (multiple roots)
/// the chain simply ends there and the caller recurses on the squarefree part.
fn sturm_chain(p: &[Float], eps: &Float, ctx: &PrecisionContext) -> Vec<Vec<Float>> {
    let mut chain: Vec<Vec<Float>> = vec![p.to_vec(), poly_derivative(p, ctx)];
    loop {
        let last = &chain[chain.len() - 1];
        if last.len() <= 1 {
            break;
        }
        let prev = &chain[chain.len() - 2];
        let mut rem = poly_rem(prev, last, eps, ctx);
        if rem.is_empty() {
            break;
        }
        for c in &mut rem {
            *c = (-&*c).complete(ctx.prec());
        }
        chain.push(rem);
    }
    chain
}

/// Sign variations of the chain at `x`, zeros skipped.
fn sign_variations(chain: &[Vec<Float>], x: &Float, eps: &Float, ctx: &PrecisionContext) -> usize {
    let mut variations = 0;
    let mut last_sign = 0i8;
    for poly in chain {
        let v = poly_eval(poly, x, ctx);
        let sign = if *v.as_abs() <= *eps {
            0
        } else if v.is_sign_positive() {
            1
        } else {
            -1
        };
        if sign != 0 {
            if last_sign != 0 && sign != last_sign {
                variations += 1;
            }
            last_sign = sign;
        }
    }
    variations
}

/// All real roots of `p` in `[lo, hi]`, isolated by Sturm bisection and
/// refined to working tolerance. Multiple roots are reported once.
pub(crate) fn real_roots_in_interval(
    p: &PolynomialPotential,
    lo: &Float,
    hi: &Float,
    ctx: &PrecisionContext,
) -> Vec<Float> {
    let scale = p
        .coeffs()
        .iter()
        .fold(ctx.one(), |acc, c| if *c.as_abs() > acc { c.clone().abs() } else { acc });
    let eps = (ctx.tolerance() * &scale).complete(ctx.prec());
    let coeffs = poly_trim(p.coeffs().to_vec(), &eps);
    if coeffs.len() <= 1 {
        return Vec::new();
    }

    let chain = sturm_chain(&coeffs, &eps, ctx);
    // A chain that ends above degree zero found a nontrivial GCD: recurse on
    // the squarefree part, which has the same root set.
    let gcd = chain.last().unwrap();
    if gcd.len() > 1 {
        let reduced = squarefree_part(&coeffs, gcd, &eps, ctx);
        return real_roots_in_interval(&PolynomialPotential::new(reduced), lo, hi, ctx);
    }

    let count = |a: &Float, b: &Float| -> usize {
        sign_variations(&chain, a, &eps, ctx).saturating_sub(sign_variations(&chain, b, &eps, ctx))
    };

    let mut roots = Vec::new();
    let total = count(lo, hi);
    if total == 0 {
        return roots;
    }
    let mut stack = vec![(lo.clone(), hi.clone(), total)];
    let span = (hi - lo).complete(ctx.prec()).abs();
    let width_floor = (ctx.tolerance() * &span).complete(ctx.prec());
    while let Some((a, b, k)) = stack.pop() {
        if k == 0 {
            continue;
        }
        let width = (&b - &a).complete(ctx.prec());
        if k == 1 {
            roots.push(refine_root(&coeffs, &chain, a, b, &eps, ctx));
            continue;
        }
        if width <= width_floor {
            // unresolvable cluster: report its midpoint once
            roots.push((a + b) / 2u32);
            continue;
        }
        let mid = ((&a + &b).complete(ctx.prec())) / 2u32;
        let k_left = count(&a, &mid);
        stack.push((mid.clone(), b, k - k_left.min(k)));
        stack.push((a, mid, k_left));
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots
}

fn squarefree_part(
    p: &[Float],
    gcd: &[Float],
    eps: &Float,
    ctx: &PrecisionContext,
) -> Vec<Float> {
    // long division p / gcd; the remainder is ~0 by construction
    let mut rem: Vec<Float> = p.to_vec();
    let dn = gcd.len();
    let mut quot = vec![ctx.zero(); rem.len().saturating_sub(dn) + 1];
    while rem.len() >= dn {
        let factor = (rem.last().unwrap() / gcd.last().unwrap()).complete(ctx.prec());
        let shift = rem.len() - dn;
        quot[shift] = factor.clone();
        for (k, d) in gcd.iter().enumerate() {
            let sub = (&factor * d).complete(ctx.prec());
            rem[shift + k] -= sub;
        }
        rem.pop();
        rem = poly_trim(rem, eps);
    }
    poly_trim(quot, eps)
}

/// Refine a single isolated root in `[a, b]` to working tolerance, by sign
/// bisection when the endpoint signs differ and by Sturm-count bisection at
/// even-multiplicity points.
fn refine_root(
    coeffs: &[Float],
    chain: &[Vec<Float>],
    mut a: Float,
    mut b: Float,
    eps: &Float,
    ctx: &PrecisionContext,
) -> Float {
    let sign = |v: &Float| -> i8 {
        if *v.as_abs() <= *eps {
            0
        } else if v.is_sign_positive() {
            1
        } else {
            -1
        }
    };
    let sa = sign(&poly_eval(coeffs, &a, ctx));
    let sb = sign(&poly_eval(coeffs, &b, ctx));
    let max_iter = (ctx.decimal_digits() as usize) * 4 + 32;
    if sa != 0 && sb != 0 && sa != sb {
        for _ in 0..max_iter {
            let mid = ((&a + &b).complete(ctx.prec())) / 2u32;
            if ctx.below_tol(&(&b - &a).complete(ctx.prec()), &mid) {
                return mid;
            }
            let sm = sign(&poly_eval(coeffs, &mid, ctx));
            if sm == 0 {
                return mid;
            }
            if sm == sa {
                a = mid;
            } else {
                b = mid;
            }
        }
    } else {
        let va = sign_variations(chain, &a, eps, ctx);
        for _ in 0..max_iter {
            let mid = ((&a + &b).complete(ctx.prec())) / 2u32;
            if ctx.below_tol(&(&b - &a).complete(ctx.prec()), &mid) {
                return mid;
            }
            if sign_variations(chain, &mid, eps, ctx) < va {
                b = mid;
            } else {
                a = mid;
            }
        }
    }
    ((&a + &b).complete(ctx.prec())) / 2u32
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(60, 10).unwrap()
    }

    fn linear_potential(c: &PrecisionContext) -> PolynomialPotential {
        PolynomialPotential::from_strs(&["-60", "120"], c).unwrap()
    }

    #[test]
    fn endpoint_average_on_one_interval_vanishes() {
        // (q(0) + q(1))/2 = (-60 + 60)/2 = 0: the one-interval average
        // coincides with the zero base potential for this q.
        let c = ctx();
        let q = linear_potential(&c);
        let mesh = Mesh::uniform(&c.zero(), &c.one(), 1, &c).unwrap();
        let qbar = build_base_potential(&q, &mesh, &BasePolicy::EndpointAverage, &c).unwrap();
        assert!(qbar.value(0).is_zero());
    }

    #[test]
    fn endpoint_average_on_two_intervals() {
        let c = ctx();
        let q = linear_potential(&c);
        let mesh = Mesh::uniform(&c.zero(), &c.one(), 2, &c).unwrap();
        let qbar = build_base_potential(&q, &mesh, &BasePolicy::EndpointAverage, &c).unwrap();
        assert_eq!(qbar.value(0).to_f64(), -30.0);
        assert_eq!(qbar.value(1).to_f64(), 30.0);
    }

    #[test]
    fn zero_policy() {
        let c = ctx();
        let q = PolynomialPotential::from_strs(&["0", "1"], &c).unwrap();
        let mesh = Mesh::uniform(&c.zero(), &c.one(), 1, &c).unwrap();
        let qbar = build_base_potential(&q, &mesh, &BasePolicy::Zero, &c).unwrap();
        assert!(qbar.value(0).is_zero());
    }

    #[test]
    fn sup_norm_linear_cases() {
        let c = ctx();
        let q = linear_potential(&c);
        let mesh1 = Mesh::uniform(&c.zero(), &c.one(), 1, &c).unwrap();
        let qbar1 = build_base_potential(&q, &mesh1, &BasePolicy::EndpointAverage, &c).unwrap();
        let s1 = sup_norm_diff(&q, &qbar1, &mesh1, &c);
        assert!(c.below_tol(&(s1 - 60u32), &c.float(60)));

        let mesh2 = Mesh::uniform(&c.zero(), &c.one(), 2, &c).unwrap();
        let qbar2 = build_base_potential(&q, &mesh2, &BasePolicy::EndpointAverage, &c).unwrap();
        let s2 = sup_norm_diff(&q, &qbar2, &mesh2, &c);
        assert!(c.below_tol(&(s2 - 30u32), &c.float(30)));
    }

    #[test]
    fn sup_norm_constant_is_zero() {
        let c = ctx();
        let q = PolynomialPotential::from_strs(&["7"], &c).unwrap();
        let mesh = Mesh::uniform(&c.zero(), &c.one(), 3, &c).unwrap();
        let qbar = build_base_potential(&q, &mesh, &BasePolicy::EndpointAverage, &c).unwrap();
        for v in qbar.values() {
            assert!(c.below_tol(&(v.clone() - 7u32), &c.one()));
        }
        let s = sup_norm_diff(&q, &qbar, &mesh, &c);
        assert!(c.below_tol(&s, &c.one()));
    }

    #[test]
    fn sup_norm_interior_extremum() {
        // q = x(1-x) on [0,1], qbar = 0 via endpoint average; max at x = 1/2.
        let c = ctx();
        let q = PolynomialPotential::from_strs(&["0", "1", "-1"], &c).unwrap();
        let mesh = Mesh::uniform(&c.zero(), &c.one(), 1, &c).unwrap();
        let qbar = build_base_potential(&q, &mesh, &BasePolicy::EndpointAverage, &c).unwrap();
        let s = sup_norm_diff(&q, &qbar, &mesh, &c);
        let quarter = c.one() / 4u32;
        assert!(c.below_tol(&(&s - &quarter).complete(c.prec()), &c.one()));
    }

    #[test]
    fn roots_of_cubic_derivative() {
        // p = x^3 - 3x: p' = 3x^2 - 3, roots at +-1.
        let c = ctx();
        let p = PolynomialPotential::from_strs(&["0", "-3", "0", "1"], &c).unwrap();
        let dp = p.derivative(&c);
        let roots = real_roots_in_interval(&dp, &c.float(-2), &c.float(2), &c);
        assert_eq!(roots.len(), 2);
        assert!(c.below_tol(&(roots[0].clone() + 1u32), &c.one()));
        assert!(c.below_tol(&(roots[1].clone() - 1u32), &c.one()));
    }

    #[test]
    fn double_root_is_found_once() {
        // p = (x - 1/2)^2 = x^2 - x + 1/4
        let c = ctx();
        let p = PolynomialPotential::from_strs(&["0.25", "-1", "1"], &c).unwrap();
        let roots = real_roots_in_interval(&p, &c.zero(), &c.one(), &c);
        assert_eq!(roots.len(), 1);
        let half = c.one() / 2u32;
        assert!(c.below_tol(&(&roots[0] - &half).complete(c.prec()), &c.one()));
    }

    #[test]
    fn mesh_validation_and_lookup() {
        let c = ctx();
        assert!(Mesh::from_points(vec![c.zero(), c.zero()]).is_err());
        let mesh = Mesh::uniform(&c.zero(), &c.one(), 4, &c).unwrap();
        assert_eq!(mesh.n_intervals(), 4);
        // left-closed intervals, last interval closed
        assert_eq!(mesh.interval_index(&c.zero()), Some(0));
        let quarter = c.one() / 4u32;
        assert_eq!(mesh.interval_index(&quarter), Some(1));
        assert_eq!(mesh.interval_index(&c.one()), Some(3));
        assert_eq!(mesh.interval_index(&c.float(2)), None);
        assert_eq!(mesh.interval_index(&c.float(-1)), None);
    }

    #[test]
    fn trailing_zero_coefficients_are_trimmed() {
        let c = ctx();
        let q = PolynomialPotential::new(vec![c.one(), c.zero(), c.zero()]);
        assert_eq!(q.degree(), 0);
        let z = PolynomialPotential::new(vec![c.zero()]);
        assert!(z.is_zero());
    }
}
