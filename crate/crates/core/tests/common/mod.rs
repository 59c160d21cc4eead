//! Shared oracles for the integration tests: all independent of the library's
//! own solve paths (plain dense elimination, downward recurrence, Chebyshev
//! collocation, Gauss-Legendre nodes), so agreement is evidence, not
//! tautology.

#![allow(dead_code)]

use fdm_core::{Complex, Float, Kappa, PrecisionContext};
use rug::ops::CompleteRound;

// ---------------------------------------------------------------------------
// dense linear algebra (partial pivoting), local to the tests
// ---------------------------------------------------------------------------

/// Solve `A x = b` with partial pivoting; panics on singular systems.
pub fn solve_dense(a: &mut [Vec<Float>], b: &mut [Float], ctx: &PrecisionContext) -> Vec<Float> {
    let n = b.len();
    let prec = ctx.prec();
    for k in 0..n {
        let mut piv = k;
        for r in k + 1..n {
            if *a[r][k].as_abs() > *a[piv][k].as_abs() {
                piv = r;
            }
        }
        a.swap(k, piv);
        b.swap(k, piv);
        assert!(!a[k][k].is_zero(), "singular system in test oracle");
        for r in k + 1..n {
            let factor = (&a[r][k] / &a[k][k]).complete(prec);
            if factor.is_zero() {
                continue;
            }
            for c in k..n {
                let sub = (&factor * &a[k][c]).complete(prec);
                a[r][c] -= sub;
            }
            let sub = (&factor * &b[k]).complete(prec);
            b[r] -= sub;
        }
    }
    let mut x = vec![ctx.zero(); n];
    for i in (0..n).rev() {
        let mut acc = b[i].clone();
        for j in i + 1..n {
            acc -= (&a[i][j] * &x[j]).complete(prec);
        }
        x[i] = acc / &a[i][i];
    }
    x
}

/// Determinant by recursive cofactor expansion along the first row.
pub fn cofactor_det(m: &[Vec<Float>], ctx: &PrecisionContext) -> Float {
    let n = m.len();
    if n == 1 {
        return m[0][0].clone();
    }
    let prec = ctx.prec();
    let mut acc = ctx.zero();
    for col in 0..n {
        if m[0][col].is_zero() {
            continue;
        }
        let minor: Vec<Vec<Float>> = (1..n)
            .map(|r| {
                (0..n)
                    .filter(|&c| c != col)
                    .map(|c| m[r][c].clone())
                    .collect()
            })
            .collect();
        let term = (&m[0][col] * &cofactor_det(&minor, ctx)).complete(prec);
        if col % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    acc
}

// ---------------------------------------------------------------------------
// forward-substitution solution of the coefficient recurrence
// ---------------------------------------------------------------------------

/// Solve the two-term recurrence for the tail coefficients directly, from the
/// top power downward:
///   `2M a_M = g_{M-1}`, `-2M kappa b_M = f_{M-1}`,
///   `(t+1)((t+2) a_{t+2}/kappa - 2 kappa b_{t+1}) = f_t`,
///   `(t+1)((t+2) b_{t+2} + 2 a_{t+1}) = g_t`.
/// Returns `(a, b)` with index `0..=M` and the `p = 0` slots zero.
pub fn tails_by_forward_substitution(
    f: &[Complex],
    g: &[Complex],
    kappa: &Kappa,
    ctx: &PrecisionContext,
) -> (Vec<Complex>, Vec<Complex>) {
    let m = f.len();
    assert!(m >= 1);
    let prec = ctx.prec();
    let k = kappa.kappa();
    let two_m = ctx.complex_from_real(&ctx.float((2 * m) as u64));
    let mut a = vec![ctx.complex_zero(); m + 1];
    let mut b = vec![ctx.complex_zero(); m + 1];
    a[m] = (&g[m - 1] / &two_m).complete((prec, prec));
    let denom = (&two_m * k).complete((prec, prec));
    b[m] = -((&f[m - 1] / &denom).complete((prec, prec)));
    if m < 2 {
        a[0] = ctx.complex_zero();
        b[0] = ctx.complex_zero();
        return (a, b);
    }
    for t in (0..=m - 2).rev() {
        let t1 = ctx.complex_from_real(&ctx.float((t + 1) as u64));
        let t2 = ctx.complex_from_real(&ctx.float((t + 2) as u64));
        // a_{t+1} = (g_t/(t+1) - (t+2) b_{t+2}) / 2
        let mut rhs_a = (&g[t] / &t1).complete((prec, prec));
        rhs_a -= (&t2 * &b[t + 2]).complete((prec, prec));
        a[t + 1] = rhs_a / 2u32;
        // b_{t+1} = ((t+2) a_{t+2}/kappa - f_t/(t+1)) / (2 kappa)
        let mut rhs_b = (&t2 * &a[t + 2]).complete((prec, prec));
        rhs_b = (&rhs_b / k).complete((prec, prec));
        rhs_b -= (&f[t] / &t1).complete((prec, prec));
        let two_k = (k + k).complete((prec, prec));
        b[t + 1] = (&rhs_b / &two_k).complete((prec, prec));
    }
    a[0] = ctx.complex_zero();
    b[0] = ctx.complex_zero();
    (a, b)
}

// ---------------------------------------------------------------------------
// Gauss-Legendre nodes for the collocation oracle
// ---------------------------------------------------------------------------

/// Gauss-Legendre nodes and weights on [-1, 1], Newton-refined.
pub fn gauss_legendre(order: usize, ctx: &PrecisionContext) -> (Vec<Float>, Vec<Float>) {
    let prec = ctx.prec();
    let mut nodes = Vec::with_capacity(order);
    let mut weights = Vec::with_capacity(order);
    let stop = ctx.pow10(-(ctx.decimal_digits() as i32 - 4));
    for i in 0..order {
        let angle = ctx.pi() * ctx.float((4 * i + 3) as u64) / ctx.float((4 * order + 2) as u64);
        let mut x = angle.cos();
        let mut dp = ctx.one();
        for _ in 0..64 {
            let (p, d) = legendre_pair(order, &x, ctx);
            dp = d;
            let step = p / &dp;
            x -= &step;
            if *step.as_abs() <= stop {
                break;
            }
        }
        let w = ctx.float(2) / ((ctx.one() - x.clone().square()) * dp.square());
        nodes.push(x);
        weights.push(w);
    }
    (nodes, weights)
}

fn legendre_pair(n: usize, x: &Float, ctx: &PrecisionContext) -> (Float, Float) {
    let prec = ctx.prec();
    let mut p_prev = ctx.one();
    let mut p = x.clone();
    for k in 2..=n {
        let next = ((x * &p).complete(prec) * ctx.float((2 * k - 1) as u64)
            - (&p_prev * &ctx.float((k - 1) as u64)).complete(prec))
            / ctx.float(k as u64);
        p_prev = p;
        p = next;
    }
    let num = (x * &p).complete(prec) - &p_prev;
    let den = x.clone().square() - 1u32;
    (p.clone(), num * ctx.float(n as u64) / den)
}

/// Chebyshev polynomial values and first two derivatives at `xi`, for
/// `k = 0..=degree`.
pub fn chebyshev_rows(degree: usize, xi: &Float, ctx: &PrecisionContext) -> (Vec<Float>, Vec<Float>, Vec<Float>) {
    let prec = ctx.prec();
    let mut t = Vec::with_capacity(degree + 1);
    let mut dt = Vec::with_capacity(degree + 1);
    let mut ddt = Vec::with_capacity(degree + 1);
    t.push(ctx.one());
    dt.push(ctx.zero());
    ddt.push(ctx.zero());
    if degree >= 1 {
        t.push(xi.clone());
        dt.push(ctx.one());
        ddt.push(ctx.zero());
    }
    for k in 2..=degree {
        let tk = (xi * &t[k - 1]).complete(prec) * 2u32 - &t[k - 2];
        let dtk = (&t[k - 1] * &ctx.float(2)).complete(prec)
            + (xi * &dt[k - 1]).complete(prec) * 2u32
            - &dt[k - 2];
        let ddtk = (&dt[k - 1] * &ctx.float(4)).complete(prec)
            + (xi * &ddt[k - 1]).complete(prec) * 2u32
            - &ddt[k - 2];
        t.push(tk);
        dt.push(dtk);
        ddt.push(ddtk);
    }
    (t, dt, ddt)
}

// ---------------------------------------------------------------------------
// randomized configurations
// ---------------------------------------------------------------------------

use fdm_core::{BasePolicy, Mesh, PolynomialPotential, ProblemConfig};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic random problem: polynomial degree <= 3 with one-decimal
/// coefficients in [-5, 5], up to three subintervals, index <= 4, rank <= 5.
pub fn random_config(seed: u64, digits: u32) -> ProblemConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let degree = rng.gen_range(0..=3usize);
    let rank = rng.gen_range(1..=5usize);
    let ctx = PrecisionContext::for_run(digits, degree, rank).unwrap();
    let mut coeffs = Vec::with_capacity(degree + 1);
    for _ in 0..=degree {
        let tenths: i64 = rng.gen_range(-50..=50);
        coeffs.push(ctx.float(tenths) / 10u32);
    }
    // keep the potential honestly of this degree
    if coeffs.last().unwrap().is_zero() {
        let last = coeffs.last_mut().unwrap();
        *last += 1u32;
    }
    let n_intervals = rng.gen_range(1..=3usize);
    let b = if rng.gen_bool(0.25) {
        ctx.float(3) / 2u32
    } else {
        ctx.one()
    };
    let mesh = Mesh::uniform(&ctx.zero(), &b, n_intervals, &ctx).unwrap();
    let policy = if rng.gen_bool(0.2) {
        BasePolicy::Zero
    } else {
        BasePolicy::EndpointAverage
    };
    ProblemConfig {
        potential: PolynomialPotential::new(coeffs),
        mesh,
        policy,
        index: rng.gen_range(1..=4usize),
        rank,
        ctx,
    }
}
