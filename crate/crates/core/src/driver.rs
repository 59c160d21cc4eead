//! Rank-`m` runs: solve the basic problem, iterate the correction layers in
//! dependency order, accumulate the truncated eigenvalue sums and the a-priori
//! convergence bounds.

use rug::float::Special;
use rug::ops::CompleteRound;
use rug::Float;

use crate::basic_problem::{basic_spectrum, solve_basic, BasicEigenpair};
use crate::corrections::{
    assemble_rhs, degree_bound, lambda_correction, solve_layer, source_coeffs, tail_coefficients,
    CorrectionLayer,
};
use crate::potential_mesh::{
    build_base_potential, sup_norm_diff, BasePolicy, BasePotential, Mesh, PolynomialPotential,
};
use crate::scalars::PrecisionContext;
use crate::trig_integrals::IntegralTable;
use crate::{Error, Result};

/// Full description of one run.
#[derive(Debug, Clone)]
pub struct ProblemConfig {
    pub potential: PolynomialPotential,
    pub mesh: Mesh,
    pub policy: BasePolicy,
    /// Eigenvalue index `n >= 1`.
    pub index: usize,
    /// Rank `m`: number of correction layers.
    pub rank: usize,
    pub ctx: PrecisionContext,
}

/// A-priori convergence data: spectral-gap bound `M_n`, contraction factor
/// `r_n = 4 ||q - qbar||_inf M_n`, and the error-bound sequences.
#[derive(Debug, Clone)]
pub struct Theorem1Bounds {
    pub m_n: Float,
    pub r_n: Float,
    pub sup_norm: Float,
    /// `alpha_k = 2 (2k-1)!!/(2k+2)!!`, `k = 0..=m+1`.
    pub alpha: Vec<Float>,
    /// `beta_0 = 1 + alpha_1 r/(1-r)`, `beta_k = alpha_k r^k/(1-r)`; infinite
    /// when `r_n >= 1`.
    pub beta: Vec<Float>,
    /// True exactly when `r_n < 1` (sufficient condition; runs beyond it are
    /// legitimate and simply carry no bound).
    pub convergent: bool,
}

/// Result of a rank-`m` run.
#[derive(Debug, Clone)]
pub struct FDResult {
    pub index: usize,
    pub rank: usize,
    pub basic: BasicEigenpair,
    /// Layers `0..=m`; layer 0 is the basic eigenpair.
    pub layers: Vec<CorrectionLayer>,
    /// Truncated sums `sum_{j<=k} lambda^{(j)}`, `k = 0..=m`.
    pub lambda_truncated: Vec<Float>,
    pub theorem1: Theorem1Bounds,
    pub mesh: Mesh,
    pub qbar: BasePotential,
    pub potential: PolynomialPotential,
    pub ctx: PrecisionContext,
    pub(crate) table: IntegralTable,
}

impl FDResult {
    /// The rank-`k` eigenvalue approximation.
    pub fn lambda_at_rank(&self, k: usize) -> &Float {
        &self.lambda_truncated[k]
    }
}

/// Execute a full rank-`m` run.
///
/// Divergent configurations (contraction factor `>= 1`) run to completion and
/// are only flagged; the correction recursion itself is exact at every rank.
///
/// The basis coefficients can grow far beyond the guard digits (their size is
/// driven by `(M-2p)!/(2 kappa)^{2p}` factors, i.e. by the smallest
/// wavenumber), which shows up as noise in the eigenvalue corrections. The
/// run monitors that growth and restarts itself at a widened working
/// precision when the guard is about to be consumed; the trusted digits and
/// the tolerance are unchanged.
pub fn run_fd(config: &ProblemConfig) -> Result<FDResult> {
    let mut extra = 0u32;
    let mut fallbacks = 0usize;
    loop {
        match run_fd_at(config, extra) {
            Ok(result) => return Ok(result),
            Err(RunAttempt::WidenBy(more)) => extra += more,
            Err(RunAttempt::Failed(e)) => match e {
                // precision-class failures get one ladder of retries
                Error::SolvabilityViolation { .. } | Error::CoercionFailure { .. }
                    if fallbacks < 2 =>
                {
                    fallbacks += 1;
                    extra += 80;
                }
                other => return Err(other),
            },
        }
    }
}

enum RunAttempt {
    WidenBy(u32),
    Failed(Error),
}

impl From<Error> for RunAttempt {
    fn from(e: Error) -> Self {
        RunAttempt::Failed(e)
    }
}

/// Largest decimal magnitude among the layer coefficients, from the binary
/// exponents (safe against f64 overflow).
fn coeff_log10_max(layer: &CorrectionLayer) -> f64 {
    let mut worst = f64::MIN;
    for coeffs in layer.coeff_a.iter().chain(layer.coeff_b.iter()) {
        for c in coeffs {
            for part in [c.real(), c.imag()] {
                if let Some(exp) = part.get_exp() {
                    worst = worst.max(exp as f64 * std::f64::consts::LOG10_2);
                }
            }
        }
    }
    worst
}

fn run_fd_at(config: &ProblemConfig, extra: u32) -> std::result::Result<FDResult, RunAttempt> {
    let widened;
    let ctx = if extra == 0 {
        &config.ctx
    } else {
        widened = config.ctx.with_extra_digits(extra);
        &widened
    };
    if config.index == 0 {
        return Err(RunAttempt::Failed(Error::InvalidConfig(
            "eigenvalue index must be >= 1".into(),
        )));
    }
    let n = config.index;
    let m = config.rank;
    let r = config.potential.degree();

    let qbar = build_base_potential(&config.potential, &config.mesh, &config.policy, ctx)?;
    let spectrum = basic_spectrum(n + 1, &config.mesh, &qbar, ctx)?;
    let lambda0 = &spectrum[n - 1];
    let basic = solve_basic(n, lambda0, &config.mesh, &qbar, ctx)?;

    // The residual of the rank-m approximation has polynomial degree
    // M(m-1) + r per subinterval; its square doubles that.
    let p_max = 2 * (degree_bound(m as isize - 1, r) + r) + 2;
    let table = IntegralTable::build(&config.mesh, &basic.kappas, p_max, ctx);
    let d = crate::basic_problem::assemble_d(lambda0, &config.mesh, &qbar, ctx)?;

    let mut layers = vec![CorrectionLayer::from_basic(&basic)];
    // restart threshold: coefficient magnitudes may consume the guard digits
    // up to a safety margin before the corrections lose trusted digits
    let growth_cap = ctx.guard_digits() as f64 - 15.0;
    for j in 0..m {
        let lambda_next =
            lambda_correction(j, &layers, &basic, &table, &config.potential, &qbar, ctx)?;
        let source = source_coeffs(
            j,
            &layers,
            &lambda_next,
            &qbar,
            &config.potential,
            &basic.kappas,
            ctx,
        );
        let (tail_a, tail_b) = tail_coefficients(j, &source, r, &basic.kappas, ctx);
        let h = assemble_rhs(&tail_a, &tail_b, &config.mesh, &basic.kappas, ctx)?;
        let layer = solve_layer(&basic, &d, &h, &lambda_next, tail_a, tail_b, &table, ctx)?;
        let growth = coeff_log10_max(&layer);
        if growth > growth_cap {
            return Err(RunAttempt::WidenBy((growth - growth_cap) as u32 + 40));
        }
        layers.push(layer);
    }

    let mut lambda_truncated = Vec::with_capacity(m + 1);
    let mut acc = ctx.zero();
    for layer in &layers {
        acc += &layer.lambda;
        lambda_truncated.push(acc.clone());
    }

    let sup_norm = sup_norm_diff(&config.potential, &qbar, &config.mesh, ctx);
    let lambda_prev = if n >= 2 { Some(&spectrum[n - 2]) } else { None };
    let theorem1 = theorem1_bounds(&sup_norm, lambda_prev, &spectrum[n - 1], &spectrum[n], m, ctx);

    Ok(FDResult {
        index: n,
        rank: m,
        basic,
        layers,
        lambda_truncated,
        theorem1,
        mesh: config.mesh.clone(),
        qbar,
        potential: config.potential.clone(),
        ctx: ctx.clone(),
        table,
    })
}

/// `M_n`, `r_n` and the bound sequences from the neighboring basic
/// eigenvalues (the gap below is omitted for `n = 1`).
pub fn theorem1_bounds(
    sup_norm: &Float,
    lambda_prev: Option<&Float>,
    lambda_n: &Float,
    lambda_next: &Float,
    rank: usize,
    ctx: &PrecisionContext,
) -> Theorem1Bounds {
    let prec = ctx.prec();
    let gap_up = (lambda_next - lambda_n).complete(prec);
    let mut m_n = ctx.one() / gap_up;
    if let Some(prev) = lambda_prev {
        let gap_down = (lambda_n - prev).complete(prec);
        let inv_down = ctx.one() / gap_down;
        if inv_down > m_n {
            m_n = inv_down;
        }
    }
    let r_n = (sup_norm * &m_n).complete(prec) * 4u32;
    let convergent = r_n < 1;

    // alpha_0 = 1, alpha_k = alpha_{k-1} (2k-1)/(2k+2)
    let mut alpha = Vec::with_capacity(rank + 2);
    alpha.push(ctx.one());
    for k in 1..=rank + 1 {
        let ratio = ctx.float((2 * k - 1) as u64) / ctx.float((2 * k + 2) as u64);
        alpha.push((&alpha[k - 1] * &ratio).complete(prec));
    }

    let mut beta = Vec::with_capacity(rank + 2);
    if convergent {
        let one_minus_r = ctx.one() - &r_n;
        let geometric = (&r_n / &one_minus_r).complete(prec);
        beta.push(ctx.one() + (&geometric * &alpha[1]).complete(prec));
        let mut r_pow = r_n.clone();
        for k in 1..=rank + 1 {
            let b = (&r_pow * &alpha[k]).complete(prec) / &one_minus_r;
            beta.push(b);
            r_pow = (&r_pow * &r_n).complete(prec);
        }
    } else {
        for _ in 0..=rank + 1 {
            beta.push(Float::with_val(prec, Special::Infinity));
        }
    }

    Theorem1Bounds {
        m_n,
        r_n,
        sup_norm: sup_norm.clone(),
        alpha,
        beta,
        convergent,
    }
}

/// Evaluate the rank-`k` approximation `sum_{j<=k} u^{(j)}(x)`.
pub fn eval_approx(result: &FDResult, x: &Float, rank: usize) -> Result<Float> {
    if rank > result.rank {
        return Err(Error::InvalidConfig(format!(
            "rank {rank} exceeds computed rank {}",
            result.rank
        )));
    }
    let ctx = &result.ctx;
    let i = result
        .mesh
        .interval_index(x)
        .ok_or_else(|| Error::OutOfDomain { x: x.clone() })?;
    let kappa = &result.basic.kappas[i];
    let mut acc = ctx.complex_zero();
    for layer in result.layers.iter().take(rank + 1) {
        acc += layer.trigpoly(i, kappa, ctx).eval(kappa, x, ctx);
    }
    ctx.to_real(&acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_potential_config(n: usize, m: usize) -> ProblemConfig {
        let ctx = PrecisionContext::new(60, 10).unwrap();
        let mesh = Mesh::uniform(&ctx.zero(), &ctx.one(), 1, &ctx).unwrap();
        ProblemConfig {
            potential: PolynomialPotential::new(vec![]),
            mesh,
            policy: BasePolicy::Zero,
            index: n,
            rank: m,
            ctx,
        }
    }

    #[test]
    fn zero_potential_run_is_exact_at_every_rank() {
        let config = zero_potential_config(2, 5);
        let ctx = &config.ctx;
        let result = run_fd(&config).unwrap();
        let exact = ctx.pi().square() * 4u32;
        for k in 0..=5 {
            let diff = (result.lambda_at_rank(k) - &exact).complete(ctx.prec());
            assert!(ctx.below_tol(&diff, &exact), "rank {k}");
        }
        // all corrections vanish
        for layer in &result.layers[1..] {
            assert!(ctx.below_tol(&layer.lambda, &exact));
        }
        // theorem-1 data: constant potential means r_n = 0 and beta_m = 0
        assert!(result.theorem1.convergent);
        assert!(ctx.below_tol(&result.theorem1.r_n, &ctx.one()));
        for b in &result.theorem1.beta[1..] {
            assert!(ctx.below_tol(b, &ctx.one()));
        }
    }

    #[test]
    fn eval_at_boundaries_and_midpoint() {
        let config = zero_potential_config(1, 2);
        let ctx = &config.ctx;
        let result = run_fd(&config).unwrap();
        let at_a = eval_approx(&result, &ctx.zero(), 2).unwrap();
        let at_b = eval_approx(&result, &ctx.one(), 2).unwrap();
        assert!(ctx.below_tol(&at_a, &ctx.one()));
        assert!(ctx.below_tol(&at_b, &ctx.one()));
        // u(1/2) = sqrt(2) for the normalized first mode
        let half = ctx.one() / 2u32;
        let mid = eval_approx(&result, &half, 2).unwrap();
        let expected = ctx.float(2).sqrt();
        assert!(ctx.below_tol(&(&mid - &expected).complete(ctx.prec()), &expected));
        assert!(matches!(
            eval_approx(&result, &ctx.float(3), 0),
            Err(Error::OutOfDomain { .. })
        ));
    }

    #[test]
    fn truncated_lambdas_are_prefix_sums() {
        let config = zero_potential_config(1, 4);
        let ctx = &config.ctx;
        let result = run_fd(&config).unwrap();
        let mut acc = ctx.zero();
        for (k, layer) in result.layers.iter().enumerate() {
            acc += &layer.lambda;
            let diff = (&acc - result.lambda_at_rank(k)).complete(ctx.prec());
            assert!(ctx.below_tol(&diff, &acc));
        }
    }

    #[test]
    fn alpha_sequence_inequality() {
        // alpha_m <= 1/((m+1) sqrt(pi m)) for m = 1..30
        let ctx = PrecisionContext::new(60, 10).unwrap();
        let bounds = theorem1_bounds(
            &ctx.one(),
            None,
            &ctx.zero(),
            &ctx.one(),
            29,
            &ctx,
        );
        for m in 1..=30usize {
            let bound = ctx.one()
                / (ctx.float((m + 1) as u64) * (ctx.pi() * ctx.float(m as u64)).sqrt());
            assert!(bounds.alpha[m] <= bound, "m = {m}");
        }
    }
}
