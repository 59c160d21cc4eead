//! The basic (rank-0) problem: eigenpairs of the operator with the
//! piecewise-constant base potential.
//!
//! On each subinterval the solution is `a/kappa sin(kappa x) + b cos(kappa x)`.
//! The Dirichlet boundary conditions and the interface matching conditions
//! give a homogeneous 2N x 2N system `D(lambda) Y = 0`; eigenvalues are the
//! roots of `det D`, and the eigenfunction is the normalized null direction.
//! The matrix rows involve only `sin(kappa x)/kappa`, `cos(kappa x)` and
//! `kappa sin(kappa x)`, which are entire in `lambda`, so `D` is real and
//! `det D` is continuous through the hyperbolic/oscillatory transition.

use rug::ops::CompleteRound;
use rug::{Complex, Float};

use crate::linalg::{banded_det_scaled, BandRow, DenseMatrix};
use crate::potential_mesh::{BasePotential, Mesh};
use crate::scalars::{Kappa, PrecisionContext};
use crate::trig_integrals::IntegralTable;
use crate::trigpoly::TrigPoly;
use crate::{Error, Result};

/// The characteristic matrix `D(lambda)` in dense form, column order
/// `(a_1, b_1, ..., a_N, b_N)`.
#[derive(Debug, Clone)]
pub struct TransferMatrix {
    pub(crate) matrix: DenseMatrix,
}

impl TransferMatrix {
    /// Matrix dimension `2N`.
    pub fn dim(&self) -> usize {
        self.matrix.n_rows()
    }

    pub fn at(&self, r: usize, c: usize) -> &Float {
        self.matrix.at(r, c)
    }

    /// Determinant of this assembled matrix.
    pub fn det(&self, ctx: &PrecisionContext) -> Float {
        self.matrix.det(ctx)
    }
}

/// One `Kappa` per subinterval at the given `lambda`.
pub fn kappas_for(
    lambda: &Float,
    qbar: &BasePotential,
    ctx: &PrecisionContext,
) -> Result<Vec<Kappa>> {
    qbar.values()
        .iter()
        .map(|q| Kappa::new(lambda, q, ctx))
        .collect()
}

/// Rows of `D(lambda)`: the boundary row at `A`, per interior mesh point a
/// value-continuity row and a derivative-continuity row, and the boundary row
/// at `B`. Returned as banded rows sorted by first column.
fn build_rows(mesh: &Mesh, kappas: &[Kappa]) -> Vec<BandRow> {
    let n = mesh.n_intervals();
    let mut rows = Vec::with_capacity(2 * n);
    let a = mesh.a();
    rows.push(BandRow {
        first_col: 0,
        entries: vec![kappas[0].sin_over_kappa(a), kappas[0].cos_at(a)],
    });
    for i in 1..n {
        let x = &mesh.points()[i];
        let (left, right) = (&kappas[i - 1], &kappas[i]);
        // u_{i+1}(x_i) - u_i(x_i) = 0
        rows.push(BandRow {
            first_col: 2 * (i - 1),
            entries: vec![
                -left.sin_over_kappa(x),
                -left.cos_at(x),
                right.sin_over_kappa(x),
                right.cos_at(x),
            ],
        });
        // u'_{i+1}(x_i) - u'_i(x_i) = 0, with u' = a cos(kappa x) - b kappa sin(kappa x)
        rows.push(BandRow {
            first_col: 2 * (i - 1),
            entries: vec![
                -left.cos_at(x),
                left.kappa_sin(x),
                right.cos_at(x),
                -right.kappa_sin(x),
            ],
        });
    }
    let b = mesh.b();
    rows.push(BandRow {
        first_col: 2 * (n - 1),
        entries: vec![kappas[n - 1].sin_over_kappa(b), kappas[n - 1].cos_at(b)],
    });
    rows
}

/// Assemble the dense `D(lambda)`.
pub fn assemble_d(
    lambda: &Float,
    mesh: &Mesh,
    qbar: &BasePotential,
    ctx: &PrecisionContext,
) -> Result<TransferMatrix> {
    let kappas = kappas_for(lambda, qbar, ctx)?;
    let rows = build_rows(mesh, &kappas);
    let dim = rows.len();
    let mut matrix = DenseMatrix::zeros(dim, dim, ctx);
    for (r, row) in rows.into_iter().enumerate() {
        for (k, v) in row.entries.into_iter().enumerate() {
            matrix.set(r, row.first_col + k, v);
        }
    }
    Ok(TransferMatrix { matrix })
}

/// `det D(lambda)`, via banded elimination in O(N).
pub fn det_d(
    lambda: &Float,
    mesh: &Mesh,
    qbar: &BasePotential,
    ctx: &PrecisionContext,
) -> Result<Float> {
    let kappas = kappas_for(lambda, qbar, ctx)?;
    let rows = build_rows(mesh, &kappas);
    let (scaled, scale_product) = banded_det_scaled(rows, ctx);
    Ok(scaled * scale_product)
}

/// Determinant with rows rescaled to unit max-magnitude: same sign and same
/// roots as `det D`, but free of the hyperbolic magnitude growth, which keeps
/// the root scan well behaved.
pub(crate) fn det_d_for_scan(
    lambda: &Float,
    mesh: &Mesh,
    qbar: &BasePotential,
    ctx: &PrecisionContext,
) -> Result<Float> {
    let kappas = kappas_for(lambda, qbar, ctx)?;
    let rows = build_rows(mesh, &kappas);
    Ok(banded_det_scaled(rows, ctx).0)
}

/// Scan evaluation that sidesteps the measure-zero degenerate points
/// `lambda = qbar_i` by nudging the abscissa upward.
fn eval_for_scan(
    lambda: &Float,
    mesh: &Mesh,
    qbar: &BasePotential,
    ctx: &PrecisionContext,
) -> Result<(Float, Float)> {
    let mut x = lambda.clone();
    for attempt in 0..8 {
        match det_d_for_scan(&x, mesh, qbar, ctx) {
            Ok(v) => return Ok((x, v)),
            Err(Error::DegenerateKappa { .. }) => {
                let bump = (ctx.tolerance() * &ctx.float(1u32 << (2 + attempt))).complete(ctx.prec());
                let scale = {
                    let mut s = x.clone().abs();
                    if s < 1 {
                        s = ctx.one();
                    }
                    s
                };
                x += bump * scale;
            }
            Err(e) => return Err(e),
        }
    }
    det_d_for_scan(&x, mesh, qbar, ctx).map(|v| (x, v))
}

/// First `count` eigenvalues of the basic problem, ascending.
///
/// The scan starts below `min_i qbar_i` (eigenvalues of the base problem lie
/// above the potential minimum) and marches upward with a step tied to the
/// constant-potential spacing estimate `pi^2 (2k+1)/(B-A)^2`, refining each
/// determinant sign change by bisection with secant acceleration.
pub fn basic_spectrum(
    count: usize,
    mesh: &Mesh,
    qbar: &BasePotential,
    ctx: &PrecisionContext,
) -> Result<Vec<Float>> {
    if count == 0 {
        return Err(Error::InvalidConfig("eigenvalue index must be >= 1".into()));
    }
    let prec = ctx.prec();
    let width = (mesh.b() - mesh.a()).complete(prec);
    let base_gap = ctx.pi().square() / width.clone().square();
    let start = (qbar.min() - &ctx.one()).complete(prec);
    // lambda_k <= max qbar + (k pi / (B-A))^2; add one spacing of margin
    let count_f = ctx.float((count + 1) as u64);
    let cap = qbar.max().clone() + (&base_gap * &(count_f.clone().square())).complete(prec) + &base_gap + 1u32;

    let mut roots: Vec<Float> = Vec::with_capacity(count);
    let (mut prev_x, mut prev_f) = eval_for_scan(&start, mesh, qbar, ctx)?;
    while roots.len() < count {
        if prev_x > cap {
            return Err(Error::RootNotBracketed {
                index: roots.len() + 1,
                scanned_up_to: prev_x,
            });
        }
        let k = ctx.float((2 * roots.len() + 1) as u64);
        let step = (&base_gap * &k).complete(prec) / 8u32;
        let next = (&prev_x + &step).complete(prec);
        let (x, f) = eval_for_scan(&next, mesh, qbar, ctx)?;
        if f.is_zero() || f.is_sign_negative() != prev_f.is_sign_negative() {
            let root = refine_root(
                prev_x.clone(),
                prev_f.clone(),
                x.clone(),
                f.clone(),
                &|lambda| det_d_for_scan(lambda, mesh, qbar, ctx),
                ctx,
            )?;
            for (i, q) in qbar.values().iter().enumerate() {
                let sep = (&root - q).complete(prec);
                if ctx.below_tol(&sep, &root) {
                    return Err(Error::DegenerateRoot {
                        lambda: root,
                        interval: i + 1,
                    });
                }
            }
            roots.push(root);
        }
        prev_x = x;
        prev_f = f;
    }
    Ok(roots)
}

/// The `n`-th basic eigenvalue (1-based), refined to working tolerance.
pub fn find_basic_eigenvalue(
    n: usize,
    mesh: &Mesh,
    qbar: &BasePotential,
    ctx: &PrecisionContext,
) -> Result<Float> {
    Ok(basic_spectrum(n, mesh, qbar, ctx)?.pop().expect("n >= 1 roots"))
}

/// Refine a bracketed simple root: secant steps guarded by the bracket, with
/// bisection whenever the bracket fails to shrink.
pub(crate) fn refine_root(
    mut a: Float,
    mut fa: Float,
    mut b: Float,
    mut fb: Float,
    f: &dyn Fn(&Float) -> Result<Float>,
    ctx: &PrecisionContext,
) -> Result<Float> {
    let prec = ctx.prec();
    debug_assert!(fa.is_sign_negative() != fb.is_sign_negative() || fa.is_zero() || fb.is_zero());
    let max_iter = 4 * ctx.decimal_digits() as usize + 64;
    let shrink_target = ctx.float_from_str("0.6").unwrap();
    // roots are pinned near the working ulp, not just the trusted tolerance:
    // deep correction layers amplify any slack in lambda0
    let stop = ctx.pow10(-(ctx.decimal_digits() as i32 - 8));
    let mut force_bisect = false;
    for _ in 0..max_iter {
        let width = (&b - &a).complete(prec);
        let mid = ((&a + &b).complete(prec)) / 2u32;
        let scale = {
            let mut s = mid.clone().abs();
            if s < 1 {
                s = ctx.one();
            }
            s
        };
        if width <= (&stop * &scale).complete(prec) {
            return Ok(mid);
        }
        // candidate: secant through (a, fa), (b, fb), kept strictly interior
        let mut x = if force_bisect {
            mid.clone()
        } else {
            let denom = (&fb - &fa).complete(prec);
            if denom.is_zero() {
                mid.clone()
            } else {
                let sec = (&b).clone() - (&fb * &width).complete(prec) / denom;
                let margin = (&width / &ctx.float(32)).complete(prec);
                let lo = (&a + &margin).complete(prec);
                let hi = (&b - &margin).complete(prec);
                if sec > lo && sec < hi {
                    sec
                } else {
                    mid.clone()
                }
            }
        };
        if x == a || x == b {
            x = mid;
        }
        let fx = f(&x)?;
        let old_width = width;
        if fx.is_zero() {
            return Ok(x);
        }
        if fx.is_sign_negative() == fa.is_sign_negative() {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
        let new_width = (&b - &a).complete(prec);
        // demand geometric progress; otherwise force the next step to bisect
        force_bisect = new_width > (&old_width * &shrink_target).complete(prec);
    }
    let mid = ((&a + &b).complete(prec)) / 2u32;
    Ok(mid)
}

/// Normalized eigenpair of the basic problem.
#[derive(Debug, Clone)]
pub struct BasicEigenpair {
    /// 1-based eigenvalue index `n`.
    pub index: usize,
    pub lambda0: Float,
    /// One wavenumber per subinterval.
    pub kappas: Vec<Kappa>,
    /// Coefficients `a_i`, `b_i` of `a_i/kappa_i sin + b_i cos` per subinterval,
    /// scaled so the eigenfunction has unit L2 norm and positive slope at `A`.
    pub a0: Vec<Complex>,
    pub b0: Vec<Complex>,
    /// Unit null vector of `D^T` (adjoint direction), used by the solvability
    /// condition of the correction layers.
    pub z: Vec<Float>,
}

impl BasicEigenpair {
    /// The eigenfunction restricted to subinterval `i` as a trig polynomial.
    pub(crate) fn trigpoly(&self, i: usize, ctx: &PrecisionContext) -> TrigPoly {
        TrigPoly::from_layer_coeffs(
            std::slice::from_ref(&self.a0[i]),
            std::slice::from_ref(&self.b0[i]),
            &self.kappas[i],
            ctx,
        )
    }

    /// Evaluate the eigenfunction at `x`.
    pub fn eval(&self, x: &Float, mesh: &Mesh, ctx: &PrecisionContext) -> Result<Float> {
        let i = mesh
            .interval_index(x)
            .ok_or_else(|| Error::OutOfDomain { x: x.clone() })?;
        let value = self.trigpoly(i, ctx).eval(&self.kappas[i], x, ctx);
        ctx.to_real(&value)
    }
}

/// Null direction of `D` and adjoint null direction of `D^T`, both unit norm.
pub fn null_and_adjoint(
    d: &TransferMatrix,
    ctx: &PrecisionContext,
) -> Result<(Vec<Float>, Vec<Float>)> {
    let y0 = d.matrix.null_vector(ctx)?;
    let z = d.matrix.transpose(ctx).null_vector(ctx)?;
    Ok((y0, z))
}

/// Scale the null direction so that the eigenfunction has unit L2 norm
/// (computed exactly from the S, R, T integrals) and positive slope at `A`.
pub fn normalize_basic(
    index: usize,
    lambda0: &Float,
    y0: &[Float],
    z: Vec<Float>,
    mesh: &Mesh,
    qbar: &BasePotential,
    ctx: &PrecisionContext,
) -> Result<BasicEigenpair> {
    let prec = ctx.prec();
    let kappas = kappas_for(lambda0, qbar, ctx)?;
    let n = mesh.n_intervals();
    debug_assert_eq!(y0.len(), 2 * n);

    let a0: Vec<Complex> = (0..n).map(|i| ctx.complex_from_real(&y0[2 * i])).collect();
    let b0: Vec<Complex> = (0..n).map(|i| ctx.complex_from_real(&y0[2 * i + 1])).collect();

    let table = IntegralTable::build(mesh, &kappas, 0, ctx);
    let mut norm2 = ctx.complex_zero();
    for i in 0..n {
        let w = TrigPoly::from_layer_coeffs(
            std::slice::from_ref(&a0[i]),
            std::slice::from_ref(&b0[i]),
            &kappas[i],
            ctx,
        );
        norm2 += w.inner_product(&w, &table, i, ctx);
    }
    let norm2 = ctx.to_real(&norm2)?;
    if ctx.below_tol(&norm2, &ctx.one()) || norm2.is_sign_negative() {
        return Err(Error::ZeroNorm);
    }
    let mut scale = ctx.one() / norm2.sqrt();

    // u'(A) = a_1 cos(kappa_1 A) - b_1 kappa_1 sin(kappa_1 A) > 0
    let a_pt = mesh.a();
    let slope = (&y0[0] * &kappas[0].cos_at(a_pt)).complete(prec)
        - (&y0[1] * &kappas[0].kappa_sin(a_pt)).complete(prec);
    if slope.is_sign_negative() {
        scale = -scale;
    }

    let scale_c = ctx.complex_from_real(&scale);
    let a0 = a0
        .iter()
        .map(|v| (v * &scale_c).complete((prec, prec)))
        .collect();
    let b0 = b0
        .iter()
        .map(|v| (v * &scale_c).complete((prec, prec)))
        .collect();

    Ok(BasicEigenpair {
        index,
        lambda0: lambda0.clone(),
        kappas,
        a0,
        b0,
        z,
    })
}

/// Full basic solve for index `n`: scan, null vectors, normalization.
pub fn solve_basic(
    n: usize,
    lambda0: &Float,
    mesh: &Mesh,
    qbar: &BasePotential,
    ctx: &PrecisionContext,
) -> Result<BasicEigenpair> {
    let d = assemble_d(lambda0, mesh, qbar, ctx)?;
    let (y0, z) = null_and_adjoint(&d, ctx)?;
    normalize_basic(n, lambda0, &y0, z, mesh, qbar, ctx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential_mesh::{build_base_potential, BasePolicy, PolynomialPotential};

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(60, 10).unwrap()
    }

    fn unit_zero_problem(c: &PrecisionContext) -> (Mesh, BasePotential) {
        let mesh = Mesh::uniform(&c.zero(), &c.one(), 1, c).unwrap();
        let q = PolynomialPotential::new(vec![]);
        let qbar = build_base_potential(&q, &mesh, &BasePolicy::Zero, c).unwrap();
        (mesh, qbar)
    }

    #[test]
    fn det_vanishes_at_pi_squared() {
        let c = ctx();
        let (mesh, qbar) = unit_zero_problem(&c);
        let det = det_d(&c.pi().square(), &mesh, &qbar, &c).unwrap();
        assert!(c.below_tol(&det, &c.one()));
    }

    #[test]
    fn det_at_quarter_pi_squared() {
        // det = -sin(kappa)/kappa at kappa = pi/2: -2/pi
        let c = ctx();
        let (mesh, qbar) = unit_zero_problem(&c);
        let lambda = c.pi().square() / 4u32;
        let det = det_d(&lambda, &mesh, &qbar, &c).unwrap();
        let expected = -(c.float(2) / c.pi());
        assert!(c.below_tol(&(&det - &expected).complete(c.prec()), &c.one()));
    }

    #[test]
    fn constant_potential_spectrum_is_shifted_squares()  {
        // qbar = 7 on [0,1]: lambda_n = 7 + (n pi)^2
        let c = ctx();
        let mesh = Mesh::uniform(&c.zero(), &c.one(), 1, &c).unwrap();
        let q = PolynomialPotential::new(vec![c.float(7)]);
        let qbar = build_base_potential(&q, &mesh, &BasePolicy::EndpointAverage, &c).unwrap();
        let roots = basic_spectrum(10, &mesh, &qbar, &c).unwrap();
        for (k, root) in roots.iter().enumerate() {
            let expected = c.pi().square() * c.float(((k + 1) * (k + 1)) as u64) + 7u32;
            assert!(
                c.below_tol(&(root - &expected).complete(c.prec()), &expected),
                "n = {}",
                k + 1
            );
        }
        // strictly increasing
        for w in roots.windows(2) {
            assert!(w[0] < w[1]);
        }
    }

    #[test]
    fn rejects_index_zero() {
        let c = ctx();
        let (mesh, qbar) = unit_zero_problem(&c);
        assert!(find_basic_eigenvalue(0, &mesh, &qbar, &c).is_err());
    }

    #[test]
    fn normalized_first_mode_is_sqrt2_sine() {
        // u = sqrt(2) sin(pi x): a = sqrt(2) pi, b = 0
        let c = ctx();
        let (mesh, qbar) = unit_zero_problem(&c);
        let lambda = find_basic_eigenvalue(1, &mesh, &qbar, &c).unwrap();
        let pair = solve_basic(1, &lambda, &mesh, &qbar, &c).unwrap();
        let expected_a = c.float(2).sqrt() * c.pi();
        assert!(c.below_tol(
            &(pair.a0[0].real() - &expected_a).complete(c.prec()),
            &expected_a
        ));
        assert!(c.below_tol(pair.b0[0].real(), &c.one()));

        // second mode: a = sqrt(2) * 2 pi
        let lambda2 = find_basic_eigenvalue(2, &mesh, &qbar, &c).unwrap();
        let pair2 = solve_basic(2, &lambda2, &mesh, &qbar, &c).unwrap();
        let expected_a2 = c.float(2).sqrt() * c.pi() * 2u32;
        assert!(c.below_tol(
            &(pair2.a0[0].real() - &expected_a2).complete(c.prec()),
            &expected_a2
        ));
    }

    #[test]
    fn adjoint_null_vector_annihilates_rows() {
        let c = ctx();
        let (mesh, qbar) = unit_zero_problem(&c);
        let lambda = find_basic_eigenvalue(1, &mesh, &qbar, &c).unwrap();
        let d = assemble_d(&lambda, &mesh, &qbar, &c).unwrap();
        let (_, z) = null_and_adjoint(&d, &c).unwrap();
        for col in 0..d.dim() {
            let mut acc = c.zero();
            for row in 0..d.dim() {
                acc += (&z[row] * d.at(row, col)).complete(c.prec());
            }
            assert!(c.below_tol(&acc, &c.one()));
        }
    }
}
