use fdm_core::*;
use std::time::Instant;

fn main() {
    let ctx = PrecisionContext::new(28 + 14, 14).unwrap(); // tolerance 1e-28
    let q = PolynomialPotential::from_strs(&["-60", "120"], &ctx).unwrap();
    for n in 1..=4usize {
        let t = Instant::now();
        let v = verify::oracle_eigenvalue(&q, &ctx.zero(), &ctx.one(), n, &ctx).unwrap();
        let exact = verify::known_exact_eigenvalue(&q, &ctx.zero(), &ctx.one(), n, &ctx).unwrap();
        let diff = (v.clone() - &exact).abs();
        println!("n={n}: oracle={:.6} |err|={:.2e} time={:?}", v.to_f64(), diff.to_f64(), t.elapsed());
    }
}
