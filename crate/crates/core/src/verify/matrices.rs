use nalgebra::DMatrix;

use crate::polynomial::{PolyMatrix, SystemDef};

/// Numeric value of
/// `PAᵀMᵀ + MAP + FᵀBᵀMᵀ + MBF − Σ_{j∈J} ∂P/∂x_j (A_j Z)` at `x`, the
/// quantity that must be `⪯ −ε₂I`.
pub fn stability_matrix(
    sys: &SystemDef,
    p: &PolyMatrix,
    f: &PolyMatrix,
    x: &[f64],
) -> DMatrix<f64> {
    let pm = p.eval_unchecked(x);
    let fm = f.eval_unchecked(x);
    let m = sys.eval_m(x);
    let ma = &m * sys.eval_a(x);
    let mb = &m * sys.eval_b(x);
    let map = ma * &pm;
    let mbf = mb * fm;
    let mut s = map.transpose() + &map + mbf.transpose() + &mbf;
    let zeros = sys.zero_rows();
    if !zeros.is_empty() && p.degree() > 0 {
        let drift = sys.eval_a(x) * sys.eval_z(x);
        for &j in zeros {
            let dp = p.partial(j);
            if !dp.is_zero() {
                s -= dp.eval_unchecked(x) * drift[j];
            }
        }
    }
    s
}
