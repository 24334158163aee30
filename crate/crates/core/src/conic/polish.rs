//! Exact-feasibility polishing of an operator-splitting iterate.
//!
//! Each cone block is decomposed as `s·X = V Λ Vᵀ` (`s = −1` for NSD blocks).
//! The eigenvectors with eigenvalues above a threshold span a guessed face, on
//! which the block is rewritten as `X = s·V₊ W V₊ᵀ`. The equalities are then
//! linear in the free blocks and the `W`, and the nearest point satisfying
//! them exactly is a least-norm correction. A guess is accepted only if the
//! corrected system is consistent and every `W` remains semidefinite.

use nalgebra::{DMatrix, DVector};

use super::problem::{mat_to_svec, svec_to_mat, Layout};
use crate::decision::BlockKind;
use crate::linalg::SymmetricEigen;

/// Face thresholds tried in turn, relative to the block's largest eigenvalue.
const FACE_THRESHOLDS: [f64; 4] = [1e-9, 1e-7, 1e-5, 1e-3];
/// Accepted equality residual after polishing, relative to `1 + ‖b‖∞`.
const CONSISTENT_TOL: f64 = 1e-10;
/// Accepted negative eigenvalue of a face block, relative to its largest.
const FACE_PSD_TOL: f64 = 1e-12;

struct ConeEigen {
    sign: f64,
    eig: SymmetricEigen,
}

struct Face {
    /// Per block: face basis for cone blocks.
    bases: Vec<Option<DMatrix<f64>>>,
    /// Offsets of each block in reduced coordinates.
    offsets: Vec<usize>,
    /// Map from reduced coordinates to the full internal vector.
    lift: DMatrix<f64>,
    /// Reduced coordinates of the starting point.
    start: DVector<f64>,
}

/// Returns a point satisfying `a v = b` to working precision on the face
/// guessed from `z`, or `None` if no threshold yields one.
pub(crate) fn polish(
    layout: &Layout,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    z: &DVector<f64>,
) -> Option<DVector<f64>> {
    if a.nrows() == 0 {
        return None;
    }
    let eigs: Vec<Option<ConeEigen>> = layout
        .kinds
        .iter()
        .enumerate()
        .map(|(i, kind)| {
            let sign = match kind {
                BlockKind::Psd { .. } => 1.0,
                BlockKind::Nsd { .. } => -1.0,
                _ => return None,
            };
            let x = block_matrix(layout, i, z) * sign;
            SymmetricEigen::new(&x)
                .ok()
                .map(|eig| ConeEigen { sign, eig })
        })
        .collect();
    if eigs.iter().all(Option::is_none) {
        return None;
    }
    let bound = CONSISTENT_TOL * (1.0 + b.amax());
    for &theta in &FACE_THRESHOLDS {
        let face = Face::build(layout, &eigs, theta, z);
        let m = a * &face.lift;
        let w = if m.ncols() == 0 {
            face.start.clone()
        } else {
            let rhs = b - &m * &face.start;
            let svd = m.svd(true, true);
            let cutoff = 1e-12 * svd.singular_values.max();
            let Ok(delta) = svd.solve(&rhs, cutoff) else {
                continue;
            };
            &face.start + delta
        };
        let v = &face.lift * &w;
        if v.iter().all(|x| x.is_finite())
            && (a * &v - b).amax() <= bound
            && face.is_semidefinite(&w)
        {
            return Some(v);
        }
    }
    None
}

fn block_matrix(layout: &Layout, block: usize, v: &DVector<f64>) -> DMatrix<f64> {
    let dim = layout.kinds[block].shape().0;
    let off = layout.offsets[block];
    svec_to_mat(dim, &v.as_slice()[off..off + dim * (dim + 1) / 2])
}

impl Face {
    fn build(layout: &Layout, eigs: &[Option<ConeEigen>], theta: f64, z: &DVector<f64>) -> Self {
        let mut bases = Vec::with_capacity(eigs.len());
        let mut offsets = Vec::with_capacity(eigs.len());
        let mut len = 0;
        for (kind, ce) in layout.kinds.iter().zip(eigs) {
            offsets.push(len);
            match ce {
                Some(ce) => {
                    let values = &ce.eig.eigenvalues;
                    let cut = theta * values.max().max(1.0);
                    let keep: Vec<usize> = (0..values.len()).filter(|&k| values[k] > cut).collect();
                    len += keep.len() * (keep.len() + 1) / 2;
                    bases.push(Some(ce.eig.eigenvectors.select_columns(&keep)));
                }
                None => {
                    len += kind.scalar_count();
                    bases.push(None);
                }
            }
        }

        let mut lift = DMatrix::zeros(layout.len, len);
        let mut start = DVector::zeros(len);
        for (i, kind) in layout.kinds.iter().enumerate() {
            let (off, roff) = (layout.offsets[i], offsets[i]);
            let (Some(basis), Some(ce)) = (&bases[i], &eigs[i]) else {
                for k in 0..kind.scalar_count() {
                    lift[(off + k, roff + k)] = 1.0;
                    start[roff + k] = z[off + k];
                }
                continue;
            };
            let dim = kind.shape().0;
            let r = basis.ncols();
            let count = r * (r + 1) / 2;
            let mut unit = vec![0.0; count];
            let mut column = vec![0.0; dim * (dim + 1) / 2];
            for k in 0..count {
                unit.fill(0.0);
                unit[k] = 1.0;
                let x = basis * svec_to_mat(r, &unit) * basis.transpose() * ce.sign;
                mat_to_svec(dim, &x, &mut column);
                for (t, &c) in column.iter().enumerate() {
                    lift[(off + t, roff + k)] = c;
                }
            }
            let w0 = basis.transpose() * block_matrix(layout, i, z) * basis * ce.sign;
            mat_to_svec(r, &w0, &mut start.as_mut_slice()[roff..roff + count]);
        }
        Self {
            bases,
            offsets,
            lift,
            start,
        }
    }

    fn is_semidefinite(&self, w: &DVector<f64>) -> bool {
        self.bases.iter().zip(&self.offsets).all(|(basis, &off)| {
            let Some(basis) = basis else { return true };
            let r = basis.ncols();
            if r == 0 {
                return true;
            }
            let wm = svec_to_mat(r, &w.as_slice()[off..off + r * (r + 1) / 2]);
            match SymmetricEigen::new(&wm) {
                Ok(e) => e.min_eigenvalue() >= -FACE_PSD_TOL * e.max_eigenvalue().abs().max(1.0),
                Err(_) => false,
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decision::Block;

    fn layout(kinds: &[BlockKind]) -> Layout {
        let blocks: Vec<Block> = kinds
            .iter()
            .map(|&kind| Block {
                kind,
                label: "b".into(),
            })
            .collect();
        Layout::new(&blocks)
    }

    #[test]
    fn rank_one_block_is_corrected_exactly() {
        // Q ⪰ 0 (2×2), Q00 = 1, Q01 = 1, Q11 = 1, perturbed by 1e-6.
        let lay = layout(&[BlockKind::Psd { dim: 2 }]);
        let mut a = DMatrix::zeros(3, 3);
        let s = std::f64::consts::SQRT_2;
        a[(0, 0)] = 1.0;
        a[(1, 1)] = 1.0 / s;
        a[(2, 2)] = 1.0;
        let b = DVector::from_vec(vec![1.0, 1.0, 1.0]);
        let z = DVector::from_vec(vec![1.0 + 1e-6, s * (1.0 - 1e-6), 1.0]);
        let v = polish(&lay, &a, &b, &z).expect("polish should succeed");
        assert!((&a * &v - &b).amax() < 1e-13);
        let q = block_matrix(&lay, 0, &v);
        let e = SymmetricEigen::new(&q).unwrap();
        assert!(e.min_eigenvalue() > -1e-12);
    }

    #[test]
    fn inconsistent_face_is_rejected() {
        // q ⪯ 0 scalar with q = 1 has no solution on any face.
        let lay = layout(&[BlockKind::Nsd { dim: 1 }]);
        let a = DMatrix::from_element(1, 1, 1.0);
        let b = DVector::from_element(1, 1.0);
        let z = DVector::from_element(1, -1e-3);
        assert!(polish(&lay, &a, &b, &z).is_none());
    }
}
