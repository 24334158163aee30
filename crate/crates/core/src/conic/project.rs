use nalgebra::DMatrix;

use crate::linalg::SymmetricEigen;
use crate::Result;

/// Nearest positive semidefinite matrix in Frobenius norm: eigenvalues of the
/// symmetrized input are clamped at zero.
pub fn psd_project(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(s)?;
    if eig.min_eigenvalue() >= 0.0 {
        return Ok((s + s.transpose()) * 0.5);
    }
    Ok(eig.reconstruct_with(|l| l.max(0.0)))
}

/// Nearest negative semidefinite matrix: `−psd_project(−s)`.
pub fn nsd_project(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(-psd_project(&-s)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use nalgebra::DVector;

    fn random_symmetric(rng: &mut SplitMix64, n: usize) -> DMatrix<f64> {
        let a = DMatrix::from_fn(n, n, |_, _| rng.uniform(-1.0, 1.0));
        (&a + a.transpose()) * 0.5
    }

    #[test]
    fn clamps_negative_eigenvalue() {
        let s = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]));
        let p = psd_project(&s).unwrap();
        assert_eq!(
            p,
            DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0]))
        );
    }

    #[test]
    fn identity_is_fixed() {
        let i = DMatrix::<f64>::identity(4, 4);
        assert_eq!(psd_project(&i).unwrap(), i);
    }

    #[test]
    fn idempotent_and_spectrum_is_clamped() {
        let mut rng = SplitMix64::new(17);
        for n in 1..=8 {
            let s = random_symmetric(&mut rng, n);
            let p = psd_project(&s).unwrap();
            let pp = psd_project(&p).unwrap();
            assert!((&pp - &p).amax() <= 1e-12);
            let mut want: Vec<f64> = s
                .clone()
                .symmetric_eigenvalues()
                .iter()
                .map(|l| l.max(0.0))
                .collect();
            let mut got: Vec<f64> = p.clone().symmetric_eigenvalues().iter().copied().collect();
            want.sort_by(f64::total_cmp);
            got.sort_by(f64::total_cmp);
            for (a, b) in want.iter().zip(&got) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn beats_random_psd_candidates() {
        let mut rng = SplitMix64::new(23);
        let s = random_symmetric(&mut rng, 5);
        let best = (psd_project(&s).unwrap() - &s).norm();
        for _ in 0..1000 {
            let g = DMatrix::from_fn(5, 5, |_, _| rng.uniform(-1.0, 1.0));
            let candidate = &g * g.transpose() * rng.uniform(0.0, 1.0);
            assert!((candidate - &s).norm() >= best - 1e-12);
        }
    }

    #[test]
    fn nsd_mirrors_psd() {
        let s = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, -3.0]));
        let n = nsd_project(&s).unwrap();
        assert_eq!(
            n,
            DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, -3.0]))
        );
    }
}
