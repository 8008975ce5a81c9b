//! Principal components of per-antenna coefficient realizations.
//!
//! `K_m = (1/R) Σ_r x_r x_r^H` is `N_SUB × N_SUB` but has rank at most `R`,
//! so the decomposition goes through the `R × R` Gram matrix `X^H X / R`,
//! which has the same non-zero eigenvalues.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{CalError, Result};

#[derive(Debug, Clone)]
pub struct PcaResult {
    /// Eigenvalues of `K_m`, descending, at most `min(R, N_SUB)` of them.
    pub eigenvalues: Vec<f64>,
    /// Unit-norm principal components as columns, matching `eigenvalues`.
    pub components: DMatrix<Complex64>,
}

impl PcaResult {
    /// `λ_i / λ_1`.
    pub fn normalized(&self) -> Vec<f64> {
        let l1 = self.eigenvalues[0];
        self.eigenvalues.iter().map(|l| l / l1).collect()
    }
}

/// `realizations[r][m]` is antenna `m`'s coefficient row in realization `r`.
pub fn pca(realizations: &[Vec<Vec<Complex64>>]) -> Result<Vec<PcaResult>> {
    let r = realizations.len();
    if r < 2 {
        return Err(CalError::invalid(format!(
            "need at least 2 realizations, got {r}"
        )));
    }
    let count = realizations[0].len();
    let n = realizations[0].first().map_or(0, Vec::len);
    if n == 0
        || realizations
            .iter()
            .any(|x| x.len() != count || x.iter().any(|row| row.len() != n))
    {
        return Err(CalError::invalid("realizations have inconsistent shapes"));
    }
    (0..count)
        .map(|m| {
            let x = DMatrix::from_fn(n, r, |k, j| realizations[j][m][k]);
            antenna_pca(&x)
        })
        .collect()
}

fn antenna_pca(x: &DMatrix<Complex64>) -> Result<PcaResult> {
    let (n, r) = x.shape();
    let scale = 1.0 / r as f64;
    let gram = x.adjoint() * x * Complex64::from(scale);
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let keep = order.len().min(n);
    let mut eigenvalues = Vec::with_capacity(keep);
    let mut components = DMatrix::<Complex64>::zeros(n, keep);
    let top = eig.eigenvalues[order[0]].max(0.0);
    for (i, &j) in order.iter().take(keep).enumerate() {
        let lambda = eig.eigenvalues[j].max(0.0);
        eigenvalues.push(lambda);
        let u = x * eig.eigenvectors.column(j);
        let norm = u.norm();
        // components of numerically null directions carry no information
        if lambda > top * 1e-14 && norm > 0.0 {
            components.set_column(i, &(u / Complex64::from(norm)));
        }
    }
    Ok(PcaResult {
        eigenvalues,
        components,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{complex_normal, stream};
    use crate::wideband::{synth_wideband, KernelRanges, OfdmGrid};
    use std::f64::consts::TAU;

    #[test]
    fn matches_dense_eigendecomposition() {
        let mut rng = stream(1, 0, 0);
        let (n, r) = (32, 10);
        let reps: Vec<Vec<Vec<Complex64>>> = (0..r)
            .map(|_| vec![(0..n).map(|_| complex_normal(&mut rng, 1.0)).collect()])
            .collect();
        let res = &pca(&reps).unwrap()[0];
        let x = DMatrix::from_fn(n, r, |k, j| reps[j][0][k]);
        let k = &x * x.adjoint() * Complex64::from(1.0 / r as f64);
        let mut dense: Vec<f64> = SymmetricEigen::new(k.clone())
            .eigenvalues
            .iter()
            .cloned()
            .collect();
        dense.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in res.eigenvalues.iter().zip(&dense) {
            assert!((a - b).abs() < 1e-8, "{a} {b}");
        }
        for i in 0..r {
            let u = res.components.column(i);
            assert!((u.norm() - 1.0).abs() < 1e-12);
            let ku = &k * u;
            assert!((ku - u * Complex64::from(res.eigenvalues[i])).norm() < 1e-8);
        }
    }

    #[test]
    fn noiseless_kernel_process_is_rank_one() {
        let grid = OfdmGrid {
            n_sub: 1200,
            ..OfdmGrid::default()
        };
        let truths = synth_wideband(3, &grid, &KernelRanges::default(), 100, &mut stream(2, 0, 0)).unwrap();
        let reps: Vec<_> = truths
            .iter()
            .map(|t| (0..3).map(|m| t.row(m)).collect())
            .collect();
        let res = pca(&reps).unwrap();
        for (m, p) in res.iter().enumerate() {
            assert!(p.eigenvalues[0] / p.eigenvalues[1].max(1e-300) > 1e3);
            assert!(p.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
            let t = &truths[0];
            let kappa: Vec<Complex64> = (0..1200)
                .map(|k| Complex64::new(t.gamma[m] * k as f64, TAU * t.xi[m] * k as f64).exp())
                .collect();
            let kn: f64 = kappa.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            let inner: Complex64 = p
                .components
                .column(0)
                .iter()
                .zip(&kappa)
                .map(|(u, k)| u.conj() * k)
                .sum();
            assert!(inner.norm() / kn > 0.999);
        }
    }

    #[test]
    fn permutation_invariant_and_validated() {
        let mut rng = stream(3, 0, 0);
        let reps: Vec<Vec<Vec<Complex64>>> = (0..6)
            .map(|_| vec![(0..8).map(|_| complex_normal(&mut rng, 1.0)).collect()])
            .collect();
        let a = pca(&reps).unwrap();
        let mut rev = reps.clone();
        rev.reverse();
        let b = pca(&rev).unwrap();
        for (x, y) in a[0].eigenvalues.iter().zip(&b[0].eigenvalues) {
            assert!((x - y).abs() < 1e-12 && *x >= 0.0);
        }
        assert!(pca(&reps[..1]).is_err());
    }
}
