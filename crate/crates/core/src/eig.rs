// Copyright 2026 the oneway developers
//
// Licensed under the Apache License, Version 2.0 (the "License"); you may not use this file except
// in compliance with the License.You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software distributed under the License
// is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express
// or implied. See the License for the specific language governing permissions and limitations under
// the License.

//! Eigenvalues of small Hermitian matrices.
//!
//! A d×d complex Hermitian matrix H = A + iB embeds into the 2d×2d real
//! symmetric matrix [[A, −B], [B, A]], whose spectrum is that of H with
//! every eigenvalue doubled. Cyclic Jacobi sweeps on the embedding are
//! plenty for the 16×16 matrices this crate works with.

use crate::statevec::C64;

/// Eigenvalues (ascending) of a Hermitian matrix given row-major entries.
pub fn hermitian_eigenvalues(dim: usize, entries: &[C64]) -> Vec<f64> {
    assert_eq!(entries.len(), dim * dim, "entry count mismatch");
    let m = 2 * dim;
    let mut s = vec![0.0f64; m * m];
    for i in 0..dim {
        for j in 0..dim {
            let e = entries[i * dim + j];
            s[i * m + j] = e.re;
            s[(i + dim) * m + (j + dim)] = e.re;
            s[i * m + (j + dim)] = -e.im;
            s[(i + dim) * m + j] = e.im;
        }
    }
    let mut eigs = jacobi_symmetric(m, &mut s);
    eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // Doubled spectrum: take every other value.
    eigs.into_iter().step_by(2).collect()
}

/// Cyclic Jacobi diagonalization of a real symmetric matrix (in place).
fn jacobi_symmetric(m: usize, a: &mut [f64]) -> Vec<f64> {
    let scale: f64 = a.iter().map(|x| x.abs()).fold(0.0f64, f64::max).max(1e-300);
    let tol = 1e-14 * scale;
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..m {
            for q in (p + 1)..m {
                off += a[p * m + q].abs();
            }
        }
        if off < tol {
            break;
        }
        for p in 0..m {
            for q in (p + 1)..m {
                let apq = a[p * m + q];
                if apq.abs() < tol / (m * m) as f64 {
                    continue;
                }
                let app = a[p * m + p];
                let aqq = a[q * m + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let cos = 1.0 / (t * t + 1.0).sqrt();
                let sin = t * cos;
                for k in 0..m {
                    let akp = a[k * m + p];
                    let akq = a[k * m + q];
                    a[k * m + p] = cos * akp - sin * akq;
                    a[k * m + q] = sin * akp + cos * akq;
                }
                for k in 0..m {
                    let apk = a[p * m + k];
                    let aqk = a[q * m + k];
                    a[p * m + k] = cos * apk - sin * aqk;
                    a[q * m + k] = sin * apk + cos * aqk;
                }
            }
        }
    }
    (0..m).map(|i| a[i * m + i]).collect()
}
