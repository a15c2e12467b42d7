//! Internal eigenvalue helpers.
//!
//! nalgebra's general complex eigensolver only accepts real matrices, so
//! complex non-Hermitian spectra are obtained through the standard real
//! embedding [[Re, -Im], [Im, Re]], whose eigenvalues are those of the
//! complex matrix together with their conjugates. Eigenvectors are then
//! recovered by shifted inverse iteration, which converges in a few steps
//! because the Schur eigenvalues are accurate to rounding.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

pub(crate) type C64 = Complex<f64>;

/// Eigenvalues of a real matrix, including complex pairs.
pub(crate) fn eigenvalues_real(a: &DMatrix<f64>) -> Result<Vec<C64>> {
    let eigs = a.clone().complex_eigenvalues();
    if eigs.iter().any(|e| !e.re.is_finite() || !e.im.is_finite()) {
        return Err(Error::Eigen("real Schur iteration produced non-finite values".into()));
    }
    Ok(eigs.iter().copied().collect())
}

/// Eigenvalues of a complex matrix via the real embedding.
///
/// The embedding doubles the spectrum with its conjugate; assuming the
/// source matrix is passive (all eigenvalue imaginary parts <= 0 up to
/// rounding) the duplicates are removed by pairing conjugates and keeping
/// the lower-half member.
pub(crate) fn eigenvalues_complex(a: &DMatrix<C64>) -> Result<Vec<C64>> {
    let n = a.nrows();
    let mut emb = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for j in 0..n {
        for k in 0..n {
            let v = a[(j, k)];
            emb[(j, k)] = v.re;
            emb[(j + n, k + n)] = v.re;
            emb[(j, k + n)] = -v.im;
            emb[(j + n, k)] = v.im;
        }
    }
    let mut eigs = eigenvalues_real(&emb)?;
    let scale = a.camax().max(1e-300);
    let tol = 1e-7 * scale;

    eigs.sort_by(|x, y| (x.re, x.im).partial_cmp(&(y.re, y.im)).unwrap());
    let mut kept = Vec::with_capacity(n);
    let mut i = 0;
    while i < eigs.len() {
        if i + 1 < eigs.len()
            && (eigs[i].re - eigs[i + 1].re).abs() <= tol
            && (eigs[i].im + eigs[i + 1].im).abs() <= tol
        {
            // conjugate pair: keep the passive (lower) member, sorted first
            kept.push(eigs[i]);
            i += 2;
        } else if eigs[i].im <= tol {
            // real-axis eigenvalue appears once in each half; keep one copy
            kept.push(eigs[i]);
            i += 1;
        } else {
            return Err(Error::Eigen(format!(
                "unpaired eigenvalue {} + {}i in passive spectrum",
                eigs[i].re, eigs[i].im
            )));
        }
    }
    if kept.len() != n {
        return Err(Error::Eigen(format!(
            "conjugate pairing produced {} eigenvalues, expected {n}",
            kept.len()
        )));
    }
    Ok(kept)
}

/// Unit eigenvector for a known eigenvalue by shifted inverse iteration.
///
/// The shift is offset by ~1e-14 * ||A|| so the factorization stays
/// nonsingular; three iterations reduce the off-eigenspace component by
/// a factor ~(gap/offset)^3, far below f64 rounding for separated spectra.
pub(crate) fn inverse_iterate(a: &DMatrix<C64>, lambda: C64) -> DVector<C64> {
    let n = a.nrows();
    let scale = a.norm();
    let shift = lambda + C64::new(scale * 1e-14, 0.0);
    let mut b = a.clone();
    for i in 0..n {
        b[(i, i)] -= shift;
    }
    let lu = b.lu();
    let mut v = DVector::<C64>::from_element(n, C64::new(1.0, 0.0));
    v /= C64::new(v.norm(), 0.0);
    for _ in 0..3 {
        let x = match lu.solve(&v) {
            Some(x) => x,
            None => break,
        };
        let nrm = x.norm();
        if !nrm.is_finite() || nrm == 0.0 {
            break;
        }
        v = x / C64::new(nrm, 0.0);
    }
    v
}
