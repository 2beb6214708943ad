//! Cholesky factorization of the Schur complement. LAPACK-backed when the
//! `openblas` feature is on, nalgebra otherwise.

use nalgebra::{DMatrix, DVector};

pub(crate) struct SpdFactor {
    #[cfg(feature = "openblas")]
    factor: DMatrix<f64>,
    #[cfg(not(feature = "openblas"))]
    factor: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

impl SpdFactor {
    /// Returns `None` when `m` is not numerically positive definite.
    pub(crate) fn new(m: DMatrix<f64>) -> Option<Self> {
        #[cfg(feature = "openblas")]
        {
            let mut a = m;
            let n = a.nrows() as i32;
            let mut info = 0;
            let uplo = b'L' as std::ffi::c_char;
            // column-major storage matches LAPACK's expectations directly
            unsafe {
                lapack_sys::dpotrf_(&uplo, &n, a.as_mut_ptr(), &n, &mut info);
            }
            (info == 0).then_some(Self { factor: a })
        }
        #[cfg(not(feature = "openblas"))]
        {
            m.cholesky().map(|factor| Self { factor })
        }
    }

    pub(crate) fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        #[cfg(feature = "openblas")]
        {
            let mut b = rhs.clone();
            let n = self.factor.nrows() as i32;
            let nrhs = 1;
            let mut info = 0;
            let uplo = b'L' as std::ffi::c_char;
            unsafe {
                lapack_sys::dpotrs_(&uplo, &n, &nrhs, self.factor.as_ptr(), &n, b.as_mut_ptr(), &n, &mut info);
            }
            debug_assert_eq!(info, 0);
            b
        }
        #[cfg(not(feature = "openblas"))]
        {
            self.factor.solve(rhs)
        }
    }
}
