//! A common SpMV interface over CSR, SELL and PackSELL.

use crate::error::Result;
use crate::matrix::CsrMatrix;
use crate::packsell::PackSellMatrix;
use crate::scalar::Scalar;
use crate::sell::SellMatrix;

pub trait SpmvKernel: Sync {
    fn n_rows(&self) -> usize;
    fn n_cols(&self) -> usize;
    /// Stored nonzeros of the source matrix, excluding padding and dummies.
    fn nnz_real(&self) -> usize;
    /// Bytes of the matrix arrays.
    fn matrix_bytes(&self) -> usize;
    fn spmv_into<T: Scalar>(&self, x: &[T], y: &mut [T]) -> Result<()>;

    fn apply<T: Scalar>(&self, x: &[T]) -> Result<Vec<T>> {
        let mut y = vec![T::ZERO; self.n_rows()];
        self.spmv_into(x, &mut y)?;
        Ok(y)
    }
}

impl SpmvKernel for CsrMatrix {
    fn n_rows(&self) -> usize {
        CsrMatrix::n_rows(self)
    }
    fn n_cols(&self) -> usize {
        CsrMatrix::n_cols(self)
    }
    fn nnz_real(&self) -> usize {
        self.nnz()
    }
    fn matrix_bytes(&self) -> usize {
        self.nnz() * 12 + (CsrMatrix::n_rows(self) + 1) * 8
    }
    fn spmv_into<T: Scalar>(&self, x: &[T], y: &mut [T]) -> Result<()> {
        CsrMatrix::spmv_into(self, x, y)
    }
}

impl<S: Scalar> SpmvKernel for SellMatrix<S> {
    fn n_rows(&self) -> usize {
        SellMatrix::n_rows(self)
    }
    fn n_cols(&self) -> usize {
        SellMatrix::n_cols(self)
    }
    fn nnz_real(&self) -> usize {
        self.nnz()
    }
    fn matrix_bytes(&self) -> usize {
        self.bytes()
    }
    fn spmv_into<T: Scalar>(&self, x: &[T], y: &mut [T]) -> Result<()> {
        SellMatrix::spmv_into(self, x, y)
    }
}

impl SpmvKernel for PackSellMatrix {
    fn n_rows(&self) -> usize {
        PackSellMatrix::n_rows(self)
    }
    fn n_cols(&self) -> usize {
        PackSellMatrix::n_cols(self)
    }
    fn nnz_real(&self) -> usize {
        self.nnz()
    }
    fn matrix_bytes(&self) -> usize {
        self.bytes()
    }
    fn spmv_into<T: Scalar>(&self, x: &[T], y: &mut [T]) -> Result<()> {
        PackSellMatrix::spmv_into(self, x, y)
    }
}
