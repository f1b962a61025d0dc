//! Hankel lifting of sample vectors and its left inverses.
//!
//! `lift` places `v[p + q]` at row `p`, column `q`. Two ways back exist:
//! `unlift_pick` reads the first column and the last row, which inverts the
//! lift only on exact Hankel input; `unlift_average` takes anti-diagonal means,
//! which is the least-squares inverse for arbitrary matrices.

use faer::Mat;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ComplexMatrix = Mat<Complex64>;

/// Lifting geometry: an `rows x cols` Hankel matrix holds `rows + cols - 1`
/// samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawShape")]
pub struct HankelShape {
    rows: usize,
    cols: usize,
}

#[derive(Deserialize)]
struct RawShape {
    rows: usize,
    cols: usize,
}

impl TryFrom<RawShape> for HankelShape {
    type Error = Error;

    fn try_from(raw: RawShape) -> Result<Self> {
        Self::new(raw.rows, raw.cols)
    }
}

impl HankelShape {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows < 2 || cols < 2 {
            return Err(Error::InvalidParameter(format!(
                "Hankel shape needs at least 2 rows and 2 columns, got {rows}x{cols}"
            )));
        }
        Ok(Self { rows, cols })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Number of samples the shape lifts.
    pub fn len(&self) -> usize {
        self.rows + self.cols - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Near-square shape for `n_samples`: `cols = floor(N/2) + 1`, `rows = N - cols + 1`.
pub fn default_shape(n_samples: usize) -> Result<HankelShape> {
    let cols = n_samples / 2 + 1;
    let rows = (n_samples + 1).saturating_sub(cols);
    HankelShape::new(rows, cols)
}

/// How a non-Hankel matrix is mapped back to a sample vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnliftMode {
    /// First column, then the last row without its first entry.
    #[default]
    Pick,
    /// Mean over each anti-diagonal.
    Average,
}

impl std::str::FromStr for UnliftMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pick" => Ok(Self::Pick),
            "average" => Ok(Self::Average),
            other => Err(Error::InvalidParameter(format!("unknown unlift mode {other:?}"))),
        }
    }
}

pub fn lift(v: &[Complex64], shape: HankelShape) -> Result<ComplexMatrix> {
    if v.len() != shape.len() {
        return Err(Error::LengthMismatch {
            expected: shape.len(),
            got: v.len(),
        });
    }
    Ok(Mat::from_fn(shape.rows, shape.cols, |p, q| v[p + q]))
}

pub fn unlift_pick(m: &ComplexMatrix) -> Vec<Complex64> {
    let (rows, cols) = (m.nrows(), m.ncols());
    let mut out = Vec::with_capacity(rows + cols - 1);
    out.extend_from_slice(m.col_as_slice(0));
    out.extend((1..cols).map(|q| m[(rows - 1, q)]));
    out
}

/// Anti-diagonal sums; the adjoint of `lift` under the Frobenius inner product.
pub fn adjoint(m: &ComplexMatrix) -> Vec<Complex64> {
    let (rows, cols) = (m.nrows(), m.ncols());
    let mut out = vec![Complex64::new(0.0, 0.0); rows + cols - 1];
    for q in 0..cols {
        for (p, z) in m.col_as_slice(q).iter().enumerate() {
            out[p + q] += z;
        }
    }
    out
}

/// Number of entries on anti-diagonal `k` of a `rows x cols` matrix.
pub fn anti_diagonal_len(k: usize, rows: usize, cols: usize) -> usize {
    let last = rows + cols - 2;
    k.min(last - k).min(rows - 1).min(cols - 1) + 1
}

/// Anti-diagonal means, accumulated as offsets from the first entry so that
/// constant anti-diagonals come back exactly.
pub fn unlift_average(m: &ComplexMatrix) -> Vec<Complex64> {
    let (rows, cols) = (m.nrows(), m.ncols());
    let first: Vec<Complex64> = (0..rows + cols - 1)
        .map(|k| if k < rows { m[(k, 0)] } else { m[(rows - 1, k + 1 - rows)] })
        .collect();
    let mut offsets = vec![Complex64::new(0.0, 0.0); first.len()];
    for q in 0..cols {
        for (p, z) in m.col_as_slice(q).iter().enumerate() {
            offsets[p + q] += z - first[p + q];
        }
    }
    first
        .iter()
        .zip(offsets)
        .enumerate()
        .map(|(k, (f, d))| f + d / anti_diagonal_len(k, rows, cols) as f64)
        .collect()
}

pub fn unlift(m: &ComplexMatrix, mode: UnliftMode) -> Vec<Complex64> {
    match mode {
        UnliftMode::Pick => unlift_pick(m),
        UnliftMode::Average => unlift_average(m),
    }
}

/// Largest singular value by power iteration on `MᴴM`.
pub fn spectral_norm(m: &ComplexMatrix) -> f64 {
    let cols = m.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v = Mat::<Complex64>::from_fn(cols, 1, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        Complex64::new(re, im)
    });
    let mut estimate = 0.0;
    for _ in 0..1000 {
        let v_norm = v.norm_l2();
        if v_norm == 0.0 {
            return 0.0;
        }
        v = v * faer::Scale(Complex64::new(1.0 / v_norm, 0.0));
        let mv = m * &v;
        let next = mv.norm_l2();
        v = m.adjoint() * &mv;
        if (next - estimate).abs() <= 1e-13 * next {
            return next;
        }
        estimate = next;
    }
    estimate
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn real_matrix(rows: &[&[f64]]) -> ComplexMatrix {
        Mat::from_fn(rows.len(), rows[0].len(), |i, j| c(rows[i][j]))
    }

    fn assert_vec(got: &[Complex64], want: &[f64]) {
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(want) {
            assert!((g - c(*w)).norm() < 1e-14, "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn lift_examples() {
        let m = lift(&[c(1.), c(2.), c(3.)], HankelShape::new(2, 2).unwrap()).unwrap();
        assert_eq!(m, real_matrix(&[&[1., 2.], &[2., 3.]]));
        let v: Vec<_> = (1..=5).map(|k| c(k as f64)).collect();
        let m = lift(&v, HankelShape::new(3, 3).unwrap()).unwrap();
        assert_eq!(m, real_matrix(&[&[1., 2., 3.], &[2., 3., 4.], &[3., 4., 5.]]));
        let m = lift(&[c(0.); 4], HankelShape::new(2, 3).unwrap()).unwrap();
        assert_eq!(m.norm_l2(), 0.0);
    }

    #[test]
    fn lift_rejects_wrong_length() {
        let err = lift(&[c(1.); 4], HankelShape::new(2, 2).unwrap());
        assert!(matches!(err, Err(Error::LengthMismatch { expected: 3, got: 4 })));
    }

    #[test]
    fn pick_examples() {
        assert_vec(&unlift_pick(&real_matrix(&[&[1., 2.], &[2., 3.]])), &[1., 2., 3.]);
        assert_vec(&unlift_pick(&real_matrix(&[&[1., 2.], &[4., 8.]])), &[1., 4., 8.]);
        assert_vec(&unlift_pick(&Mat::zeros(2, 3)), &[0.; 4]);
    }

    #[test]
    fn average_examples() {
        assert_vec(&unlift_average(&real_matrix(&[&[1., 2.], &[2., 3.]])), &[1., 2., 3.]);
        assert_vec(&unlift_average(&real_matrix(&[&[1., 2.], &[4., 8.]])), &[1., 3., 8.]);
        assert_vec(&unlift_average(&real_matrix(&[&[5.]])), &[5.]);
    }

    #[test]
    fn adjoint_examples() {
        assert_vec(&adjoint(&real_matrix(&[&[1., 2.], &[4., 8.]])), &[1., 6., 8.]);
        let ones = lift(&[c(1.); 3], HankelShape::new(2, 2).unwrap()).unwrap();
        assert_vec(&adjoint(&ones), &[1., 2., 1.]);
        assert_vec(&adjoint(&Mat::zeros(3, 2)), &[0.; 4]);
    }

    #[test]
    fn default_shape_examples() {
        let s = default_shape(5).unwrap();
        assert_eq!((s.rows(), s.cols()), (3, 3));
        let s = default_shape(4800).unwrap();
        assert_eq!((s.rows(), s.cols()), (2400, 2401));
        let s = default_shape(4).unwrap();
        assert_eq!((s.rows(), s.cols()), (2, 3));
        assert!(default_shape(2).is_err());
    }

    #[test]
    fn anti_diagonal_lengths_sum_to_area() {
        for (rows, cols) in [(2, 2), (3, 5), (6, 4), (1, 1)] {
            let total: usize = (0..rows + cols - 1).map(|k| anti_diagonal_len(k, rows, cols)).sum();
            assert_eq!(total, rows * cols);
        }
    }

    #[test]
    fn spectral_norm_of_rank_one() {
        // lift of a unit-modulus exponential is rank one with σ₁ = √(mn)
        let shape = HankelShape::new(20, 31).unwrap();
        let v: Vec<_> = (0..shape.len()).map(|k| Complex64::from_polar(1.0, 0.3 * k as f64)).collect();
        let m = lift(&v, shape).unwrap();
        let want = ((20 * 31) as f64).sqrt();
        assert!((spectral_norm(&m) - want).abs() < 1e-9 * want);
    }
}
