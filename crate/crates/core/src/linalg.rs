//! Small dense complex matrices.

use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

pub type Complex = Complex64;

pub fn c(re: f64, im: f64) -> Complex {
    Complex::new(re, im)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: {op} of {left:?} and {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("matrix of shape {0:?} is not square")]
    NotSquare((usize, usize)),
    #[error("matrix shape must be at least 1x1 with rows*cols entries")]
    BadShape,
    #[error("non-finite matrix entry")]
    NonFinite,
    #[error("tolerance must be a non-negative finite number, got {0}")]
    BadTolerance(f64),
}

/// Absolute entrywise tolerance used for every coefficient comparison.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Tolerance(f64);

impl Tolerance {
    pub const DEFAULT: Tolerance = Tolerance(1e-9);

    pub fn new(eps: f64) -> Result<Self, LinalgError> {
        if eps.is_finite() && eps >= 0.0 {
            Ok(Tolerance(eps))
        } else {
            Err(LinalgError::BadTolerance(eps))
        }
    }

    pub fn eps(self) -> f64 {
        self.0
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// Row-major dense complex matrix. A 1x1 matrix doubles as a scalar.
#[derive(Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<Complex>,
}

impl Mat {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex>) -> Result<Self, LinalgError> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(LinalgError::BadShape);
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        Ok(Mat { rows, cols, data })
    }

    /// Builds from nested rows; panics on ragged input. Meant for literals.
    pub fn from_rows(rows: &[Vec<Complex>]) -> Self {
        let r = rows.len();
        let k = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == k), "ragged rows");
        Mat::new(r, k, rows.concat()).expect("valid literal matrix")
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let rows: Vec<Vec<Complex>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| c(x, 0.0)).collect())
            .collect();
        Mat::from_rows(&rows)
    }

    pub fn scalar(z: Complex) -> Self {
        Mat {
            rows: 1,
            cols: 1,
            data: vec![z],
        }
    }

    pub fn column(entries: Vec<Complex>) -> Self {
        let n = entries.len();
        Mat::new(n, 1, entries).expect("non-empty finite column")
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0);
        Mat {
            rows,
            cols,
            data: vec![Complex::default(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = c(1.0, 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, r: usize, k: usize) -> Complex {
        self.data[r * self.cols + k]
    }

    pub fn set(&mut self, r: usize, k: usize, z: Complex) {
        self.data[r * self.cols + k] = z;
    }

    pub fn entries(&self) -> &[Complex] {
        &self.data
    }

    /// The single entry of a 1x1 matrix.
    pub fn as_scalar(&self) -> Option<Complex> {
        (self.rows == 1 && self.cols == 1).then(|| self.data[0])
    }

    fn mismatch(&self, op: &'static str, other: &Mat) -> LinalgError {
        LinalgError::DimensionMismatch {
            op,
            left: self.shape(),
            right: other.shape(),
        }
    }

    pub fn add(&self, other: &Mat) -> Result<Mat, LinalgError> {
        if self.shape() != other.shape() {
            return Err(self.mismatch("add", other));
        }
        Ok(Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Mat) -> Result<Mat, LinalgError> {
        if self.shape() != other.shape() {
            return Err(self.mismatch("sub", other));
        }
        Ok(Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn mul(&self, other: &Mat) -> Result<Mat, LinalgError> {
        if self.cols != other.rows {
            return Err(self.mismatch("mul", other));
        }
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self.data[i * self.cols + l];
                if a == Complex::default() {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.data[l * other.cols + j];
                }
            }
        }
        Ok(out)
    }

    pub fn scale(&self, z: Complex) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * z).collect(),
        }
    }

    /// Kronecker product; `self` indexes the high-order part.
    pub fn kron(&self, other: &Mat) -> Mat {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut out = Mat::zeros(rows, cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.get(i, j);
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out.data[(i * other.rows + k) * cols + j * other.cols + l] = a * other.get(k, l);
                    }
                }
            }
        }
        out
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Mat {
        let mut out = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.get(i, j).conj();
            }
        }
        out
    }

    /// Largest entrywise modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Sum of squared entry moduli.
    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_diff(&self, other: &Mat) -> Result<f64, LinalgError> {
        if self.shape() != other.shape() {
            return Err(self.mismatch("compare", other));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn is_zero(&self, tol: Tolerance) -> bool {
        self.max_abs() <= tol.eps()
    }
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Mat{}x{}[", self.rows, self.cols)?;
        for r in 0..self.rows {
            if r > 0 {
                write!(f, "; ")?;
            }
            for k in 0..self.cols {
                if k > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.get(r, k))?;
            }
        }
        write!(f, "]")
    }
}

/// True iff the largest entrywise modulus difference is at most `eps`.
pub fn approx_eq(a: &Mat, b: &Mat, tol: Tolerance) -> Result<bool, LinalgError> {
    Ok(a.max_diff(b)? <= tol.eps())
}

pub fn is_unitary(a: &Mat, tol: Tolerance) -> Result<bool, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare(a.shape()));
    }
    let prod = a.dagger().mul(a)?;
    approx_eq(&prod, &Mat::identity(a.rows), tol)
}

/// Coarse grid cell used to bucket coefficients before pairwise confirmation.
///
/// Cells are `CELL_FACTOR * eps` wide and shifted by a fixed fraction of a cell
/// so that common exact values (0, ±1, ±1/√2 ...) sit far from cell edges.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CoefKey {
    shape: (usize, usize),
    cells: Vec<i64>,
}

const CELL_FACTOR: f64 = 4096.0;
const CELL_SHIFT: f64 = 0.381_966_011_250_105;

fn cell_width(tol: Tolerance) -> f64 {
    // a zero tolerance still needs a finite grid
    (tol.eps() * CELL_FACTOR).max(f64::MIN_POSITIVE * CELL_FACTOR * 1e10)
}

fn components(a: &Mat) -> impl Iterator<Item = f64> + '_ {
    a.data.iter().flat_map(|z| [z.re, z.im])
}

fn cell_of(x: f64, w: f64) -> i64 {
    (x / w + CELL_SHIFT).floor() as i64
}

pub fn canonical_key(a: &Mat, tol: Tolerance) -> CoefKey {
    let w = cell_width(tol);
    CoefKey {
        shape: a.shape(),
        cells: components(a).map(|x| cell_of(x, w)).collect(),
    }
}

/// Keys of every cell a matrix within `eps` of `a` could fall into.
///
/// Usually just `canonical_key(a)`; components closer than `eps` to a cell
/// edge contribute the neighbouring cell too. The expansion is capped, beyond
/// which only the primary key is returned.
pub fn neighbour_keys(a: &Mat, tol: Tolerance) -> Vec<CoefKey> {
    let w = cell_width(tol);
    let eps = tol.eps();
    let mut keys = vec![Vec::with_capacity(a.data.len() * 2)];
    for x in components(a) {
        let k = cell_of(x, w);
        let lo = cell_of(x - eps, w);
        let hi = cell_of(x + eps, w);
        let alt = if lo != k { Some(lo) } else if hi != k { Some(hi) } else { None };
        match alt {
            Some(alt) if keys.len() < 64 => {
                let mut extra = keys.clone();
                for key in &mut keys {
                    key.push(k);
                }
                for key in &mut extra {
                    key.push(alt);
                }
                keys.extend(extra);
            }
            _ => {
                for key in &mut keys {
                    key.push(k);
                }
            }
        }
    }
    keys.into_iter()
        .map(|cells| CoefKey {
            shape: a.shape(),
            cells,
        })
        .collect()
}

/// Groups matrices into clusters: connected components of the relation
/// `approx_eq` among key-bucketed candidates. Returns, for each input, the
/// index of its cluster; clusters are numbered in order of first appearance.
pub fn cluster(mats: &[&Mat], tol: Tolerance) -> Vec<usize> {
    use std::collections::HashMap;
    let n = mats.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    let mut buckets: HashMap<CoefKey, Vec<usize>> = HashMap::new();
    for (i, m) in mats.iter().enumerate() {
        buckets.entry(canonical_key(m, tol)).or_default().push(i);
    }
    for (i, m) in mats.iter().enumerate() {
        for key in neighbour_keys(m, tol) {
            let Some(members) = buckets.get(&key) else { continue };
            for &j in members {
                if j >= i {
                    continue;
                }
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri == rj {
                    continue;
                }
                if mats[i].shape() == mats[j].shape()
                    && mats[i].max_diff(mats[j]).is_ok_and(|d| d <= tol.eps())
                {
                    let (lo, hi) = if ri < rj { (ri, rj) } else { (rj, ri) };
                    parent[hi] = lo;
                }
            }
        }
    }
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let r = find(&mut parent, i);
        if label[r] == usize::MAX {
            label[r] = next;
            next += 1;
        }
        out.push(label[r]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn hadamard() -> Mat {
        Mat::from_real_rows(&[&[FRAC_1_SQRT_2, FRAC_1_SQRT_2], &[FRAC_1_SQRT_2, -FRAC_1_SQRT_2]])
    }

    fn rtheta(t: f64) -> Mat {
        Mat::from_rows(&[
            vec![c(0.0, t.cos()), c(t.sin(), 0.0)],
            vec![c(t.sin(), 0.0), c(0.0, t.cos())],
        ])
    }

    #[test]
    fn basic_ops() {
        let tol = Tolerance::DEFAULT;
        let h = hadamard();
        assert!(approx_eq(&h.mul(&h).unwrap(), &Mat::identity(2), tol).unwrap());
        let x = Mat::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert_eq!(Mat::identity(2).kron(&x).shape(), (4, 4));
        let r = rtheta(0.3);
        // R^dagger R computed entrywise: |i cos|^2 + sin^2 = 1 on the diagonal,
        // (-i cos) sin + sin (i cos) = 0 off it
        assert!(approx_eq(&r.dagger().mul(&r).unwrap(), &Mat::identity(2), tol).unwrap());
        assert!(matches!(
            h.add(&Mat::identity(4)),
            Err(LinalgError::DimensionMismatch { .. })
        ));
        assert!(h.mul(&Mat::zeros(3, 1)).is_err());
    }

    #[test]
    fn approx_and_unitary() {
        let tol = Tolerance::DEFAULT;
        let h = hadamard();
        assert!(approx_eq(&h, &h, tol).unwrap());
        assert!(is_unitary(&h, tol).unwrap());
        assert!(!is_unitary(&Mat::from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]), tol).unwrap());
        let sqrt_not = Mat::from_rows(&[
            vec![c(0.5, 0.5), c(0.5, -0.5)],
            vec![c(0.5, -0.5), c(0.5, 0.5)],
        ]);
        assert!(is_unitary(&sqrt_not, tol).unwrap());
        assert!(matches!(
            is_unitary(&Mat::zeros(2, 1), tol),
            Err(LinalgError::NotSquare(_))
        ));
        assert!(approx_eq(&h, &Mat::identity(4), tol).is_err());
    }

    #[test]
    fn deutsch_at_half_pi_is_toffoli() {
        let tol = Tolerance::DEFAULT;
        let mut d = Mat::identity(8);
        let r = rtheta(std::f64::consts::FRAC_PI_2);
        for i in 0..2 {
            for j in 0..2 {
                d.set(6 + i, 6 + j, r.get(i, j));
            }
        }
        let mut toffoli = Mat::identity(8);
        toffoli.set(6, 6, c(0.0, 0.0));
        toffoli.set(7, 7, c(0.0, 0.0));
        toffoli.set(6, 7, c(1.0, 0.0));
        toffoli.set(7, 6, c(1.0, 0.0));
        assert!(approx_eq(&d, &toffoli, tol).unwrap());
    }

    #[test]
    fn keys() {
        let tol = Tolerance::DEFAULT;
        let a = Mat::scalar(c(FRAC_1_SQRT_2, 0.0));
        let b = Mat::scalar(c(FRAC_1_SQRT_2 + 1e-12, 0.0));
        assert_eq!(canonical_key(&a, tol), canonical_key(&b, tol));
        let neg = Mat::scalar(c(-FRAC_1_SQRT_2, 0.0));
        assert_ne!(canonical_key(&a, tol), canonical_key(&neg, tol));
    }

    #[test]
    fn cluster_merges_only_close_values() {
        let tol = Tolerance::DEFAULT;
        let a = Mat::scalar(c(0.5, 0.0));
        let b = Mat::scalar(c(0.5 + 1e-10, 0.0));
        let d = Mat::scalar(c(0.5 + 1e-6, 0.0));
        assert_eq!(cluster(&[&a, &d, &b], tol), vec![0, 1, 0]);
    }

    #[test]
    fn construction_checks() {
        assert_eq!(Mat::new(0, 1, vec![]), Err(LinalgError::BadShape));
        assert_eq!(Mat::new(1, 2, vec![c(1.0, 0.0)]), Err(LinalgError::BadShape));
        assert_eq!(
            Mat::new(1, 1, vec![c(f64::NAN, 0.0)]),
            Err(LinalgError::NonFinite)
        );
        assert!(Tolerance::new(-1.0).is_err());
    }
}
