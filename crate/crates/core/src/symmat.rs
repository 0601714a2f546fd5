//! Dense symmetric matrices stored as a packed upper triangle.
//!
//! The packed layout makes symmetry structural: entry (i, j) and (j, i)
//! read the same storage, so every constructed matrix is bit-exactly
//! symmetric. Row-major packing keeps the matvec streaming.

use crate::{Error, Result};
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: [u8; 8] = *b"SPKSYM01";
const DTYPE_F64: u8 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * (n + 1) / 2],
        }
    }

    /// Build from a function of the upper-triangle index pair (i ≤ j).
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        let mut off = 0;
        for i in 0..n {
            for j in i..n {
                m.data[off] = f(i, j);
                off += 1;
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> usize {
        debug_assert!(i <= j && j < self.n);
        i * self.n - i * (i + 1) / 2 + j
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        self.data[self.offset(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        let o = self.offset(i, j);
        self.data[o] = v;
    }

    /// Apply `f(i, j, a_ij)` over the stored upper triangle.
    pub fn map_upper(&mut self, mut f: impl FnMut(usize, usize, f64) -> f64) {
        let n = self.n;
        let mut off = 0;
        for i in 0..n {
            for j in i..n {
                self.data[off] = f(i, j, self.data[off]);
                off += 1;
            }
        }
    }

    /// y = S x.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        y.fill(0.0);
        let n = self.n;
        let mut off = 0;
        for i in 0..n {
            let row = &self.data[off..off + (n - i)];
            let xi = x[i];
            let mut acc = row[0] * xi;
            let xs = &x[i + 1..];
            let ys = &mut y[i + 1..];
            for k in 0..row.len() - 1 {
                let v = row[k + 1];
                acc += v * xs[k];
                ys[k] += v * xi;
            }
            y[i] += acc;
            off += n - i;
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        let n = self.n;
        let mut sum = 0.0;
        let mut off = 0;
        for i in 0..n {
            sum += self.data[off] * self.data[off]; // diagonal once
            for k in 1..n - i {
                sum += 2.0 * self.data[off + k] * self.data[off + k];
            }
            off += n - i;
        }
        sum.sqrt()
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// Binary dump: magic, N, dtype, packed upper triangle, little-endian.
    pub fn write_bin(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(&MAGIC)?;
        f.write_all(&(self.n as u64).to_le_bytes())?;
        f.write_all(&[DTYPE_F64])?;
        for v in &self.data {
            f.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_bin(path: impl AsRef<Path>) -> Result<Self> {
        let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut magic = [0u8; 8];
        f.read_exact(&mut magic)?;
        if magic != MAGIC {
            return Err(Error::Format("bad magic in matrix dump".into()));
        }
        let mut nb = [0u8; 8];
        f.read_exact(&mut nb)?;
        let n = u64::from_le_bytes(nb) as usize;
        let mut dt = [0u8; 1];
        f.read_exact(&mut dt)?;
        if dt[0] != DTYPE_F64 {
            return Err(Error::Format(format!("unsupported dtype {}", dt[0])));
        }
        let len = n * (n + 1) / 2;
        let mut data = vec![0.0f64; len];
        let mut buf = [0u8; 8];
        for v in &mut data {
            f.read_exact(&mut buf)?;
            *v = f64::from_le_bytes(buf);
        }
        Ok(Self { n, data })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn accessors_are_symmetric() {
        let m = SymMatrix::from_fn(5, |i, j| (i * 10 + j) as f64);
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(m.get(i, j).to_bits(), m.get(j, i).to_bits());
            }
        }
        assert_eq!(m.get(1, 3), 13.0);
        assert_eq!(m.get(3, 1), 13.0);
    }

    #[test]
    fn matvec_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 37;
        let m = SymMatrix::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut y = vec![0.0; n];
        m.matvec(&x, &mut y);
        let dense = m.to_dense();
        let yd = &dense * nalgebra::DVector::from_column_slice(&x);
        for i in 0..n {
            assert!((y[i] - yd[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn frobenius_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let m = SymMatrix::from_fn(12, |_, _| rng.random_range(-1.0..1.0));
        assert!((m.frobenius_norm() - m.to_dense().norm()).abs() < 1e-12);
    }

    #[test]
    fn binary_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = SymMatrix::from_fn(23, |_, _| rng.random::<f64>());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.spk");
        m.write_bin(&path).unwrap();
        let back = SymMatrix::read_bin(&path).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn binary_rejects_bad_magic() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.spk");
        std::fs::write(&path, b"NOTMAGIC0000000000").unwrap();
        assert!(matches!(SymMatrix::read_bin(&path), Err(Error::Format(_))));
    }
}
