use super::Error;

/// Dense square matrix of reals, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix {
            n,
            entries: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, Error> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::InvalidArgument(format!(
                    "matrix must be square: {} rows but a row of length {}",
                    n,
                    row.len()
                )));
            }
            entries.extend_from_slice(row);
        }
        if entries.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidArgument(
                "matrix entries must be finite".into(),
            ));
        }
        Ok(DenseMatrix { n, entries })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.entries[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.n, |i, j| self.get(j, i))
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn mat_mul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = DenseMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.entries[i * n + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum())
            .fold(0.0, f64::max)
    }
}

/// LU factorization with partial pivoting. A pivot below
/// `1e-14 * inf_norm` of the input is treated as numerically singular.
pub struct LuFactors {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
    swaps: usize,
    source_norm: f64,
}

impl LuFactors {
    pub fn factor(m: &DenseMatrix) -> Result<Self, Error> {
        let n = m.dim();
        let norm = m.inf_norm();
        let threshold = 1e-14 * norm;
        let mut lu = m.entries.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut swaps = 0;
        for col in 0..n {
            let mut pivot_row = col;
            let mut pivot_val = lu[col * n + col].abs();
            for r in col + 1..n {
                let v = lu[r * n + col].abs();
                if v > pivot_val {
                    pivot_val = v;
                    pivot_row = r;
                }
            }
            if pivot_val <= threshold {
                return Err(Error::SingularMatrix {
                    pivot: pivot_val,
                    threshold,
                });
            }
            if pivot_row != col {
                for k in 0..n {
                    lu.swap(col * n + k, pivot_row * n + k);
                }
                perm.swap(col, pivot_row);
                swaps += 1;
            }
            let diag = lu[col * n + col];
            for r in col + 1..n {
                let factor = lu[r * n + col] / diag;
                lu[r * n + col] = factor;
                for k in col + 1..n {
                    lu[r * n + k] -= factor * lu[col * n + k];
                }
            }
        }
        Ok(LuFactors {
            n,
            lu,
            perm,
            swaps,
            source_norm: norm,
        })
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            for k in 0..i {
                x[i] -= self.lu[i * n + k] * x[k];
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                x[i] -= self.lu[i * n + k] * x[k];
            }
            x[i] /= self.lu[i * n + i];
        }
        x
    }

    /// Solves `A' y = b` with the transpose of the factored matrix.
    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        // A = P' L U  =>  A' = U' L' P
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                y[i] -= self.lu[k * n + i] * y[k];
            }
            y[i] /= self.lu[i * n + i];
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                y[i] -= self.lu[k * n + i] * y[k];
            }
        }
        let mut out = vec![0.0; n];
        for (i, &p) in self.perm.iter().enumerate() {
            out[p] = y[i];
        }
        out
    }

    pub fn det(&self) -> f64 {
        let sign = if self.swaps % 2 == 0 { 1.0 } else { -1.0 };
        sign * (0..self.n).map(|i| self.lu[i * self.n + i]).product::<f64>()
    }

    /// Infinity-norm condition estimate via Hager's method applied to the
    /// inverse transpose (so that the 1-norm estimate yields the inf-norm
    /// of the inverse).
    pub fn condition_inf_estimate(&self) -> f64 {
        if self.n == 0 {
            return 1.0;
        }
        let n = self.n;
        let mut x = vec![1.0 / n as f64; n];
        let mut estimate = 0.0_f64;
        for _ in 0..5 {
            let y = self.solve_transpose(&x);
            let norm1: f64 = y.iter().map(|v| v.abs()).sum();
            estimate = estimate.max(norm1);
            let xi: Vec<f64> = y.iter().map(|v| if *v >= 0.0 { 1.0 } else { -1.0 }).collect();
            let z = self.solve(&xi);
            let (mut best, mut best_j) = (0.0, 0);
            for (j, v) in z.iter().enumerate() {
                if v.abs() > best {
                    best = v.abs();
                    best_j = j;
                }
            }
            let zx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
            if best <= zx {
                break;
            }
            x = vec![0.0; n];
            x[best_j] = 1.0;
        }
        self.source_norm * estimate
    }
}

/// Solves the dense linear system `M x = rhs`.
pub fn solve_dense(m: &DenseMatrix, rhs: &[f64]) -> Result<Vec<f64>, Error> {
    if rhs.len() != m.dim() {
        return Err(Error::InvalidArgument(format!(
            "rhs length {} does not match matrix dimension {}",
            rhs.len(),
            m.dim()
        )));
    }
    Ok(LuFactors::factor(m)?.solve(rhs))
}
