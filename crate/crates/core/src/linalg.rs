//! Dense lower-triangular kernels used by the GP.

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = f(i, j);
            }
        }
        m
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn add_diagonal(&mut self, v: f64) {
        for i in 0..self.n {
            self.data[i * self.n + i] += v;
        }
    }
}

/// Cholesky factor `L` with `A = L Lᵀ`, or `None` when `A` is not
/// numerically positive definite.
pub fn cholesky(a: &SquareMatrix) -> Option<SquareMatrix> {
    let n = a.size();
    let mut l = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            let (ri, rj) = (&l.data[i * n..i * n + j], &l.data[j * n..j * n + j]);
            let dot: f64 = ri.iter().zip(rj).map(|(a, b)| a * b).sum();
            let s = a.get(i, j) - dot;
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return None;
                }
                l.data[i * n + i] = s.sqrt();
            } else {
                l.data[i * n + j] = s / l.data[j * n + j];
            }
        }
    }
    Some(l)
}

/// Solves `L x = b` for lower-triangular `L`.
pub fn solve_lower(l: &SquareMatrix, b: &[f64]) -> Vec<f64> {
    let n = l.size();
    let mut x = vec![0.0; n];
    for i in 0..n {
        let row = l.row(i);
        let dot: f64 = row[..i].iter().zip(&x[..i]).map(|(a, b)| a * b).sum();
        x[i] = (b[i] - dot) / row[i];
    }
    x
}

/// Solves `Lᵀ x = b` for lower-triangular `L`.
pub fn solve_upper_transposed(l: &SquareMatrix, b: &[f64]) -> Vec<f64> {
    let n = l.size();
    let mut x = b.to_vec();
    for i in (0..n).rev() {
        x[i] /= l.get(i, i);
        let xi = x[i];
        for k in 0..i {
            x[k] -= l.get(i, k) * xi;
        }
    }
    x
}
