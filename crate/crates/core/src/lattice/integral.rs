//! Exact integral lattices: pairing, determinant, signature, kernels.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{HodgeError, Result};

/// Symmetric non-degenerate integer Gram matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<i64>>", into = "Vec<Vec<i64>>")]
pub struct IntegralLattice {
    gram: Vec<Vec<i64>>,
}

impl TryFrom<Vec<Vec<i64>>> for IntegralLattice {
    type Error = HodgeError;

    fn try_from(gram: Vec<Vec<i64>>) -> Result<Self> {
        Self::new(gram)
    }
}

impl From<IntegralLattice> for Vec<Vec<i64>> {
    fn from(l: IntegralLattice) -> Self {
        l.gram
    }
}

const E8: [[i64; 8]; 8] = [
    [2, -1, 0, 0, 0, 0, 0, 0],
    [-1, 2, -1, 0, 0, 0, 0, 0],
    [0, -1, 2, -1, 0, 0, 0, -1],
    [0, 0, -1, 2, -1, 0, 0, 0],
    [0, 0, 0, -1, 2, -1, 0, 0],
    [0, 0, 0, 0, -1, 2, -1, 0],
    [0, 0, 0, 0, 0, -1, 2, 0],
    [0, 0, -1, 0, 0, 0, 0, 2],
];

impl IntegralLattice {
    pub fn new(gram: Vec<Vec<i64>>) -> Result<Self> {
        let n = gram.len();
        if n == 0 || gram.iter().any(|r| r.len() != n) {
            return Err(HodgeError::dim("Gram matrix must be square and non-empty"));
        }
        for i in 0..n {
            for j in 0..i {
                if gram[i][j] != gram[j][i] {
                    return Err(HodgeError::invalid(format!("Gram matrix not symmetric at ({i},{j})")));
                }
            }
        }
        let l = Self { gram };
        if l.determinant()? == 0 {
            return Err(HodgeError::invalid("Gram matrix is degenerate"));
        }
        Ok(l)
    }

    pub fn diagonal(entries: &[i64]) -> Result<Self> {
        let n = entries.len();
        Self::new((0..n).map(|i| (0..n).map(|j| if i == j { entries[i] } else { 0 }).collect()).collect())
    }

    /// Orthogonal direct sum.
    pub fn direct_sum(&self, other: &Self) -> Self {
        let (a, b) = (self.rank(), other.rank());
        let mut g = vec![vec![0; a + b]; a + b];
        for i in 0..a {
            g[i][..a].copy_from_slice(&self.gram[i]);
        }
        for i in 0..b {
            g[a + i][a..].copy_from_slice(&other.gram[i]);
        }
        Self { gram: g }
    }

    fn scaled(&self, k: i64) -> Self {
        Self { gram: self.gram.iter().map(|r| r.iter().map(|x| k * x).collect()).collect() }
    }

    /// The hyperbolic plane `U`.
    pub fn hyperbolic_u() -> Self {
        Self { gram: vec![vec![0, 1], vec![1, 0]] }
    }

    pub fn e8() -> Self {
        Self { gram: E8.iter().map(|r| r.to_vec()).collect() }
    }

    /// `U³ ⊕ E₈(−1)²`, the K3 lattice.
    pub fn k3() -> Self {
        let u = Self::hyperbolic_u();
        let e = Self::e8().scaled(-1);
        u.direct_sum(&u).direct_sum(&u).direct_sum(&e).direct_sum(&e)
    }

    /// Mukai lattice `(r, ξ, a)` over `⟨2⟩`.
    pub fn toy_rank3() -> Self {
        Self { gram: vec![vec![0, 0, -1], vec![0, 2, 0], vec![-1, 0, 0]] }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "k3_full" => Ok(Self::k3()),
            "hyperbolic_U" => Ok(Self::hyperbolic_u()),
            "toy_rank3" => Ok(Self::toy_rank3()),
            _ => Err(HodgeError::invalid(format!(
                "unknown lattice preset {name:?}; valid presets: k3_full, hyperbolic_U, toy_rank3"
            ))),
        }
    }

    pub fn rank(&self) -> usize {
        self.gram.len()
    }

    pub fn gram(&self) -> &[Vec<i64>] {
        &self.gram
    }

    /// `xᵀ G y`, exact.
    pub fn pair(&self, x: &[i64], y: &[i64]) -> Result<i64> {
        let n = self.rank();
        if x.len() != n || y.len() != n {
            return Err(HodgeError::dim(format!("vectors must have length {n}")));
        }
        let mut s: i128 = 0;
        for i in 0..n {
            for j in 0..n {
                s += x[i] as i128 * self.gram[i][j] as i128 * y[j] as i128;
            }
        }
        i64::try_from(s).map_err(|_| HodgeError::invalid("lattice pairing overflows i64"))
    }

    /// `G·x`, the coefficients of the linear form `(x, ·)`.
    pub fn form_of(&self, x: &[i64]) -> Result<Vec<i64>> {
        if x.len() != self.rank() {
            return Err(HodgeError::dim(format!("vector must have length {}", self.rank())));
        }
        self.gram
            .iter()
            .map(|r| {
                let s: i128 = r.iter().zip(x).map(|(a, b)| *a as i128 * *b as i128).sum();
                i64::try_from(s).map_err(|_| HodgeError::invalid("overflow"))
            })
            .collect()
    }

    /// Bareiss fraction-free elimination.
    pub fn determinant(&self) -> Result<i64> {
        let n = self.rank();
        let mut m: Vec<Vec<i128>> = self.gram.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
        let mut sign = 1i128;
        let mut prev = 1i128;
        for k in 0..n {
            if m[k][k] == 0 {
                let Some(p) = (k + 1..n).find(|&i| m[i][k] != 0) else { return Ok(0) };
                m.swap(k, p);
                sign = -sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
                }
            }
            prev = m[k][k];
        }
        i64::try_from(sign * m[n - 1][n - 1]).map_err(|_| HodgeError::invalid("determinant overflows i64"))
    }

    /// `(n₊, n₋)` by rational congruence diagonalization.
    pub fn signature(&self) -> (usize, usize) {
        let n = self.rank();
        let mut m: Vec<Vec<Ratio<i128>>> =
            self.gram.iter().map(|r| r.iter().map(|&x| Ratio::from_integer(x as i128)).collect()).collect();
        let zero = Ratio::from_integer(0);
        let (mut pos, mut neg) = (0, 0);
        for k in 0..n {
            if m[k][k] == zero {
                if let Some(p) = (k + 1..n).find(|&i| m[i][i] != zero) {
                    // swap basis vectors k and p
                    m.swap(k, p);
                    for row in m.iter_mut() {
                        row.swap(k, p);
                    }
                } else if let Some(p) = (k + 1..n).find(|&i| m[k][i] != zero) {
                    // e_k ← e_k + e_p makes the diagonal 2·m[k][p] + m[p][p] ≠ 0
                    for j in 0..n {
                        let v = m[p][j];
                        m[k][j] += v;
                    }
                    for row in m.iter_mut() {
                        let v = row[p];
                        row[k] += v;
                    }
                } else {
                    continue;
                }
            }
            let pivot = m[k][k];
            for i in k + 1..n {
                let f = m[i][k] / pivot;
                for j in k..n {
                    let v = m[k][j];
                    m[i][j] -= f * v;
                }
                for r in 0..n {
                    let v = m[r][k];
                    m[r][i] -= f * v;
                }
            }
            if pivot > zero {
                pos += 1;
            } else {
                neg += 1;
            }
        }
        (pos, neg)
    }
}

/// Row Hermite normal form of an integer matrix (zero rows dropped): pivots
/// positive, entries above each pivot reduced into `[0, pivot)`.
pub fn hermite_rows(rows: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let mut m: Vec<Vec<i128>> = rows.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    let ncols = m.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..ncols {
        if r == m.len() {
            break;
        }
        // Euclid down the column
        loop {
            let Some(p) = (r..m.len()).filter(|&i| m[i][c] != 0).min_by_key(|&i| m[i][c].abs()) else { break };
            m.swap(r, p);
            let mut done = true;
            for i in r + 1..m.len() {
                let q = m[i][c].div_euclid(m[r][c]);
                if q != 0 {
                    for j in 0..ncols {
                        let v = m[r][j];
                        m[i][j] -= q * v;
                    }
                }
                if m[i][c] != 0 {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
        if m[r][c] == 0 {
            continue;
        }
        if m[r][c] < 0 {
            m[r].iter_mut().for_each(|x| *x = -*x);
        }
        for i in 0..r {
            let q = m[i][c].div_euclid(m[r][c]);
            for j in 0..ncols {
                let v = m[r][j];
                m[i][j] -= q * v;
            }
        }
        r += 1;
    }
    m.truncate(r);
    m.into_iter().map(|row| row.into_iter().map(|x| x as i64).collect()).collect()
}

/// Basis of `{x ∈ ℤⁿ : c·x = 0}` by unimodular column reduction of `c`.
pub fn integer_kernel(c: &[i64]) -> Vec<Vec<i64>> {
    let n = c.len();
    let mut row: Vec<i128> = c.iter().map(|&x| x as i128).collect();
    let mut u: Vec<Vec<i128>> = (0..n).map(|i| (0..n).map(|j| (i == j) as i128).collect()).collect();
    // columns of u track the operations; reduce row to (g, 0, …, 0)
    loop {
        let Some(p) = (0..n).filter(|&j| row[j] != 0).min_by_key(|&j| row[j].abs()) else { break };
        let mut done = true;
        for j in 0..n {
            if j != p && row[j] != 0 {
                let q = row[j].div_euclid(row[p]);
                row[j] -= q * row[p];
                for r in u.iter_mut() {
                    let v = r[p];
                    r[j] -= q * v;
                }
                if row[j] != 0 {
                    done = false;
                }
            }
        }
        if done {
            let kernel: Vec<Vec<i64>> =
                (0..n).filter(|&j| j != p).map(|j| (0..n).map(|i| u[i][j] as i64).collect()).collect();
            return hermite_rows(&kernel);
        }
    }
    // zero form: everything is in the kernel
    (0..n).map(|i| (0..n).map(|j| (i == j) as i64).collect()).collect()
}
