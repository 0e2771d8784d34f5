//! Elementary symmetric functions of a symmetric matrix, the first Newton
//! tensor, the second-derivative form of σ₂ and Gårding-cone tests.
//!
//! σ₂ is evaluated trace-wise as ½(tr²W − tr W²); eigenvalues are only
//! extracted when a caller needs them (cone verdicts, reporting).

use crate::error::{invalid, Result, Sigma2Error};

/// Smallest supported matrix dimension.
pub const MIN_DIM: usize = 1;
/// Largest supported matrix dimension.
pub const MAX_DIM: usize = 8;
/// Default absolute cone tolerance, scaled by `1 + |σ₁|`.
pub const DEFAULT_CONE_TOL: f64 = 1e-10;

/// Dense symmetric `n × n` matrix stored row-major.
///
/// Symmetry is exact: every setter writes both `(i, j)` and `(j, i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricMatrixN {
    n: usize,
    data: Vec<f64>,
}

fn check_dim(n: usize) -> Result<()> {
    if (MIN_DIM..=MAX_DIM).contains(&n) {
        Ok(())
    } else {
        Err(Sigma2Error::Dimension {
            got: n,
            min: MIN_DIM,
            max: MAX_DIM,
        })
    }
}

impl SymmetricMatrixN {
    pub fn zeros(n: usize) -> Result<Self> {
        check_dim(n)?;
        Ok(Self {
            n,
            data: vec![0.0; n * n],
        })
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut m = Self::zeros(n)?;
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        Ok(m)
    }

    pub fn scalar(n: usize, value: f64) -> Result<Self> {
        Ok(Self::identity(n)?.scaled(value))
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        let mut m = Self::zeros(diag.len())?;
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = d;
        }
        Ok(m)
    }

    /// Builds a matrix from full rows, rejecting any entry pair that is not
    /// bitwise symmetric.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut m = Self::zeros(n)?;
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Sigma2Error::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                m.data[i * n + j] = v;
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if m.data[i * n + j] != m.data[j * n + i] {
                    return Err(Sigma2Error::NotSymmetric { row: i, col: j });
                }
            }
        }
        Ok(m)
    }

    /// Builds a matrix from a generator evaluated on the upper triangle.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut m = Self::zeros(n)?;
        for i in 0..n {
            for j in i..n {
                m.set(i, j, f(i, j));
            }
        }
        Ok(m)
    }

    /// Symmetric outer product `v ⊗ v`.
    pub fn outer(v: &[f64]) -> Result<Self> {
        Self::from_fn(v.len(), |i, j| v[i] * v[j])
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.n + j] = value;
        self.data[j * self.n + i] = value;
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Frobenius norm squared, equal to `tr(W²)` for symmetric `W`.
    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    fn zip(&self, other: &Self, op: impl Fn(f64, f64) -> f64) -> Result<Self> {
        same_dim(self, other)?;
        Ok(Self {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| op(a, b))
                .collect(),
        })
    }

    /// `tr(PQ)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> Result<f64> {
        same_dim(self, other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    /// Leading principal `m × m` block.
    pub fn leading_block(&self, m: usize) -> Result<Self> {
        if m == 0 || m > self.n {
            return Err(invalid(format!("block size {m} for dimension {}", self.n)));
        }
        Self::from_fn(m, |i, j| self.get(i, j))
    }

    /// `Qᵀ W Q` for a matrix `Q` whose columns are given as `columns`.
    pub fn congruence(&self, columns: &[Vec<f64>]) -> Result<Self> {
        let m = columns.len();
        for c in columns {
            if c.len() != self.n {
                return Err(Sigma2Error::DimensionMismatch {
                    expected: self.n,
                    got: c.len(),
                });
            }
        }
        Self::from_fn(m, |a, b| {
            let mut s = 0.0;
            for i in 0..self.n {
                for j in 0..self.n {
                    s += columns[a][i] * self.get(i, j) * columns[b][j];
                }
            }
            s
        })
    }

    /// Eigenvalues sorted in descending order (cyclic Jacobi rotations).
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut vals = jacobi_eigen(self).0;
        vals.sort_by(|a, b| b.total_cmp(a));
        vals
    }

    /// Eigenpairs sorted by descending eigenvalue; eigenvectors as columns.
    pub fn eigen(&self) -> (Vec<f64>, Vec<Vec<f64>>) {
        let (vals, vecs) = jacobi_eigen(self);
        let mut order: Vec<usize> = (0..self.n).collect();
        order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
        let sorted_vals = order.iter().map(|&k| vals[k]).collect();
        let sorted_vecs = order
            .iter()
            .map(|&k| (0..self.n).map(|i| vecs[i * self.n + k]).collect())
            .collect();
        (sorted_vals, sorted_vecs)
    }
}

fn same_dim(a: &SymmetricMatrixN, b: &SymmetricMatrixN) -> Result<()> {
    if a.n == b.n {
        Ok(())
    } else {
        Err(Sigma2Error::DimensionMismatch {
            expected: a.n,
            got: b.n,
        })
    }
}

fn jacobi_eigen(m: &SymmetricMatrixN) -> (Vec<f64>, Vec<f64>) {
    let n = m.n;
    let mut a = m.data.clone();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale = m.max_abs().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[i * n + j] * a[i * n + j];
            }
        }
        if off.sqrt() <= 1e-300_f64.max(f64::EPSILON * 1e-3 * scale) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i * n + i]).collect(), v)
}

/// σ₁(W) = tr W.
pub fn sigma1(w: &SymmetricMatrixN) -> f64 {
    w.trace()
}

/// σ₂(W) = ½(σ₁(W)² − tr W²).
pub fn sigma2(w: &SymmetricMatrixN) -> f64 {
    let s1 = w.trace();
    0.5 * (s1 * s1 - w.frobenius_sq())
}

/// σ₂ through the generalized Kronecker symbol:
/// ½ Σ_{i,j} (W_ii W_jj − W_ij W_ji).
pub fn sigma2_kronecker(w: &SymmetricMatrixN) -> f64 {
    let n = w.dim();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += w.get(i, i) * w.get(j, j) - w.get(i, j) * w.get(j, i);
        }
    }
    0.5 * s
}

/// σ₁ of a list of eigenvalues.
pub fn sigma1_of(lambda: &[f64]) -> f64 {
    lambda.iter().sum()
}

/// σ₂ of a list of eigenvalues, ½((Σλ)² − Σλ²).
pub fn sigma2_of(lambda: &[f64]) -> f64 {
    let s1: f64 = lambda.iter().sum();
    let s2: f64 = lambda.iter().map(|x| x * x).sum();
    0.5 * (s1 * s1 - s2)
}

/// σ₂ as the explicit sum of pairwise products Σ_{i<j} λᵢλⱼ.
pub fn sigma2_pairwise(lambda: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..lambda.len() {
        for j in (i + 1)..lambda.len() {
            s += lambda[i] * lambda[j];
        }
    }
    s
}

/// First Newton tensor T₁(W) = σ₁(W)·I − W.
pub fn newton_tensor_t1(w: &SymmetricMatrixN) -> SymmetricMatrixN {
    let s1 = w.trace();
    let mut t = w.scaled(-1.0);
    for i in 0..w.dim() {
        t.set(i, i, s1 - w.get(i, i));
    }
    t
}

/// Second-derivative bilinear form of σ₂: tr P · tr Q − tr(PQ).
pub fn sigma2_hessian_contract(p: &SymmetricMatrixN, q: &SymmetricMatrixN) -> Result<f64> {
    Ok(p.trace() * q.trace() - p.trace_product(q)?)
}

/// Position of an eigenvalue vector relative to a Gårding cone.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConeVerdict {
    Interior,
    Boundary,
    Outside,
}

impl ConeVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            ConeVerdict::Interior => "interior",
            ConeVerdict::Boundary => "boundary",
            ConeVerdict::Outside => "outside",
        }
    }

    /// Interior or boundary, i.e. inside the closed cone.
    pub fn is_closed_member(self) -> bool {
        self != ConeVerdict::Outside
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConeReport {
    pub k: u8,
    pub verdict: ConeVerdict,
    pub sigma1: f64,
    pub sigma2: f64,
    /// σ₁ for k = 1, min(σ₁, σ₂) for k = 2.
    pub margin: f64,
    /// Effective absolute tolerance `tol · (1 + |σ₁|)`.
    pub scaled_tol: f64,
}

/// Classifies `lambda` against Γ_k⁺ for k ∈ {1, 2}.
pub fn cone_membership(lambda: &[f64], k: u8, tol: f64) -> Result<ConeReport> {
    if !(1..=2).contains(&k) {
        return Err(invalid(format!("cone index {k} not in {{1, 2}}")));
    }
    if !(tol > 0.0) {
        return Err(invalid("cone tolerance must be positive"));
    }
    let s1 = sigma1_of(lambda);
    let s2 = sigma2_of(lambda);
    let scaled_tol = tol * (1.0 + s1.abs());
    let margin = if k == 1 { s1 } else { s1.min(s2) };
    let verdict = if margin > scaled_tol {
        ConeVerdict::Interior
    } else if margin >= -scaled_tol {
        ConeVerdict::Boundary
    } else {
        ConeVerdict::Outside
    };
    Ok(ConeReport {
        k,
        verdict,
        sigma1: s1,
        sigma2: s2,
        margin,
        scaled_tol,
    })
}

/// Cone verdict for the eigenvalues of a matrix.
pub fn cone_of_matrix(w: &SymmetricMatrixN, k: u8, tol: f64) -> Result<ConeReport> {
    cone_membership(&w.eigenvalues(), k, tol)
}

/// The unique μ ≥ 0 with (−μ, 1, …, 1) ∈ ∂Γ₂⁺ in dimension `n`, located by
/// bisection on σ₂(−μ, 1, …, 1) over [0, n − 1].
pub fn mu_gamma_plus(n: usize) -> Result<f64> {
    if n < 3 {
        return Err(invalid(format!("mu_gamma_plus needs n >= 3, got {n}")));
    }
    let g = |mu: f64| {
        let mut v = vec![1.0; n];
        v[0] = -mu;
        sigma2_of(&v)
    };
    let (mut lo, mut hi) = (0.0_f64, (n - 1) as f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid);
        if gm == 0.0 || hi - lo <= f64::EPSILON * hi {
            return Ok(mid);
        }
        if gm > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// C_n² = n(n − 1)/2, the value of σ₂ on the identity.
pub fn binom2(n: usize) -> f64 {
    (n * n.saturating_sub(1)) as f64 / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[f64]) -> SymmetricMatrixN {
        SymmetricMatrixN::from_diagonal(v).unwrap()
    }

    #[test]
    fn sigma1_examples() {
        assert_eq!(sigma1(&SymmetricMatrixN::identity(3).unwrap()), 3.0);
        assert_eq!(sigma1(&diag(&[3.0, 1.0, -1.0])), 3.0);
        assert_eq!(sigma1(&diag(&[-0.5, 1.0, 1.0])), 1.5);
    }

    #[test]
    fn sigma2_examples() {
        assert_eq!(sigma2(&SymmetricMatrixN::identity(3).unwrap()), 3.0);
        assert_eq!(sigma2(&SymmetricMatrixN::identity(4).unwrap()), 6.0);
        assert_eq!(sigma2(&diag(&[-0.5, 1.0, 1.0])), 0.0);
        assert_eq!(sigma2(&diag(&[-1.0, 1.0, 1.0, 1.0])), 0.0);
    }

    #[test]
    fn sigma2_hand_computed_full_matrix() {
        // W = [[2,1,0],[1,3,-1],[0,-1,1]]: pairwise principal minors
        // (6-1) + (2-0) + (3-1) = 9.
        let w = SymmetricMatrixN::from_rows(&[
            vec![2.0, 1.0, 0.0],
            vec![1.0, 3.0, -1.0],
            vec![0.0, -1.0, 1.0],
        ])
        .unwrap();
        assert_eq!(sigma2(&w), 9.0);
        assert_eq!(sigma2_kronecker(&w), 9.0);
    }

    #[test]
    fn asymmetric_rows_rejected() {
        let err = SymmetricMatrixN::from_rows(&[vec![1.0, 2.0], vec![2.5, 1.0]]).unwrap_err();
        assert_eq!(err, Sigma2Error::NotSymmetric { row: 0, col: 1 });
    }

    #[test]
    fn dimension_bounds() {
        assert!(SymmetricMatrixN::zeros(0).is_err());
        assert!(SymmetricMatrixN::zeros(9).is_err());
        assert!(SymmetricMatrixN::zeros(8).is_ok());
    }

    #[test]
    fn eigenvalues_sorted_descending() {
        let w = SymmetricMatrixN::from_rows(&[
            vec![2.0, 1.0, 0.0],
            vec![1.0, 2.0, 0.0],
            vec![0.0, 0.0, -4.0],
        ])
        .unwrap();
        let ev = w.eigenvalues();
        let expect = [3.0, 1.0, -4.0];
        for (a, b) in ev.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14, "{ev:?}");
        }
    }

    #[test]
    fn eigen_vectors_diagonalize() {
        let w = SymmetricMatrixN::from_fn(5, |i, j| ((i + 2 * j) as f64).sin()).unwrap();
        let (vals, vecs) = w.eigen();
        let d = w.congruence(&vecs).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let expect = if i == j { vals[i] } else { 0.0 };
                assert!((d.get(i, j) - expect).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn newton_tensor_examples() {
        let t = newton_tensor_t1(&diag(&[1.0, 2.0, 5.0]));
        assert_eq!(t, diag(&[7.0, 6.0, 3.0]));
        let t4 = newton_tensor_t1(&SymmetricMatrixN::identity(4).unwrap());
        assert_eq!(t4, SymmetricMatrixN::scalar(4, 3.0).unwrap());
    }

    #[test]
    fn hessian_contract_examples() {
        let id = SymmetricMatrixN::identity(5).unwrap();
        assert_eq!(sigma2_hessian_contract(&id, &id).unwrap(), 20.0);
        let w = SymmetricMatrixN::from_fn(4, |i, j| 1.0 / (1 + i + j) as f64).unwrap();
        let lhs = sigma2_hessian_contract(&w, &w).unwrap();
        assert!((lhs - 2.0 * sigma2(&w)).abs() < 1e-14);
    }

    #[test]
    fn cone_examples() {
        let r = cone_membership(&[1.0, 1.0, 1.0], 2, DEFAULT_CONE_TOL).unwrap();
        assert_eq!(r.verdict, ConeVerdict::Interior);
        let r = cone_membership(&[-0.5, 1.0, 1.0], 2, DEFAULT_CONE_TOL).unwrap();
        assert_eq!(r.verdict, ConeVerdict::Boundary);
        assert_eq!(r.sigma1, 1.5);
        assert_eq!(r.sigma2, 0.0);
        let r = cone_membership(&[-1.0, 1.0, 1.0, 1.0], 2, DEFAULT_CONE_TOL).unwrap();
        assert_eq!(r.verdict, ConeVerdict::Boundary);
        let r = cone_membership(&[-2.0, 1.0, 1.0], 2, DEFAULT_CONE_TOL).unwrap();
        assert_eq!(r.verdict, ConeVerdict::Outside);
        let r = cone_membership(&[-2.0, 1.0, 1.0], 1, DEFAULT_CONE_TOL).unwrap();
        assert_eq!(r.verdict, ConeVerdict::Boundary);
        assert!(cone_membership(&[1.0], 3, 1e-10).is_err());
        assert!(cone_membership(&[1.0], 2, 0.0).is_err());
    }

    #[test]
    fn mu_gamma_plus_values() {
        assert_eq!(mu_gamma_plus(3).unwrap(), 0.5);
        assert_eq!(mu_gamma_plus(4).unwrap(), 1.0);
        // Independent oracle: σ₂(−μ,1,1,1,1) = 6 − 4μ vanishes at μ = 3/2.
        let mu5 = mu_gamma_plus(5).unwrap();
        assert!((mu5 - 1.5).abs() < 1e-14);
        for n in 3..=8 {
            let mu = mu_gamma_plus(n).unwrap();
            assert!((mu - (n as f64 - 2.0) / 2.0).abs() < 1e-13);
        }
        assert!(mu_gamma_plus(2).is_err());
    }
}
