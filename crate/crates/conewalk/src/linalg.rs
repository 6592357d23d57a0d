//! Small dense/sparse linear algebra kernels sized for desk-scale meshes:
//! a pivoted tridiagonal LU for 1d problems, CSR with Jacobi-preconditioned
//! CG for 2d symmetric positive definite systems, and a dense LU fallback
//! (via nalgebra) for the indefinite systems that show up when refining
//! saddle points.

use crate::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// y += alpha * x
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Tridiagonal matrix in banded storage. `sub[0]` and `sup[n-1]` are unused.
#[derive(Debug, Clone)]
pub struct Tridiag {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
}

impl Tridiag {
    pub fn zeros(n: usize) -> Self {
        Tridiag {
            sub: vec![0.0; n],
            diag: vec![0.0; n],
            sup: vec![0.0; n],
        }
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    /// LU with partial pivoting (fill-in limited to a second superdiagonal),
    /// so indefinite systems are handled too.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.n();
        assert_eq!(rhs.len(), n);
        if n == 0 {
            return Ok(Vec::new());
        }
        let dl = self.sub.clone(); // dl[i]: row i, column i-1
        let mut d = self.diag.clone();
        let mut du = self.sup.clone(); // du[i]: row i, column i+1
        let mut du2 = vec![0.0; n]; // du2[i]: row i, column i+2 (fill-in)
        let mut b = rhs.to_vec();

        for i in 0..n - 1 {
            if d[i].abs() >= dl[i + 1].abs() {
                if d[i] == 0.0 {
                    return Err(Error::parameter("matrix", "singular tridiagonal system"));
                }
                let fact = dl[i + 1] / d[i];
                d[i + 1] -= fact * du[i];
                b[i + 1] -= fact * b[i];
            } else {
                // interchange rows i and i+1, then eliminate
                let fact = d[i] / dl[i + 1];
                d[i] = dl[i + 1];
                let old_d_next = d[i + 1];
                let old_du_next = du[i + 1];
                d[i + 1] = du[i] - fact * old_d_next;
                du[i] = old_d_next;
                du2[i] = old_du_next;
                du[i + 1] = -fact * old_du_next;
                b.swap(i, i + 1);
                b[i + 1] -= fact * b[i];
            }
        }
        if d[n - 1] == 0.0 {
            return Err(Error::parameter("matrix", "singular tridiagonal system"));
        }

        // back substitution (bandwidth 2 above the diagonal after pivoting)
        let mut x = vec![0.0; n];
        x[n - 1] = b[n - 1] / d[n - 1];
        if n >= 2 {
            x[n - 2] = (b[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            x[i] = (b[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i];
        }
        Ok(x)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut v = self.diag[i] * x[i];
            if i > 0 {
                v += self.sub[i] * x[i - 1];
            }
            if i + 1 < n {
                v += self.sup[i] * x[i + 1];
            }
            y[i] = v;
        }
        y
    }
}

/// Compressed sparse row matrix with a fixed symmetric pattern.
#[derive(Debug, Clone)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Csr {
    /// Builds the pattern from undirected adjacency pairs; the diagonal is
    /// always present. Values start at zero.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut adj: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for (i, j) in edges {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        row_ptr.push(0);
        for row in &mut adj {
            row.sort_unstable();
            row.dedup();
            cols.extend_from_slice(row);
            row_ptr.push(cols.len());
        }
        let nnz = cols.len();
        Csr {
            n,
            row_ptr,
            cols,
            vals: vec![0.0; nnz],
        }
    }

    pub fn zero_values(&mut self) {
        self.vals.iter_mut().for_each(|v| *v = 0.0);
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        match self.cols[lo..hi].binary_search(&j) {
            Ok(k) => self.vals[lo + k] += v,
            Err(_) => panic!("entry ({i},{j}) outside the fixed sparsity pattern"),
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            y[i] = acc;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.cols[k] == i {
                    d[i] = self.vals[k];
                }
            }
        }
        d
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.cols[k])] = self.vals[k];
            }
        }
        m
    }
}

/// Conjugate gradients with Jacobi preconditioning. Requires an SPD matrix.
/// Returns the solution and the iteration count.
pub fn cg_jacobi(
    a: &Csr,
    b: &[f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, usize)> {
    let n = a.n;
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d.abs() > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        return Ok((x, 0));
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 0..max_iter {
        a.matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::parameter("matrix", "CG hit a non-SPD direction"));
        }
        let alpha = rz / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        if norm2(&r) <= rel_tol * b_norm {
            return Ok((x, it + 1));
        }
        for (zi, (ri, di)) in z.iter_mut().zip(r.iter().zip(&inv_diag)) {
            *zi = ri * di;
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        residual: norm2(&r) / b_norm,
        last_iterate: x,
        residual_history: Vec::new(),
    })
}

/// Dense LU solve for small (possibly indefinite) systems.
pub fn dense_solve(a: nalgebra::DMatrix<f64>, b: &[f64]) -> Result<Vec<f64>> {
    let rhs = nalgebra::DVector::from_column_slice(b);
    let lu = a.lu();
    lu.solve(&rhs)
        .map(|x| x.as_slice().to_vec())
        .ok_or_else(|| Error::parameter("matrix", "singular dense system"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiag_solves_poisson_stencil() {
        // -u'' = 1 on (0,1), h = 1/4, interior nodes only
        let n = 3;
        let h = 0.25;
        let mut m = Tridiag::zeros(n);
        for i in 0..n {
            m.diag[i] = 2.0 / h;
            if i > 0 {
                m.sub[i] = -1.0 / h;
            }
            if i + 1 < n {
                m.sup[i] = -1.0 / h;
            }
        }
        let rhs = vec![h; n];
        let x = m.solve(&rhs).unwrap();
        // nodal exactness of the P1 discretization of -u'' = 1: x(1-x)/2
        let want = [0.25 * 0.75 / 2.0, 0.125, 0.75 * 0.25 / 2.0];
        for (xi, wi) in x.iter().zip(&want) {
            assert!((xi - wi).abs() < 1e-14, "{xi} vs {wi}");
        }
    }

    #[test]
    fn tridiag_pivoting_handles_indefinite() {
        // matrix with a small leading pivot that plain Thomas would mangle
        let m = Tridiag {
            sub: vec![0.0, 4.0, 1.0],
            diag: vec![1e-14, -2.0, 3.0],
            sup: vec![5.0, 1.0, 0.0],
        };
        let x_true = vec![1.0, -2.0, 0.5];
        let b = m.matvec(&x_true);
        let x = m.solve(&b).unwrap();
        for (xi, ti) in x.iter().zip(&x_true) {
            assert!((xi - ti).abs() < 1e-10);
        }
    }

    #[test]
    fn tridiag_random_matches_dense() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for n in [1usize, 2, 3, 17, 40] {
            let mut m = Tridiag::zeros(n);
            for i in 0..n {
                // diagonally dominant with random sign: well-conditioned but indefinite
                let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                m.diag[i] = sign * rng.gen_range(2.5..4.0);
                if i > 0 {
                    m.sub[i] = rng.gen_range(-1.0..1.0);
                }
                if i + 1 < n {
                    m.sup[i] = rng.gen_range(-1.0..1.0);
                }
            }
            let x_true: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b = m.matvec(&x_true);
            let x = m.solve(&b).unwrap();
            for (xi, ti) in x.iter().zip(&x_true) {
                assert!((xi - ti).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn cg_solves_spd_system() {
        let n = 20;
        let mut a = Csr::from_edges(n, (0..n - 1).map(|i| (i, i + 1)));
        for i in 0..n {
            a.add(i, i, 2.5);
            if i > 0 {
                a.add(i, i - 1, -1.0);
            }
            if i + 1 < n {
                a.add(i, i + 1, -1.0);
            }
        }
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let mut b = vec![0.0; n];
        a.matvec(&x_true, &mut b);
        let (x, _its) = cg_jacobi(&a, &b, 1e-13, 1000).unwrap();
        for (xi, ti) in x.iter().zip(&x_true) {
            assert!((xi - ti).abs() < 1e-10);
        }
    }

    #[test]
    fn dense_solve_roundtrip() {
        let a = nalgebra::DMatrix::from_row_slice(3, 3, &[0.0, 2.0, 1.0, 1.0, -1.0, 0.5, 3.0, 0.0, -2.0]);
        let x_true = vec![0.5, -1.5, 2.0];
        let b = &a * nalgebra::DVector::from_column_slice(&x_true);
        let x = dense_solve(a, b.as_slice()).unwrap();
        for (xi, ti) in x.iter().zip(&x_true) {
            assert!((xi - ti).abs() < 1e-12);
        }
    }
}
