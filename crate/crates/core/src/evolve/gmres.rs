//! Full (non-restarted) GMRES with left preconditioning.

#[derive(Debug, Clone)]
pub struct GmresOutcome {
    pub solution: Vec<f64>,
    pub iterations: usize,
    /// Relative preconditioned residual after each iteration, starting with 1.
    pub residuals: Vec<f64>,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `M⁻¹ A x = M⁻¹ b` from `x = 0` until the preconditioned residual
/// drops below `tol` relative to `‖M⁻¹ b‖`, or `maxit` iterations.
pub fn gmres(
    mut op: impl FnMut(&[f64]) -> Vec<f64>,
    mut precond: impl FnMut(&[f64]) -> Vec<f64>,
    rhs: &[f64],
    tol: f64,
    maxit: usize,
) -> GmresOutcome {
    let n = rhs.len();
    let r0 = precond(rhs);
    let beta = norm(&r0);
    if beta == 0.0 {
        return GmresOutcome { solution: vec![0.0; n], iterations: 0, residuals: vec![0.0], converged: true };
    }
    let mut basis: Vec<Vec<f64>> = vec![r0.iter().map(|v| v / beta).collect()];
    let mut hess: Vec<Vec<f64>> = Vec::new();
    let (mut cs, mut sn): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
    let mut g = vec![beta];
    let mut residuals = vec![1.0];
    let mut converged = false;
    let mut k = 0;
    while k < maxit.min(n) {
        let mut w = precond(&op(&basis[k]));
        let mut col = vec![0.0; k + 2];
        for (i, v) in basis.iter().enumerate() {
            let hij = dot(&w, v);
            col[i] = hij;
            for (wj, vj) in w.iter_mut().zip(v) {
                *wj -= hij * vj;
            }
        }
        let hnext = norm(&w);
        col[k + 1] = hnext;
        for i in 0..k {
            let t = cs[i] * col[i] + sn[i] * col[i + 1];
            col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
            col[i] = t;
        }
        let denom = col[k].hypot(col[k + 1]);
        let (c, s) = if denom == 0.0 { (1.0, 0.0) } else { (col[k] / denom, col[k + 1] / denom) };
        cs.push(c);
        sn.push(s);
        col[k] = denom;
        col[k + 1] = 0.0;
        g.push(-s * g[k]);
        g[k] *= c;
        hess.push(col);
        k += 1;
        let rel = g[k].abs() / beta;
        residuals.push(rel);
        if rel <= tol {
            converged = true;
            break;
        }
        if hnext == 0.0 {
            break;
        }
        basis.push(w.iter().map(|v| v / hnext).collect());
    }
    // back substitution on the triangularized Hessenberg matrix
    let mut y = vec![0.0; k];
    for i in (0..k).rev() {
        let mut s = g[i];
        for j in i + 1..k {
            s -= hess[j][i] * y[j];
        }
        y[i] = s / hess[i][i];
    }
    let mut solution = vec![0.0; n];
    for (yj, v) in y.iter().zip(&basis) {
        for (xi, vi) in solution.iter_mut().zip(v) {
            *xi += yj * vi;
        }
    }
    GmresOutcome { solution, iterations: k, residuals, converged }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_converges_in_one_iteration() {
        let b = vec![1.0, -2.0, 3.0];
        let out = gmres(|x| x.to_vec(), |x| x.to_vec(), &b, 1e-12, 10);
        assert!(out.converged && out.iterations == 1);
        assert_eq!(out.solution.len(), 3);
        for (x, y) in out.solution.iter().zip(&b) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn diagonal_two_by_two() {
        let out = gmres(|x| vec![2.0 * x[0], 3.0 * x[1]], |x| x.to_vec(), &[2.0, 3.0], 1e-12, 10);
        assert!(out.converged && out.iterations <= 2);
        assert!((out.solution[0] - 1.0).abs() < 1e-12 && (out.solution[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_system_matches_dense_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 50;
        let a = DMatrix::from_fn(n, n, |i, j| if i == j { 10.0 } else { 0.0 } + rng.random_range(-1.0..1.0));
        let b = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let exact = a.clone().lu().solve(&b).unwrap();
        let op = |x: &[f64]| (&a * DVector::from_column_slice(x)).as_slice().to_vec();
        let out = gmres(op, |x| x.to_vec(), b.as_slice(), 1e-13, 100);
        assert!(out.converged);
        for i in 0..n {
            assert!((out.solution[i] - exact[i]).abs() < 1e-10);
        }
        assert!(out.residuals.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    }

    #[test]
    fn reports_failure_at_maxit() {
        let n = 30;
        let op = |x: &[f64]| (0..n).map(|i| x[(i + 1) % n]).collect::<Vec<_>>();
        let mut b = vec![0.0; n];
        b[0] = 1.0;
        let out = gmres(op, |x| x.to_vec(), &b, 1e-12, 5);
        assert!(!out.converged && out.iterations == 5);
    }
}
