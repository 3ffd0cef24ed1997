//! Dense operator of the wall double layer with completion terms.
//!
//! Unknown layout: `η` per component (stacked `[η_x; η_y]`), then for each
//! inner component `λ_x, λ_y, ξ`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Dyn, LU};

use crate::error::{Error, Result};
use crate::kernels::{stokeslet_rotlet, WallSet};
use crate::nearsing::Source;
use crate::quadrature::self_dlp_matrix;

#[derive(Debug, Clone)]
pub struct WallOperator {
    /// Start of each component's `η` block.
    pub offsets: Vec<usize>,
    /// Start of the completion unknowns.
    pub completion_offset: usize,
    pub size: usize,
    pub matrix: DMatrix<f64>,
    lu: LU<f64, Dyn, Dyn>,
    /// Principal-value double layer of each component on itself.
    pub self_dlp: Vec<DMatrix<f64>>,
    pub sources: Vec<Source>,
    pub mu0: f64,
}

impl WallOperator {
    pub fn new(walls: &WallSet) -> Result<Self> {
        let comps = &walls.components;
        let mut offsets = Vec::with_capacity(comps.len());
        let mut size = 0;
        for c in comps {
            offsets.push(size);
            size += 2 * c.n();
        }
        let completion_offset = size;
        size += 3 * walls.inner_count();
        let mut matrix = DMatrix::zeros(size, size);
        let self_dlp: Vec<DMatrix<f64>> =
            comps.iter().map(|c| self_dlp_matrix(&c.curve, &c.geom, 1.0 / PI, c.normal_sign)).collect();
        for (p, cp) in comps.iter().enumerate() {
            let (np, op) = (cp.n(), offsets[p]);
            for (q, cq) in comps.iter().enumerate() {
                let (nq, oq) = (cq.n(), offsets[q]);
                if p == q {
                    let m = &self_dlp[p];
                    for i in 0..2 * np {
                        for j in 0..2 * np {
                            matrix[(op + i, op + j)] = m[(i, j)];
                        }
                        matrix[(op + i, op + i)] -= 0.5;
                    }
                    continue;
                }
                for i in 0..np {
                    let x = cp.curve.point(i);
                    for j in 0..nq {
                        let r = [x[0] - cq.curve.x[j], x[1] - cq.curve.y[j]];
                        let rho2 = r[0] * r[0] + r[1] * r[1];
                        let nrm = cq.signed_normal(j);
                        let c = cq.geom.weight(j) / PI * (r[0] * nrm[0] + r[1] * nrm[1]) / (rho2 * rho2);
                        matrix[(op + i, oq + j)] += c * r[0] * r[0];
                        matrix[(op + i, oq + nq + j)] += c * r[0] * r[1];
                        matrix[(op + np + i, oq + j)] += c * r[0] * r[1];
                        matrix[(op + np + i, oq + nq + j)] += c * r[1] * r[1];
                    }
                }
            }
        }
        // rank-one term on the enclosing component
        let c0 = &comps[0];
        let n0 = c0.n();
        for i in 0..n0 {
            let ni = c0.geom.normal(i);
            for j in 0..n0 {
                let nj = c0.geom.normal(j);
                let w = c0.geom.weight(j);
                matrix[(i, j)] += w * ni[0] * nj[0];
                matrix[(i, n0 + j)] += w * ni[0] * nj[1];
                matrix[(n0 + i, j)] += w * ni[1] * nj[0];
                matrix[(n0 + i, n0 + j)] += w * ni[1] * nj[1];
            }
        }
        for (q, cq) in comps.iter().enumerate().skip(1) {
            let col = completion_offset + 3 * (q - 1);
            for (p, cp) in comps.iter().enumerate() {
                let (np, op) = (cp.n(), offsets[p]);
                for i in 0..np {
                    let x = cp.curve.point(i);
                    let ux = stokeslet_rotlet(cq.center, [1.0, 0.0], 0.0, walls.mu0, x)?;
                    let uy = stokeslet_rotlet(cq.center, [0.0, 1.0], 0.0, walls.mu0, x)?;
                    let ur = stokeslet_rotlet(cq.center, [0.0, 0.0], 1.0, walls.mu0, x)?;
                    for (c, u) in [ux, uy, ur].iter().enumerate() {
                        matrix[(op + i, col + c)] = u[0];
                        matrix[(op + np + i, col + c)] = u[1];
                    }
                }
            }
            // λ − (1/2π)∫η = 0 and ξ − (1/2π)∫(y − c)^⊥·η = 0
            let (nq, oq) = (cq.n(), offsets[q]);
            for c in 0..3 {
                matrix[(col + c, col + c)] = 1.0;
            }
            for j in 0..nq {
                let w = cq.geom.weight(j) / (2.0 * PI);
                let dx = cq.curve.x[j] - cq.center[0];
                let dy = cq.curve.y[j] - cq.center[1];
                matrix[(col, oq + j)] = -w;
                matrix[(col + 1, oq + nq + j)] = -w;
                matrix[(col + 2, oq + j)] = -w * dy;
                matrix[(col + 2, oq + nq + j)] = w * dx;
            }
        }
        let lu = matrix.clone().lu();
        let sources = comps.iter().map(|c| Source::new(&c.curve, &c.geom)).collect::<Result<Vec<_>>>()?;
        Ok(Self { offsets, completion_offset, size, matrix, lu, self_dlp, sources, mu0: walls.mu0 })
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        self.lu
            .solve(&DVector::from_column_slice(rhs))
            .map(|v| v.as_slice().to_vec())
            .ok_or_else(|| Error::SingularBlock("wall operator".into()))
    }

    pub fn apply(&self, w: &[f64]) -> Vec<f64> {
        (&self.matrix * DVector::from_column_slice(w)).as_slice().to_vec()
    }

    /// Prescribed wall velocities with zero completion rows.
    pub fn boundary_rhs(&self, walls: &WallSet) -> Vec<f64> {
        let mut rhs = vec![0.0; self.size];
        for (c, &o) in walls.components.iter().zip(&self.offsets) {
            rhs[o..o + 2 * c.n()].copy_from_slice(&c.velocity);
        }
        rhs
    }

    /// Splits a wall unknown vector into `η` per component, `λ` and `ξ`.
    pub fn split(&self, w: &[f64]) -> (Vec<Vec<f64>>, Vec<[f64; 2]>, Vec<f64>) {
        let eta = self
            .offsets
            .iter()
            .enumerate()
            .map(|(q, &o)| {
                let end = self.offsets.get(q + 1).copied().unwrap_or(self.completion_offset);
                w[o..end].to_vec()
            })
            .collect();
        let (lambda, xi) = w[self.completion_offset..].chunks(3).map(|c| ([c[0], c[1]], c[2])).unzip();
        (eta, lambda, xi)
    }

    /// Velocity induced in the fluid by the completion singularities.
    pub fn completion_velocity(
        &self,
        walls: &WallSet,
        lambda: &[[f64; 2]],
        xi: &[f64],
        targets: &[[f64; 2]],
    ) -> Result<Vec<[f64; 2]>> {
        let mut out = vec![[0.0, 0.0]; targets.len()];
        for ((c, l), &x) in walls.components[1..].iter().zip(lambda).zip(xi) {
            for (o, &t) in out.iter_mut().zip(targets) {
                let u = stokeslet_rotlet(c.center, *l, x, self.mu0, t)?;
                o[0] += u[0];
                o[1] += u[1];
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::shapes::circle;
    use crate::nearsing::{trapezoid_values, Layer};
    use crate::kernels::DirectSummation;

    /// Rigid rotation of the inner cylinder inside a fixed outer one.
    fn couette(n: usize, r1: f64, r2: f64, omega: f64) -> WallSet {
        let outer = circle(n, r2, [0.0, 0.0]).unwrap();
        let inner = circle(n, r1, [0.0, 0.0]).unwrap();
        let mut v = vec![0.0; 2 * n];
        for k in 0..n {
            v[k] = -omega * inner.y[k];
            v[n + k] = omega * inner.x[k];
        }
        WallSet::new(vec![outer, inner], vec![vec![0.0; 2 * n], v], 1.0).unwrap()
    }

    #[test]
    fn couette_matches_analytic_profile() {
        let (r1, r2, omega) = (1.0, 2.0, 1.0);
        let walls = couette(256, r1, r2, omega);
        let op = WallOperator::new(&walls).unwrap();
        let sol = op.solve(&op.boundary_rhs(&walls)).unwrap();
        let (eta, lambda, xi) = op.split(&sol);
        // u_θ = A r + B/r with u_θ(r1) = ω r1, u_θ(r2) = 0
        let b = omega * r1 * r1 * r2 * r2 / (r2 * r2 - r1 * r1);
        let a = -b / (r2 * r2);
        let targets: Vec<[f64; 2]> = [1.3, 1.5, 1.7].iter().map(|&r| [r * 0.6, r * 0.8]).collect();
        let mut u = op.completion_velocity(&walls, &lambda, &xi, &targets).unwrap();
        for (c, e) in walls.components.iter().zip(&eta) {
            let layer = Layer::Dlp { prefactor: 1.0 / PI, normal_sign: c.normal_sign };
            let v = trapezoid_values(layer, &c.curve, &c.geom, e, &targets, &DirectSummation);
            for (ui, vi) in u.iter_mut().zip(v) {
                ui[0] += vi[0];
                ui[1] += vi[1];
            }
        }
        for (t, ui) in targets.iter().zip(&u) {
            let r = t[0].hypot(t[1]);
            let ut = a * r + b / r;
            let exact = [-ut * t[1] / r, ut * t[0] / r];
            assert!((ui[0] - exact[0]).abs() < 1e-10 && (ui[1] - exact[1]).abs() < 1e-10, "{ui:?} vs {exact:?}");
        }
    }

    #[test]
    fn split_round_trip() {
        let walls = couette(32, 1.0, 2.0, 1.0);
        let op = WallOperator::new(&walls).unwrap();
        assert_eq!(op.size, 4 * 32 + 3);
        let w: Vec<f64> = (0..op.size).map(|i| i as f64).collect();
        let (eta, lambda, xi) = op.split(&w);
        assert_eq!(eta[1][0], 64.0);
        assert_eq!(lambda[0], [128.0, 129.0]);
        assert_eq!(xi[0], 130.0);
    }
}
