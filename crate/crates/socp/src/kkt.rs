//! Newton system of the interior-point iteration, reduced to normal
//! equations and factored densely.
//!
//! Solves
//! ```text
//! [ 0  Aᵀ  Gᵀ  ] [dx]   [r1]
//! [ A  0   0   ] [dy] = [r2]
//! [ G  0  −W²  ] [dz]   [r3]
//! ```
//! by eliminating `dz`, factoring `N = Gᵀ W⁻² G` and the Schur complement
//! `A N⁻¹ Aᵀ`, followed by iterative refinement on the unreduced system.

use faer::linalg::solvers::{Llt, Solve};
use faer::{Mat, Side};

use crate::cone::{InvSquare, Scaling};
use crate::problem::ConeProblem;
use crate::program::SparseVec;

const REFINE_STEPS: usize = 3;

#[derive(Debug)]
pub(crate) struct FactorError;

pub(crate) struct Kkt<'a> {
    prob: &'a ConeProblem,
    scaling: &'a Scaling,
    llt_n: Llt<f64>,
    ninv_at: Mat<f64>,
    llt_s: Option<Llt<f64>>,
}

fn add_sparse_outer(nmat: &mut Mat<f64>, row: &SparseVec, weight: f64) {
    for (i, a) in row.iter() {
        let wa = weight * a;
        for (j, b) in row.iter() {
            if i >= j {
                nmat[(i, j)] += wa * b;
            }
        }
    }
}

/// `N[S, S] += weight · u uᵀ` on the lower triangle, `u` given on the sorted support `S`.
fn add_dense_outer(nmat: &mut Mat<f64>, support: &[usize], u: &[f64], weight: f64) {
    for (b, &j) in support.iter().enumerate() {
        let ub = weight * u[b];
        if ub == 0.0 {
            continue;
        }
        let col = nmat.col_as_slice_mut(j);
        for (a, &i) in support.iter().enumerate().skip(b) {
            col[i] += u[a] * ub;
        }
    }
}

fn factor_spd(mut mat: Mat<f64>) -> Result<Llt<f64>, FactorError> {
    let dim = mat.nrows();
    let max_diag = (0..dim).map(|i| mat[(i, i)].abs()).fold(0.0, f64::max);
    let mut reg = 1e-14 * max_diag.max(1.0);
    for _ in 0..8 {
        if let Ok(llt) = mat.llt(Side::Lower) {
            return Ok(llt);
        }
        for i in 0..dim {
            mat[(i, i)] += reg;
        }
        reg *= 100.0;
    }
    Err(FactorError)
}

impl<'a> Kkt<'a> {
    pub fn factor(prob: &'a ConeProblem, scaling: &'a Scaling) -> Result<Self, FactorError> {
        let n = prob.n;
        let mut nmat = Mat::<f64>::zeros(n, n);
        let mut u = Vec::new();
        for (index, cone) in prob.cones.iter().enumerate() {
            let rows = &prob.g[cone.range()];
            match scaling.inverse_square_parts(index) {
                InvSquare::Diagonal(w) => {
                    for (row, wi) in rows.iter().zip(w) {
                        add_sparse_outer(&mut nmat, row, 1.0 / (wi * wi));
                    }
                }
                InvSquare::Arrow { factor, wbar } => {
                    // (1/η²)(2 u uᵀ − g0 g0ᵀ + Σ_{i≥1} gᵢ gᵢᵀ), u = Gᵀ J w̄
                    let support = &prob.supports[index];
                    u.clear();
                    u.resize(support.len(), 0.0);
                    let mut accumulate = |row: &SparseVec, coef: f64| {
                        for (col, v) in row.iter() {
                            let pos = support.binary_search(&col).expect("support covers row");
                            u[pos] += coef * v;
                        }
                    };
                    accumulate(&rows[0], wbar[0]);
                    for (row, w) in rows[1..].iter().zip(&wbar[1..]) {
                        accumulate(row, -w);
                    }
                    add_dense_outer(&mut nmat, support, &u, 2.0 * factor);
                    add_sparse_outer(&mut nmat, &rows[0], -factor);
                    for row in &rows[1..] {
                        add_sparse_outer(&mut nmat, row, factor);
                    }
                }
            }
        }
        let llt_n = factor_spd(nmat)?;

        let p = prob.a.len();
        let mut ninv_at = Mat::<f64>::zeros(n, p);
        for (k, row) in prob.a.iter().enumerate() {
            let col = ninv_at.col_as_slice_mut(k);
            for (i, v) in row.iter() {
                col[i] += v;
            }
        }
        llt_n.solve_in_place(ninv_at.as_mut());
        let llt_s = if p > 0 {
            let mut s = Mat::<f64>::zeros(p, p);
            for (i, row) in prob.a.iter().enumerate() {
                for j in 0..=i {
                    s[(i, j)] = row.dot(ninv_at.col_as_slice(j));
                }
            }
            Some(factor_spd(s)?)
        } else {
            None
        };
        Ok(Self {
            prob,
            scaling,
            llt_n,
            ninv_at,
            llt_s,
        })
    }

    fn w_inv_sq(&self, v: &[f64]) -> Vec<f64> {
        let cones = &self.prob.cones;
        let mut t = vec![0.0; v.len()];
        let mut out = vec![0.0; v.len()];
        self.scaling.apply_winv(cones, v, &mut t);
        self.scaling.apply_winv(cones, &t, &mut out);
        out
    }

    fn w_sq(&self, v: &[f64]) -> Vec<f64> {
        let cones = &self.prob.cones;
        let mut t = vec![0.0; v.len()];
        let mut out = vec![0.0; v.len()];
        self.scaling.apply_w(cones, v, &mut t);
        self.scaling.apply_w(cones, &t, &mut out);
        out
    }

    fn solve_once(&self, r1: &[f64], r2: &[f64], r3: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let prob = self.prob;
        let n = prob.n;
        let mut t1 = r1.to_vec();
        prob.g_tmul_add(&self.w_inv_sq(r3), &mut t1);
        let mut v = Mat::<f64>::from_fn(n, 1, |i, _| t1[i]);
        self.llt_n.solve_in_place(v.as_mut());
        let mut dx: Vec<f64> = v.col_as_slice(0).to_vec();
        let dy = match &self.llt_s {
            Some(llt_s) => {
                let p = prob.a.len();
                let mut y = Mat::<f64>::from_fn(p, 1, |k, _| prob.a[k].dot(&dx) - r2[k]);
                llt_s.solve_in_place(y.as_mut());
                let dy = y.col_as_slice(0).to_vec();
                for (k, &yk) in dy.iter().enumerate() {
                    for (x, c) in dx.iter_mut().zip(self.ninv_at.col_as_slice(k)) {
                        *x -= yk * c;
                    }
                }
                dy
            }
            None => Vec::new(),
        };
        let mut gdx = prob.g_mul(&dx);
        for (g, r) in gdx.iter_mut().zip(r3) {
            *g -= r;
        }
        let dz = self.w_inv_sq(&gdx);
        (dx, dy, dz)
    }

    /// Solves the unreduced system with a few steps of iterative refinement.
    pub fn solve(&self, r1: &[f64], r2: &[f64], r3: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let prob = self.prob;
        let (mut dx, mut dy, mut dz) = self.solve_once(r1, r2, r3);
        let rhs_norm = inf_norm(r1).max(inf_norm(r2)).max(inf_norm(r3));
        let mut last = f64::INFINITY;
        for _ in 0..REFINE_STEPS {
            let mut e1 = r1.to_vec();
            let mut aty = vec![0.0; prob.n];
            prob.a_tmul_add(&dy, &mut aty);
            prob.g_tmul_add(&dz, &mut aty);
            for (e, v) in e1.iter_mut().zip(&aty) {
                *e -= v;
            }
            let ax = prob.a_mul(&dx);
            let e2: Vec<f64> = r2.iter().zip(&ax).map(|(r, v)| r - v).collect();
            let gx = prob.g_mul(&dx);
            let w2z = self.w_sq(&dz);
            let e3: Vec<f64> = r3
                .iter()
                .zip(gx.iter().zip(&w2z))
                .map(|(r, (g, w))| r - (g - w))
                .collect();
            let err = inf_norm(&e1).max(inf_norm(&e2)).max(inf_norm(&e3));
            if err <= 1e-14 * (1.0 + rhs_norm) || err >= last {
                break;
            }
            last = err;
            let (cx, cy, cz) = self.solve_once(&e1, &e2, &e3);
            add_into(&mut dx, &cx);
            add_into(&mut dy, &cy);
            add_into(&mut dz, &cz);
        }
        (dx, dy, dz)
    }
}

pub(crate) fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn add_into(a: &mut [f64], b: &[f64]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
}
