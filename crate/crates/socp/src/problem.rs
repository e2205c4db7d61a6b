//! Internal standard form used by the interior-point iteration.
//!
//! A [`SocProgram`] is rewritten as the phase-one problem
//! ```text
//! minimise   t
//! subject to ‖A x + b‖ ≤ cᵀx + d + t   (every cone block)
//!            Fx = e                    (independent equality rows)
//!            t ≥ −1
//! ```
//! in the conic form `min qᵀx, Ax = b, h − Gx ∈ K`. Each block is rescaled
//! to unit size; this does not change the constraint set.

use faer::linalg::solvers::{Llt, Solve};
use faer::{Mat, Side};

use crate::cone::Cone;
use crate::program::{SocProgram, SparseVec};

pub(crate) struct ConeProblem {
    /// Original variables plus the slack `t`.
    pub n: usize,
    pub slack: usize,
    pub a: Vec<SparseVec>,
    pub b: Vec<f64>,
    pub g: Vec<SparseVec>,
    pub h: Vec<f64>,
    pub q: Vec<f64>,
    pub cones: Vec<Cone>,
    /// Sorted column support of each cone's rows in `G`.
    pub supports: Vec<Vec<usize>>,
    eq_gram: Option<Llt<f64>>,
}

/// Outcome of equality presolve.
pub(crate) enum Presolve {
    Ready(ConeProblem),
    /// The equalities contradict each other; carries the size of the mismatch.
    Inconsistent(f64),
}

struct Equalities {
    rows: Vec<SparseVec>,
    rhs: Vec<f64>,
}

fn gram(rows: &[SparseVec], n: usize) -> Mat<f64> {
    let dense: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            let mut d = vec![0.0; n];
            r.axpy_into(1.0, &mut d);
            d
        })
        .collect();
    Mat::from_fn(rows.len(), rows.len(), |i, j| rows[i].dot(&dense[j]))
}

/// Keeps a linearly independent subset of unit-normalised equality rows and
/// checks the dropped ones for consistency.
fn presolve_equalities(program: &SocProgram, tol: f64) -> Result<Equalities, f64> {
    let n = program.num_vars();
    let mut kept = Equalities {
        rows: Vec::new(),
        rhs: Vec::new(),
    };
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for eq in program.equalities() {
        let norm = eq.f.norm();
        if norm == 0.0 {
            if eq.e.abs() > tol {
                return Err(eq.e.abs());
            }
            continue;
        }
        let row = eq.f.scaled(1.0 / norm);
        let rhs = eq.e / norm;
        let mut r = vec![0.0; n];
        row.axpy_into(1.0, &mut r);
        for _ in 0..2 {
            for q in &basis {
                let proj: f64 = q.iter().zip(&r).map(|(a, b)| a * b).sum();
                for (ri, qi) in r.iter_mut().zip(q) {
                    *ri -= proj * qi;
                }
            }
        }
        let rn = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rn > 1e-9 {
            r.iter_mut().for_each(|v| *v /= rn);
            basis.push(r);
            kept.rows.push(row);
            kept.rhs.push(rhs);
            continue;
        }
        // Dependent row: express it through the kept rows and compare right-hand sides.
        let llt = gram(&kept.rows, n)
            .llt(Side::Lower)
            .expect("kept equality rows are independent");
        let mut dense = vec![0.0; n];
        row.axpy_into(1.0, &mut dense);
        let mut coef = Mat::<f64>::from_fn(kept.rows.len(), 1, |k, _| kept.rows[k].dot(&dense));
        llt.solve_in_place(coef.as_mut());
        let implied: f64 = coef.col_as_slice(0).iter().zip(&kept.rhs).map(|(c, e)| c * e).sum();
        let mismatch = (implied - rhs).abs();
        if mismatch > tol {
            return Err(mismatch);
        }
    }
    Ok(kept)
}

fn block_scale(c: &SparseVec, d: f64, rows: &[SparseVec], b: &[f64]) -> f64 {
    let head = (c.norm().powi(2) + d * d).sqrt();
    let body = rows
        .iter()
        .zip(b)
        .map(|(r, bi)| (r.norm().powi(2) + bi * bi).sqrt())
        .fold(0.0, f64::max);
    let s = head.max(body);
    if s > 0.0 {
        1.0 / s
    } else {
        1.0
    }
}

fn push_row(g: &mut Vec<SparseVec>, h: &mut Vec<f64>, row: SparseVec, rhs: f64) {
    g.push(row);
    h.push(rhs);
}

impl ConeProblem {
    pub fn build(program: &SocProgram, tol: f64) -> Presolve {
        let eqs = match presolve_equalities(program, tol) {
            Ok(e) => e,
            Err(mismatch) => return Presolve::Inconsistent(mismatch),
        };
        let n0 = program.num_vars();
        let slack = n0;
        let n = n0 + 1;
        let mut g = Vec::new();
        let mut h = Vec::new();
        let mut cones = Vec::new();

        // Orthant: t ≥ −1 plus every half-space block.
        push_row(&mut g, &mut h, SparseVec::unit(slack).scaled(-1.0), 1.0);
        for block in program.blocks().iter().filter(|b| b.is_halfspace()) {
            let alpha = block_scale(&block.c, block.d, &[], &[]);
            let mut row = block.c.scaled(-alpha);
            row.push(slack, -alpha);
            push_row(&mut g, &mut h, row, alpha * block.d);
        }
        cones.push(Cone::Nonneg { offset: 0, dim: g.len() });

        for block in program.blocks().iter().filter(|b| !b.is_halfspace()) {
            let offset = g.len();
            let alpha = block_scale(&block.c, block.d, &block.rows, &block.b);
            let mut head = block.c.scaled(-alpha);
            head.push(slack, -alpha);
            push_row(&mut g, &mut h, head, alpha * block.d);
            for (row, &bi) in block.rows.iter().zip(&block.b) {
                push_row(&mut g, &mut h, row.scaled(-alpha), alpha * bi);
            }
            cones.push(Cone::Soc {
                offset,
                dim: g.len() - offset,
            });
        }

        let supports = cones
            .iter()
            .map(|cone| {
                let mut cols: Vec<usize> = g[cone.range()].iter().flat_map(|r| r.iter().map(|(i, _)| i)).collect();
                cols.sort_unstable();
                cols.dedup();
                cols
            })
            .collect();

        let eq_gram = if eqs.rows.is_empty() {
            None
        } else {
            Some(
                gram(&eqs.rows, n0)
                    .llt(Side::Lower)
                    .expect("kept equality rows are independent"),
            )
        };

        let mut q = vec![0.0; n];
        q[slack] = 1.0;
        Presolve::Ready(Self {
            n,
            slack,
            a: eqs.rows,
            b: eqs.rhs,
            g,
            h,
            q,
            cones,
            supports,
            eq_gram,
        })
    }

    pub fn m(&self) -> usize {
        self.g.len()
    }

    pub fn a_mul(&self, x: &[f64]) -> Vec<f64> {
        self.a.iter().map(|r| r.dot(x)).collect()
    }

    pub fn a_tmul_add(&self, y: &[f64], out: &mut [f64]) {
        for (r, &yi) in self.a.iter().zip(y) {
            r.axpy_into(yi, out);
        }
    }

    pub fn g_mul(&self, x: &[f64]) -> Vec<f64> {
        self.g.iter().map(|r| r.dot(x)).collect()
    }

    pub fn g_tmul_add(&self, z: &[f64], out: &mut [f64]) {
        for (r, &zi) in self.g.iter().zip(z) {
            r.axpy_into(zi, out);
        }
    }

    /// Orthogonal projection of the original variables onto `{x : Fx = e}`.
    pub fn project_onto_equalities(&self, x: &mut [f64]) {
        let Some(llt) = &self.eq_gram else { return };
        let mut r = Mat::<f64>::from_fn(self.a.len(), 1, |k, _| self.a[k].dot(x) - self.b[k]);
        llt.solve_in_place(r.as_mut());
        for (row, &c) in self.a.iter().zip(r.col_as_slice(0)) {
            row.axpy_into(-c, x);
        }
    }
}
