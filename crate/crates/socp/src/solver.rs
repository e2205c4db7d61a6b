//! Homogeneous self-dual interior-point method with Nesterov–Todd scaling
//! and Mehrotra predictor–corrector steps, specialised to feasibility.

use crate::cone::{self, Scaling};
use crate::kkt::{inf_norm, Kkt};
use crate::problem::{ConeProblem, Presolve};
use crate::program::SocProgram;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeasibilityStatus {
    Feasible,
    Infeasible,
    NumericalFailure,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    /// Absolute tolerance on `check_point` for a point to count as feasible.
    pub feas_tol: f64,
    pub max_iter: usize,
    /// Residual and gap tolerance of the interior-point iteration.
    pub ipm_tol: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            feas_tol: 1e-7,
            max_iter: 200,
            ipm_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityResult {
    pub status: FeasibilityStatus,
    /// Present iff `status` is `Feasible`.
    pub x: Option<Vec<f64>>,
    /// For feasible results, `check_point(x)`. For infeasible results, a lower
    /// bound on the smallest achievable violation. Otherwise the best violation seen.
    pub max_violation: f64,
    pub iterations: usize,
}

impl FeasibilityResult {
    pub fn is_feasible(&self) -> bool {
        self.status == FeasibilityStatus::Feasible
    }

    fn feasible(x: Vec<f64>, violation: f64, iterations: usize) -> Self {
        Self {
            status: FeasibilityStatus::Feasible,
            x: Some(x),
            max_violation: violation,
            iterations,
        }
    }

    fn other(status: FeasibilityStatus, violation: f64, iterations: usize) -> Self {
        Self {
            status,
            x: None,
            max_violation: violation,
            iterations,
        }
    }
}

struct Iterate {
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    s: Vec<f64>,
    tau: f64,
    kappa: f64,
}

struct Direction {
    dx: Vec<f64>,
    dy: Vec<f64>,
    dz: Vec<f64>,
    ds: Vec<f64>,
    dtau: f64,
    dkappa: f64,
}

struct Residuals {
    rx: Vec<f64>,
    ry: Vec<f64>,
    rz: Vec<f64>,
    rt: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    cone::dot(a, b)
}

fn residuals(p: &ConeProblem, it: &Iterate) -> Residuals {
    let mut rx: Vec<f64> = p.q.iter().map(|q| q * it.tau).collect();
    p.a_tmul_add(&it.y, &mut rx);
    p.g_tmul_add(&it.z, &mut rx);
    let ax = p.a_mul(&it.x);
    let ry = p.b.iter().zip(&ax).map(|(b, a)| b * it.tau - a).collect();
    let gx = p.g_mul(&it.x);
    let rz = it
        .s
        .iter()
        .zip(gx.iter().zip(&p.h))
        .map(|(s, (g, h))| s + g - h * it.tau)
        .collect();
    let rt = it.kappa + dot(&p.q, &it.x) + dot(&p.b, &it.y) + dot(&p.h, &it.z);
    Residuals { rx, ry, rz, rt }
}

/// Candidate point for the original program: `x/τ` projected onto the equalities.
fn candidate(p: &ConeProblem, it: &Iterate) -> Vec<f64> {
    let mut x: Vec<f64> = it.x[..p.slack].iter().map(|v| v / it.tau).collect();
    p.project_onto_equalities(&mut x);
    x
}

/// Solves a feasibility problem over second-order cones and linear equalities.
///
/// A `Feasible` status is only returned together with a point whose
/// [`SocProgram::check_point`] value is at most `settings.feas_tol`.
/// `Infeasible` means the smallest achievable violation was certified to
/// exceed the tolerance (or the equalities are contradictory).
pub fn solve_feasibility(program: &SocProgram, settings: &SolverSettings) -> FeasibilityResult {
    let tol = settings.feas_tol;
    let check = |x: &[f64]| program.check_point(x).expect("candidate has program dimension");

    let origin = vec![0.0; program.num_vars()];
    let v0 = check(&origin);
    if v0 <= tol {
        return FeasibilityResult::feasible(origin, v0, 0);
    }

    let prob = match ConeProblem::build(program, tol) {
        Presolve::Ready(p) => p,
        Presolve::Inconsistent(mismatch) => {
            return FeasibilityResult::other(FeasibilityStatus::Infeasible, mismatch, 0)
        }
    };
    let mut origin = origin;
    prob.project_onto_equalities(&mut origin);
    let v0 = check(&origin);
    if v0 <= tol {
        return FeasibilityResult::feasible(origin, v0, 0);
    }

    Ipm::new(&prob, settings).run(&check)
}

struct Ipm<'a> {
    p: &'a ConeProblem,
    settings: &'a SolverSettings,
    degree: f64,
    bnorm: f64,
    hnorm: f64,
    qnorm: f64,
}

impl<'a> Ipm<'a> {
    fn new(p: &'a ConeProblem, settings: &'a SolverSettings) -> Self {
        let norm = |v: &[f64]| dot(v, v).sqrt();
        Self {
            p,
            settings,
            degree: cone::total_degree(&p.cones) as f64,
            bnorm: norm(&p.b),
            hnorm: norm(&p.h),
            qnorm: norm(&p.q),
        }
    }

    fn initial_point(&self) -> Option<Iterate> {
        let p = self.p;
        let (n, m) = (p.n, p.m());
        let identity = Scaling::identity(&p.cones, m);
        let kkt = Kkt::factor(p, &identity).ok()?;
        let (x, _, zp) = kkt.solve(&vec![0.0; n], &p.b, &p.h);
        let mut s: Vec<f64> = zp.iter().map(|v| -v).collect();
        cone::shift_to_interior(&p.cones, &mut s);
        let neg_q: Vec<f64> = p.q.iter().map(|v| -v).collect();
        let (_, y, mut z) = kkt.solve(&neg_q, &vec![0.0; p.a.len()], &vec![0.0; m]);
        cone::shift_to_interior(&p.cones, &mut z);
        Some(Iterate {
            x,
            y,
            z,
            s,
            tau: 1.0,
            kappa: 1.0,
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn direction(
        &self,
        kkt: &Kkt<'_>,
        scaling: &Scaling,
        u1: &(Vec<f64>, Vec<f64>, Vec<f64>),
        it: &Iterate,
        res: &Residuals,
        eta: f64,
        rs: &[f64],
        rk: f64,
    ) -> Direction {
        let p = self.p;
        let cones = &p.cones;
        let m = p.m();
        let mut t = vec![0.0; m];
        cone::circ_div(cones, &scaling.lambda, rs, &mut t);
        let mut wt = vec![0.0; m];
        scaling.apply_w(cones, &t, &mut wt);

        let r1: Vec<f64> = res.rx.iter().map(|v| -eta * v).collect();
        let r2: Vec<f64> = res.ry.iter().map(|v| eta * v).collect();
        let r3: Vec<f64> = res.rz.iter().zip(&wt).map(|(r, w)| -eta * r - w).collect();
        let r4 = -eta * res.rt;
        let (dx2, dy2, dz2) = kkt.solve(&r1, &r2, &r3);

        let ctu = |dx: &[f64], dy: &[f64], dz: &[f64]| dot(&p.q, dx) + dot(&p.b, dy) + dot(&p.h, dz);
        let (dx1, dy1, dz1) = u1;
        let denom = ctu(dx1, dy1, dz1) - it.kappa / it.tau;
        let dtau = (r4 - rk / it.tau - ctu(&dx2, &dy2, &dz2)) / denom;

        let comb = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x + dtau * y).collect::<Vec<f64>>();
        let dx = comb(&dx2, dx1);
        let dy = comb(&dy2, dy1);
        let dz = comb(&dz2, dz1);

        // ds = W (λ \ rs − W dz)
        let mut wdz = vec![0.0; m];
        scaling.apply_w(cones, &dz, &mut wdz);
        let inner: Vec<f64> = t.iter().zip(&wdz).map(|(a, b)| a - b).collect();
        let mut ds = vec![0.0; m];
        scaling.apply_w(cones, &inner, &mut ds);
        let dkappa = (rk - it.kappa * dtau) / it.tau;
        Direction {
            dx,
            dy,
            dz,
            ds,
            dtau,
            dkappa,
        }
    }

    fn max_step(&self, it: &Iterate, d: &Direction) -> f64 {
        let cones = &self.p.cones;
        let mut step = cone::max_step(cones, &it.s, &d.ds).min(cone::max_step(cones, &it.z, &d.dz));
        if d.dtau < 0.0 {
            step = step.min(-it.tau / d.dtau);
        }
        if d.dkappa < 0.0 {
            step = step.min(-it.kappa / d.dkappa);
        }
        step
    }

    fn run(&self, check: &dyn Fn(&[f64]) -> f64) -> FeasibilityResult {
        use FeasibilityStatus::*;
        let p = self.p;
        let tol = self.settings.feas_tol;
        let eps = self.settings.ipm_tol;
        let cones = &p.cones;
        let m = p.m();
        let mut best = f64::INFINITY;

        let Some(mut it) = self.initial_point() else {
            return FeasibilityResult::other(NumericalFailure, best, 0);
        };

        for iter in 0..self.settings.max_iter {
            let x = candidate(p, &it);
            let v = check(&x);
            if v <= tol {
                return FeasibilityResult::feasible(x, v, iter);
            }
            best = best.min(v);

            let res = residuals(p, &it);
            let tau = it.tau;
            let pres = (inf_norm(&res.ry) / (1.0 + self.bnorm)).max(inf_norm(&res.rz) / (1.0 + self.hnorm)) / tau;
            let dres = inf_norm(&res.rx) / (1.0 + self.qnorm) / tau;
            let pcost = dot(&p.q, &it.x) / tau;
            let dcost = -(dot(&p.b, &it.y) + dot(&p.h, &it.z)) / tau;
            let gap = dot(&it.s, &it.z) / (tau * tau);
            if pres < eps && dres < eps {
                // Weak duality: the optimal slack is at least `dcost` (up to residuals).
                if dcost > (10.0 * tol).max(tol + 1e-6) {
                    return FeasibilityResult::other(Infeasible, dcost, iter);
                }
                if gap < eps || gap < eps * dcost.abs().max(pcost.abs()) {
                    // Optimal slack near zero but no verified point: treat as infeasible.
                    return FeasibilityResult::other(Infeasible, pcost.max(dcost).max(0.0), iter);
                }
            }
            let hz_by = dot(&p.h, &it.z) + dot(&p.b, &it.y);
            if hz_by < 0.0 {
                let mut aty = vec![0.0; p.n];
                p.a_tmul_add(&it.y, &mut aty);
                p.g_tmul_add(&it.z, &mut aty);
                if inf_norm(&aty) / -hz_by < eps {
                    return FeasibilityResult::other(Infeasible, best, iter);
                }
            }

            let Some(scaling) = Scaling::nesterov_todd(cones, &it.s, &it.z) else {
                return FeasibilityResult::other(NumericalFailure, best, iter);
            };
            let Ok(kkt) = Kkt::factor(p, &scaling) else {
                return FeasibilityResult::other(NumericalFailure, best, iter);
            };
            let neg_q: Vec<f64> = p.q.iter().map(|v| -v).collect();
            let u1 = kkt.solve(&neg_q, &p.b, &p.h);

            let mu = (dot(&it.s, &it.z) + it.tau * it.kappa) / (self.degree + 1.0);
            let lambda = &scaling.lambda;
            let mut ll = vec![0.0; m];
            cone::circ(cones, lambda, lambda, &mut ll);

            // Predictor.
            let rs_aff: Vec<f64> = ll.iter().map(|v| -v).collect();
            let rk_aff = -it.tau * it.kappa;
            let aff = self.direction(&kkt, &scaling, &u1, &it, &res, 1.0, &rs_aff, rk_aff);
            let alpha_aff = self.max_step(&it, &aff).min(1.0);
            let sigma = (1.0 - alpha_aff).powi(3);

            // Corrector.
            let mut wids = vec![0.0; m];
            scaling.apply_winv(cones, &aff.ds, &mut wids);
            let mut wdz = vec![0.0; m];
            scaling.apply_w(cones, &aff.dz, &mut wdz);
            let mut cross = vec![0.0; m];
            cone::circ(cones, &wids, &wdz, &mut cross);
            let mut rs: Vec<f64> = ll.iter().zip(&cross).map(|(a, b)| -a - b).collect();
            cone::add_identity_all(cones, &mut rs, sigma * mu);
            let rk = -it.tau * it.kappa + sigma * mu - aff.dtau * aff.dkappa;
            let dir = self.direction(&kkt, &scaling, &u1, &it, &res, 1.0 - sigma, &rs, rk);
            let alpha = (0.99 * self.max_step(&it, &dir)).min(1.0);
            if !(alpha > 1e-12) {
                let status = if pres < 1e-6 && dres < 1e-6 && dcost > 10.0 * tol + 1e-5 {
                    Infeasible
                } else {
                    NumericalFailure
                };
                return FeasibilityResult::other(status, best, iter);
            }

            let upd = |v: &mut [f64], d: &[f64]| v.iter_mut().zip(d).for_each(|(a, b)| *a += alpha * b);
            upd(&mut it.x, &dir.dx);
            upd(&mut it.y, &dir.dy);
            upd(&mut it.z, &dir.dz);
            upd(&mut it.s, &dir.ds);
            it.tau += alpha * dir.dtau;
            it.kappa += alpha * dir.dkappa;

            // Keep the homogeneous iterate at unit scale.
            let scale = it.tau.max(it.kappa);
            if !(1e-8..=1e8).contains(&scale) {
                for v in [&mut it.x, &mut it.y, &mut it.z, &mut it.s] {
                    v.iter_mut().for_each(|a| *a /= scale);
                }
                it.tau /= scale;
                it.kappa /= scale;
            }
        }
        FeasibilityResult::other(NumericalFailure, best, self.settings.max_iter)
    }
}
