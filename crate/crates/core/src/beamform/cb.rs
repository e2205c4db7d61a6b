use cfmimo_socp::{solve_feasibility, FeasibilityStatus, SocBlock, SocProgram, SparseVec};
use faer::{c64, Mat};

use super::bisect::{bisect, BisectLog, Probe};
use super::zf::halfspace;
use super::{check_shapes, cu_sinr, sinr_upper_bound, BeamformSettings, Precoder};
use crate::error::BeamformError;

/// Conjugate beamforming `w_mk = x_mk ĝ*_mk / |ĝ_mk|` with max-min amplitudes `x_mk ≥ 0`.
///
/// The variables are the `M·K` amplitudes, user-major. Links with `ĝ_mk = 0`
/// carry no power.
pub fn cb_precoder(
    g_hat: &Mat<c64>,
    delta: &Mat<f64>,
    rho_d: f64,
    settings: &BeamformSettings,
) -> Result<(Precoder, BisectLog), BeamformError> {
    check_shapes(g_hat, delta, rho_d)?;
    let (m_aps, k_ues) = (g_hat.nrows(), g_hat.ncols());
    let var = |m: usize, k: usize| k * m_aps + m;
    let phase = Mat::from_fn(m_aps, k_ues, |m, k| {
        let g = g_hat[(m, k)];
        if g.norm() == 0.0 {
            c64::new(0.0, 0.0)
        } else {
            g.conj() / g.norm()
        }
    });
    let s = rho_d.sqrt();

    let mut base = SocProgram::new(m_aps * k_ues);
    for k in 0..k_ues {
        for m in 0..m_aps {
            if g_hat[(m, k)].norm() == 0.0 {
                base.add_equality(SparseVec::unit(var(m, k)), 0.0).expect("index");
            } else {
                base.add_block(halfspace(SparseVec::unit(var(m, k)), 0.0)).expect("index");
            }
        }
    }
    for m in 0..m_aps {
        let rows = (0..k_ues).map(|i| SparseVec::unit(var(m, i))).collect();
        base.add_block(SocBlock::new(rows, vec![0.0; k_ues], SparseVec::new(), 1.0).expect("shape"))
            .expect("index");
    }
    // Constant rows of every SINR block; only the cone axis depends on γ.
    let sinr_rows: Vec<Vec<SparseVec>> = (0..k_ues)
        .map(|k| {
            let mut rows = Vec::with_capacity(2 * (k_ues - 1) + m_aps * k_ues + 1);
            for i in (0..k_ues).filter(|&i| i != k) {
                let mut re = SparseVec::with_capacity(m_aps);
                let mut im = SparseVec::with_capacity(m_aps);
                for m in 0..m_aps {
                    let v = g_hat[(m, k)] * phase[(m, i)] * s;
                    re.push(var(m, i), v.re);
                    im.push(var(m, i), v.im);
                }
                rows.push(re);
                rows.push(im);
            }
            for i in 0..k_ues {
                for m in 0..m_aps {
                    let mut r = SparseVec::new();
                    r.push(var(m, i), (rho_d * delta[(m, k)]).sqrt());
                    rows.push(r);
                }
            }
            rows.push(SparseVec::new());
            rows
        })
        .collect();

    let hi = sinr_upper_bound(g_hat, rho_d);
    let (w, _, log) = bisect(hi, settings.bisect_tol, |gamma| {
        let mut prog = base.clone();
        for (k, rows) in sinr_rows.iter().enumerate() {
            let mut b = vec![0.0; rows.len()];
            *b.last_mut().expect("nonempty") = 1.0;
            let mut c = SparseVec::with_capacity(m_aps);
            for m in 0..m_aps {
                c.push(var(m, k), s * g_hat[(m, k)].norm() / gamma.sqrt());
            }
            prog.add_block(SocBlock::new(rows.clone(), b, c, 0.0).expect("shape"))
                .expect("index");
        }
        let res = solve_feasibility(&prog, &settings.solver);
        let outcome = match (res.status, res.x) {
            (FeasibilityStatus::Feasible, Some(x)) => {
                let w = Mat::from_fn(m_aps, k_ues, |m, k| phase[(m, k)] * x[var(m, k)].max(0.0));
                let w = Precoder::new(w).clamp_power().w;
                let achieved = cu_sinr(g_hat, delta, &w, rho_d).min_gamma;
                Probe::Feasible(w, achieved)
            }
            (FeasibilityStatus::Infeasible, _) => Probe::Infeasible,
            _ => Probe::Failed,
        };
        (outcome, res.iterations)
    })?;
    Ok((Precoder::new(w), log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamform::maxmin_ob;
    use crate::channel::complex_normal;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn phases_are_conjugate() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let g = Mat::from_fn(5, 3, |_, _| complex_normal(&mut rng));
        let delta = Mat::from_fn(5, 3, |_, _| 0.1);
        let (p, _) = cb_precoder(&g, &delta, 4.0, &BeamformSettings::default()).unwrap();
        assert!(p.max_power() <= 1.0 + 1e-9);
        for k in 0..3 {
            for m in 0..5 {
                let w = p.w[(m, k)];
                if w.norm() > 1e-12 {
                    let prod = w * g[(m, k)];
                    assert!(prod.im.abs() <= 1e-12 * prod.norm() && prod.re > 0.0);
                }
            }
        }
    }

    #[test]
    fn single_user_matches_optimal() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let g = Mat::from_fn(4, 1, |_, _| complex_normal(&mut rng));
        let delta = Mat::zeros(4, 1);
        let settings = BeamformSettings::default();
        let (p, _) = cb_precoder(&g, &delta, 3.0, &settings).unwrap();
        let cb = cu_sinr(&g, &delta, &p.w, 3.0).min_gamma;
        let (_, ob, _) = maxmin_ob(&g, &delta, 3.0, &settings).unwrap();
        let s: f64 = g.col(0).iter().map(|v| v.norm()).sum();
        assert!((cb / (3.0 * s * s) - 1.0).abs() < 1e-3);
        assert!((cb / ob - 1.0).abs() < 2e-3);
    }

    #[test]
    fn dead_link_gets_no_power() {
        let mut g = Mat::from_fn(3, 2, |m, k| c64::new(1.0 + m as f64, k as f64));
        g[(1, 0)] = c64::new(0.0, 0.0);
        let (p, _) = cb_precoder(&g, &Mat::zeros(3, 2), 2.0, &BeamformSettings::default()).unwrap();
        assert!(p.w[(1, 0)].norm() < 1e-7);
    }
}
