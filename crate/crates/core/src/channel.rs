//! Small-scale fading, uplink pilot reception and MMSE channel estimation
//! under pilot contamination.

use std::io::Write;

use faer::{c64, Mat};
use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;

/// Unit-variance circularly-symmetric complex normal sample.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> c64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// i.i.d. CN(0, 1) matrix, filled column by column.
pub fn draw_small_scale<R: Rng + ?Sized>(num_aps: usize, num_ues: usize, rng: &mut R) -> Mat<c64> {
    let mut h = Mat::<c64>::zeros(num_aps, num_ues);
    for k in 0..num_ues {
        for m in 0..num_aps {
            h[(m, k)] = complex_normal(rng);
        }
    }
    h
}

/// `g_mk = √β_mk · h_mk`
pub fn compose_channel(beta: &Mat<f64>, h: &Mat<c64>) -> Mat<c64> {
    Mat::from_fn(h.nrows(), h.ncols(), |m, k| h[(m, k)] * beta[(m, k)].sqrt())
}

/// Orthonormal uplink pilot sequences and their assignment to users.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotBook {
    tau_p: usize,
    base: Vec<Vec<c64>>,
    assignment: Vec<usize>,
}

impl PilotBook {
    /// DFT basis of length `tau_p` with the given per-user indices.
    pub fn new(tau_p: usize, assignment: Vec<usize>) -> Self {
        assert!(tau_p > 0, "pilot length must be positive");
        assert!(assignment.iter().all(|&a| a < tau_p), "pilot index out of range");
        let scale = 1.0 / (tau_p as f64).sqrt();
        let base = (0..tau_p)
            .map(|j| {
                (0..tau_p)
                    .map(|t| {
                        let phase = -2.0 * std::f64::consts::PI * (j * t % tau_p) as f64 / tau_p as f64;
                        c64::cis(phase) * scale
                    })
                    .collect()
            })
            .collect();
        Self {
            tau_p,
            base,
            assignment,
        }
    }

    /// Random assignment: with replacement when `tau_p < K`, distinct indices otherwise.
    pub fn random<R: Rng + ?Sized>(tau_p: usize, num_ues: usize, rng: &mut R) -> Self {
        let assignment = if tau_p < num_ues {
            (0..num_ues).map(|_| rng.random_range(0..tau_p)).collect()
        } else {
            index::sample(rng, tau_p, num_ues).into_vec()
        };
        Self::new(tau_p, assignment)
    }

    pub fn tau_p(&self) -> usize {
        self.tau_p
    }

    pub fn num_ues(&self) -> usize {
        self.assignment.len()
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn sequence(&self, ue: usize) -> &[c64] {
        &self.base[self.assignment[ue]]
    }

    /// `|φ_kᴴ φ_i|²`, exactly 0 or 1 for this basis.
    pub fn overlap(&self, k: usize, i: usize) -> f64 {
        if self.assignment[k] == self.assignment[i] {
            1.0
        } else {
            0.0
        }
    }
}

/// Received pilot block at each AP, `M × τ_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct UplinkPilotRx {
    pub y: Mat<c64>,
}

fn receive(g: &Mat<c64>, pilots: &PilotBook, rho_p: f64, mut noise: impl FnMut() -> c64) -> UplinkPilotRx {
    let (m, k) = (g.nrows(), g.ncols());
    let tau = pilots.tau_p();
    let amp = (tau as f64 * rho_p).sqrt();
    let mut y = Mat::<c64>::zeros(m, tau);
    for t in 0..tau {
        for a in 0..m {
            let mut v = c64::new(0.0, 0.0);
            for u in 0..k {
                v += g[(a, u)] * pilots.sequence(u)[t];
            }
            y[(a, t)] = v * amp + noise();
        }
    }
    UplinkPilotRx { y }
}

/// `y_m = √(τ_p ρ_p) Σ_k g_mk φ_k + n_m` with unit-variance complex noise.
pub fn uplink_pilot_receive<R: Rng + ?Sized>(g: &Mat<c64>, pilots: &PilotBook, rho_p: f64, rng: &mut R) -> UplinkPilotRx {
    receive(g, pilots, rho_p, || complex_normal(rng))
}

/// Noise-free reception, for tests and diagnostics.
pub fn uplink_pilot_noiseless(g: &Mat<c64>, pilots: &PilotBook, rho_p: f64) -> UplinkPilotRx {
    receive(g, pilots, rho_p, || c64::new(0.0, 0.0))
}

/// MMSE estimates, their variances γ and the error variances δ = β − γ.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    pub g_hat: Mat<c64>,
    pub gamma: Mat<f64>,
    pub delta: Mat<f64>,
}

pub fn mmse_estimate(rx: &UplinkPilotRx, pilots: &PilotBook, beta: &Mat<f64>, rho_p: f64) -> ChannelEstimate {
    let (m, k) = (beta.nrows(), beta.ncols());
    let tp = pilots.tau_p() as f64 * rho_p;
    let sqrt_tp = tp.sqrt();
    let mut g_hat = Mat::<c64>::zeros(m, k);
    let mut gamma = Mat::<f64>::zeros(m, k);
    let mut delta = Mat::<f64>::zeros(m, k);
    for u in 0..k {
        let phi = pilots.sequence(u);
        for a in 0..m {
            let contamination: f64 = (0..k).map(|i| beta[(a, i)] * pilots.overlap(u, i)).sum();
            let denom = tp * contamination + 1.0;
            let b = beta[(a, u)];
            let proj: c64 = phi.iter().enumerate().map(|(t, p)| p.conj() * rx.y[(a, t)]).sum();
            g_hat[(a, u)] = proj * (sqrt_tp * b / denom);
            gamma[(a, u)] = tp * b * b / denom;
            delta[(a, u)] = b - gamma[(a, u)];
        }
    }
    ChannelEstimate { g_hat, gamma, delta }
}

/// True channels together with the CU's estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelState {
    pub g: Mat<c64>,
    pub g_hat: Mat<c64>,
    pub gamma: Mat<f64>,
    pub delta: Mat<f64>,
}

impl ChannelState {
    pub fn new(g: Mat<c64>, est: ChannelEstimate) -> Self {
        Self {
            g,
            g_hat: est.g_hat,
            gamma: est.gamma,
            delta: est.delta,
        }
    }
}

/// Writes `ap,ue,beta,gamma,delta` rows for inspection.
pub fn write_estimate_csv<W: Write>(out: W, beta: &Mat<f64>, state: &ChannelState) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["ap", "ue", "beta", "gamma", "delta"])?;
    for m in 0..beta.nrows() {
        for k in 0..beta.ncols() {
            w.write_record([
                m.to_string(),
                k.to_string(),
                format!("{:.8e}", beta[(m, k)]),
                format!("{:.8e}", state.gamma[(m, k)]),
                format!("{:.8e}", state.delta[(m, k)]),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn small_scale_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = draw_small_scale(1000, 1000, &mut rng);
        let n = 1e6;
        let mut mean = c64::new(0.0, 0.0);
        let mut power = 0.0;
        for k in 0..1000 {
            for m in 0..1000 {
                mean += h[(m, k)];
                power += h[(m, k)].norm_sqr();
            }
        }
        mean /= n;
        assert!(mean.norm() < 0.01);
        assert!((power / n - 1.0).abs() < 0.01);
        let again = draw_small_scale(1000, 1000, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(h, again);
    }

    #[test]
    fn pilot_basis_is_orthonormal() {
        let book = PilotBook::new(5, vec![0, 1, 2, 3, 4]);
        for k in 0..5 {
            for i in 0..5 {
                let ip: c64 = book
                    .sequence(k)
                    .iter()
                    .zip(book.sequence(i))
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                let expect = if k == i { 1.0 } else { 0.0 };
                assert!((ip.norm_sqr() - expect).abs() < 1e-12);
                assert_eq!(book.overlap(k, i), expect);
            }
        }
    }

    #[test]
    fn random_assignment_rules() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let distinct = PilotBook::random(10, 6, &mut rng);
        let mut a = distinct.assignment().to_vec();
        a.sort_unstable();
        a.dedup();
        assert_eq!(a.len(), 6);
        let shared = PilotBook::random(3, 12, &mut rng);
        assert!(shared.assignment().iter().all(|&i| i < 3));
        assert_eq!(shared.num_ues(), 12);
    }

    #[test]
    fn noiseless_reception_examples() {
        let book = PilotBook::new(4, vec![0]);
        let zero = Mat::<c64>::zeros(3, 1);
        let rx = uplink_pilot_noiseless(&zero, &book, 10.0);
        assert!(rx.y.col_iter().all(|c| c.iter().all(|v| v.norm() == 0.0)));

        let g = Mat::from_fn(2, 1, |m, _| c64::new(1.0 + m as f64, -0.5));
        let rx = uplink_pilot_noiseless(&g, &book, 10.0);
        let amp = (40.0f64).sqrt();
        for m in 0..2 {
            for t in 0..4 {
                let expect = g[(m, 0)] * book.sequence(0)[t] * amp;
                assert!((rx.y[(m, t)] - expect).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn gamma_examples() {
        // K = 1, τ_p ρ_p = 10, β = 1 → γ = 10/11
        let book = PilotBook::new(1, vec![0]);
        let beta = Mat::from_fn(1, 1, |_, _| 1.0);
        let rx = UplinkPilotRx {
            y: Mat::zeros(1, 1),
        };
        let est = mmse_estimate(&rx, &book, &beta, 10.0);
        assert!(close(est.gamma[(0, 0)], 10.0 / 11.0, 1e-12));
        assert!(close(est.delta[(0, 0)], 1.0 / 11.0, 1e-12));

        let est = mmse_estimate(&rx, &book, &beta, 1e12);
        assert!(close(est.gamma[(0, 0)], 1.0, 1e-9));

        // two users on one pilot, equal β
        let book = PilotBook::new(2, vec![1, 1]);
        let b = 0.3;
        let beta = Mat::from_fn(1, 2, |_, _| b);
        let rx = UplinkPilotRx {
            y: Mat::zeros(1, 2),
        };
        let tp = 2.0 * 5.0;
        let est = mmse_estimate(&rx, &book, &beta, 5.0);
        for k in 0..2 {
            assert!(close(est.gamma[(0, k)], tp * b * b / (2.0 * tp * b + 1.0), 1e-12));
        }
    }

    #[test]
    fn delta_identity_and_contamination_penalty() {
        let beta = Mat::from_fn(4, 6, |m, k| 0.1 + 0.05 * (m + 2 * k) as f64);
        let orth = PilotBook::new(6, (0..6).collect());
        let shared = PilotBook::new(6, vec![0, 0, 1, 2, 3, 4]);
        let rx = UplinkPilotRx {
            y: Mat::zeros(4, 6),
        };
        let a = mmse_estimate(&rx, &orth, &beta, 3.0);
        let b = mmse_estimate(&rx, &shared, &beta, 3.0);
        for m in 0..4 {
            for k in 0..6 {
                assert_eq!(a.delta[(m, k)], beta[(m, k)] - a.gamma[(m, k)]);
                assert!(a.gamma[(m, k)] >= 0.0 && a.gamma[(m, k)] <= beta[(m, k)]);
                if k < 2 {
                    assert!(b.gamma[(m, k)] < a.gamma[(m, k)]);
                } else {
                    assert_eq!(b.gamma[(m, k)], a.gamma[(m, k)]);
                }
            }
        }
    }

    #[test]
    fn estimate_is_linear_in_observation() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let book = PilotBook::random(3, 5, &mut rng);
        let beta = Mat::from_fn(4, 5, |m, k| 0.2 + 0.1 * ((m * 5 + k) % 7) as f64);
        let y = draw_small_scale(4, 3, &mut rng);
        let alpha = c64::new(-1.5, 0.75);
        let y2 = Mat::from_fn(4, 3, |i, j| y[(i, j)] * alpha);
        let e1 = mmse_estimate(&UplinkPilotRx { y }, &book, &beta, 2.0);
        let e2 = mmse_estimate(&UplinkPilotRx { y: y2 }, &book, &beta, 2.0);
        for m in 0..4 {
            for k in 0..5 {
                assert!((e2.g_hat[(m, k)] - e1.g_hat[(m, k)] * alpha).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn csv_dump_has_header_and_rows() {
        let beta = Mat::from_fn(2, 2, |_, _| 1.0);
        let book = PilotBook::new(2, vec![0, 1]);
        let rx = UplinkPilotRx { y: Mat::zeros(2, 2) };
        let est = mmse_estimate(&rx, &book, &beta, 1.0);
        let state = ChannelState::new(Mat::zeros(2, 2), est);
        let mut buf = Vec::new();
        write_estimate_csv(&mut buf, &beta, &state).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(text.starts_with("ap,ue,beta,gamma,delta"));
    }
}
