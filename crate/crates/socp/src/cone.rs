//! Symmetric cone algebra for products of nonnegative orthants and
//! second-order cones, including Nesterov–Todd scaling.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Cone {
    Nonneg { offset: usize, dim: usize },
    Soc { offset: usize, dim: usize },
}

impl Cone {
    pub fn range(&self) -> std::ops::Range<usize> {
        match *self {
            Cone::Nonneg { offset, dim } | Cone::Soc { offset, dim } => offset..offset + dim,
        }
    }

    pub fn degree(&self) -> usize {
        match *self {
            Cone::Nonneg { dim, .. } => dim,
            Cone::Soc { .. } => 1,
        }
    }
}

pub(crate) fn total_degree(cones: &[Cone]) -> usize {
    cones.iter().map(Cone::degree).sum()
}

/// `u0² − ‖u1‖²` computed as a product of sum and difference.
fn soc_det(u: &[f64]) -> f64 {
    let tail = norm(&u[1..]);
    (u[0] - tail) * (u[0] + tail)
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Smallest "eigenvalue" of `u` with respect to the cone; positive iff interior.
fn min_eig(cone: &Cone, u: &[f64]) -> f64 {
    match cone {
        Cone::Nonneg { .. } => u.iter().copied().fold(f64::INFINITY, f64::min),
        Cone::Soc { .. } => u[0] - norm(&u[1..]),
    }
}

/// Moves `u` into the interior: `u + (1 + α) e` when its smallest eigenvalue `−α` is not positive.
pub(crate) fn shift_to_interior(cones: &[Cone], u: &mut [f64]) {
    for cone in cones {
        let seg = &mut u[cone.range()];
        let alpha = -min_eig(cone, seg);
        if alpha >= 0.0 {
            add_identity(cone, seg, 1.0 + alpha);
        }
    }
}

fn add_identity(cone: &Cone, seg: &mut [f64], t: f64) {
    match cone {
        Cone::Nonneg { .. } => seg.iter_mut().for_each(|x| *x += t),
        Cone::Soc { .. } => seg[0] += t,
    }
}

/// `u += t e` on every cone.
pub(crate) fn add_identity_all(cones: &[Cone], u: &mut [f64], t: f64) {
    for cone in cones {
        add_identity(cone, &mut u[cone.range()], t);
    }
}

/// Largest `α ≥ 0` with `u + α du` in the closed cone (`u` interior). May be infinite.
pub(crate) fn max_step(cones: &[Cone], u: &[f64], du: &[f64]) -> f64 {
    let mut best = f64::INFINITY;
    for cone in cones {
        let r = cone.range();
        let (u, du) = (&u[r.clone()], &du[r]);
        let step = match cone {
            Cone::Nonneg { .. } => u
                .iter()
                .zip(du)
                .filter(|(_, &d)| d < 0.0)
                .map(|(&x, &d)| -x / d)
                .fold(f64::INFINITY, f64::min),
            Cone::Soc { .. } => soc_max_step(u, du),
        };
        best = best.min(step);
    }
    best
}

fn soc_max_step(u: &[f64], du: &[f64]) -> f64 {
    // det(u + α du) = a α² + 2 b α + c with c > 0; the first positive root is the exit.
    let a = du[0] * du[0] - dot(&du[1..], &du[1..]);
    let b = u[0] * du[0] - dot(&u[1..], &du[1..]);
    let c = soc_det(u).max(0.0);
    let scale = a.abs().max(b.abs()).max(c);
    if scale == 0.0 {
        return f64::INFINITY;
    }
    let mut step = f64::INFINITY;
    if a.abs() <= 1e-300_f64.max(f64::EPSILON * scale * 1e-6) {
        if b < 0.0 {
            step = -c / (2.0 * b);
        }
    } else {
        let disc = b * b - a * c;
        if disc >= 0.0 {
            let q = -(b + b.signum() * disc.sqrt());
            for root in [q / a, if q != 0.0 { c / q } else { f64::INFINITY }] {
                if root > 0.0 {
                    step = step.min(root);
                }
            }
        }
    }
    // Leaving through the apex when the quadratic has no positive root.
    if du[0] < 0.0 {
        step = step.min(-u[0] / du[0]);
    }
    step
}

/// `u ∘ v` (Jordan product).
pub(crate) fn circ(cones: &[Cone], u: &[f64], v: &[f64], out: &mut [f64]) {
    for cone in cones {
        let r = cone.range();
        let (u, v, o) = (&u[r.clone()], &v[r.clone()], &mut out[r]);
        match cone {
            Cone::Nonneg { .. } => {
                for i in 0..u.len() {
                    o[i] = u[i] * v[i];
                }
            }
            Cone::Soc { .. } => {
                o[0] = dot(u, v);
                for i in 1..u.len() {
                    o[i] = u[0] * v[i] + v[0] * u[i];
                }
            }
        }
    }
}

/// Solves `λ ∘ x = r` for `x`.
pub(crate) fn circ_div(cones: &[Cone], lambda: &[f64], r: &[f64], out: &mut [f64]) {
    for cone in cones {
        let rg = cone.range();
        let (l, r, o) = (&lambda[rg.clone()], &r[rg.clone()], &mut out[rg]);
        match cone {
            Cone::Nonneg { .. } => {
                for i in 0..l.len() {
                    o[i] = r[i] / l[i];
                }
            }
            Cone::Soc { .. } => {
                let det = soc_det(l);
                let x0 = (l[0] * r[0] - dot(&l[1..], &r[1..])) / det;
                o[0] = x0;
                for i in 1..l.len() {
                    o[i] = (r[i] - x0 * l[i]) / l[0];
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
enum BlockScaling {
    Nonneg { w: Vec<f64> },
    Soc { eta: f64, wbar: Vec<f64> },
}

/// Nesterov–Todd scaling `W` with `W z = W⁻¹ s = λ`.
#[derive(Debug, Clone)]
pub(crate) struct Scaling {
    blocks: Vec<BlockScaling>,
    pub lambda: Vec<f64>,
}

impl Scaling {
    pub fn identity(cones: &[Cone], m: usize) -> Self {
        let blocks = cones
            .iter()
            .map(|c| match *c {
                Cone::Nonneg { dim, .. } => BlockScaling::Nonneg { w: vec![1.0; dim] },
                Cone::Soc { dim, .. } => {
                    let mut wbar = vec![0.0; dim];
                    wbar[0] = 1.0;
                    BlockScaling::Soc { eta: 1.0, wbar }
                }
            })
            .collect();
        Self {
            blocks,
            lambda: vec![0.0; m],
        }
    }

    /// Returns `None` if `s` or `z` is not strictly interior.
    pub fn nesterov_todd(cones: &[Cone], s: &[f64], z: &[f64]) -> Option<Self> {
        let mut blocks = Vec::with_capacity(cones.len());
        for cone in cones {
            let r = cone.range();
            let (s, z) = (&s[r.clone()], &z[r]);
            match cone {
                Cone::Nonneg { .. } => {
                    if s.iter().chain(z).any(|&x| x <= 0.0) {
                        return None;
                    }
                    let w = s.iter().zip(z).map(|(a, b)| (a / b).sqrt()).collect();
                    blocks.push(BlockScaling::Nonneg { w });
                }
                Cone::Soc { .. } => {
                    let sres = soc_det(s);
                    let zres = soc_det(z);
                    if !(sres > 0.0 && zres > 0.0 && s[0] > 0.0 && z[0] > 0.0) {
                        return None;
                    }
                    let (ss, zs) = (sres.sqrt(), zres.sqrt());
                    let sbar: Vec<f64> = s.iter().map(|x| x / ss).collect();
                    let zbar: Vec<f64> = z.iter().map(|x| x / zs).collect();
                    let gamma = ((1.0 + dot(&sbar, &zbar)) / 2.0).sqrt();
                    let mut wbar: Vec<f64> = Vec::with_capacity(s.len());
                    wbar.push((sbar[0] + zbar[0]) / (2.0 * gamma));
                    for i in 1..s.len() {
                        wbar.push((sbar[i] - zbar[i]) / (2.0 * gamma));
                    }
                    // Re-normalise so that wbarᵀ J wbar = 1 holds to rounding.
                    wbar[0] = (1.0 + dot(&wbar[1..], &wbar[1..])).sqrt();
                    let eta = (sres / zres).sqrt().sqrt();
                    blocks.push(BlockScaling::Soc { eta, wbar });
                }
            }
        }
        let mut scaling = Self {
            blocks,
            lambda: vec![0.0; s.len()],
        };
        let mut lambda = vec![0.0; s.len()];
        scaling.apply_w(cones, z, &mut lambda);
        scaling.lambda = lambda;
        Some(scaling)
    }

    pub fn apply_w(&self, cones: &[Cone], v: &[f64], out: &mut [f64]) {
        self.apply(cones, v, out, false);
    }

    pub fn apply_winv(&self, cones: &[Cone], v: &[f64], out: &mut [f64]) {
        self.apply(cones, v, out, true);
    }

    fn apply(&self, cones: &[Cone], v: &[f64], out: &mut [f64], inverse: bool) {
        for (cone, block) in cones.iter().zip(&self.blocks) {
            let r = cone.range();
            let (v, o) = (&v[r.clone()], &mut out[r]);
            match block {
                BlockScaling::Nonneg { w } => {
                    for i in 0..v.len() {
                        o[i] = if inverse { v[i] / w[i] } else { v[i] * w[i] };
                    }
                }
                BlockScaling::Soc { eta, wbar } => {
                    let w0 = wbar[0];
                    let w1 = &wbar[1..];
                    let w1v1 = dot(w1, &v[1..]);
                    let (sign, factor) = if inverse { (-1.0, 1.0 / eta) } else { (1.0, *eta) };
                    o[0] = factor * (w0 * v[0] + sign * w1v1);
                    let coef = sign * v[0] + w1v1 / (1.0 + w0);
                    for i in 1..v.len() {
                        o[i] = factor * (v[i] + coef * w1[i - 1]);
                    }
                }
            }
        }
    }

    /// `W⁻²` restricted to one cone, expressed through callbacks so the caller
    /// can accumulate `Gᵀ W⁻² G` without materialising `W⁻¹ G`.
    ///
    /// For an orthant returns per-row weights `1/w²`. For a second-order cone
    /// returns `(1/η², v)` with `W⁻² = (1/η²)(2 v vᵀ − J)` and `v = J w̄`.
    pub fn inverse_square_parts(&self, index: usize) -> InvSquare<'_> {
        match &self.blocks[index] {
            BlockScaling::Nonneg { w } => InvSquare::Diagonal(w),
            BlockScaling::Soc { eta, wbar } => InvSquare::Arrow {
                factor: 1.0 / (eta * eta),
                wbar,
            },
        }
    }
}

pub(crate) enum InvSquare<'a> {
    /// Orthant: `W = diag(w)`.
    Diagonal(&'a [f64]),
    /// Second-order cone scaling data.
    Arrow { factor: f64, wbar: &'a [f64] },
}

#[cfg(test)]
mod tests {
    use super::*;

    fn soc(dim: usize) -> Vec<Cone> {
        vec![Cone::Soc { offset: 0, dim }]
    }

    #[test]
    fn nt_scaling_maps_z_and_s_to_same_point() {
        let cones = vec![Cone::Nonneg { offset: 0, dim: 2 }, Cone::Soc { offset: 2, dim: 3 }];
        let s = [1.0, 2.0, 3.0, 1.0, -0.5];
        let z = [0.5, 4.0, 2.0, -0.3, 1.2];
        let w = Scaling::nesterov_todd(&cones, &s, &z).unwrap();
        let mut ws = vec![0.0; 5];
        w.apply_winv(&cones, &s, &mut ws);
        for i in 0..5 {
            assert!((ws[i] - w.lambda[i]).abs() < 1e-12, "{ws:?} {:?}", w.lambda);
        }
        let mut back = vec![0.0; 5];
        w.apply_w(&cones, &ws, &mut back);
        for i in 0..5 {
            assert!((back[i] - s[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn circ_div_inverts_circ() {
        let cones = soc(4);
        let l = [3.0, 1.0, -0.5, 0.7];
        let x = [0.2, -1.0, 2.0, 0.1];
        let mut r = [0.0; 4];
        circ(&cones, &l, &x, &mut r);
        let mut back = [0.0; 4];
        circ_div(&cones, &l, &r, &mut back);
        for i in 0..4 {
            assert!((back[i] - x[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn soc_step_hits_boundary() {
        let cones = soc(3);
        let u = [2.0, 0.0, 0.0];
        let du = [0.0, 1.0, 0.0];
        let a = max_step(&cones, &u, &du);
        assert!((a - 2.0).abs() < 1e-12);
        let du = [1.0, 0.5, 0.0];
        assert!(max_step(&cones, &u, &du).is_infinite());
        let du = [-1.0, 0.0, 0.0];
        assert!((max_step(&cones, &u, &du) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn orthant_step() {
        let cones = vec![Cone::Nonneg { offset: 0, dim: 3 }];
        let a = max_step(&cones, &[1.0, 2.0, 3.0], &[-2.0, 1.0, -1.0]);
        assert!((a - 0.5).abs() < 1e-15);
    }

    #[test]
    fn shift_makes_interior() {
        let cones = vec![Cone::Nonneg { offset: 0, dim: 2 }, Cone::Soc { offset: 2, dim: 3 }];
        let mut u = vec![-1.0, 0.5, 0.0, 3.0, 4.0];
        shift_to_interior(&cones, &mut u);
        assert!(u[0] > 0.0 && u[1] > 0.0);
        assert!(u[2] > norm(&u[3..]));
    }
}
