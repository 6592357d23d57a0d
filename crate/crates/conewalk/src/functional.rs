//! The energy functional, its residual (weak-form gradient), and the damped
//! Newton solver for the strictly monotone auxiliary problem
//!
//! ```text
//!     -div(|grad v|^{p-2} grad v) + M |v|^{p-2} v = load,   v = 0 on the boundary.
//! ```
//!
//! Discretization: P1 stiffness integrated exactly (gradients are elementwise
//! constant); the reaction terms f(x,u) and M|u|^{p-2}u and their energy
//! counterparts use lumped nodal quadrature. Lumping keeps the nodal operator
//! an M-function in 1d (so the discrete comparison principle is structural,
//! not approximate) and makes converged solutions exact fixed points of the
//! shifted-inversion map.
//!
//! The Newton iteration regularizes |.|^{p-2} factors as (|.|^2+eps^2)^{(p-2)/2}
//! inside the Jacobian, and for p < 2 also inside the residual while a
//! continuation loop drives eps down; the final reported residual is always
//! the unregularized one.

use std::sync::Arc;

use crate::grid::{FeFunction, Mesh, Point};
use crate::linalg::{self, Csr, Tridiag};
use crate::problem::{phi_p, NonlinearitySpec};
use crate::{Error, Result};

/// Assembled dual vector (a functional on the P1 space); boundary entries 0.
#[derive(Debug, Clone)]
pub struct Load {
    mesh: Arc<Mesh>,
    pub dual: Vec<f64>,
}

impl Load {
    /// Lumped assembly of a nodal field: load_i = m_i * w(x_i).
    pub fn lumped(w: &FeFunction) -> Load {
        let mesh = Arc::clone(w.mesh());
        let dual = mesh
            .lumped_mass
            .iter()
            .zip(&w.values)
            .zip(&mesh.boundary)
            .map(|((&m, &v), &b)| if b { 0.0 } else { m * v })
            .collect();
        Load { mesh, dual }
    }

    pub fn from_fn(mesh: &Arc<Mesh>, w: impl Fn(&Point) -> f64) -> Load {
        Load::lumped(&crate::grid::interpolate(mesh, w))
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }
}

/// Weak residual of the full problem at u: pairing v -> J'(u)[v].
#[derive(Debug, Clone)]
pub struct Residual {
    mesh: Arc<Mesh>,
    pub p: f64,
    /// full-length dual vector, boundary rows zeroed
    pub vec: Vec<f64>,
}

impl Residual {
    /// Euclidean norm of the interior entries scaled by h^{N/p'}; equivalent
    /// to the dual norm on a fixed mesh and used for stopping tests only.
    pub fn dual_norm_surrogate(&self) -> f64 {
        let n_dim = self.mesh.dim() as f64;
        let pprime_exp = n_dim * (self.p - 1.0) / self.p;
        let scale = self.mesh.h().powf(pprime_exp);
        let sq: f64 = self
            .mesh
            .interior
            .iter()
            .map(|&i| self.vec[i] * self.vec[i])
            .sum();
        scale * sq.sqrt()
    }

    /// Dual pairing J'(u)[v] = sum_i r_i v_i for zero-trace v.
    pub fn pair(&self, v: &FeFunction) -> f64 {
        linalg::dot(&self.vec, &v.values)
    }
}

/// p-Dirichlet part: sum_e vol_e |grad u|^p / p.
pub fn dirichlet_energy(u: &FeFunction, p: f64) -> f64 {
    let mesh = u.mesh();
    let mut acc = 0.0;
    for e in 0..mesh.n_elems() {
        let g = u.grad_on(e);
        acc += mesh.elem_vol[e] * (g[0] * g[0] + g[1] * g[1]).powf(p / 2.0);
    }
    acc / p
}

/// Full energy J(u) = int |grad u|^p / p - int F(x, u), reaction term lumped.
pub fn energy(u: &FeFunction, spec: &NonlinearitySpec) -> f64 {
    let mesh = u.mesh();
    let mut acc = dirichlet_energy(u, spec.p);
    for i in 0..mesh.n_nodes() {
        acc -= mesh.lumped_mass[i] * spec.f_prim(&mesh.nodes[i], u.values[i]);
    }
    acc
}

/// Stiffness pairing sum_e vol phi_p(grad u) . grad(basis_i), optionally with
/// the gradient modulus regularized. Returns a full-length vector with
/// boundary rows zeroed.
fn stiffness_vec(u: &FeFunction, p: f64, eps: f64) -> Vec<f64> {
    let mesh = u.mesh();
    let mut out = vec![0.0; mesh.n_nodes()];
    for e in 0..mesh.n_elems() {
        let g = u.grad_on(e);
        let norm_sq = g[0] * g[0] + g[1] * g[1] + eps * eps;
        if norm_sq == 0.0 {
            continue; // phi_p(0) = 0 even when p < 2 makes sigma blow up
        }
        let sigma = norm_sq.powf((p - 2.0) / 2.0);
        let vol = mesh.elem_vol[e];
        for (&i, gi) in mesh.elem_nodes(e).iter().zip(mesh.elem_grads(e)) {
            out[i] += vol * sigma * (g[0] * gi[0] + g[1] * gi[1]);
        }
    }
    for i in 0..mesh.n_nodes() {
        if mesh.boundary[i] {
            out[i] = 0.0;
        }
    }
    out
}

/// Weak residual of -div(|grad u|^{p-2} grad u) = f(x, u) at u.
pub fn residual(u: &FeFunction, spec: &NonlinearitySpec) -> Residual {
    let mesh = u.mesh();
    let mut vec = stiffness_vec(u, spec.p, 0.0);
    for (i, v) in vec.iter_mut().enumerate() {
        if !mesh.boundary[i] {
            *v -= mesh.lumped_mass[i] * spec.f(&mesh.nodes[i], u.values[i]);
        }
    }
    Residual {
        mesh: Arc::clone(mesh),
        p: spec.p,
        vec,
    }
}

/// Newton/continuation controls for the monotone solver.
#[derive(Debug, Clone)]
pub struct NewtonConfig {
    /// stopping tolerance on the unregularized dual-norm surrogate
    pub tol: f64,
    /// Newton iterations per continuation stage
    pub max_iter: usize,
    pub eps0: f64,
    pub eps_min: f64,
    pub armijo_c: f64,
    pub backtrack: f64,
    pub max_backtracks: usize,
    /// relative tolerance of inner CG solves (2d)
    pub linear_tol: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            tol: 1e-10,
            max_iter: 60,
            eps0: 1e-1,
            eps_min: 1e-9,
            armijo_c: 1e-4,
            backtrack: 0.5,
            max_backtracks: 60,
            linear_tol: 1e-12,
        }
    }
}

/// One record per Newton step, for optional trace output.
#[derive(Debug, Clone)]
pub struct NewtonStep {
    pub eps: f64,
    pub iter: usize,
    pub surrogate: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, Default)]
pub struct NewtonTrace {
    pub steps: Vec<NewtonStep>,
}

/// The discrete monotone operator at fixed (p, M, load).
struct MonotoneOp<'a> {
    mesh: &'a Arc<Mesh>,
    p: f64,
    m_shift: f64,
    load: &'a [f64],
}

impl MonotoneOp<'_> {
    /// E_eps(v); consistent with `residual_vec` at the same eps.
    fn energy(&self, v: &FeFunction, eps: f64) -> f64 {
        let p = self.p;
        let mesh = self.mesh;
        let mut acc = 0.0;
        for e in 0..mesh.n_elems() {
            let g = v.grad_on(e);
            acc += mesh.elem_vol[e] * (g[0] * g[0] + g[1] * g[1] + eps * eps).powf(p / 2.0) / p;
        }
        for i in 0..mesh.n_nodes() {
            if !mesh.boundary[i] {
                let t = v.values[i];
                acc += self.m_shift * mesh.lumped_mass[i] * (t * t + eps * eps).powf(p / 2.0) / p;
                acc -= self.load[i] * t;
            }
        }
        acc
    }

    fn residual_vec(&self, v: &FeFunction, eps: f64) -> Vec<f64> {
        let mesh = self.mesh;
        let mut r = stiffness_vec(v, self.p, eps);
        for i in 0..mesh.n_nodes() {
            if mesh.boundary[i] {
                continue;
            }
            let t = v.values[i];
            let s = t * t + eps * eps;
            let psi = if s == 0.0 {
                0.0
            } else {
                s.powf((self.p - 2.0) / 2.0) * t
            };
            r[i] += self.m_shift * mesh.lumped_mass[i] * psi - self.load[i];
        }
        r
    }

    fn jacobian(&self, v: &FeFunction, eps: f64) -> Jac {
        let mesh = self.mesh;
        let p = self.p;
        let interior_pos = &mesh.interior_pos;
        let ni = mesh.interior.len();
        let mut jac = if mesh.dim() == 1 {
            Jac::Tri(Tridiag::zeros(ni))
        } else {
            let edges = mesh
                .edges()
                .into_iter()
                .filter_map(|(a, b)| match (interior_pos[a], interior_pos[b]) {
                    (Some(ia), Some(ib)) => Some((ia, ib)),
                    _ => None,
                });
            Jac::Sparse(Csr::from_edges(ni, edges))
        };
        for e in 0..mesh.n_elems() {
            let g = v.grad_on(e);
            let s = g[0] * g[0] + g[1] * g[1] + eps * eps;
            let sigma = s.powf((p - 2.0) / 2.0);
            let tang = (p - 2.0) * s.powf((p - 4.0) / 2.0);
            let vol = mesh.elem_vol[e];
            let nodes = mesh.elem_nodes(e);
            let grads = mesh.elem_grads(e);
            for (a, &i) in nodes.iter().enumerate() {
                let Some(ia) = interior_pos[i] else { continue };
                for (b, &j) in nodes.iter().enumerate() {
                    let Some(ib) = interior_pos[j] else { continue };
                    let gi = grads[a];
                    let gj = grads[b];
                    let di = g[0] * gi[0] + g[1] * gi[1];
                    let dj = g[0] * gj[0] + g[1] * gj[1];
                    let val = vol * (sigma * (gi[0] * gj[0] + gi[1] * gj[1]) + tang * di * dj);
                    jac.add(ia, ib, val);
                }
            }
        }
        for (pos, &i) in mesh.interior.iter().enumerate() {
            let t = v.values[i];
            let s = t * t + eps * eps;
            let dpsi = s.powf((p - 2.0) / 2.0) * (1.0 + (p - 2.0) * t * t / s);
            jac.add(pos, pos, self.m_shift * mesh.lumped_mass[i] * dpsi);
        }
        jac
    }
}

enum Jac {
    Tri(Tridiag),
    Sparse(Csr),
}

impl Jac {
    fn add(&mut self, i: usize, j: usize, v: f64) {
        match self {
            Jac::Tri(t) => {
                if i == j {
                    t.diag[i] += v;
                } else if j + 1 == i {
                    t.sub[i] += v;
                } else if i + 1 == j {
                    t.sup[i] += v;
                } else {
                    panic!("1d Jacobian entry ({i},{j}) outside the tridiagonal band");
                }
            }
            Jac::Sparse(c) => c.add(i, j, v),
        }
    }

    fn solve(&self, rhs: &[f64], cfg: &NewtonConfig) -> Result<Vec<f64>> {
        match self {
            Jac::Tri(t) => t.solve(rhs),
            Jac::Sparse(c) => Ok(linalg::cg_jacobi(c, rhs, cfg.linear_tol, 40 * c.n.max(50))?.0),
        }
    }
}

/// Damped-Newton direction for the full problem at `u`: solves the
/// linearization of `residual` applied to `-r`. The reaction slope enters
/// with a negative sign, so the matrix is indefinite near saddle points;
/// 1d uses the pivoted tridiagonal solve and 2d a dense LU.
pub fn newton_direction(
    u: &FeFunction,
    spec: &NonlinearitySpec,
    eps: f64,
    r: &[f64],
) -> Result<FeFunction> {
    let mesh = u.mesh();
    let op = MonotoneOp {
        mesh,
        p: spec.p,
        m_shift: 0.0,
        load: &[],
    };
    let mut jac = op.jacobian(u, eps);
    for (pos, &i) in mesh.interior.iter().enumerate() {
        let x = &mesh.nodes[i];
        let t = u.values[i];
        let slope = spec.df_dt(x, t).unwrap_or_else(|| {
            let h = 1e-6 * t.abs().max(1e-8);
            (spec.f(x, t + h) - spec.f(x, t - h)) / (2.0 * h)
        });
        jac.add(pos, pos, -mesh.lumped_mass[i] * slope);
    }
    let rhs: Vec<f64> = mesh.interior.iter().map(|&i| -r[i]).collect();
    let step = match jac {
        Jac::Tri(t) => t.solve(&rhs)?,
        Jac::Sparse(c) => linalg::dense_solve(c.to_dense(), &rhs)?,
    };
    let mut d = FeFunction::zero(mesh);
    for (pos, &i) in mesh.interior.iter().enumerate() {
        d.values[i] = step[pos];
    }
    Ok(d)
}

fn surrogate_of(mesh: &Mesh, p: f64, r: &[f64]) -> f64 {
    let n_dim = mesh.dim() as f64;
    let scale = mesh.h().powf(n_dim * (p - 1.0) / p);
    let sq: f64 = mesh.interior.iter().map(|&i| r[i] * r[i]).sum();
    scale * sq.sqrt()
}

/// Solves the monotone auxiliary problem by damped Newton with continuation
/// in the regularization parameter. `start` warm-starts the iteration.
pub fn solve_monotone(
    load: &Load,
    p: f64,
    m_shift: f64,
    cfg: &NewtonConfig,
    start: Option<&FeFunction>,
) -> Result<(FeFunction, NewtonTrace)> {
    if !(p > 1.0) {
        return Err(Error::parameter("p", format!("exponent must exceed 1, got {p}")));
    }
    if m_shift < 0.0 {
        return Err(Error::parameter("m_shift", "shift must be nonnegative"));
    }
    let mesh = load.mesh();
    let op = MonotoneOp {
        mesh,
        p,
        m_shift,
        load: &load.dual,
    };
    let mut u = match start {
        Some(w) => w.clone().zero_boundary(),
        None => FeFunction::zero(mesh),
    };
    let mut trace = NewtonTrace::default();

    // continuation ladder; each stage solves the eps-regularized problem
    // loosely, the last stage tightens on the true residual
    let mut stages = Vec::new();
    let mut eps = cfg.eps0;
    while eps > cfg.eps_min {
        stages.push(eps);
        eps *= 0.25;
    }
    stages.push(cfg.eps_min);

    let n_stages = stages.len();
    for (k, &eps) in stages.iter().enumerate() {
        let last = k + 1 == n_stages;
        // for p >= 2 the residual is smooth enough to target directly; for
        // p < 2 it is regularized during continuation, and the final stage
        // polishes the true residual with the eps-regularized Jacobian
        let res_eps = if p >= 2.0 || last { 0.0 } else { eps };
        let stage_tol = if last { cfg.tol } else { cfg.tol.max(1e-3 * eps) };
        let mut iter = 0;
        loop {
            let r = op.residual_vec(&u, res_eps);
            let surr = surrogate_of(mesh, p, &r);
            let true_surr = if res_eps == 0.0 {
                surr
            } else {
                surrogate_of(mesh, p, &op.residual_vec(&u, 0.0))
            };
            trace.steps.push(NewtonStep {
                eps,
                iter,
                surrogate: true_surr,
                energy: op.energy(&u, 0.0),
            });
            if last && true_surr <= cfg.tol {
                return Ok((u, trace));
            }
            if !last && surr <= stage_tol {
                break;
            }
            if iter >= cfg.max_iter {
                if last {
                    return Err(Error::NonConvergence {
                        iterations: iter,
                        residual: true_surr,
                        last_iterate: u.values.clone(),
                        residual_history: trace.steps.iter().map(|s| s.surrogate).collect(),
                    });
                }
                break; // give the next stage a chance with smaller eps
            }
            iter += 1;

            let jac = op.jacobian(&u, eps);
            let rhs: Vec<f64> = mesh.interior.iter().map(|&i| -r[i]).collect();
            let step = jac.solve(&rhs, cfg)?;
            // directional derivative of the eps-energy along the step
            let mut slope: f64 = mesh
                .interior
                .iter()
                .zip(&step)
                .map(|(&i, &s)| r[i] * s)
                .sum();
            let mut step = step;
            if slope >= 0.0 {
                // Jacobian/residual mismatch: fall back to steepest descent
                for (s, &i) in step.iter_mut().zip(&mesh.interior) {
                    *s = -r[i];
                }
                slope = -linalg::dot(&step, &step);
                if slope == 0.0 {
                    // exact stationary point of this stage
                    if !last {
                        break;
                    }
                    let true_surr = surrogate_of(mesh, p, &op.residual_vec(&u, 0.0));
                    if true_surr <= cfg.tol {
                        return Ok((u, trace));
                    }
                    return Err(Error::NonConvergence {
                        iterations: iter,
                        residual: true_surr,
                        last_iterate: u.values.clone(),
                        residual_history: trace.steps.iter().map(|s| s.surrogate).collect(),
                    });
                }
            }
            let e0 = op.energy(&u, res_eps);
            let mut t = 1.0;
            let mut accepted = false;
            for bt in 0..=cfg.max_backtracks {
                let mut cand = u.clone();
                for (pos, &i) in mesh.interior.iter().enumerate() {
                    cand.values[i] += t * step[pos];
                }
                let armijo = op.energy(&cand, res_eps) <= e0 + cfg.armijo_c * t * slope;
                // near convergence the energy decrease drops below double
                // resolution; a full Newton step that shrinks the residual
                // is accepted on that evidence instead
                let residual_drop = bt == 0
                    && surrogate_of(mesh, p, &op.residual_vec(&cand, res_eps)) <= 0.9 * surr;
                if armijo || residual_drop {
                    u = cand;
                    accepted = true;
                    break;
                }
                t *= cfg.backtrack;
            }
            if !accepted {
                if last {
                    let true_surr = surrogate_of(mesh, p, &op.residual_vec(&u, 0.0));
                    if true_surr <= cfg.tol {
                        return Ok((u, trace));
                    }
                    return Err(Error::NonConvergence {
                        iterations: iter,
                        residual: true_surr,
                        last_iterate: u.values.clone(),
                        residual_history: trace.steps.iter().map(|s| s.surrogate).collect(),
                    });
                }
                break;
            }
        }
    }
    // the loop returns from inside the last stage
    unreachable!("continuation ladder always ends in a returning stage");
}

/// Linear (p = 2) zero-trace Laplacian solves, used as a preconditioner by
/// the eigenvalue and descent routines. The operator is fixed per mesh.
pub struct LaplacePrecond {
    mesh: Arc<Mesh>,
    tri: Option<Tridiag>,
    csr: Option<Csr>,
}

impl LaplacePrecond {
    pub fn new(mesh: &Arc<Mesh>) -> Self {
        let interior_pos = &mesh.interior_pos;
        let ni = mesh.interior.len();
        let mut tri = None;
        let mut csr = None;
        if mesh.dim() == 1 {
            let mut t = Tridiag::zeros(ni);
            for e in 0..mesh.n_elems() {
                let vol = mesh.elem_vol[e];
                let nodes = mesh.elem_nodes(e);
                let grads = mesh.elem_grads(e);
                for (a, &i) in nodes.iter().enumerate() {
                    let Some(ia) = interior_pos[i] else { continue };
                    for (b, &j) in nodes.iter().enumerate() {
                        let Some(ib) = interior_pos[j] else { continue };
                        let v = vol * (grads[a][0] * grads[b][0] + grads[a][1] * grads[b][1]);
                        if ia == ib {
                            t.diag[ia] += v;
                        } else if ib + 1 == ia {
                            t.sub[ia] += v;
                        } else {
                            t.sup[ia] += v;
                        }
                    }
                }
            }
            tri = Some(t);
        } else {
            let edges = mesh
                .edges()
                .into_iter()
                .filter_map(|(a, b)| match (interior_pos[a], interior_pos[b]) {
                    (Some(ia), Some(ib)) => Some((ia, ib)),
                    _ => None,
                });
            let mut c = Csr::from_edges(ni, edges);
            for e in 0..mesh.n_elems() {
                let vol = mesh.elem_vol[e];
                let nodes = mesh.elem_nodes(e);
                let grads = mesh.elem_grads(e);
                for (a, &i) in nodes.iter().enumerate() {
                    let Some(ia) = interior_pos[i] else { continue };
                    for (b, &j) in nodes.iter().enumerate() {
                        let Some(ib) = interior_pos[j] else { continue };
                        c.add(ia, ib, vol * (grads[a][0] * grads[b][0] + grads[a][1] * grads[b][1]));
                    }
                }
            }
            csr = Some(c);
        }
        LaplacePrecond {
            mesh: Arc::clone(mesh),
            tri,
            csr,
        }
    }

    /// Solves the linear Laplacian system for an interior dual vector and
    /// returns a full-length nodal vector (boundary zero).
    pub fn solve(&self, dual_full: &[f64]) -> Result<Vec<f64>> {
        let mesh = &self.mesh;
        let rhs: Vec<f64> = mesh.interior.iter().map(|&i| dual_full[i]).collect();
        let sol = if let Some(t) = &self.tri {
            t.solve(&rhs)?
        } else {
            linalg::cg_jacobi(self.csr.as_ref().unwrap(), &rhs, 1e-12, 40 * rhs.len().max(50))?.0
        };
        let mut full = vec![0.0; mesh.n_nodes()];
        for (pos, &i) in mesh.interior.iter().enumerate() {
            full[i] = sol[pos];
        }
        Ok(full)
    }
}

/// Load vector of the shifted nonlinearity h(x, u) = f(x, u) + M phi_p(u),
/// assembled with the same lumped rule the residual uses, so fixed points of
/// the shifted inversion are exact discrete solutions.
pub fn shifted_load(u: &FeFunction, spec: &NonlinearitySpec) -> Load {
    let mesh = u.mesh();
    let dual = (0..mesh.n_nodes())
        .map(|i| {
            if mesh.boundary[i] {
                0.0
            } else {
                let t = u.values[i];
                mesh.lumped_mass[i]
                    * (spec.f(&mesh.nodes[i], t) + spec.m_shift * phi_p(t, spec.p))
            }
        })
        .collect();
    Load {
        mesh: Arc::clone(mesh),
        dual,
    }
}

/// One inequality family swept over random samples.
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub name: &'static str,
    pub checked: usize,
    /// Samples where the inequality failed beyond its slack.
    pub failures: usize,
    /// Worst signed relative margin seen; negative means a violation.
    pub worst: f64,
}

fn phi_vec(xi: &[f64], p: f64) -> Vec<f64> {
    let n = linalg::norm2(xi);
    if n == 0.0 {
        return vec![0.0; xi.len()];
    }
    let s = n.powf(p - 2.0);
    xi.iter().map(|&c| s * c).collect()
}

/// Monotonicity and continuity bounds of the map xi -> |xi|^{p-2} xi, checked
/// pointwise on random vector pairs. Two bounds apply on each side of p = 2:
///
///   duality:    (phi(xi) - phi(eta)) . (xi - eta)
///                  >= (p-1) |xi-eta|^2 (|xi|+|eta|)^{p-2}      (p <= 2)
///                  >= 2^{2-p} |xi-eta|^p                       (p >= 2)
///   difference: |phi(xi) - phi(eta)|
///                  <= 2^{2-p} |xi-eta|^{p-1}                   (p <= 2)
///                  <= (p-1) (|xi|+|eta|)^{p-2} |xi-eta|        (p >= 2)
///
/// The explicit-constant forms carry 1e-12 relative slack. The p <= 2
/// difference bound has no explicit constant in the source; 2^{2-p} is the
/// empirical supremum (attained by antipodal pairs, which the sweep includes)
/// and is asserted with 1e-9 absolute slack on the ratio.
pub fn sweep_vector_inequalities(
    p: f64,
    dim: usize,
    pairs: usize,
    rng: &mut impl rand::Rng,
) -> Vec<SweepOutcome> {
    let mut out = Vec::new();
    let mut duality = SweepOutcome {
        name: "duality-lower-bound",
        checked: 0,
        failures: 0,
        worst: f64::INFINITY,
    };
    let mut difference = SweepOutcome {
        name: "difference-upper-bound",
        checked: 0,
        failures: 0,
        worst: f64::INFINITY,
    };
    let cp = 2f64.powf(2.0 - p);
    for k in 0..pairs {
        let mut xi: Vec<f64> = (0..dim).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let mut eta: Vec<f64> = if k % 16 == 0 {
            // antipodal pairs attain the sharp constants
            xi.iter().map(|&c| -c).collect()
        } else {
            (0..dim).map(|_| rng.gen_range(-3.0..3.0)).collect()
        };
        if k % 7 == 0 {
            let s = 10f64.powf(rng.gen_range(-2.0..2.0));
            for c in xi.iter_mut().chain(eta.iter_mut()) {
                *c *= s;
            }
        }
        let diff: Vec<f64> = xi.iter().zip(&eta).map(|(a, b)| a - b).collect();
        let dn = linalg::norm2(&diff);
        if dn == 0.0 {
            duality.checked += 1;
            difference.checked += 1;
            continue;
        }
        let pxi = phi_vec(&xi, p);
        let peta = phi_vec(&eta, p);
        let pdiff: Vec<f64> = pxi.iter().zip(&peta).map(|(a, b)| a - b).collect();
        let sum_norms = linalg::norm2(&xi) + linalg::norm2(&eta);

        let lhs = linalg::dot(&pdiff, &diff);
        let rhs = if p <= 2.0 {
            (p - 1.0) * dn * dn * sum_norms.powf(p - 2.0)
        } else {
            cp * dn.powf(p)
        };
        let scale = lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
        let margin = (lhs - rhs) / scale;
        duality.checked += 1;
        duality.worst = duality.worst.min(margin);
        if margin < -1e-12 {
            duality.failures += 1;
        }

        let num = linalg::norm2(&pdiff);
        let (bound, slack) = if p <= 2.0 {
            (cp * dn.powf(p - 1.0), 1e-9 * dn.powf(p - 1.0))
        } else {
            let b = (p - 1.0) * sum_norms.powf(p - 2.0) * dn;
            (b, 1e-12 * b.max(num))
        };
        difference.checked += 1;
        let rel = (bound - num) / bound.max(num).max(f64::MIN_POSITIVE);
        difference.worst = difference.worst.min(rel);
        if num > bound + slack {
            difference.failures += 1;
        }
    }
    out.push(duality);
    out.push(difference);
    out
}

fn lumped_lp(mesh: &Mesh, vals: impl Iterator<Item = f64>, q: f64) -> f64 {
    vals.zip(&mesh.lumped_mass)
        .map(|(v, &m)| m * v.abs().powf(q))
        .sum::<f64>()
        .powf(1.0 / q)
}

/// The integral forms of the same bounds, checked on random P1 pairs with the
/// lumped nodal quadrature every reaction term uses:
///
///   int (phi(u) - phi(v)) (u - v)  >=  (p-1) || |u|+|v| ||_p^{p-2} ||u-v||_p^2   (p <= 2)
///   || phi(u) - phi(v) ||_{p'}     <=  (p-1) || |u|+|v| ||_p^{p-2} ||u-v||_p     (p >= 2)
///
/// Both hold for the discrete measure exactly, so the slack is 1e-10.
pub fn sweep_integral_inequalities(
    mesh: &Arc<Mesh>,
    p: f64,
    pairs: usize,
    rng: &mut impl rand::Rng,
) -> Vec<SweepOutcome> {
    let name = if p <= 2.0 {
        "integral-duality-lower-bound"
    } else {
        "integral-difference-upper-bound"
    };
    let mut sweep = SweepOutcome {
        name,
        checked: 0,
        failures: 0,
        worst: f64::INFINITY,
    };
    let mut sweeps = Vec::new();
    for _ in 0..pairs {
        let u = random_interior(mesh, rng);
        let v = random_interior(mesh, rng);
        let fu: Vec<f64> = u.values.iter().map(|&t| phi_p(t, p)).collect();
        let fv: Vec<f64> = v.values.iter().map(|&t| phi_p(t, p)).collect();
        let sum_norm = lumped_lp(
            mesh,
            u.values.iter().zip(&v.values).map(|(a, b)| a.abs() + b.abs()),
            p,
        );
        let diff_norm = lumped_lp(mesh, u.values.iter().zip(&v.values).map(|(a, b)| a - b), p);
        let (lhs, rhs) = if p <= 2.0 {
            let dual: f64 = (0..mesh.n_nodes())
                .map(|i| mesh.lumped_mass[i] * (fu[i] - fv[i]) * (u.values[i] - v.values[i]))
                .sum();
            (dual, (p - 1.0) * sum_norm.powf(p - 2.0) * diff_norm * diff_norm)
        } else {
            let pp = p / (p - 1.0);
            let img = lumped_lp(mesh, fu.iter().zip(&fv).map(|(a, b)| a - b), pp);
            // upper bound: swap sides so "lhs >= rhs" means the bound holds
            ((p - 1.0) * sum_norm.powf(p - 2.0) * diff_norm, img)
        };
        let scale = lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
        let margin = (lhs - rhs) / scale;
        sweep.checked += 1;
        sweep.worst = sweep.worst.min(margin);
        if margin < -1e-10 {
            sweep.failures += 1;
        }
    }
    sweeps.push(sweep);
    sweeps
}

fn random_interior(mesh: &Arc<Mesh>, rng: &mut impl rand::Rng) -> FeFunction {
    let mut u = FeFunction::zero(mesh);
    for &i in &mesh.interior {
        u.values[i] = rng.gen_range(-1.0..1.0);
    }
    u
}
