//! The shifted inversion map K: given u, the function v = K(u) solves
//!
//! ```text
//!     -div(|grad v|^{p-2} grad v) + M |v|^{p-2} v = f(x, u) + M |u|^{p-2} u
//! ```
//!
//! with zero boundary values. Fixed points of K are solutions of the original
//! problem, u - K(u) points in an energy-descent direction, and K preserves
//! the nodal order of its arguments when the shifted nonlinearity
//! h(x, t) = f(x, t) + M |t|^{p-2} t is nondecreasing in t.
//!
//! Because the load and the reaction term use the same lumped nodal rule, a
//! converged iterate of the monotone solver is an exact discrete fixed point,
//! not an O(h) one.

use crate::functional::{shifted_load, solve_monotone, NewtonConfig, NewtonTrace};
use crate::grid::{w1p_norm, FeFunction};
use crate::problem::NonlinearitySpec;
use crate::Result;

/// Outcome of one application of K.
#[derive(Debug, Clone)]
pub struct KResult {
    /// v = K(u)
    pub v: FeFunction,
    /// pseudogradient direction u - K(u)
    pub pg: FeFunction,
    /// W^{1,p} seminorm of the pseudogradient
    pub pg_norm: f64,
    /// inner Newton history of the monotone solve
    pub trace: NewtonTrace,
}

/// Applies K once. `warm` seeds the inner Newton solve; when absent the
/// iteration starts from u itself, which is the natural guess near a fixed
/// point.
pub fn k_apply(
    u: &FeFunction,
    spec: &NonlinearitySpec,
    cfg: &NewtonConfig,
    warm: Option<&FeFunction>,
) -> Result<KResult> {
    let load = shifted_load(u, spec);
    let start = warm.unwrap_or(u);
    let (v, trace) = solve_monotone(&load, spec.p, spec.m_shift, cfg, Some(start))
        .map_err(|e| e.in_stage("k-apply"))?;
    let pg = u.add_scaled(-1.0, &v);
    let pg_norm = w1p_norm(&pg, spec.p)?;
    Ok(KResult {
        v,
        pg,
        pg_norm,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::{residual, Load};
    use crate::grid::{build_mesh, interpolate, DomainSpec};
    use crate::problem::NonlinearitySpec;

    fn unit_mesh(n: usize) -> std::sync::Arc<crate::grid::Mesh> {
        build_mesh(DomainSpec::unit_interval(), n).unwrap()
    }

    #[test]
    fn k_of_zero_solves_the_frozen_poisson_example() {
        // f = 1, p = 2, M = 0: K(0) is x(1-x)/2 at the nodes and the
        // pseudogradient norm is ||K(0)||_{W^{1,2}} = 1/sqrt(12)
        let mesh = unit_mesh(512);
        let u = FeFunction::zero(&mesh);
        let spec = NonlinearitySpec::constant(2.0, 1.0).unwrap();
        let res = k_apply(&u, &spec, &NewtonConfig::default(), None).unwrap();
        assert!((res.v.max_value() - 0.125).abs() < 1e-9);
        let want = (1.0f64 / 12.0).sqrt();
        assert!(
            (res.pg_norm - want).abs() < 1e-5,
            "pg_norm {} want {want}",
            res.pg_norm
        );
    }

    #[test]
    fn discrete_solutions_are_exact_fixed_points() {
        let mesh = unit_mesh(128);
        let cfg = NewtonConfig::default();
        for p in [1.5, 2.0, 3.0] {
            let spec = NonlinearitySpec::constant(p, 1.0).unwrap();
            let load = Load::from_fn(&mesh, |_| 1.0);
            let (w, _) = solve_monotone(&load, p, 0.0, &cfg, None).unwrap();
            let res = k_apply(&w, &spec, &cfg, None).unwrap();
            assert!(
                res.pg_norm <= 10.0 * cfg.tol.max(1e-9),
                "p={p}: pg_norm {}",
                res.pg_norm
            );
        }
    }

    #[test]
    fn pseudogradient_is_a_descent_pairing() {
        // J'(u)[u - K(u)] >= 0 holds exactly in the lumped scheme
        let mesh = unit_mesh(96);
        for p in [1.5, 2.0, 3.0] {
            let spec = NonlinearitySpec::saturating(p, 30.0, 1.0).unwrap();
            let u = interpolate(&mesh, |q| (7.0 * q[0]).sin() * 0.8).zero_boundary();
            let res = k_apply(&u, &spec, &NewtonConfig::default(), None).unwrap();
            let pairing = residual(&u, &spec).pair(&res.pg);
            assert!(pairing > 0.0, "p={p}: pairing {pairing}");
        }
    }

    #[test]
    fn order_preserving_on_ordered_pairs() {
        let mesh = unit_mesh(64);
        for p in [1.5, 2.0, 3.0] {
            let spec = NonlinearitySpec::saturating(p, 30.0, 1.0).unwrap();
            let lo = interpolate(&mesh, |q| -q[0] * (1.0 - q[0])).zero_boundary();
            let hi = interpolate(&mesh, |q| (std::f64::consts::PI * q[0]).sin()).zero_boundary();
            let klo = k_apply(&lo, &spec, &NewtonConfig::default(), None).unwrap();
            let khi = k_apply(&hi, &spec, &NewtonConfig::default(), None).unwrap();
            let worst = klo
                .v
                .values
                .iter()
                .zip(&khi.v.values)
                .map(|(&a, &b)| b - a)
                .fold(f64::INFINITY, f64::min);
            assert!(worst > -1e-9, "p={p}: min K(hi)-K(lo) = {worst}");
        }
    }
}
