//! Discrete dynamics that produce solutions: monotone fixed-point iteration
//! between ordered barriers, and a cut-off descent flow along `u - K(u)`.

use crate::cones::{cone_distance, ConeSpec};
use crate::error::{Error, Result};
use crate::functional::{energy, residual, NewtonConfig};
use crate::grid::{fmt_float, FeFunction};
use crate::koperator::k_apply;
use crate::problem::NonlinearitySpec;

/// Which way a monotone run is expected to move.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonotoneDirection {
    /// Start at a subsolution; iterates may only rise.
    Ascending,
    /// Start at a supersolution; iterates may only fall.
    Descending,
}

#[derive(Debug, Clone)]
pub struct MonotoneConfig {
    /// Stop when the step norm falls below this.
    pub step_tol: f64,
    pub max_iter: usize,
    /// Nodal slack when checking that steps keep their sign.
    pub monotone_tol: f64,
    pub newton: NewtonConfig,
}

impl Default for MonotoneConfig {
    fn default() -> Self {
        MonotoneConfig {
            step_tol: 1e-11,
            max_iter: 400,
            monotone_tol: 1e-10,
            newton: NewtonConfig::default(),
        }
    }
}

/// Outcome of a monotone iteration run.
pub struct MonotoneRun {
    pub u: FeFunction,
    pub iterations: usize,
    /// Dual-norm surrogate of the residual at the limit.
    pub residual: f64,
    /// Gradient-norm of each step `u_{k+1} - u_k`.
    pub step_norms: Vec<f64>,
    pub energies: Vec<f64>,
}

/// Iterates `u_{k+1} = K(u_k)` from an ordered barrier until the step norm
/// drops below `cfg.step_tol`. Each step must move in the declared direction
/// at every node; a violation means the monotonicity shift of the problem is
/// too small for the iterate range, and is reported as an error rather than
/// patched over.
pub fn monotone_iterate(
    start: &FeFunction,
    spec: &NonlinearitySpec,
    dir: MonotoneDirection,
    cfg: &MonotoneConfig,
) -> Result<MonotoneRun> {
    let mut u = start.clone();
    let mut warm: Option<FeFunction> = None;
    let mut step_norms = Vec::new();
    let mut energies = vec![energy(&u, spec)];
    for it in 0..cfg.max_iter {
        let k = k_apply(&u, spec, &cfg.newton, warm.as_ref())
            .map_err(|e| e.in_stage("monotone-iterate"))?;
        let scale = 1.0 + u.max_abs().max(k.v.max_abs());
        let worst = u
            .values
            .iter()
            .zip(&k.v.values)
            .map(|(&a, &b)| match dir {
                MonotoneDirection::Ascending => a - b,
                MonotoneDirection::Descending => b - a,
            })
            .fold(f64::NEG_INFINITY, f64::max);
        if worst > cfg.monotone_tol * scale {
            return Err(Error::Precondition(format!(
                "monotone iteration reversed direction by {} at step {}; \
                 the start is not a valid barrier or the shift is too small",
                fmt_float(worst),
                it
            )));
        }
        step_norms.push(k.pg_norm);
        let next = k.v.clone();
        warm = Some(k.v);
        u = next;
        energies.push(energy(&u, spec));
        if k.pg_norm <= cfg.step_tol {
            let res = residual(&u, spec).dual_norm_surrogate();
            return Ok(MonotoneRun {
                u,
                iterations: it + 1,
                residual: res,
                step_norms,
                energies,
            });
        }
    }
    let res = residual(&u, spec).dual_norm_surrogate();
    Err(Error::NonConvergence {
        iterations: cfg.max_iter,
        residual: res,
        last_iterate: u.values,
        residual_history: step_norms,
    })
}

/// A cone whose enlargement the flow must not leave: the cut-off fades to
/// zero as the distance to `cone` approaches `eps`.
pub struct ConeBand<'a> {
    pub cone: &'a ConeSpec,
    pub eps: f64,
}

#[derive(Debug, Clone)]
pub struct FlowConfig {
    /// Initial time step; defaults to a tenth of the tightest band radius.
    pub dt0: Option<f64>,
    pub dt_max: f64,
    pub max_steps: usize,
    /// Terminal pseudogradient norm.
    pub pg_tol: f64,
    /// Energy band `[lo, hi]` outside which the cut-off vanishes.
    pub energy_band: Option<(f64, f64)>,
    /// Width of the linear ramp smoothing every cut-off edge.
    pub band_width: f64,
    /// Minimum energy decrease per unit flow time before the run is
    /// declared stagnant; zero disables the check.
    pub stagnation: f64,
    pub newton: NewtonConfig,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            dt0: None,
            dt_max: 1.0,
            max_steps: 400,
            pg_tol: 1e-8,
            energy_band: None,
            band_width: 1e-2,
            stagnation: 0.0,
            newton: NewtonConfig::default(),
        }
    }
}

/// One sampled point of a flow trajectory.
#[derive(Debug, Clone)]
pub struct FlowSample {
    pub t: f64,
    pub energy: f64,
    pub pg_norm: f64,
    pub cone_dists: Vec<f64>,
    pub chi: f64,
}

/// Sampled trajectory of a descent flow run.
pub struct FlowTrace {
    pub samples: Vec<FlowSample>,
    pub cone_labels: Vec<String>,
}

impl FlowTrace {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,J,pg_norm");
        for label in &self.cone_labels {
            s.push_str(",dist_");
            s.push_str(label);
        }
        s.push_str(",chi\n");
        for row in &self.samples {
            s.push_str(&fmt_float(row.t));
            s.push(',');
            s.push_str(&fmt_float(row.energy));
            s.push(',');
            s.push_str(&fmt_float(row.pg_norm));
            for d in &row.cone_dists {
                s.push(',');
                s.push_str(&fmt_float(*d));
            }
            s.push(',');
            s.push_str(&fmt_float(row.chi));
            s.push('\n');
        }
        s
    }
}

/// Why a flow run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowStop {
    /// Pseudogradient norm reached `pg_tol`.
    Critical,
    /// Cut-off vanished: the state left the flow region.
    LeftRegion,
    MaxSteps,
    /// Time step collapsed or energy stopped falling.
    Stagnant,
}

pub struct FlowOutcome {
    pub u: FeFunction,
    pub stop: FlowStop,
    pub trace: FlowTrace,
    /// Smallest energy decrease per unit time over full-strength steps.
    pub descent_rate: Option<f64>,
}

fn ramp_up(x: f64, width: f64) -> f64 {
    (x / width).clamp(0.0, 1.0)
}

fn cutoff(
    e: f64,
    dists: &[f64],
    bands: &[ConeBand],
    energy_band: Option<(f64, f64)>,
    width: f64,
) -> f64 {
    let mut chi = match energy_band {
        Some((lo, hi)) => ramp_up(e - lo, width).min(ramp_up(hi - e, width)),
        None => 1.0,
    };
    for (band, &d) in bands.iter().zip(dists) {
        // full strength inside the half enlargement, zero at the shell
        chi = chi.min(ramp_up(band.eps - d, band.eps / 2.0));
    }
    chi
}

/// Explicit Euler descent along `-(u - K(u)) / |u - K(u)|`, cut off outside
/// the energy band and near the registered cone shells. Steps that raise the
/// energy are rejected and retried with half the step; five accepted steps
/// in a row double it again. When cones are registered the step is capped by
/// the pseudogradient norm so every accepted state is a convex combination of
/// the previous one and `K(u)`, which keeps invariant cones invariant.
pub fn descent_flow(
    u0: &FeFunction,
    bands: &[ConeBand],
    spec: &NonlinearitySpec,
    cfg: &FlowConfig,
) -> Result<FlowOutcome> {
    let p = spec.p;
    let mut u = u0.clone();
    let mut warm: Option<FeFunction> = None;
    let min_eps = bands.iter().map(|b| b.eps).fold(f64::INFINITY, f64::min);
    let mut dt = cfg.dt0.unwrap_or(if min_eps.is_finite() {
        0.1 * min_eps
    } else {
        0.1
    });
    let mut t = 0.0;
    let mut streak = 0usize;
    let mut samples = Vec::new();
    let mut descent_rate: Option<f64> = None;
    let mut stop = FlowStop::MaxSteps;

    for _ in 0..cfg.max_steps {
        let k = k_apply(&u, spec, &cfg.newton, warm.as_ref())
            .map_err(|e| e.in_stage("descent-flow"))?;
        warm = Some(k.v.clone());
        let e = energy(&u, spec);
        let dists = bands
            .iter()
            .map(|b| cone_distance(&u, b.cone, p))
            .collect::<Result<Vec<f64>>>()?;
        let chi = cutoff(e, &dists, bands, cfg.energy_band, cfg.band_width);
        samples.push(FlowSample {
            t,
            energy: e,
            pg_norm: k.pg_norm,
            cone_dists: dists,
            chi,
        });
        if k.pg_norm <= cfg.pg_tol {
            stop = FlowStop::Critical;
            break;
        }
        if chi == 0.0 {
            stop = FlowStop::LeftRegion;
            break;
        }

        // dt * chi / pg_norm <= 1 keeps the step inside [u, K(u)]
        let mut cap = cfg.dt_max;
        if !bands.is_empty() {
            cap = cap.min(k.pg_norm);
        }
        dt = dt.min(cap);
        let mut accepted = false;
        while dt > 1e-18 {
            let s = dt * chi / k.pg_norm;
            let cand = u.add_scaled(-s, &k.pg);
            let e_cand = energy(&cand, spec);
            // strict decrease: a slack here lets the flow ping-pong across
            // the valley floor without ever shrinking the step
            if e_cand < e {
                let rate = (e - e_cand) / dt;
                if chi == 1.0 {
                    descent_rate = Some(descent_rate.map_or(rate, |r: f64| r.min(rate)));
                }
                if cfg.stagnation > 0.0 && rate < cfg.stagnation {
                    stop = FlowStop::Stagnant;
                }
                u = cand;
                t += dt;
                streak += 1;
                if streak >= 5 {
                    dt = (dt * 2.0).min(cap);
                    streak = 0;
                }
                accepted = true;
                break;
            }
            dt *= 0.5;
            streak = 0;
        }
        if !accepted || stop == FlowStop::Stagnant {
            if !accepted {
                stop = FlowStop::Stagnant;
            }
            break;
        }
    }

    // terminal sample so the trace always ends at the final state
    let k = k_apply(&u, spec, &cfg.newton, warm.as_ref())
        .map_err(|e| e.in_stage("descent-flow"))?;
    let e = energy(&u, spec);
    let dists = bands
        .iter()
        .map(|b| cone_distance(&u, b.cone, p))
        .collect::<Result<Vec<f64>>>()?;
    let chi = cutoff(e, &dists, bands, cfg.energy_band, cfg.band_width);
    if samples.last().map(|s: &FlowSample| s.t < t).unwrap_or(true) {
        samples.push(FlowSample {
            t,
            energy: e,
            pg_norm: k.pg_norm,
            cone_dists: dists,
            chi,
        });
    }
    if stop == FlowStop::MaxSteps && k.pg_norm <= cfg.pg_tol {
        stop = FlowStop::Critical;
    }

    Ok(FlowOutcome {
        u,
        stop,
        trace: FlowTrace {
            samples,
            cone_labels: bands.iter().map(|b| b.cone.label.clone()).collect(),
        },
        descent_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_mesh, interpolate, DomainSpec};

    fn unit_mesh(n: usize) -> std::sync::Arc<crate::grid::Mesh> {
        build_mesh(DomainSpec::unit_interval(), n).unwrap()
    }

    #[test]
    fn monotone_iteration_reaches_the_parabola() {
        // -u'' = 1 on (0,1): u = x(1-x)/2, reached from the zero subsolution
        let mesh = unit_mesh(512);
        let spec = NonlinearitySpec::constant(2.0, 1.0).unwrap();
        let start = FeFunction::zero(&mesh);
        let run = monotone_iterate(
            &start,
            &spec,
            MonotoneDirection::Ascending,
            &MonotoneConfig::default(),
        )
        .unwrap();
        let exact = interpolate(&mesh, |x| 0.5 * x[0] * (1.0 - x[0]));
        let err = run
            .u
            .values
            .iter()
            .zip(&exact.values)
            .map(|(&a, &b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "sup error {err}");
        assert!(run.residual < 1e-10, "residual {}", run.residual);
        assert!(run.iterations <= 3);
    }

    #[test]
    fn monotone_iteration_stops_immediately_at_a_solution() {
        let mesh = unit_mesh(256);
        let spec = NonlinearitySpec::constant(2.0, 1.0).unwrap();
        let start = monotone_iterate(
            &FeFunction::zero(&mesh),
            &spec,
            MonotoneDirection::Ascending,
            &MonotoneConfig::default(),
        )
        .unwrap()
        .u;
        let run = monotone_iterate(
            &start,
            &spec,
            MonotoneDirection::Ascending,
            &MonotoneConfig::default(),
        )
        .unwrap();
        assert_eq!(run.iterations, 1);
    }

    #[test]
    fn descending_run_from_a_supersolution_meets_the_ascending_limit() {
        let mesh = unit_mesh(256);
        let spec = NonlinearitySpec::constant(2.0, 1.0).unwrap();
        let beta = interpolate(&mesh, |x| x[0] * (1.0 - x[0])).zero_boundary();
        let down = monotone_iterate(
            &beta,
            &spec,
            MonotoneDirection::Descending,
            &MonotoneConfig::default(),
        )
        .unwrap();
        let up = monotone_iterate(
            &FeFunction::zero(&mesh),
            &spec,
            MonotoneDirection::Ascending,
            &MonotoneConfig::default(),
        )
        .unwrap();
        let gap = down
            .u
            .values
            .iter()
            .zip(&up.u.values)
            .map(|(&a, &b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(gap < 1e-10, "limits disagree by {gap}");
    }

    #[test]
    fn wrong_direction_is_reported() {
        let mesh = unit_mesh(128);
        let spec = NonlinearitySpec::constant(2.0, 1.0).unwrap();
        let res = monotone_iterate(
            &FeFunction::zero(&mesh),
            &spec,
            MonotoneDirection::Descending,
            &MonotoneConfig::default(),
        );
        assert!(matches!(res, Err(Error::Precondition(_))));
    }

    #[test]
    fn flow_from_a_solution_has_a_one_point_trace() {
        let mesh = unit_mesh(256);
        let spec = NonlinearitySpec::constant(2.0, 1.0).unwrap();
        let u = monotone_iterate(
            &FeFunction::zero(&mesh),
            &spec,
            MonotoneDirection::Ascending,
            &MonotoneConfig::default(),
        )
        .unwrap()
        .u;
        let out = descent_flow(&u, &[], &spec, &FlowConfig::default()).unwrap();
        assert_eq!(out.stop, FlowStop::Critical);
        assert_eq!(out.trace.samples.len(), 1);
    }

    #[test]
    fn vanishing_cutoff_freezes_the_state() {
        let mesh = unit_mesh(128);
        let spec = NonlinearitySpec::linear(2.0, 0.0).unwrap();
        let u0 = interpolate(&mesh, |x| (std::f64::consts::PI * x[0]).sin()).zero_boundary();
        let e0 = energy(&u0, &spec);
        let cfg = FlowConfig {
            // band far below the starting energy: chi = 0 at u0
            energy_band: Some((e0 - 2.0, e0 - 1.0)),
            ..FlowConfig::default()
        };
        let out = descent_flow(&u0, &[], &spec, &cfg).unwrap();
        assert_eq!(out.stop, FlowStop::LeftRegion);
        let drift: f64 = out
            .u
            .values
            .iter()
            .zip(&u0.values)
            .map(|(&a, &b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert_eq!(drift, 0.0);
    }

    #[test]
    fn linear_subcritical_flow_reaches_zero() {
        // f = lambda u with lambda < lambda_1: J is coercive, 0 the only
        // critical point, so the flow must drive pg_norm below tolerance
        let mesh = unit_mesh(128);
        let lam = 0.3 * std::f64::consts::PI.powi(2);
        let spec = NonlinearitySpec::linear(2.0, lam).unwrap();
        let u0 = interpolate(&mesh, |x| x[0] * (1.0 - x[0]) * (2.0 - x[0])).zero_boundary();
        let cfg = FlowConfig {
            pg_tol: 1e-7,
            max_steps: 4000,
            dt_max: 10.0,
            ..FlowConfig::default()
        };
        let out = descent_flow(&u0, &[], &spec, &cfg).unwrap();
        assert_eq!(out.stop, FlowStop::Critical);
        let last = out.trace.samples.last().unwrap();
        assert!(last.pg_norm <= 1e-6, "pg_norm {}", last.pg_norm);
        // energies sampled along the trace never increase
        for w in out.trace.samples.windows(2) {
            assert!(w[1].energy <= w[0].energy + 1e-12 * (1.0 + w[0].energy.abs()));
        }
    }

    #[test]
    fn flow_respects_an_invariant_cone_band() {
        // lower cone at the zero subsolution for -u'' = 1: K maps the cone
        // into itself, so capped steps must hold the distance at its start
        let mesh = unit_mesh(128);
        let spec = NonlinearitySpec::constant(2.0, 1.0).unwrap();
        let cone = ConeSpec::lower("floor", FeFunction::zero(&mesh));
        for eps in [1e-2, 1e-3] {
            let dip = interpolate(&mesh, |x| {
                -(std::f64::consts::PI * x[0]).sin()
            })
            .zero_boundary();
            // cone distance is homogeneous below the zero vertex, so scaling
            // the dip pins the starting distance at exactly eps
            let d_raw = cone_distance(&dip, &cone, 2.0).unwrap();
            let u0 = dip.scale(eps / d_raw);
            let d0 = cone_distance(&u0, &cone, 2.0).unwrap();
            assert!((d0 - eps).abs() < 1e-8 * eps);
            let cfg = FlowConfig {
                max_steps: 200,
                ..FlowConfig::default()
            };
            let out =
                descent_flow(&u0, &[ConeBand { cone: &cone, eps: 4.0 * eps }], &spec, &cfg)
                    .unwrap();
            for row in &out.trace.samples {
                assert!(
                    row.cone_dists[0] <= d0 * (1.0 + 1e-6),
                    "distance grew: {} > {}",
                    row.cone_dists[0],
                    d0
                );
            }
        }
    }

    #[test]
    fn trace_csv_has_the_expected_header() {
        let mesh = unit_mesh(64);
        let spec = NonlinearitySpec::constant(2.0, 1.0).unwrap();
        let cone = ConeSpec::lower("floor", FeFunction::zero(&mesh));
        let u0 = interpolate(&mesh, |x| 0.1 * x[0] * (1.0 - x[0])).zero_boundary();
        let cfg = FlowConfig {
            max_steps: 3,
            ..FlowConfig::default()
        };
        let out = descent_flow(&u0, &[ConeBand { cone: &cone, eps: 1.0 }], &spec, &cfg).unwrap();
        let csv = out.trace.to_csv();
        assert!(csv.starts_with("t,J,pg_norm,dist_floor,chi\n"));
        assert!(csv.lines().count() >= 2);
    }
}
