//! Path min-max between the two ordered minimal solutions, and the
//! orchestration that assembles all four solutions of one problem.

use std::sync::Arc;

use rand::Rng;

use crate::cones::{
    certify_invariance, cone_distance, eigen_ladder, invariance_ok, negative_envelope,
    positive_envelope, project_onto, separation_radius, verify_strict, Certificate, ConeSpec,
};
use crate::eigen::{hopf_margin, lambda1, lambda2, EigenConfig};
use crate::error::{Error, Result};
use crate::flows::{descent_flow, monotone_iterate, ConeBand, FlowConfig, MonotoneConfig,
    MonotoneDirection};
use crate::functional::{energy, newton_direction, residual, NewtonConfig};
use crate::grid::{fmt_float, FeFunction, Mesh};
use crate::koperator::k_apply;
use crate::problem::{check_hypotheses, HypothesisParams, HypothesisReport, NonlinearitySpec};

/// The four ordered barriers framing the saddle search, with the separation
/// radius of the two inner cone neighborhoods.
pub struct FourCones {
    pub alpha1: ConeSpec,
    pub beta1: ConeSpec,
    pub alpha2: ConeSpec,
    pub beta2: ConeSpec,
    pub eps_bar: f64,
}

#[derive(Debug, Clone)]
pub struct MinmaxConfig {
    /// Path discretization; odd and at least 5.
    pub path_nodes: usize,
    pub outer_iter: usize,
    /// Flow steps granted to each deformed node per outer iteration.
    pub flow_budget: usize,
    /// Relative stall threshold on the level.
    pub level_tol: f64,
    pub stall_window: usize,
    /// Crown pseudogradient norm below which Newton takes over.
    pub newton_switch: f64,
    /// Residual surrogate target for the refined saddle.
    pub refine_tol: f64,
    /// Slack for the final localization checks.
    pub loc_tol: f64,
    pub newton: NewtonConfig,
}

impl Default for MinmaxConfig {
    fn default() -> Self {
        MinmaxConfig {
            path_nodes: 41,
            outer_iter: 600,
            flow_budget: 4,
            level_tol: 1e-10,
            stall_window: 50,
            newton_switch: 1e-4,
            refine_tol: 1e-9,
            loc_tol: 1e-6,
            newton: NewtonConfig::default(),
        }
    }
}

/// Discrete path with per-node energies and the deformation mask: a node is
/// deformed only while it stays outside both inner cone neighborhoods.
pub struct PathState {
    pub nodes: Vec<FeFunction>,
    pub energies: Vec<f64>,
    pub s_mask: Vec<bool>,
}

pub struct SaddleReport {
    pub u: FeFunction,
    /// Critical level reached by the min-max.
    pub level: f64,
    pub pg_norm: f64,
    pub residual: f64,
    pub level_history: Vec<f64>,
    pub outer_iterations: usize,
    pub path: PathState,
}

pub enum MinmaxOutcome {
    Saddle(SaddleReport),
    /// The level sank to the endpoint energies: no ridge between the wells.
    NoSaddle {
        level_history: Vec<f64>,
        detail: String,
    },
    /// Newton left the localization region.
    RegionViolation { detail: String },
}

/// Lumped L2 distance used for path re-spacing.
fn chord(a: &FeFunction, b: &FeFunction) -> f64 {
    let mesh = a.mesh();
    mesh.lumped_mass
        .iter()
        .zip(a.values.iter().zip(&b.values))
        .map(|(&m, (&x, &y))| m * (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn blend(a: &FeFunction, b: &FeFunction, t: f64) -> FeFunction {
    a.scale(1.0 - t).add_scaled(t, b)
}

/// Truncates back into the ambient enlargements when a state drifts out.
fn retract(u: FeFunction, cones: &FourCones, p: f64) -> Result<FeFunction> {
    let slack = cones.eps_bar / 2.0;
    let mut w = u;
    if cone_distance(&w, &cones.alpha1, p)? > slack {
        w = project_onto(&w, &cones.alpha1);
    }
    if cone_distance(&w, &cones.beta2, p)? > slack {
        w = project_onto(&w, &cones.beta2);
    }
    Ok(w)
}

/// Equalizes chordal spacing on each side of the crown separately; the crown
/// itself and both endpoints never move, so re-spacing cannot lift the peak.
fn respace_sides(path: &[FeFunction], crown: usize) -> Vec<FeFunction> {
    let mut out = path.to_vec();
    for (lo, hi) in [(0usize, crown), (crown, path.len() - 1)] {
        if hi - lo < 2 {
            continue;
        }
        let mut cum = vec![0.0];
        for i in lo..hi {
            let last = *cum.last().unwrap();
            cum.push(last + chord(&path[i], &path[i + 1]));
        }
        let total = *cum.last().unwrap();
        if total <= 0.0 {
            continue;
        }
        for (j, item) in out.iter_mut().enumerate().take(hi).skip(lo + 1) {
            let target = total * (j - lo) as f64 / (hi - lo) as f64;
            let seg = match cum.binary_search_by(|c| c.partial_cmp(&target).unwrap()) {
                Ok(k) => k.min(cum.len() - 2),
                Err(k) => k.saturating_sub(1).min(cum.len() - 2),
            };
            let span = cum[seg + 1] - cum[seg];
            let frac = if span > 0.0 { (target - cum[seg]) / span } else { 0.0 };
            *item = blend(&path[lo + seg], &path[lo + seg + 1], frac);
        }
    }
    out
}

struct PathEval {
    energies: Vec<f64>,
    mask: Vec<bool>,
    level: Option<(usize, f64)>,
}

fn eval_path(
    path: &[FeFunction],
    cones: &FourCones,
    spec: &NonlinearitySpec,
) -> Result<PathEval> {
    let p = spec.p;
    let mut energies = Vec::with_capacity(path.len());
    let mut mask = Vec::with_capacity(path.len());
    let mut level: Option<(usize, f64)> = None;
    for (i, node) in path.iter().enumerate() {
        let e = energy(node, spec);
        let outside = cone_distance(node, &cones.alpha2, p)? > cones.eps_bar
            && cone_distance(node, &cones.beta1, p)? > cones.eps_bar;
        if outside && level.map(|(_, c)| e > c).unwrap_or(true) {
            level = Some((i, e));
        }
        energies.push(e);
        mask.push(outside);
    }
    Ok(PathEval { energies, mask, level })
}

fn check_ordering(cones: &FourCones) -> Result<()> {
    let mesh = cones.alpha1.vertex.mesh();
    let fields = [
        (&cones.alpha1.vertex, &cones.beta1.vertex, "alpha1", "beta1"),
        (&cones.beta1.vertex, &cones.alpha2.vertex, "beta1", "alpha2"),
        (&cones.alpha2.vertex, &cones.beta2.vertex, "alpha2", "beta2"),
    ];
    for (lo, hi, lo_name, hi_name) in fields {
        for &i in &mesh.interior {
            if lo.values[i] >= hi.values[i] {
                return Err(Error::Precondition(format!(
                    "barrier ordering fails at node {i}: {lo_name} = {} is not below {hi_name} = {}",
                    fmt_float(lo.values[i]),
                    fmt_float(hi.values[i]),
                )));
            }
        }
    }
    Ok(())
}

/// Min-max over discrete paths from `u1` to `u2`: every node outside the two
/// inner cone neighborhoods follows the descent flow, the path is re-spaced
/// around its frozen crown, and the crown is polished by damped Newton once
/// its pseudogradient is small. The returned level is the limiting
/// max-over-mask energy.
pub fn mountain_pass(
    u1: &FeFunction,
    u2: &FeFunction,
    cones: &FourCones,
    spec: &NonlinearitySpec,
    cfg: &MinmaxConfig,
) -> Result<MinmaxOutcome> {
    let p = spec.p;
    let m = cfg.path_nodes;
    if m < 5 || m % 2 == 0 {
        return Err(Error::parameter(
            "path_nodes",
            "the path needs an odd node count of at least 5",
        ));
    }
    if cones.eps_bar <= 0.0 {
        return Err(Error::parameter("eps_bar", "separation radius must be positive"));
    }
    check_ordering(cones)?;
    for (u, cone, name) in [
        (u1, &cones.beta1, "left endpoint vs beta1"),
        (u2, &cones.alpha2, "right endpoint vs alpha2"),
    ] {
        let d = cone_distance(u, cone, p)?;
        if d > cones.eps_bar {
            return Err(Error::Precondition(format!(
                "{name}: endpoint sits {} outside its anchor cone (allowance {})",
                fmt_float(d),
                fmt_float(cones.eps_bar)
            )));
        }
    }

    // straight blends of the wells can pass exactly through a degenerate
    // critical point between them; a transverse sign-changing bump lets the
    // deformation find routes around it instead of stalling on it
    let mesh = u1.mesh();
    let x_mid = match mesh.domain {
        crate::grid::DomainSpec::Interval { a, b } => 0.5 * (a + b),
        crate::grid::DomainSpec::UnitSquare => 0.5,
    };
    let mut z = crate::grid::boundary_distance_field(mesh);
    for (i, v) in z.values.iter_mut().enumerate() {
        *v *= mesh.nodes[i][0] - x_mid;
    }
    let z_amp = z.max_abs();
    let amp = 0.25 * u1.max_abs().max(u2.max_abs());
    let mut path: Vec<FeFunction> = (0..m)
        .map(|i| {
            let t = i as f64 / (m - 1) as f64;
            let mut node = blend(u1, u2, t);
            if z_amp > 0.0 {
                let bump = (std::f64::consts::PI * t).sin() * amp / z_amp;
                node = node.add_scaled(bump, &z);
            }
            node
        })
        .collect();
    path[0] = u1.clone();
    path[m - 1] = u2.clone();
    for node in path.iter_mut().skip(1).take(m - 2) {
        let retr = retract(node.clone(), cones, p)?;
        *node = retr;
    }

    let e_ends = energy(u1, spec).max(energy(u2, spec));
    let ambient = [
        (&cones.alpha1, cones.eps_bar / 2.0),
        (&cones.beta2, cones.eps_bar / 2.0),
    ];
    // step length stays a fraction of the separation radius: full fixed-point
    // steps would sink the whole path into the wells before the ridge forms
    let flow_cfg = FlowConfig {
        dt0: Some(0.25 * cones.eps_bar),
        dt_max: 0.5 * cones.eps_bar,
        max_steps: cfg.flow_budget,
        pg_tol: 0.5 * cfg.newton_switch,
        newton: cfg.newton.clone(),
        ..FlowConfig::default()
    };

    let mut history: Vec<f64> = Vec::new();
    let mut best = f64::INFINITY;
    let mut stall = 0usize;
    let mut outer_done = 0usize;
    let mut crown_state: Option<FeFunction> = None;

    for outer in 0..cfg.outer_iter {
        outer_done = outer + 1;
        let eval = eval_path(&path, cones, spec)?;
        let Some(_) = eval.level else {
            return Ok(MinmaxOutcome::NoSaddle {
                level_history: history,
                detail: "every path node fell into the inner cone neighborhoods".into(),
            });
        };

        // flow every masked node, endpoints excluded by their cone anchors
        for i in 1..m - 1 {
            if !eval.mask[i] {
                continue;
            }
            let watch: Vec<ConeBand> = ambient
                .iter()
                .map(|(c, e)| ConeBand { cone: c, eps: *e })
                .collect();
            let out = descent_flow(&path[i], &watch, spec, &flow_cfg)
                .map_err(|e| e.in_stage("mountain-pass"))?;
            path[i] = retract(out.u, cones, p)?;
        }

        // re-space around the frozen crown; blends can momentarily reveal
        // ridge states above the sampled level, which is the discretization
        // refining itself rather than the min-max rising
        let flowed = eval_path(&path, cones, spec)?;
        let Some((crown_now, level_now)) = flowed.level else {
            return Ok(MinmaxOutcome::NoSaddle {
                level_history: history,
                detail: "the deformation sank the path into the inner cones".into(),
            });
        };
        let mut proposal = respace_sides(&path, crown_now);
        for node in proposal.iter_mut().skip(1).take(m - 2) {
            let retr = retract(node.clone(), cones, p)?;
            *node = retr;
        }
        let prop_eval = eval_path(&proposal, cones, spec)?;
        let (crown, level) = match prop_eval.level {
            Some((pc, pl)) => {
                path = proposal;
                (pc, pl)
            }
            // re-spacing would empty the mask: keep the flowed path
            None => (crown_now, level_now),
        };
        // the min-max estimate: the lowest max-over-mask seen so far; raw
        // per-iteration maxima wobble within the blend sampling error
        history.push(level.min(history.last().copied().unwrap_or(f64::INFINITY)));

        if level <= e_ends + 1e-8 * (1.0 + level.abs()) {
            return Ok(MinmaxOutcome::NoSaddle {
                level_history: history,
                detail: format!(
                    "level {} collapsed onto the endpoint energies {}",
                    fmt_float(level),
                    fmt_float(e_ends)
                ),
            });
        }

        if level < best - cfg.level_tol * (1.0 + level.abs()) {
            best = level;
            stall = 0;
        } else {
            stall += 1;
        }

        let crown_pg = k_apply(&path[crown], spec, &cfg.newton, None)
            .map_err(|e| e.in_stage("mountain-pass"))?
            .pg_norm;
        crown_state = Some(path[crown].clone());
        if crown_pg <= cfg.newton_switch || stall >= cfg.stall_window {
            break;
        }
    }

    let Some(mut w) = crown_state else {
        return Err(Error::Precondition("outer iteration budget is zero".into()));
    };

    // damped Newton on the full residual, guarded to the saddle region
    let guard = |w: &FeFunction| -> Result<Option<String>> {
        let da1 = cone_distance(w, &cones.alpha1, p)?;
        let db2 = cone_distance(w, &cones.beta2, p)?;
        let da2 = cone_distance(w, &cones.alpha2, p)?;
        let db1 = cone_distance(w, &cones.beta1, p)?;
        if da1 > cones.eps_bar / 2.0 + cfg.loc_tol || db2 > cones.eps_bar / 2.0 + cfg.loc_tol {
            return Ok(Some(format!(
                "left the ambient region: d(alpha1) = {}, d(beta2) = {}",
                fmt_float(da1),
                fmt_float(db2)
            )));
        }
        if da2 < cones.eps_bar / 2.0 || db1 < cones.eps_bar / 2.0 {
            return Ok(Some(format!(
                "fell into an inner cone: d(alpha2) = {}, d(beta1) = {}",
                fmt_float(da2),
                fmt_float(db1)
            )));
        }
        Ok(None)
    };

    let eps_reg = 1e-9;
    let mut surr = residual(&w, spec).dual_norm_surrogate();
    let mut refine_history = vec![surr];
    for _ in 0..cfg.newton.max_iter {
        if surr <= cfg.refine_tol {
            break;
        }
        if let Some(detail) = guard(&w)? {
            return Ok(MinmaxOutcome::RegionViolation { detail });
        }
        let res = residual(&w, spec);
        let dir = newton_direction(&w, spec, eps_reg, &res.vec)
            .map_err(|e| e.in_stage("mountain-pass"))?;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let cand = w.add_scaled(t, &dir);
            let cand_surr = residual(&cand, spec).dual_norm_surrogate();
            if cand_surr <= (1.0 - 1e-4 * t) * surr {
                w = cand;
                surr = cand_surr;
                refine_history.push(surr);
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if surr > cfg.refine_tol {
        return Err(Error::NonConvergence {
            iterations: refine_history.len(),
            residual: surr,
            last_iterate: w.values,
            residual_history: refine_history,
        }
        .in_stage("mountain-pass"));
    }
    if let Some(detail) = guard(&w)? {
        return Ok(MinmaxOutcome::RegionViolation { detail });
    }

    let k = k_apply(&w, spec, &cfg.newton, None).map_err(|e| e.in_stage("mountain-pass"))?;
    let level = energy(&w, spec);
    let eval = eval_path(&path, cones, spec)?;
    Ok(MinmaxOutcome::Saddle(SaddleReport {
        residual: surr,
        pg_norm: k.pg_norm,
        u: w,
        level,
        level_history: history,
        outer_iterations: outer_done,
        path: PathState {
            nodes: path,
            energies: eval.energies,
            s_mask: eval.mask,
        },
    }))
}

/// Sign of a solution relative to its own scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignClass {
    Zero,
    Positive,
    Negative,
    SignChanging,
}

impl std::fmt::Display for SignClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SignClass::Zero => "zero",
            SignClass::Positive => "positive",
            SignClass::Negative => "negative",
            SignClass::SignChanging => "sign-changing",
        };
        f.write_str(s)
    }
}

pub fn classify_sign(u: &FeFunction, scale: f64) -> SignClass {
    let zero_thr = 1e-9 * (1.0 + scale);
    let amax = u.max_value();
    let amin = u.min_value();
    if amax.abs().max(amin.abs()) <= zero_thr {
        return SignClass::Zero;
    }
    let thr = 1e-3 * u.max_abs();
    match (amin < -thr, amax > thr) {
        (true, true) => SignClass::SignChanging,
        (false, true) => SignClass::Positive,
        (true, false) => SignClass::Negative,
        (false, false) => SignClass::Zero,
    }
}

pub struct SolutionEntry {
    pub label: &'static str,
    pub u: FeFunction,
    pub energy: f64,
    pub residual: f64,
    pub sign: SignClass,
}

pub struct FourSolutionsReport {
    /// zero, negative, positive, sign-changing, in that order.
    pub solutions: Vec<SolutionEntry>,
    pub lambda1: f64,
    pub lambda2: f64,
    pub hopf_margin: f64,
    /// Lower bound on p from the ambient dimension; reported, not enforced.
    pub p_threshold: f64,
    pub mu_eff: f64,
    pub t_bar: f64,
    pub ell: f64,
    pub eps_bar: f64,
    pub saddle_level: f64,
    pub level_history: Vec<f64>,
    pub outer_iterations: usize,
    pub certificates: Vec<(String, Vec<Certificate>)>,
    pub hypotheses: HypothesisReport,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct FourSolutionsConfig {
    pub newton: NewtonConfig,
    pub eigen: EigenConfig,
    pub minmax: MinmaxConfig,
    pub monotone: MonotoneConfig,
    pub hypothesis: HypothesisParams,
    /// Magnitude from which the ladder scale search starts.
    pub t_scale: f64,
}

impl Default for FourSolutionsConfig {
    fn default() -> Self {
        FourSolutionsConfig {
            newton: NewtonConfig::default(),
            eigen: EigenConfig::default(),
            minmax: MinmaxConfig::default(),
            monotone: MonotoneConfig::default(),
            hypothesis: HypothesisParams::default(),
            t_scale: 1.0,
        }
    }
}

fn l2_distance(a: &FeFunction, b: &FeFunction) -> f64 {
    chord(a, b)
}

/// Builds the trivial, negative, positive and sign-changing solutions of one
/// problem: eigenvalues first, then the envelope and ladder barriers with
/// their invariance certificates, the two monotone runs, and finally the
/// mountain pass between them. Every stage failure carries its stage name.
pub fn four_solutions(
    mesh: &Arc<Mesh>,
    spec: &NonlinearitySpec,
    cfg: &FourSolutionsConfig,
    rng: &mut impl Rng,
) -> Result<FourSolutionsReport> {
    let p = spec.p;
    let dim = mesh.dim() as f64;
    let mut notes = Vec::new();

    // structural hypotheses on f
    let hypotheses = check_hypotheses(spec, &mesh.domain, &cfg.hypothesis);
    if !hypotheses.all_ok() {
        let bad: Vec<&str> = hypotheses
            .checks
            .iter()
            .filter(|c| c.status == crate::problem::CheckStatus::Violated)
            .map(|c| c.name)
            .collect();
        return Err(
            Error::Precondition(format!("violated hypotheses: {}", bad.join(", ")))
                .in_stage("hypotheses"),
        );
    }
    let zero_ok = mesh
        .interior
        .iter()
        .take(7)
        .all(|&i| spec.f(&mesh.nodes[i], 0.0).abs() < 1e-12);
    if !zero_ok {
        return Err(Error::Precondition(
            "f(x, 0) does not vanish, so zero is not a solution".into(),
        )
        .in_stage("hypotheses"));
    }

    // eigenvalues of the principal part
    let first = lambda1(mesh, p, &cfg.eigen).map_err(|e| e.in_stage("eigen"))?;
    let second = lambda2(mesh, p, &first, &cfg.eigen, rng).map_err(|e| e.in_stage("eigen"))?;
    if second.lambda < first.lambda * (1.0 + 1e-6) {
        return Err(Error::Precondition(format!(
            "second eigenvalue {} does not separate from the first {}",
            fmt_float(second.lambda),
            fmt_float(first.lambda)
        ))
        .in_stage("eigen"));
    }
    let p_threshold = (dim - 2.0 + (9.0 * dim * dim - 4.0 * dim + 4.0).sqrt()) / (2.0 * dim);
    notes.push(format!(
        "multiplicity threshold p > {} at dimension {}; reported, not enforced",
        fmt_float(p_threshold),
        dim as usize
    ));

    // inner ladder at the eigenfunction scale
    let lambda = spec.zero_slope.ok_or_else(|| {
        Error::Precondition("the nonlinearity has no slope at zero".into()).in_stage("ladder")
    })?;
    if lambda <= second.lambda {
        return Err(Error::Precondition(format!(
            "slope at zero {} does not exceed the second eigenvalue {}",
            fmt_float(lambda),
            fmt_float(second.lambda)
        ))
        .in_stage("ladder"));
    }
    let ladder = eigen_ladder(spec, &first, cfg.t_scale).map_err(|e| e.in_stage("ladder"))?;
    let mut alpha2 = ladder.alpha;
    alpha2.label = "alpha2".into();
    let mut beta1 = ladder.beta;
    beta1.label = "beta1".into();
    for cone in [&alpha2, &beta1] {
        let strict = verify_strict(cone, spec);
        if !strict.strict {
            return Err(Error::Precondition(format!(
                "ladder barrier {} is not strict (margin {})",
                cone.label,
                fmt_float(strict.min_margin)
            ))
            .in_stage("ladder"));
        }
    }

    // asymptotic slope bound, tightened below the first eigenvalue
    let asym = spec.asymptotic.ok_or_else(|| {
        Error::Precondition("an asymptotic slope bound is required".into()).in_stage("envelopes")
    })?;
    let mu_eff = asym.mu.min(first.lambda / 2.0);
    if mu_eff < asym.mu {
        notes.push(format!(
            "asymptotic slope bound tightened from {} to {} to stay below lambda_1",
            fmt_float(asym.mu),
            fmt_float(mu_eff)
        ));
    }
    let spec = spec
        .clone()
        .with_asymptotic_mu(mu_eff)
        .map_err(|e| e.in_stage("envelopes"))?;

    // outer barriers enclosing every solution
    let neg = negative_envelope(mesh, &spec, first.lambda).map_err(|e| e.in_stage("envelopes"))?;
    let pos = positive_envelope(mesh, &spec, first.lambda).map_err(|e| e.in_stage("envelopes"))?;
    let alpha1 = ConeSpec::lower("alpha1", neg.w);
    let beta2 = ConeSpec::upper("beta2", pos.w);
    for cone in [&alpha1, &beta2] {
        let strict = verify_strict(cone, &spec);
        if !strict.strict {
            return Err(Error::Precondition(format!(
                "envelope {} is not a strict barrier (margin {})",
                cone.label,
                fmt_float(strict.min_margin)
            ))
            .in_stage("envelopes"));
        }
    }

    // invariance certificates for every cone
    let mut certificates = Vec::new();
    for cone in [&alpha1, &beta1, &alpha2, &beta2] {
        let margin = cone.remainder_fn(&spec);
        let certs = certify_invariance(&mesh.domain, margin.as_ref(), p, mesh.dim());
        let ok = invariance_ok(&certs);
        certificates.push((cone.label.clone(), certs));
        if !ok {
            return Err(Error::Precondition(format!(
                "no invariance certificate holds for cone {}",
                cone.label
            ))
            .in_stage("certificates"));
        }
    }

    let eps_bar =
        separation_radius(&alpha2, &beta1, p).map_err(|e| e.in_stage("certificates"))?;

    // minimal solutions of the two outer intervals
    let run1 = monotone_iterate(
        &alpha1.vertex,
        &spec,
        MonotoneDirection::Ascending,
        &cfg.monotone,
    )
    .map_err(|e| e.in_stage("minimal-solutions"))?;
    let run2 = monotone_iterate(
        &alpha2.vertex,
        &spec,
        MonotoneDirection::Ascending,
        &cfg.monotone,
    )
    .map_err(|e| e.in_stage("minimal-solutions"))?;
    let u1 = run1.u;
    let u2 = run2.u;
    let within = |u: &FeFunction, hi: &FeFunction| {
        u.values
            .iter()
            .zip(&hi.values)
            .all(|(&a, &b)| a <= b + 1e-9 * (1.0 + b.abs()))
    };
    if !within(&u1, &beta1.vertex) {
        return Err(Error::Precondition(
            "the ascending run from alpha1 escaped past beta1".into(),
        )
        .in_stage("minimal-solutions"));
    }
    if !within(&u2, &beta2.vertex) {
        return Err(Error::Precondition(
            "the ascending run from alpha2 escaped past beta2".into(),
        )
        .in_stage("minimal-solutions"));
    }

    // saddle between the wells
    let cones = FourCones {
        alpha1,
        beta1,
        alpha2,
        beta2,
        eps_bar,
    };
    let outcome = mountain_pass(&u1, &u2, &cones, &spec, &cfg.minmax)?;
    let saddle = match outcome {
        MinmaxOutcome::Saddle(s) => s,
        MinmaxOutcome::NoSaddle { detail, .. } => {
            return Err(Error::Precondition(format!("no saddle found: {detail}"))
                .in_stage("mountain-pass"))
        }
        MinmaxOutcome::RegionViolation { detail } => {
            return Err(Error::Precondition(format!(
                "saddle refinement left its region: {detail}"
            ))
            .in_stage("mountain-pass"))
        }
    };
    notes.push(
        "the discrete path samples its continuous deformation, so the level is a \
         max over path nodes rather than over a continuum"
            .into(),
    );

    let zero = FeFunction::zero(mesh);
    let scale = u1.max_abs().max(u2.max_abs()).max(saddle.u.max_abs());
    let entries = vec![
        SolutionEntry {
            label: "u0",
            energy: energy(&zero, &spec),
            residual: residual(&zero, &spec).dual_norm_surrogate(),
            sign: classify_sign(&zero, scale),
            u: zero,
        },
        SolutionEntry {
            label: "u1",
            energy: energy(&u1, &spec),
            residual: run1.residual,
            sign: classify_sign(&u1, scale),
            u: u1,
        },
        SolutionEntry {
            label: "u2",
            energy: energy(&u2, &spec),
            residual: run2.residual,
            sign: classify_sign(&u2, scale),
            u: u2,
        },
        SolutionEntry {
            label: "u3",
            energy: saddle.level,
            residual: saddle.residual,
            sign: classify_sign(&saddle.u, scale),
            u: saddle.u,
        },
    ];

    // localization of the saddle relative to all four cones
    let loc = &cfg.minmax.loc_tol;
    let u3 = &entries[3].u;
    let d_a1 = cone_distance(u3, &cones.alpha1, p)?;
    let d_b2 = cone_distance(u3, &cones.beta2, p)?;
    let d_a2 = cone_distance(u3, &cones.alpha2, p)?;
    let d_b1 = cone_distance(u3, &cones.beta1, p)?;
    if d_a1 > *loc || d_b2 > *loc || d_a2 <= eps_bar / 2.0 || d_b1 <= eps_bar / 2.0 {
        return Err(Error::Precondition(format!(
            "saddle localization failed: d(alpha1) = {}, d(beta2) = {}, d(alpha2) = {}, d(beta1) = {}",
            fmt_float(d_a1),
            fmt_float(d_b2),
            fmt_float(d_a2),
            fmt_float(d_b1)
        ))
        .in_stage("mountain-pass"));
    }

    Ok(FourSolutionsReport {
        solutions: entries,
        lambda1: first.lambda,
        lambda2: second.lambda,
        hopf_margin: hopf_margin(&first.phi),
        p_threshold,
        mu_eff,
        t_bar: ladder.t_bar,
        ell: ladder.ell,
        eps_bar,
        saddle_level: saddle.level,
        level_history: saddle.level_history,
        outer_iterations: saddle.outer_iterations,
        certificates,
        hypotheses,
        notes,
    })
}

/// Smallest pairwise lumped L2 distance among the reported solutions.
pub fn min_pairwise_distance(report: &FourSolutionsReport) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..report.solutions.len() {
        for j in i + 1..report.solutions.len() {
            best = best.min(l2_distance(&report.solutions[i].u, &report.solutions[j].u));
        }
    }
    best
}
