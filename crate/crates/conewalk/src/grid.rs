//! Meshes and P1 finite element functions.
//!
//! Domains are an interval or the unit square; meshes are uniform, with the
//! square cut into right triangles along the cell diagonal. P1 gradients are
//! constant per element, so `w1p_norm` integrates |grad u|^p exactly. Scalar
//! integrands composed with a P1 function (`ls_norm`, energy densities) use
//! fixed Gauss rules: 3 points per segment (degree 5), 6 points per triangle
//! (degree 4).

use std::fmt::Write as _;
use std::sync::Arc;

use crate::{Error, Result};

pub type Point = [f64; 2];

/// Computational domain. The y coordinate is unused for intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DomainSpec {
    Interval { a: f64, b: f64 },
    UnitSquare,
}

impl DomainSpec {
    pub fn unit_interval() -> Self {
        DomainSpec::Interval { a: 0.0, b: 1.0 }
    }

    pub fn dim(&self) -> usize {
        match self {
            DomainSpec::Interval { .. } => 1,
            DomainSpec::UnitSquare => 2,
        }
    }

    /// Distance to the boundary, evaluated analytically.
    pub fn boundary_distance(&self, p: &Point) -> f64 {
        match self {
            DomainSpec::Interval { a, b } => (p[0] - a).min(b - p[0]).max(0.0),
            DomainSpec::UnitSquare => {
                let dx = p[0].min(1.0 - p[0]);
                let dy = p[1].min(1.0 - p[1]);
                dx.min(dy).max(0.0)
            }
        }
    }

    /// The point at the given depth along the inward ray through p from its
    /// nearest boundary face; used to evaluate fields at well-represented
    /// coordinates when p itself sits within float rounding of the boundary.
    pub fn push_inward(&self, p: &Point, depth: f64) -> Point {
        match self {
            DomainSpec::Interval { a, b } => {
                if p[0] - a <= b - p[0] {
                    [a + depth, 0.0]
                } else {
                    [b - depth, 0.0]
                }
            }
            DomainSpec::UnitSquare => {
                let tx = p[0].clamp(depth, 1.0 - depth);
                let ty = p[1].clamp(depth, 1.0 - depth);
                let sides = [p[0], 1.0 - p[0], p[1], 1.0 - p[1]];
                let nearest = sides
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .unwrap()
                    .0;
                match nearest {
                    0 => [depth, ty],
                    1 => [1.0 - depth, ty],
                    2 => [tx, depth],
                    _ => [tx, 1.0 - depth],
                }
            }
        }
    }

    pub fn measure(&self) -> f64 {
        match self {
            DomainSpec::Interval { a, b } => b - a,
            DomainSpec::UnitSquare => 1.0,
        }
    }
}

/// Reference quadrature rule in barycentric coordinates; weights sum to 1 and
/// are multiplied by the element measure at use sites.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    fn segment_gauss3() -> Self {
        let r = (3.0f64 / 5.0).sqrt();
        let ts = [(1.0 - r) / 2.0, 0.5, (1.0 + r) / 2.0];
        QuadratureRule {
            points: ts.iter().map(|&t| [1.0 - t, t, 0.0]).collect(),
            weights: vec![5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0],
        }
    }

    fn triangle_degree4() -> Self {
        // two symmetric orbits, exact through polynomial degree 4
        let (a1, w1) = (0.445948490915965f64, 0.223381589678011f64);
        let (a2, w2) = (0.091576213509771f64, 0.109951743655322f64);
        let mut points = Vec::with_capacity(6);
        let mut weights = Vec::with_capacity(6);
        for (a, w) in [(a1, w1), (a2, w2)] {
            let b = 1.0 - 2.0 * a;
            points.push([b, a, a]);
            points.push([a, b, a]);
            points.push([a, a, b]);
            weights.extend_from_slice(&[w, w, w]);
        }
        QuadratureRule { points, weights }
    }
}

/// Uniform mesh over a [`DomainSpec`]. Elements are segments (2 vertices) or
/// triangles (3 vertices); `elems` always stores 3 slots and `elem_nodes`
/// trims to the live ones.
#[derive(Debug)]
pub struct Mesh {
    pub domain: DomainSpec,
    /// cells per side
    pub n: usize,
    pub nodes: Vec<Point>,
    elems: Vec<[usize; 3]>,
    pub boundary: Vec<bool>,
    /// interior node indices, ascending
    pub interior: Vec<usize>,
    /// node index -> position in `interior`, if interior
    pub interior_pos: Vec<Option<usize>>,
    pub elem_vol: Vec<f64>,
    /// gradient of each vertex basis function, constant per element
    elem_grads: Vec<[[f64; 2]; 3]>,
    pub quad: QuadratureRule,
    /// lumped node measures: integral of the hat function at each node
    pub lumped_mass: Vec<f64>,
}

impl Mesh {
    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_elems(&self) -> usize {
        self.elems.len()
    }

    pub fn elem_nodes(&self, e: usize) -> &[usize] {
        &self.elems[e][..self.dim() + 1]
    }

    pub fn elem_grads(&self, e: usize) -> &[[f64; 2]] {
        &self.elem_grads[e][..self.dim() + 1]
    }

    /// Cell side length (the grading parameter of the uniform mesh).
    pub fn h(&self) -> f64 {
        match self.domain {
            DomainSpec::Interval { a, b } => (b - a) / self.n as f64,
            DomainSpec::UnitSquare => 1.0 / self.n as f64,
        }
    }

    /// Undirected node adjacency induced by the elements.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for e in 0..self.n_elems() {
            let nodes = self.elem_nodes(e);
            for i in 0..nodes.len() {
                for j in i + 1..nodes.len() {
                    out.push((nodes[i], nodes[j]));
                }
            }
        }
        out
    }

    /// Interior nodes that share an element with a boundary node.
    pub fn near_boundary_nodes(&self) -> Vec<usize> {
        let mut near = vec![false; self.n_nodes()];
        for e in 0..self.n_elems() {
            let nodes = self.elem_nodes(e);
            if nodes.iter().any(|&i| self.boundary[i]) {
                for &i in nodes {
                    if !self.boundary[i] {
                        near[i] = true;
                    }
                }
            }
        }
        near
            .iter()
            .enumerate()
            .filter_map(|(i, &f)| f.then_some(i))
            .collect()
    }
}

/// Builds the uniform mesh with `n` cells per side.
pub fn build_mesh(domain: DomainSpec, n: usize) -> Result<Arc<Mesh>> {
    if n < 2 {
        return Err(Error::parameter("n", format!("need at least 2 cells, got {n}")));
    }
    let mesh = match domain {
        DomainSpec::Interval { a, b } => {
            if !(b > a) {
                return Err(Error::parameter("domain", "interval needs b > a"));
            }
            let h = (b - a) / n as f64;
            let nodes: Vec<Point> = (0..=n).map(|i| [a + i as f64 * h, 0.0]).collect();
            let elems: Vec<[usize; 3]> = (0..n).map(|i| [i, i + 1, usize::MAX]).collect();
            let mut boundary = vec![false; n + 1];
            boundary[0] = true;
            boundary[n] = true;
            let elem_vol = vec![h; n];
            let g = 1.0 / h;
            let elem_grads = vec![[[-g, 0.0], [g, 0.0], [0.0, 0.0]]; n];
            Mesh {
                domain: DomainSpec::Interval { a, b },
                n,
                nodes,
                elems,
                boundary,
                interior: Vec::new(),
                interior_pos: Vec::new(),
                elem_vol,
                elem_grads,
                quad: QuadratureRule::segment_gauss3(),
                lumped_mass: Vec::new(),
            }
        }
        DomainSpec::UnitSquare => {
            let h = 1.0 / n as f64;
            let idx = |i: usize, j: usize| j * (n + 1) + i;
            let mut nodes = Vec::with_capacity((n + 1) * (n + 1));
            for j in 0..=n {
                for i in 0..=n {
                    nodes.push([i as f64 * h, j as f64 * h]);
                }
            }
            let mut elems = Vec::with_capacity(2 * n * n);
            for j in 0..n {
                for i in 0..n {
                    let a = idx(i, j);
                    let b = idx(i + 1, j);
                    let c = idx(i + 1, j + 1);
                    let d = idx(i, j + 1);
                    elems.push([a, b, c]); // lower-right triangle
                    elems.push([a, c, d]); // upper-left triangle
                }
            }
            let boundary: Vec<bool> = nodes
                .iter()
                .map(|p| {
                    p[0] <= 0.0 + 1e-14 || p[0] >= 1.0 - 1e-14 || p[1] <= 1e-14 || p[1] >= 1.0 - 1e-14
                })
                .collect();
            let vol = h * h / 2.0;
            let mut elem_grads = Vec::with_capacity(elems.len());
            let mut elem_vol = Vec::with_capacity(elems.len());
            for t in &elems {
                let p0 = nodes[t[0]];
                let p1 = nodes[t[1]];
                let p2 = nodes[t[2]];
                let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
                let inv = 1.0 / det;
                elem_grads.push([
                    [(p1[1] - p2[1]) * inv, (p2[0] - p1[0]) * inv],
                    [(p2[1] - p0[1]) * inv, (p0[0] - p2[0]) * inv],
                    [(p0[1] - p1[1]) * inv, (p1[0] - p0[0]) * inv],
                ]);
                elem_vol.push(vol);
            }
            Mesh {
                domain: DomainSpec::UnitSquare,
                n,
                nodes,
                elems,
                boundary,
                interior: Vec::new(),
                interior_pos: Vec::new(),
                elem_vol,
                elem_grads,
                quad: QuadratureRule::triangle_degree4(),
                lumped_mass: Vec::new(),
            }
        }
    };
    let mut mesh = mesh;
    let mut interior = Vec::new();
    let mut interior_pos = vec![None; mesh.n_nodes()];
    for i in 0..mesh.n_nodes() {
        if !mesh.boundary[i] {
            interior_pos[i] = Some(interior.len());
            interior.push(i);
        }
    }
    mesh.interior = interior;
    mesh.interior_pos = interior_pos;
    let mut lumped = vec![0.0; mesh.n_nodes()];
    let share = 1.0 / (mesh.dim() + 1) as f64;
    for e in 0..mesh.n_elems() {
        for &i in mesh.elem_nodes(e) {
            lumped[i] += mesh.elem_vol[e] * share;
        }
    }
    mesh.lumped_mass = lumped;
    Ok(Arc::new(mesh))
}

/// Nodal P1 function on a shared mesh.
#[derive(Debug, Clone)]
pub struct FeFunction {
    mesh: Arc<Mesh>,
    pub values: Vec<f64>,
}

impl FeFunction {
    pub fn zero(mesh: &Arc<Mesh>) -> Self {
        FeFunction {
            mesh: Arc::clone(mesh),
            values: vec![0.0; mesh.n_nodes()],
        }
    }

    pub fn from_values(mesh: &Arc<Mesh>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), mesh.n_nodes(), "nodal vector length mismatch");
        FeFunction {
            mesh: Arc::clone(mesh),
            values,
        }
    }

    pub fn constant(mesh: &Arc<Mesh>, c: f64) -> Self {
        FeFunction {
            mesh: Arc::clone(mesh),
            values: vec![c; mesh.n_nodes()],
        }
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn same_mesh(&self, other: &FeFunction) -> bool {
        Arc::ptr_eq(&self.mesh, &other.mesh)
            || (self.mesh.domain == other.mesh.domain && self.mesh.n == other.mesh.n)
    }

    /// True when every boundary node carries exactly zero, i.e. the function
    /// represents an element of the zero-trace Sobolev space.
    pub fn is_dirichlet_zero(&self) -> bool {
        self.mesh
            .boundary
            .iter()
            .zip(&self.values)
            .all(|(&b, &v)| !b || v == 0.0)
    }

    pub fn zero_boundary(mut self) -> Self {
        for (v, &b) in self.values.iter_mut().zip(&self.mesh.boundary) {
            if b {
                *v = 0.0;
            }
        }
        self
    }

    /// Gradient on element `e` (constant for P1).
    pub fn grad_on(&self, e: usize) -> [f64; 2] {
        let mut g = [0.0, 0.0];
        for (&i, gi) in self.mesh.elem_nodes(e).iter().zip(self.mesh.elem_grads(e)) {
            g[0] += self.values[i] * gi[0];
            g[1] += self.values[i] * gi[1];
        }
        g
    }

    /// Evaluates the P1 interpolant at an arbitrary point of the domain
    /// (structured point location, clamped to the closure).
    pub fn eval_at(&self, p: &Point) -> f64 {
        let mesh = &self.mesh;
        match mesh.domain {
            DomainSpec::Interval { a, b } => {
                let h = mesh.h();
                let x = p[0].clamp(a, b);
                let e = (((x - a) / h).floor() as usize).min(mesh.n - 1);
                let t = ((x - a) / h - e as f64).clamp(0.0, 1.0);
                let nodes = mesh.elem_nodes(e);
                (1.0 - t) * self.values[nodes[0]] + t * self.values[nodes[1]]
            }
            DomainSpec::UnitSquare => {
                let h = mesh.h();
                let x = p[0].clamp(0.0, 1.0);
                let y = p[1].clamp(0.0, 1.0);
                let i = ((x / h).floor() as usize).min(mesh.n - 1);
                let j = ((y / h).floor() as usize).min(mesh.n - 1);
                let xi = (x / h - i as f64).clamp(0.0, 1.0);
                let eta = (y / h - j as f64).clamp(0.0, 1.0);
                let cell = 2 * (j * mesh.n + i);
                // diagonal runs from (0,0) to (1,1): lower triangle has eta <= xi
                let (e, l) = if eta <= xi {
                    (cell, [1.0 - xi, xi - eta, eta])
                } else {
                    (cell + 1, [1.0 - eta, xi, eta - xi])
                };
                let nodes = mesh.elem_nodes(e);
                l.iter()
                    .zip(nodes)
                    .map(|(&li, &ni)| li * self.values[ni])
                    .sum()
            }
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        FeFunction {
            mesh: Arc::clone(&self.mesh),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &FeFunction, f: impl Fn(f64, f64) -> f64) -> Self {
        assert!(self.same_mesh(other), "mesh mismatch");
        FeFunction {
            mesh: Arc::clone(&self.mesh),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// self + c * other
    pub fn add_scaled(&self, c: f64, other: &FeFunction) -> Self {
        self.zip_map(other, |a, b| a + c * b)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Writes `x[,y],value` rows.
    pub fn write_csv(&self, w: &mut impl std::io::Write) -> std::io::Result<()> {
        if self.mesh.dim() == 1 {
            writeln!(w, "x,value")?;
            for (p, v) in self.mesh.nodes.iter().zip(&self.values) {
                writeln!(w, "{:.17e},{:.17e}", p[0], v)?;
            }
        } else {
            writeln!(w, "x,y,value")?;
            for (p, v) in self.mesh.nodes.iter().zip(&self.values) {
                writeln!(w, "{:.17e},{:.17e},{:.17e}", p[0], p[1], v)?;
            }
        }
        Ok(())
    }

    pub fn csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("write to Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }
}

/// Interpolates a pointwise function onto the mesh nodes.
pub fn interpolate(mesh: &Arc<Mesh>, g: impl Fn(&Point) -> f64) -> FeFunction {
    FeFunction {
        mesh: Arc::clone(mesh),
        values: mesh.nodes.iter().map(g).collect(),
    }
}

/// Nodal interpolant of the analytic boundary distance.
pub fn boundary_distance_field(mesh: &Arc<Mesh>) -> FeFunction {
    let dom = mesh.domain.clone();
    interpolate(mesh, |p| dom.boundary_distance(p))
}

/// Zero-trace Sobolev norm ||grad u||_{L^p}; exact for P1 since gradients are
/// elementwise constant.
pub fn w1p_norm(u: &FeFunction, p: f64) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::parameter("p", format!("exponent must exceed 1, got {p}")));
    }
    let mesh = u.mesh();
    let mut acc = 0.0;
    for e in 0..mesh.n_elems() {
        let g = u.grad_on(e);
        let norm = (g[0] * g[0] + g[1] * g[1]).sqrt();
        acc += mesh.elem_vol[e] * norm.powf(p);
    }
    Ok(acc.powf(1.0 / p))
}

/// Lebesgue norm ||u||_{L^s} of the P1 interpolant via the element Gauss rule.
pub fn ls_norm(u: &FeFunction, s: f64) -> Result<f64> {
    if !(s >= 1.0) {
        return Err(Error::parameter("s", format!("exponent must be >= 1, got {s}")));
    }
    let mesh = u.mesh();
    let mut acc = 0.0;
    for e in 0..mesh.n_elems() {
        let nodes = mesh.elem_nodes(e);
        let vol = mesh.elem_vol[e];
        for (bary, &w) in mesh.quad.points.iter().zip(&mesh.quad.weights) {
            let val: f64 = nodes
                .iter()
                .enumerate()
                .map(|(k, &i)| bary[k] * u.values[i])
                .sum();
            acc += vol * w * val.abs().powf(s);
        }
    }
    Ok(acc.powf(1.0 / s))
}

/// L^s distance between two functions on the same mesh.
pub fn ls_distance(u: &FeFunction, v: &FeFunction, s: f64) -> Result<f64> {
    ls_norm(&u.zip_map(v, |a, b| a - b), s)
}

/// Formats a float so reports are byte-stable across runs.
pub fn fmt_float(v: f64) -> String {
    let mut s = String::new();
    write!(s, "{v:.12e}").expect("formatting cannot fail");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_mesh(n: usize) -> Arc<Mesh> {
        build_mesh(DomainSpec::unit_interval(), n).unwrap()
    }

    #[test]
    fn rejects_bad_exponents_and_tiny_meshes() {
        let mesh = unit_mesh(8);
        let u = FeFunction::zero(&mesh);
        assert!(w1p_norm(&u, 1.0).is_err());
        assert!(w1p_norm(&u, 0.5).is_err());
        assert!(ls_norm(&u, 0.99).is_err());
        assert!(build_mesh(DomainSpec::unit_interval(), 1).is_err());
    }

    #[test]
    fn quadrature_weights_sum_to_one() {
        for rule in [QuadratureRule::segment_gauss3(), QuadratureRule::triangle_degree4()] {
            let s: f64 = rule.weights.iter().sum();
            assert!((s - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn element_volumes_tile_the_domain() {
        let mesh = unit_mesh(17);
        let total: f64 = mesh.elem_vol.iter().sum();
        assert!((total - 1.0).abs() < 1e-14);
        let mesh2 = build_mesh(DomainSpec::UnitSquare, 9).unwrap();
        let total2: f64 = mesh2.elem_vol.iter().sum();
        assert!((total2 - 1.0).abs() < 1e-13);
        let lumped: f64 = mesh2.lumped_mass.iter().sum();
        assert!((lumped - 1.0).abs() < 1e-13);
    }

    #[test]
    fn parabola_sobolev_norm_matches_closed_form() {
        // || (x(1-x))' ||_{L^2} = sqrt(1/3); interpolation error is O(h^2)
        let mesh = unit_mesh(1024);
        let u = interpolate(&mesh, |p| p[0] * (1.0 - p[0]));
        let got = w1p_norm(&u, 2.0).unwrap();
        assert!((got - (1.0f64 / 3.0).sqrt()).abs() < 1e-4, "got {got}");
    }

    #[test]
    fn hat_function_norm_is_exact_for_p3() {
        // piecewise-linear hat peaking at 1: |u'| = 2 on both halves,
        // so the p = 3 norm is 8^{1/3} = 2 exactly, already on 2 cells
        for n in [2usize, 8, 64] {
            let mesh = unit_mesh(n);
            let u = interpolate(&mesh, |p| 1.0 - (2.0 * p[0] - 1.0).abs());
            let got = w1p_norm(&u, 3.0).unwrap();
            assert!((got - 2.0).abs() < 1e-13, "n={n} got {got}");
        }
    }

    #[test]
    fn linear_ls_norm_is_exact() {
        // ||x||_{L^2(0,1)} = 1/sqrt(3); the 3-point rule integrates x^2 exactly
        let mesh = unit_mesh(16);
        let u = interpolate(&mesh, |p| p[0]);
        let got = ls_norm(&u, 2.0).unwrap();
        assert!((got - (1.0f64 / 3.0).sqrt()).abs() < 1e-6, "got {got}");
    }

    #[test]
    fn norm_of_interpolant_converges_first_order_or_better() {
        // w1p error against the smooth limit should shrink by >= 2x per halving
        let exact = (1.0f64 / 3.0).sqrt();
        let mut errs = Vec::new();
        for n in [16usize, 32, 64] {
            let mesh = unit_mesh(n);
            let u = interpolate(&mesh, |p| p[0] * (1.0 - p[0]));
            errs.push((w1p_norm(&u, 2.0).unwrap() - exact).abs());
        }
        assert!(errs[1] < errs[0] / 1.9);
        assert!(errs[2] < errs[1] / 1.9);
    }

    #[test]
    fn homogeneity_of_norms() {
        let mesh = unit_mesh(33);
        let u = interpolate(&mesh, |p| (3.1 * p[0]).sin()).zero_boundary();
        for p in [1.4, 2.0, 3.7] {
            let base = w1p_norm(&u, p).unwrap();
            let scaled = w1p_norm(&u.scale(-2.5), p).unwrap();
            assert!((scaled - 2.5 * base).abs() < 1e-12 * (1.0 + base));
        }
    }

    #[test]
    fn eval_at_reproduces_nodes_and_interpolates() {
        let mesh = build_mesh(DomainSpec::UnitSquare, 7).unwrap();
        let u = interpolate(&mesh, |p| 0.3 * p[0] - 1.7 * p[1] + 0.25);
        // affine functions are reproduced exactly everywhere
        for probe in [[0.11, 0.77], [0.5, 0.5], [0.999, 0.001], [0.0, 1.0]] {
            let want = 0.3 * probe[0] - 1.7 * probe[1] + 0.25;
            assert!((u.eval_at(&probe) - want).abs() < 1e-13);
        }
        let mesh1 = unit_mesh(13);
        let v = interpolate(&mesh1, |p| p[0] * p[0]);
        for (i, node) in mesh1.nodes.iter().enumerate() {
            // point location may land in either element adjacent to a node
            assert!((v.eval_at(node) - v.values[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn boundary_distance_matches_geometry() {
        let sq = DomainSpec::UnitSquare;
        assert_eq!(sq.boundary_distance(&[0.5, 0.5]), 0.5);
        assert_eq!(sq.boundary_distance(&[0.25, 0.5]), 0.25);
        assert_eq!(sq.boundary_distance(&[0.5, 0.0]), 0.0);
        let iv = DomainSpec::Interval { a: -1.0, b: 3.0 };
        assert_eq!(iv.boundary_distance(&[0.0, 0.0]), 1.0);
        assert_eq!(iv.boundary_distance(&[2.5, 0.0]), 0.5);
    }

    #[test]
    fn dirichlet_flag_and_boundary_zeroing() {
        let mesh = unit_mesh(8);
        let u = interpolate(&mesh, |p| p[0] + 1.0);
        assert!(!u.is_dirichlet_zero());
        assert!(u.zero_boundary().is_dirichlet_zero());
        let sq = build_mesh(DomainSpec::UnitSquare, 4).unwrap();
        let w = interpolate(&sq, |p| p[0] * (1.0 - p[0]) * p[1] * (1.0 - p[1]));
        assert!(w.is_dirichlet_zero()); // vanishes on the boundary already
    }

    #[test]
    fn near_boundary_ring_is_correct_size() {
        let mesh = build_mesh(DomainSpec::UnitSquare, 6).unwrap();
        let ring = mesh.near_boundary_nodes();
        // interior lattice is 5x5; its outer ring has 16 nodes
        assert_eq!(ring.len(), 16);
        let mesh1 = unit_mesh(10);
        assert_eq!(mesh1.near_boundary_nodes(), vec![1, 9]);
    }

    #[test]
    fn csv_roundtrip_shape() {
        let mesh = unit_mesh(4);
        let u = interpolate(&mesh, |p| p[0]);
        let csv = u.csv_string();
        let lines: Vec<&str> = csv.trim().lines().collect();
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[0], "x,value");
        assert!(lines[1].split(',').count() == 2);
    }
}
