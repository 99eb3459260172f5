//! P1 triangulations of rectangles (optionally masked), discrete functions
//! with zero Dirichlet trace, truncations and nodal-domain counting.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{LogdpError, Result};
use crate::phi::PhiParams;

/// Triangulation with per-element areas and constant gradient maps.
#[derive(Debug, Clone)]
pub struct Mesh {
    nodes: Vec<[f64; 2]>,
    elements: Vec<[usize; 3]>,
    areas: Vec<f64>,
    /// Row 0 maps the three nodal values to ∂/∂x, row 1 to ∂/∂y.
    grad_maps: Vec<[[f64; 3]; 2]>,
    boundary: Vec<bool>,
    adjacency: Vec<Vec<usize>>,
    node_elements: Vec<Vec<usize>>,
    lumped_mass: Vec<f64>,
    dofs: Vec<usize>,
    dof_of_node: Vec<Option<usize>>,
}

impl Mesh {
    /// Builds a mesh from raw nodes and elements. Elements are reoriented
    /// counter-clockwise; degenerate elements are rejected. Boundary nodes are
    /// the endpoints of edges owned by exactly one element.
    pub fn from_parts(nodes: Vec<[f64; 2]>, mut elements: Vec<[usize; 3]>) -> Result<Self> {
        if elements.is_empty() {
            return Err(LogdpError::Mesh("no elements".into()));
        }
        let n = nodes.len();
        let mut areas = Vec::with_capacity(elements.len());
        let mut grad_maps = Vec::with_capacity(elements.len());
        for (e, tri) in elements.iter_mut().enumerate() {
            if tri.iter().any(|&i| i >= n) {
                return Err(LogdpError::Mesh(format!("element {e} references a missing node")));
            }
            let mut det = signed_det(&nodes, tri);
            if det < 0.0 {
                tri.swap(1, 2);
                det = -det;
            }
            let scale = elem_scale(&nodes, tri);
            if !(det > 1e-14 * scale * scale) {
                return Err(LogdpError::Mesh(format!("element {e} is degenerate")));
            }
            let [p0, p1, p2] = tri.map(|i| nodes[i]);
            let inv = 1.0 / det;
            grad_maps.push([
                [(p1[1] - p2[1]) * inv, (p2[1] - p0[1]) * inv, (p0[1] - p1[1]) * inv],
                [(p2[0] - p1[0]) * inv, (p0[0] - p2[0]) * inv, (p1[0] - p0[0]) * inv],
            ]);
            areas.push(0.5 * det);
        }

        let mut edges: Vec<(usize, usize)> = Vec::with_capacity(3 * elements.len());
        for tri in &elements {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                edges.push((a.min(b), a.max(b)));
            }
        }
        edges.sort_unstable();
        let mut boundary = vec![false; n];
        let mut adjacency = vec![Vec::new(); n];
        let mut k = 0;
        while k < edges.len() {
            let mut j = k + 1;
            while j < edges.len() && edges[j] == edges[k] {
                j += 1;
            }
            let (a, b) = edges[k];
            if j - k == 1 {
                boundary[a] = true;
                boundary[b] = true;
            }
            adjacency[a].push(b);
            adjacency[b].push(a);
            k = j;
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }

        let mut node_elements = vec![Vec::new(); n];
        let mut lumped_mass = vec![0.0; n];
        for (e, tri) in elements.iter().enumerate() {
            for &i in tri {
                node_elements[i].push(e);
                lumped_mass[i] += areas[e] / 3.0;
            }
        }
        if let Some(i) = node_elements.iter().position(Vec::is_empty) {
            return Err(LogdpError::Mesh(format!("node {i} belongs to no element")));
        }
        let mut dofs = Vec::new();
        let mut dof_of_node = vec![None; n];
        for i in 0..n {
            if !boundary[i] {
                dof_of_node[i] = Some(dofs.len());
                dofs.push(i);
            }
        }
        Ok(Self {
            nodes,
            elements,
            areas,
            grad_maps,
            boundary,
            adjacency,
            node_elements,
            lumped_mass,
            dofs,
            dof_of_node,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn elements(&self) -> &[[usize; 3]] {
        &self.elements
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    pub fn grad_map(&self, e: usize) -> &[[f64; 3]; 2] {
        &self.grad_maps[e]
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary
    }

    pub fn adjacency(&self) -> &[Vec<usize>] {
        &self.adjacency
    }

    /// Elements containing each node.
    pub fn node_elements(&self) -> &[Vec<usize>] {
        &self.node_elements
    }

    /// Vertex-rule (mass-lumped) weights: one third of the area of every
    /// element containing the node.
    pub fn lumped_mass(&self) -> &[f64] {
        &self.lumped_mass
    }

    /// Interior (non-Dirichlet) node indices in increasing order.
    pub fn dofs(&self) -> &[usize] {
        &self.dofs
    }

    pub fn dof_of_node(&self, node: usize) -> Option<usize> {
        self.dof_of_node[node]
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    pub fn barycenter(&self, e: usize) -> [f64; 2] {
        let [a, b, c] = self.elements[e].map(|i| self.nodes[i]);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    /// Longest element edge.
    pub fn max_diameter(&self) -> f64 {
        let mut h = 0.0f64;
        for tri in &self.elements {
            for k in 0..3 {
                let (a, b) = (self.nodes[tri[k]], self.nodes[tri[(k + 1) % 3]]);
                h = h.max(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt());
            }
        }
        h
    }

    /// Constant gradient of the P1 interpolant of `values` on element `e`.
    #[inline]
    pub fn gradient_of(&self, values: &[f64], e: usize) -> [f64; 2] {
        let g = &self.grad_maps[e];
        let [i, j, k] = self.elements[e];
        let (a, b, c) = (values[i], values[j], values[k]);
        [g[0][0] * a + g[0][1] * b + g[0][2] * c, g[1][0] * a + g[1][1] * b + g[1][2] * c]
    }

    /// Writes `nodes.csv` (id,x,y,boundary) and `elements.csv` (id,n0,n1,n2).
    pub fn write_csv(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut s = String::from("id,x,y,boundary\n");
        for (i, p) in self.nodes.iter().enumerate() {
            writeln!(s, "{i},{},{},{}", fmt17(p[0]), fmt17(p[1]), u8::from(self.boundary[i])).expect("write to string");
        }
        fs::write(dir.join("nodes.csv"), s)?;
        let mut s = String::from("id,n0,n1,n2\n");
        for (e, t) in self.elements.iter().enumerate() {
            writeln!(s, "{e},{},{},{}", t[0], t[1], t[2]).expect("write to string");
        }
        fs::write(dir.join("elements.csv"), s)?;
        Ok(())
    }

    /// Reads a mesh written by [`Mesh::write_csv`]. The boundary column is
    /// recomputed from the topology and checked against the file.
    pub fn read_csv(dir: &Path) -> Result<Self> {
        let nodes_txt = fs::read_to_string(dir.join("nodes.csv"))?;
        let mut nodes = Vec::new();
        let mut flags = Vec::new();
        for (ln, row) in csv_rows(&nodes_txt, 4)? {
            let id: usize = parse_field(&row[0], ln)?;
            if id != nodes.len() {
                return Err(LogdpError::Mesh(format!("nodes.csv line {ln}: ids must be 0..n")));
            }
            nodes.push([parse_field(&row[1], ln)?, parse_field(&row[2], ln)?]);
            flags.push(parse_field::<u8>(&row[3], ln)? != 0);
        }
        let elems_txt = fs::read_to_string(dir.join("elements.csv"))?;
        let mut elements = Vec::new();
        for (ln, row) in csv_rows(&elems_txt, 4)? {
            elements.push([parse_field(&row[1], ln)?, parse_field(&row[2], ln)?, parse_field(&row[3], ln)?]);
        }
        let mesh = Self::from_parts(nodes, elements)?;
        if mesh.boundary != flags {
            return Err(LogdpError::Mesh("boundary column disagrees with topology".into()));
        }
        Ok(mesh)
    }
}

fn signed_det(nodes: &[[f64; 2]], tri: &[usize; 3]) -> f64 {
    let [a, b, c] = tri.map(|i| nodes[i]);
    (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])
}

fn elem_scale(nodes: &[[f64; 2]], tri: &[usize; 3]) -> f64 {
    let [a, b, c] = tri.map(|i| nodes[i]);
    let d = |p: [f64; 2], q: [f64; 2]| (p[0] - q[0]).abs().max((p[1] - q[1]).abs());
    d(a, b).max(d(b, c)).max(d(c, a))
}

/// Full round-trip decimal representation (17 significant digits).
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_rows(text: &str, width: usize) -> Result<Vec<(usize, Vec<String>)>> {
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate().skip(1) {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Vec<String> = line.split(',').map(|s| s.trim().to_string()).collect();
        if row.len() != width {
            return Err(LogdpError::Mesh(format!("line {}: expected {width} columns, found {}", k + 1, row.len())));
        }
        out.push((k + 1, row));
    }
    Ok(out)
}

fn parse_field<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    s.parse().map_err(|_| LogdpError::Mesh(format!("line {line}: cannot parse '{s}'")))
}

/// Structured triangulation of `[x0,x1]×[y0,y1]` with `nx × ny` cells, each
/// split into two triangles with the diagonal direction alternating in a
/// checkerboard ("union jack") pattern.
pub fn build_rect_mesh(x_range: (f64, f64), y_range: (f64, f64), nx: usize, ny: usize) -> Result<Mesh> {
    build_masked_mesh(x_range, y_range, nx, ny, |_, _| true)
}

/// Like [`build_rect_mesh`] but keeps only the elements whose barycenter
/// satisfies `keep`. Nodes of the kept region's boundary become Dirichlet
/// nodes.
pub fn build_masked_mesh<K: Fn(f64, f64) -> bool>(
    x_range: (f64, f64),
    y_range: (f64, f64),
    nx: usize,
    ny: usize,
    keep: K,
) -> Result<Mesh> {
    if nx == 0 || ny == 0 {
        return Err(LogdpError::Mesh(format!("invalid dimensions {nx}x{ny}")));
    }
    let (x0, x1) = x_range;
    let (y0, y1) = y_range;
    if !(x1 > x0 && y1 > y0) || ![x0, x1, y0, y1].iter().all(|v| v.is_finite()) {
        return Err(LogdpError::Mesh("degenerate domain ranges".into()));
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        let y = if j == ny { y1 } else { y0 + (y1 - y0) * j as f64 / ny as f64 };
        for i in 0..=nx {
            let x = if i == nx { x1 } else { x0 + (x1 - x0) * i as f64 / nx as f64 };
            nodes.push([x, y]);
        }
    }
    let mut elements = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            if (i + j) % 2 == 0 {
                elements.push([a, b, c]);
                elements.push([a, c, d]);
            } else {
                elements.push([a, b, d]);
                elements.push([b, c, d]);
            }
        }
    }
    let centroid = |t: &[usize; 3]| {
        let [p, q, r] = t.map(|k| nodes[k]);
        ((p[0] + q[0] + r[0]) / 3.0, (p[1] + q[1] + r[1]) / 3.0)
    };
    let kept: Vec<[usize; 3]> = elements
        .into_iter()
        .filter(|t| {
            let (x, y) = centroid(t);
            keep(x, y)
        })
        .collect();
    if kept.is_empty() {
        return Err(LogdpError::Mesh("mask removes every element".into()));
    }
    // compact the node numbering to the nodes still in use
    let mut remap = vec![usize::MAX; nodes.len()];
    let mut new_nodes = Vec::new();
    for t in &kept {
        for &k in t {
            if remap[k] == usize::MAX {
                remap[k] = usize::MAX - 1;
            }
        }
    }
    for (k, slot) in remap.iter_mut().enumerate() {
        if *slot != usize::MAX {
            *slot = new_nodes.len();
            new_nodes.push(nodes[k]);
        }
    }
    let kept = kept.into_iter().map(|t| t.map(|k| remap[k])).collect();
    Mesh::from_parts(new_nodes, kept)
}

/// Nodal values of a P1 function vanishing at every Dirichlet node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteFunction {
    values: Vec<f64>,
}

impl DiscreteFunction {
    pub fn zeros(mesh: &Mesh) -> Self {
        Self { values: vec![0.0; mesh.n_nodes()] }
    }

    /// Wraps nodal values, checking length and the zero trace.
    pub fn new(mesh: &Mesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.n_nodes() {
            return Err(LogdpError::Shape { expected: mesh.n_nodes(), got: values.len() });
        }
        if let Some(i) = (0..values.len()).find(|&i| mesh.boundary[i] && values[i] != 0.0) {
            return Err(LogdpError::Domain(format!("nonzero value {} at Dirichlet node {i}", values[i])));
        }
        Ok(Self { values })
    }

    /// Interpolates `f` at interior nodes; Dirichlet nodes are set to zero.
    pub fn from_fn<F: Fn(f64, f64) -> f64>(mesh: &Mesh, f: F) -> Self {
        let values = mesh.nodes.iter().zip(&mesh.boundary).map(|(p, &b)| if b { 0.0 } else { f(p[0], p[1]) }).collect();
        Self { values }
    }

    /// Builds a function from values on the interior nodes (in `mesh.dofs()` order).
    pub fn from_dofs(mesh: &Mesh, dof_values: &[f64]) -> Result<Self> {
        if dof_values.len() != mesh.dofs.len() {
            return Err(LogdpError::Shape { expected: mesh.dofs.len(), got: dof_values.len() });
        }
        let mut values = vec![0.0; mesh.n_nodes()];
        for (&node, &v) in mesh.dofs.iter().zip(dof_values) {
            values[node] = v;
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dof_values(&self, mesh: &Mesh) -> Vec<f64> {
        mesh.dofs.iter().map(|&i| self.values[i]).collect()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { values: self.values.iter().map(|v| s * v).collect() }
    }

    /// `self + s·other`.
    pub fn axpy(&self, s: f64, other: &Self) -> Self {
        Self { values: self.values.iter().zip(&other.values).map(|(a, b)| a + s * b).collect() }
    }

    pub fn neg(&self) -> Self {
        self.scaled(-1.0)
    }

    /// Writes `id,x,y,value` rows with 17 significant digits.
    pub fn write_csv(&self, mesh: &Mesh, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                fs::create_dir_all(dir)?;
            }
        }
        let mut s = String::from("id,x,y,value\n");
        for (i, (p, v)) in mesh.nodes.iter().zip(&self.values).enumerate() {
            writeln!(s, "{i},{},{},{}", fmt17(p[0]), fmt17(p[1]), fmt17(*v)).expect("write to string");
        }
        fs::write(path, s)?;
        Ok(())
    }

    /// Reads a field written by [`DiscreteFunction::write_csv`]; the node
    /// count and coordinates must match `mesh`.
    pub fn read_csv(mesh: &Mesh, path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let rows = csv_rows(&text, 4)?;
        if rows.len() != mesh.n_nodes() {
            return Err(LogdpError::Shape { expected: mesh.n_nodes(), got: rows.len() });
        }
        let mut values = vec![0.0; mesh.n_nodes()];
        for (ln, row) in rows {
            let id: usize = parse_field(&row[0], ln)?;
            if id >= values.len() {
                return Err(LogdpError::Mesh(format!("line {ln}: node id {id} out of range")));
            }
            let (x, y): (f64, f64) = (parse_field(&row[1], ln)?, parse_field(&row[2], ln)?);
            let p = mesh.nodes[id];
            if (p[0] - x).abs() > 1e-9 * (1.0 + x.abs()) || (p[1] - y).abs() > 1e-9 * (1.0 + y.abs()) {
                return Err(LogdpError::Mesh(format!("line {ln}: coordinates do not match node {id}")));
            }
            values[id] = parse_field(&row[3], ln)?;
        }
        Self::new(mesh, values)
    }
}

/// Constant gradient of `u` on element `e`.
pub fn element_gradient(mesh: &Mesh, u: &DiscreteFunction, e: usize) -> Result<[f64; 2]> {
    if e >= mesh.n_elements() {
        return Err(LogdpError::Domain(format!("element index {e} out of range (n = {})", mesh.n_elements())));
    }
    if u.values.len() != mesh.n_nodes() {
        return Err(LogdpError::Shape { expected: mesh.n_nodes(), got: u.values.len() });
    }
    Ok(mesh.gradient_of(&u.values, e))
}

/// Per-element gradient magnitudes `|∇u|`.
pub fn gradient_magnitudes(mesh: &Mesh, u: &DiscreteFunction) -> Vec<f64> {
    (0..mesh.n_elements())
        .map(|e| {
            let g = mesh.gradient_of(&u.values, e);
            g[0].hypot(g[1])
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Nodal truncation `max{±u, 0}`: `u = u⁺ − u⁻` and `|u| = u⁺ + u⁻`.
pub fn truncate(u: &DiscreteFunction, sign: Sign) -> DiscreteFunction {
    let s = sign.factor();
    DiscreteFunction { values: u.values.iter().map(|&v| (s * v).max(0.0)).collect() }
}

/// Connected components of `{u > τ}` and `{u < −τ}` under mesh adjacency.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodalDomains {
    pub n_pos: usize,
    pub n_neg: usize,
    /// `k ≥ 1` for the k-th positive component, `−k` for the k-th negative
    /// component, 0 for sub-threshold nodes.
    pub labels: Vec<i32>,
}

struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), rank: vec![0; n] }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}

/// Counts nodal domains with sign threshold `tau`.
pub fn nodal_domains(mesh: &Mesh, u: &DiscreteFunction, tau: f64) -> NodalDomains {
    let n = mesh.n_nodes();
    let class = |v: f64| -> i8 {
        if v > tau {
            1
        } else if v < -tau {
            -1
        } else {
            0
        }
    };
    let classes: Vec<i8> = u.values.iter().map(|&v| class(v)).collect();
    let mut dsu = DisjointSet::new(n);
    for i in 0..n {
        if classes[i] == 0 {
            continue;
        }
        for &j in &mesh.adjacency[i] {
            if j > i && classes[j] == classes[i] {
                dsu.union(i, j);
            }
        }
    }
    let mut labels = vec![0i32; n];
    let mut root_label = vec![0i32; n];
    let (mut n_pos, mut n_neg) = (0usize, 0usize);
    for i in 0..n {
        if classes[i] == 0 {
            continue;
        }
        let r = dsu.find(i);
        if root_label[r] == 0 {
            root_label[r] = if classes[i] > 0 {
                n_pos += 1;
                n_pos as i32
            } else {
                n_neg += 1;
                -(n_neg as i32)
            };
        }
        labels[i] = root_label[r];
    }
    NodalDomains { n_pos, n_neg, labels }
}

/// [`nodal_domains`] with the default threshold `1e-8·‖u‖_∞`.
pub fn nodal_domains_default(mesh: &Mesh, u: &DiscreteFunction) -> NodalDomains {
    let sup = u.sup_norm();
    if sup == 0.0 {
        return NodalDomains { n_pos: 0, n_neg: 0, labels: vec![0; mesh.n_nodes()] };
    }
    nodal_domains(mesh, u, 1e-8 * sup)
}

/// Structural assumption flags derived from the exponent bounds (N = 2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructuralFlags {
    /// `p*₋` (infinite when `p₋ ≥ N`).
    pub p_star_minus: f64,
    /// `q(x) < p*(x)` on every element.
    pub h: bool,
    /// `q₊ < p*₋`.
    pub h2: bool,
    /// `q₊ + 1 < p*₋`.
    pub h3: bool,
}

/// Spatial dimension of every mesh in this crate.
pub const DIM: f64 = 2.0;

/// Critical Sobolev exponent `N r/(N − r)` (infinite for `r ≥ N`).
pub fn critical_exponent(r: f64) -> f64 {
    if r < DIM {
        DIM * r / (DIM - r)
    } else {
        f64::INFINITY
    }
}

/// Exponents `p, q` and weight `μ` sampled at element barycenters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentField {
    pub p_at: Vec<f64>,
    pub q_at: Vec<f64>,
    pub mu_at: Vec<f64>,
    pub p_minus: f64,
    pub p_plus: f64,
    pub q_minus: f64,
    pub q_plus: f64,
    pub mu_sup: f64,
}

impl ExponentField {
    pub fn from_values(p_at: Vec<f64>, q_at: Vec<f64>, mu_at: Vec<f64>) -> Result<Self> {
        let n = p_at.len();
        if q_at.len() != n || mu_at.len() != n {
            return Err(LogdpError::Shape { expected: n, got: q_at.len().min(mu_at.len()) });
        }
        if n == 0 {
            return Err(LogdpError::Domain("empty exponent field".into()));
        }
        for e in 0..n {
            PhiParams::new(p_at[e], q_at[e], mu_at[e])
                .map_err(|err| LogdpError::Assumption(format!("(H0) fails on element {e}: {err}")))?;
        }
        let fold = |v: &[f64], init: f64, f: fn(f64, f64) -> f64| v.iter().copied().fold(init, f);
        Ok(Self {
            p_minus: fold(&p_at, f64::INFINITY, f64::min),
            p_plus: fold(&p_at, f64::NEG_INFINITY, f64::max),
            q_minus: fold(&q_at, f64::INFINITY, f64::min),
            q_plus: fold(&q_at, f64::NEG_INFINITY, f64::max),
            mu_sup: fold(&mu_at, 0.0, f64::max),
            p_at,
            q_at,
            mu_at,
        })
    }

    pub fn constant(mesh: &Mesh, p: f64, q: f64, mu: f64) -> Result<Self> {
        let n = mesh.n_elements();
        Self::from_values(vec![p; n], vec![q; n], vec![mu; n])
    }

    /// Samples `p, q, μ` at element barycenters.
    pub fn from_fns<P, Q, M>(mesh: &Mesh, p: P, q: Q, mu: M) -> Result<Self>
    where
        P: Fn(f64, f64) -> f64,
        Q: Fn(f64, f64) -> f64,
        M: Fn(f64, f64) -> f64,
    {
        let mut ps = Vec::with_capacity(mesh.n_elements());
        let mut qs = Vec::with_capacity(mesh.n_elements());
        let mut ms = Vec::with_capacity(mesh.n_elements());
        for e in 0..mesh.n_elements() {
            let [x, y] = mesh.barycenter(e);
            ps.push(p(x, y));
            qs.push(q(x, y));
            ms.push(mu(x, y));
        }
        Self::from_values(ps, qs, ms)
    }

    pub fn len(&self) -> usize {
        self.p_at.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_at.is_empty()
    }

    #[inline]
    pub fn params(&self, e: usize) -> PhiParams {
        PhiParams { p: self.p_at[e], q: self.q_at[e], mu: self.mu_at[e] }
    }

    pub fn check_mesh(&self, mesh: &Mesh) -> Result<()> {
        if self.len() != mesh.n_elements() {
            return Err(LogdpError::Shape { expected: mesh.n_elements(), got: self.len() });
        }
        Ok(())
    }

    pub fn structural_flags(&self) -> StructuralFlags {
        let p_star_minus = critical_exponent(self.p_minus);
        let h = self.p_at.iter().zip(&self.q_at).all(|(&p, &q)| q < critical_exponent(p));
        StructuralFlags { p_star_minus, h, h2: self.q_plus < p_star_minus, h3: self.q_plus + 1.0 < p_star_minus }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize) -> Mesh {
        build_rect_mesh((0.0, 1.0), (0.0, 1.0), n, n).unwrap()
    }

    #[test]
    fn minimal_meshes() {
        let m = unit(1);
        assert_eq!((m.n_nodes(), m.n_elements()), (4, 2));
        assert!(m.boundary_mask().iter().all(|&b| b));
        let m = unit(2);
        assert_eq!((m.n_nodes(), m.n_elements()), (9, 8));
        assert_eq!(m.dofs(), &[4]);
        assert!((m.total_area() - 1.0).abs() < 1e-12);
        assert!(build_rect_mesh((0.0, 1.0), (0.0, 1.0), 0, 3).is_err());
        assert!(build_rect_mesh((1.0, 1.0), (0.0, 1.0), 2, 2).is_err());
    }

    #[test]
    fn boundary_flags_match_geometry() {
        let m = build_rect_mesh((-1.0, 2.0), (0.5, 1.5), 6, 4).unwrap();
        for (p, &b) in m.nodes().iter().zip(m.boundary_mask()) {
            let on = (p[0] + 1.0).abs() < 1e-12
                || (p[0] - 2.0).abs() < 1e-12
                || (p[1] - 0.5).abs() < 1e-12
                || (p[1] - 1.5).abs() < 1e-12;
            assert_eq!(on, b, "{p:?}");
        }
        assert!((m.total_area() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn grad_maps_reproduce_coordinates() {
        let m = build_rect_mesh((0.0, 2.0), (0.0, 1.0), 5, 3).unwrap();
        for e in 0..m.n_elements() {
            let xs: Vec<f64> = m.nodes().iter().map(|p| p[0]).collect();
            let ys: Vec<f64> = m.nodes().iter().map(|p| p[1]).collect();
            let gx = m.gradient_of(&xs, e);
            let gy = m.gradient_of(&ys, e);
            assert!((gx[0] - 1.0).abs() < 1e-12 && gx[1].abs() < 1e-12);
            assert!(gy[0].abs() < 1e-12 && (gy[1] - 1.0).abs() < 1e-12);
            assert!(m.areas()[e] > 0.0);
        }
    }

    #[test]
    fn element_gradient_errors_and_zero() {
        let m = unit(3);
        let z = DiscreteFunction::zeros(&m);
        assert_eq!(element_gradient(&m, &z, 0).unwrap(), [0.0, 0.0]);
        assert!(element_gradient(&m, &z, m.n_elements()).is_err());
    }

    #[test]
    fn refinement_halves_diameter() {
        let a = unit(4);
        let b = unit(8);
        assert_eq!(b.n_elements(), 4 * a.n_elements());
        assert!((a.max_diameter() / b.max_diameter() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn masked_mesh_has_boundary_on_cut() {
        // L-shaped domain: drop the upper-right quadrant
        let m = build_masked_mesh((0.0, 1.0), (0.0, 1.0), 4, 4, |x, y| !(x > 0.5 && y > 0.5)).unwrap();
        assert_eq!(m.n_elements(), 24);
        let idx = m.nodes().iter().position(|p| p[0] == 0.5 && p[1] == 0.75).unwrap();
        assert!(m.boundary_mask()[idx]);
        let inner = m.nodes().iter().position(|p| p[0] == 0.25 && p[1] == 0.25).unwrap();
        assert!(!m.boundary_mask()[inner]);
        assert!((m.total_area() - 0.75).abs() < 1e-12);
        assert!(build_masked_mesh((0.0, 1.0), (0.0, 1.0), 2, 2, |_, _| false).is_err());
    }

    #[test]
    fn truncation_identities() {
        let m = unit(6);
        let u = DiscreteFunction::from_fn(&m, |x, y| (6.0 * x).sin() * (5.0 * y).cos());
        let (up, um) = (truncate(&u, Sign::Plus), truncate(&u, Sign::Minus));
        for i in 0..m.n_nodes() {
            let v = u.values()[i];
            assert_eq!(up.values()[i] - um.values()[i], v);
            assert_eq!(up.values()[i] + um.values()[i], v.abs());
        }
        assert_eq!(truncate(&up, Sign::Plus), up);
        let pos = DiscreteFunction::from_fn(&m, |x, y| x * y);
        assert_eq!(truncate(&pos, Sign::Plus), pos);
        assert!(truncate(&pos, Sign::Minus).is_zero());
    }

    #[test]
    fn nodal_domain_counts() {
        let m = unit(8);
        let z = DiscreteFunction::zeros(&m);
        let nd = nodal_domains_default(&m, &z);
        assert_eq!((nd.n_pos, nd.n_neg), (0, 0));
        let bump = DiscreteFunction::from_fn(&m, |x, y| x * (1.0 - x) * y * (1.0 - y));
        let nd = nodal_domains_default(&m, &bump);
        assert_eq!((nd.n_pos, nd.n_neg), (1, 0));
        let nd = nodal_domains_default(&m, &bump.neg());
        assert_eq!((nd.n_pos, nd.n_neg), (0, 1));
    }

    #[test]
    fn exponent_field_flags() {
        let m = unit(2);
        let ex = ExponentField::constant(&m, 2.6, 2.6, 0.5).unwrap();
        let f = ex.structural_flags();
        assert!(f.p_star_minus.is_infinite() && f.h && f.h2 && f.h3);
        // p = 1.5 in 2D: p* = 6, so q = 5.5 satisfies (H2) but not (H3)
        let ex = ExponentField::constant(&m, 1.5, 5.5, 1.0).unwrap();
        let f = ex.structural_flags();
        assert_eq!(f.p_star_minus, 6.0);
        assert!(f.h && f.h2 && !f.h3);
        assert!(ExponentField::constant(&m, 2.0, 1.5, 0.0).is_err());
        assert!(ExponentField::constant(&m, 2.0, 3.0, -1.0).is_err());
    }

    #[test]
    fn discrete_function_validation() {
        let m = unit(3);
        let mut v = vec![0.0; m.n_nodes()];
        v[0] = 1.0;
        assert!(DiscreteFunction::new(&m, v).is_err());
        assert!(DiscreteFunction::new(&m, vec![0.0; 3]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = build_rect_mesh((0.0, 1.0), (0.0, 2.0), 3, 5).unwrap();
        m.write_csv(dir.path()).unwrap();
        let m2 = Mesh::read_csv(dir.path()).unwrap();
        assert_eq!(m2.nodes(), m.nodes());
        assert_eq!(m2.elements(), m.elements());
        let u = DiscreteFunction::from_fn(&m, |x, y| (x * 3.1).sin() * y.exp() / 7.0);
        let path = dir.path().join("u.csv");
        u.write_csv(&m, &path).unwrap();
        let u2 = DiscreteFunction::read_csv(&m, &path).unwrap();
        assert_eq!(u, u2);
    }
}
