//! Channel-with-bump domain, its triangulation, and P1 discrete calculus.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use spade::{
    AngleLimit, ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation,
};

use crate::error::{CavError, Result};

/// Rectangle `[-L, L] x [0, H]` with a circular-arc bump of chord `c` and
/// height `h_b` centred on the bottom wall.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub half_length: f64,
    pub height: f64,
    pub chord: f64,
    pub bump_height: f64,
    pub h_mesh: f64,
}

impl Default for DomainSpec {
    fn default() -> Self {
        Self {
            half_length: 2.0,
            height: 1.5,
            chord: 1.0,
            bump_height: 0.05,
            h_mesh: 0.08,
        }
    }
}

pub const MIN_ARC_EDGES: usize = 32;
pub const MIN_ANGLE_DEG: f64 = 20.0;

impl DomainSpec {
    pub fn validate(&self) -> Result<()> {
        let pos = |what: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(CavError::Domain {
                    what,
                    value: v,
                    range: "(0, inf)",
                })
            }
        };
        pos("half_length", self.half_length)?;
        pos("height", self.height)?;
        pos("chord", self.chord)?;
        pos("h_mesh", self.h_mesh)?;
        if !(self.bump_height >= 0.0 && self.bump_height < 0.5 * self.height && self.bump_height <= 0.5 * self.chord) {
            return Err(CavError::Domain {
                what: "bump_height",
                value: self.bump_height,
                range: "[0, min(height/2, chord/2)]",
            });
        }
        if self.chord >= 2.0 * self.half_length {
            return Err(CavError::Domain {
                what: "chord",
                value: self.chord,
                range: "(0, 2 half_length)",
            });
        }
        if self.h_mesh > 0.25 * self.height.min(self.chord) {
            return Err(CavError::Mesh(format!("h_mesh {} too coarse for the geometry", self.h_mesh)));
        }
        Ok(())
    }

    /// Circle through the bump endpoints and apex: `(centre_y, radius)`.
    pub fn arc_circle(&self) -> Option<(f64, f64)> {
        (self.bump_height > 0.0).then(|| {
            let r = (0.25 * self.chord * self.chord + self.bump_height * self.bump_height) / (2.0 * self.bump_height);
            (self.bump_height - r, r)
        })
    }

    pub fn arc_length(&self) -> f64 {
        match self.arc_circle() {
            Some((_, r)) => 2.0 * r * (0.5 * self.chord / r).asin(),
            None => 0.0,
        }
    }

    /// Bump surface `y = b(x)` (zero off the chord).
    pub fn bump(&self, x: f64) -> f64 {
        match self.arc_circle() {
            Some((cy, r)) if x.abs() < 0.5 * self.chord => cy + (r * r - x * x).sqrt(),
            _ => 0.0,
        }
    }

    pub fn with_h(&self, h_mesh: f64) -> Self {
        Self { h_mesh, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BoundaryTag {
    Obstacle,
    Farfield,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryEdge {
    pub v: [usize; 2],
    pub tag: BoundaryTag,
    /// Unit normal pointing into the fluid.
    pub normal: [f64; 2],
    pub length: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Mesh {
    pub spec: DomainSpec,
    pub vertices: Vec<[f64; 2]>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    pub areas: Vec<f64>,
    /// Gradients of the three local hat functions per triangle.
    pub grads: Vec<[[f64; 2]; 3]>,
    /// `Some(tag)` for boundary vertices; far-field wins at shared corners.
    pub vertex_tag: Vec<Option<BoundaryTag>>,
}

pub type Field = Vec<f64>;

fn split_segment(a: [f64; 2], b: [f64; 2], h: f64, out: &mut Vec<[f64; 2]>) {
    let len = (b[0] - a[0]).hypot(b[1] - a[1]);
    let n = (len / h).ceil().max(1.0) as usize;
    for i in 0..n {
        let t = i as f64 / n as f64;
        out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
    }
}

/// Counter-clockwise boundary polygon (last point not repeated).
pub fn boundary_polygon(spec: &DomainSpec) -> Vec<[f64; 2]> {
    let (l, hgt, c2, h) = (spec.half_length, spec.height, 0.5 * spec.chord, spec.h_mesh);
    let mut pts = Vec::new();
    match spec.arc_circle() {
        Some((cy, r)) => {
            split_segment([-l, 0.0], [-c2, 0.0], h, &mut pts);
            let n = MIN_ARC_EDGES.max((spec.arc_length() / h).ceil() as usize);
            let a0 = (0.0 - cy).atan2(-c2);
            let a1 = (0.0 - cy).atan2(c2);
            for i in 0..n {
                let a = a0 + (a1 - a0) * i as f64 / n as f64;
                pts.push([r * a.cos(), cy + r * a.sin()]);
            }
            split_segment([c2, 0.0], [l, 0.0], h, &mut pts);
        }
        None => split_segment([-l, 0.0], [l, 0.0], h, &mut pts),
    }
    split_segment([l, 0.0], [l, hgt], h, &mut pts);
    split_segment([l, hgt], [-l, hgt], h, &mut pts);
    split_segment([-l, hgt], [-l, 0.0], h, &mut pts);
    pts
}

fn on_farfield(spec: &DomainSpec, p: [f64; 2]) -> bool {
    let tol = 1e-9 * spec.half_length.max(spec.height);
    let (l, hgt, c2) = (spec.half_length, spec.height, 0.5 * spec.chord);
    (p[0] - l).abs() < tol
        || (p[0] + l).abs() < tol
        || (p[1] - hgt).abs() < tol
        || (p[1].abs() < tol && (spec.bump_height == 0.0 || p[0].abs() >= c2 - tol))
}

fn triangle_geometry(p: [[f64; 2]; 3]) -> (f64, [[f64; 2]; 3]) {
    let d = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    let area = 0.5 * d;
    let mut g = [[0.0; 2]; 3];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        g[i] = [(p[j][1] - p[k][1]) / d, (p[k][0] - p[j][0]) / d];
    }
    (area, g)
}

impl Mesh {
    pub fn build(spec: &DomainSpec) -> Result<Self> {
        spec.validate()?;
        let poly = boundary_polygon(spec);
        let mut cdt: ConstrainedDelaunayTriangulation<Point2<f64>> = ConstrainedDelaunayTriangulation::new();
        let handles = poly
            .iter()
            .map(|p| cdt.insert(Point2::new(p[0], p[1])))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| CavError::Mesh(format!("vertex insertion failed: {e:?}")))?;
        for i in 0..handles.len() {
            let (a, b) = (handles[i], handles[(i + 1) % handles.len()]);
            if !cdt.can_add_constraint(a, b) {
                return Err(CavError::Mesh("boundary polygon self-intersects".into()));
            }
            cdt.add_constraint(a, b);
        }
        let max_area = 3f64.sqrt() / 4.0 * spec.h_mesh * spec.h_mesh;
        let params = RefinementParameters::<f64>::new()
            .with_angle_limit(AngleLimit::from_deg(25.0))
            .with_max_allowed_area(max_area)
            .with_max_additional_vertices(2_000_000)
            .exclude_outer_faces(true);
        let result = cdt.refine(params);
        if !result.refinement_complete {
            return Err(CavError::Mesh("refinement did not complete".into()));
        }
        let excluded: HashSet<_> = result.excluded_faces.iter().copied().collect();

        let mut remap = BTreeMap::new();
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        for face in cdt.inner_faces() {
            if excluded.contains(&face.fix()) {
                continue;
            }
            let vs = face.vertices();
            let mut tri = [0usize; 3];
            for (t, v) in tri.iter_mut().zip(vs.iter()) {
                let key = v.fix().index();
                *t = *remap.entry(key).or_insert_with(|| {
                    let p = v.position();
                    vertices.push([p.x, p.y]);
                    vertices.len() - 1
                });
            }
            triangles.push(tri);
        }
        Self::from_parts(*spec, vertices, triangles)
    }

    /// Builds connectivity data from raw vertices and triangles; triangles
    /// are reoriented counter-clockwise.
    pub fn from_parts(spec: DomainSpec, vertices: Vec<[f64; 2]>, mut triangles: Vec<[usize; 3]>) -> Result<Self> {
        let mut areas = Vec::with_capacity(triangles.len());
        let mut grads = Vec::with_capacity(triangles.len());
        for t in triangles.iter_mut() {
            let p = |i: usize| vertices[t[i]];
            let (mut a, mut g) = triangle_geometry([p(0), p(1), p(2)]);
            if a < 0.0 {
                t.swap(1, 2);
                (a, g) = triangle_geometry([vertices[t[0]], vertices[t[1]], vertices[t[2]]]);
            }
            if !(a > 0.0) {
                return Err(CavError::Mesh(format!("degenerate triangle {t:?}")));
            }
            areas.push(a);
            grads.push(g);
        }
        // edge -> (count, oriented edge in its triangle)
        let mut edges: BTreeMap<(usize, usize), (usize, [usize; 2])> = BTreeMap::new();
        for t in &triangles {
            for i in 0..3 {
                let (a, b) = (t[i], t[(i + 1) % 3]);
                let e = edges.entry((a.min(b), a.max(b))).or_insert((0, [a, b]));
                e.0 += 1;
            }
        }
        if edges.values().any(|e| e.0 > 2) {
            return Err(CavError::Mesh("non-manifold edge".into()));
        }
        let mut boundary_edges = Vec::new();
        let mut vertex_tag = vec![None; vertices.len()];
        for (_, (count, [a, b])) in edges {
            if count != 1 {
                continue;
            }
            let (pa, pb) = (vertices[a], vertices[b]);
            let len = (pb[0] - pa[0]).hypot(pb[1] - pa[1]);
            let normal = [-(pb[1] - pa[1]) / len, (pb[0] - pa[0]) / len];
            let tag = if on_farfield(&spec, pa) && on_farfield(&spec, pb) {
                BoundaryTag::Farfield
            } else {
                BoundaryTag::Obstacle
            };
            for v in [a, b] {
                vertex_tag[v] = match (vertex_tag[v], tag) {
                    (Some(BoundaryTag::Farfield), _) | (_, BoundaryTag::Farfield) => Some(BoundaryTag::Farfield),
                    _ => Some(BoundaryTag::Obstacle),
                };
            }
            boundary_edges.push(BoundaryEdge {
                v: [a, b],
                tag,
                normal,
                length: len,
            });
        }
        Ok(Self {
            spec,
            vertices,
            triangles,
            boundary_edges,
            areas,
            grads,
            vertex_tag,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_edges(&self) -> usize {
        let mut set = HashSet::new();
        for t in &self.triangles {
            for i in 0..3 {
                let (a, b) = (t[i], t[(i + 1) % 3]);
                set.insert((a.min(b), a.max(b)));
            }
        }
        set.len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.n_vertices() as i64 - self.n_edges() as i64 + self.triangles.len() as i64
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    pub fn boundary_length(&self, tag: Option<BoundaryTag>) -> f64 {
        self.boundary_edges
            .iter()
            .filter(|e| tag.is_none_or(|t| e.tag == t))
            .map(|e| e.length)
            .sum()
    }

    pub fn edge_count(&self, tag: BoundaryTag) -> usize {
        self.boundary_edges.iter().filter(|e| e.tag == tag).count()
    }

    pub fn min_angle_deg(&self) -> f64 {
        let mut m = f64::INFINITY;
        for t in &self.triangles {
            for i in 0..3 {
                let p = self.vertices[t[i]];
                let a = self.vertices[t[(i + 1) % 3]];
                let b = self.vertices[t[(i + 2) % 3]];
                let u = [a[0] - p[0], a[1] - p[1]];
                let v = [b[0] - p[0], b[1] - p[1]];
                let ang = (u[0] * v[1] - u[1] * v[0]).abs().atan2(u[0] * v[0] + u[1] * v[1]);
                m = m.min(ang.to_degrees());
            }
        }
        m
    }

    pub fn centroid(&self, t: usize) -> [f64; 2] {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        [(pa[0] + pb[0] + pc[0]) / 3.0, (pa[1] + pb[1] + pc[1]) / 3.0]
    }

    pub fn is_dirichlet(&self, v: usize) -> bool {
        self.vertex_tag[v] == Some(BoundaryTag::Farfield)
    }

    pub fn nodal<F: Fn([f64; 2]) -> f64>(&self, f: F) -> Field {
        self.vertices.iter().map(|&p| f(p)).collect()
    }

    /// Lumped mass: one third of the adjacent triangle areas.
    pub fn lumped_mass(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.n_vertices()];
        for (t, tri) in self.triangles.iter().enumerate() {
            for &v in tri {
                m[v] += self.areas[t] / 3.0;
            }
        }
        m
    }

    /// Per-triangle gradient of a P1 field.
    pub fn gradient(&self, f: &[f64]) -> Vec<[f64; 2]> {
        self.triangles
            .iter()
            .zip(&self.grads)
            .map(|(t, g)| {
                let mut out = [0.0; 2];
                for i in 0..3 {
                    out[0] += f[t[i]] * g[i][0];
                    out[1] += f[t[i]] * g[i][1];
                }
                out
            })
            .collect()
    }

    /// `int div(F) psi` for nodal (P1) `F` and `psi`, in weak form
    /// `-int F . grad psi - oint psi F . n_in`.
    pub fn weak_divergence(&self, f: &[[f64; 2]], psi: &[f64]) -> f64 {
        let mut vol = 0.0;
        for (t, tri) in self.triangles.iter().enumerate() {
            let g = &self.grads[t];
            let mut gp = [0.0; 2];
            let mut fm = [0.0; 2];
            for i in 0..3 {
                gp[0] += psi[tri[i]] * g[i][0];
                gp[1] += psi[tri[i]] * g[i][1];
                fm[0] += f[tri[i]][0] / 3.0;
                fm[1] += f[tri[i]][1] / 3.0;
            }
            vol += self.areas[t] * (fm[0] * gp[0] + fm[1] * gp[1]);
        }
        let mut bnd = 0.0;
        for e in &self.boundary_edges {
            let [a, b] = e.v;
            let fn_a = f[a][0] * e.normal[0] + f[a][1] * e.normal[1];
            let fn_b = f[b][0] * e.normal[0] + f[b][1] * e.normal[1];
            // exact for the product of two linear functions
            bnd += e.length * (2.0 * psi[a] * fn_a + 2.0 * psi[b] * fn_b + psi[a] * fn_b + psi[b] * fn_a) / 6.0;
        }
        -vol - bnd
    }

    /// `sum_T div(F_T) int_T psi` for nodal `F` and `psi`.
    pub fn divergence_against(&self, f: &[[f64; 2]], psi: &[f64]) -> f64 {
        let mut s = 0.0;
        for (t, tri) in self.triangles.iter().enumerate() {
            let g = &self.grads[t];
            let mut div = 0.0;
            let mut pm = 0.0;
            for i in 0..3 {
                div += f[tri[i]][0] * g[i][0] + f[tri[i]][1] * g[i][1];
                pm += psi[tri[i]] / 3.0;
            }
            s += div * pm * self.areas[t];
        }
        s
    }

    /// `oint F . n_in` over edges with `tag`, two-point Gauss per edge.
    pub fn boundary_flux(&self, f: impl Fn([f64; 2]) -> [f64; 2], tag: BoundaryTag) -> f64 {
        let g = 0.5 / 3f64.sqrt();
        self.boundary_edges
            .iter()
            .filter(|e| e.tag == tag)
            .map(|e| {
                let (a, b) = (self.vertices[e.v[0]], self.vertices[e.v[1]]);
                [0.5 - g, 0.5 + g]
                    .iter()
                    .map(|&t| {
                        let v = f([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
                        0.5 * e.length * (v[0] * e.normal[0] + v[1] * e.normal[1])
                    })
                    .sum::<f64>()
            })
            .sum()
    }

    /// `int f` by the three-edge-midpoint rule (exact for quadratics).
    pub fn integrate(&self, f: impl Fn([f64; 2]) -> f64) -> f64 {
        self.triangles
            .iter()
            .enumerate()
            .map(|(t, tri)| {
                let p = |i: usize| self.vertices[tri[i]];
                (0..3)
                    .map(|i| {
                        let (a, b) = (p(i), p((i + 1) % 3));
                        f([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])])
                    })
                    .sum::<f64>()
                    * self.areas[t]
                    / 3.0
            })
            .sum()
    }

    /// Legacy ASCII VTK with point and cell data.
    pub fn to_vtk(&self, point_data: &[(&str, &[f64])], cell_data: &[(&str, &[f64])]) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# vtk DataFile Version 3.0\ncavlab mesh\nASCII\nDATASET POLYDATA");
        let _ = writeln!(s, "POINTS {} double", self.n_vertices());
        for p in &self.vertices {
            let _ = writeln!(s, "{:.17e} {:.17e} 0", p[0], p[1]);
        }
        let _ = writeln!(s, "POLYGONS {} {}", self.triangles.len(), 4 * self.triangles.len());
        for t in &self.triangles {
            let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
        }
        let mut tags = vec![0.0; self.triangles.len()];
        let mut cells: Vec<(&str, &[f64])> = cell_data.to_vec();
        if cells.is_empty() {
            tags.copy_from_slice(&self.areas);
            cells.push(("area", &tags));
        }
        let _ = writeln!(s, "CELL_DATA {}", self.triangles.len());
        for (name, vals) in cells {
            let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
            for v in vals {
                let _ = writeln!(s, "{v:.17e}");
            }
        }
        if !point_data.is_empty() {
            let _ = writeln!(s, "POINT_DATA {}", self.n_vertices());
            for (name, vals) in point_data {
                let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
                for v in vals.iter() {
                    let _ = writeln!(s, "{v:.17e}");
                }
            }
        }
        s
    }
}
