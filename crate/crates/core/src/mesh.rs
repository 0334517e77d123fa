//! Tetrahedral meshes of a ball in su(2): construction, vertex flags,
//! barycentric coordinates and point location.
//!
//! The ball mesh is a Kuhn (Freudenthal) triangulation of a cubic lattice:
//! every lattice cube is cut into six tetrahedra along its main diagonal, one
//! per permutation of the axes. The pattern is translation invariant, so
//! neighbouring cubes meet face to face, and it is symmetric under `x → -x`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lie::AlgebraVector;

/// Barycentric weights below this are treated as lying outside a simplex.
pub const INSIDE_TOL: f64 = -1e-10;
/// Largest region radius; keeps the exponential chart injective on the mesh
/// with room to spare before the antipode at `2π`.
pub const MAX_RHO: f64 = 1.75 * std::f64::consts::PI;
/// Tetrahedra with volume at or below this are rejected.
pub const MIN_VOLUME: f64 = 1e-14;
/// Relative conditioning threshold for [`SimplicialMesh::barycentric_weights`].
const DEGENERACY_TOL: f64 = 1e-12;

/// The Kuhn pattern: each tetrahedron walks from the low corner to the high
/// corner of a unit cube, adding one axis at a time in the order given.
const KUHN_PERMUTATIONS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("simplex {0} is degenerate")]
    DegenerateSimplex(usize),
    #[error("point {0:?} lies outside the meshed region")]
    OutOfDomain(AlgebraVector),
    #[error("vertex index {0} out of range")]
    InvalidVertex(usize),
    #[error("simplex index {0} out of range")]
    InvalidSimplex(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VertexFlag {
    /// Inside the target ball; the value is pinned to zero.
    Target,
    Interior,
    /// On the outer hull of the meshed region.
    OuterBoundary,
}

impl VertexFlag {
    pub fn code(self) -> u8 {
        match self {
            VertexFlag::Target => 0,
            VertexFlag::Interior => 1,
            VertexFlag::OuterBoundary => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(VertexFlag::Target),
            1 => Some(VertexFlag::Interior),
            2 => Some(VertexFlag::OuterBoundary),
            _ => None,
        }
    }
}

/// A point expressed as a convex combination of a simplex's vertices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BarycentricLocation {
    pub simplex_id: usize,
    pub weights: [f64; 4],
}

/// Uniform background grid bucketing simplices by bounding box.
#[derive(Clone, Debug)]
struct Locator {
    origin: [f64; 3],
    cell: f64,
    dims: [usize; 3],
    offsets: Vec<u32>,
    entries: Vec<u32>,
}

impl Locator {
    fn build(vertices: &[AlgebraVector], simplices: &[[u32; 4]], cell: f64) -> Self {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for v in vertices {
            for a in 0..3 {
                lo[a] = lo[a].min(v.0[a]);
                hi[a] = hi[a].max(v.0[a]);
            }
        }
        let dims = [0, 1, 2].map(|a| (((hi[a] - lo[a]) / cell).floor() as usize + 1).max(1));
        let mut loc = Self {
            origin: lo,
            cell,
            dims,
            offsets: Vec::new(),
            entries: Vec::new(),
        };
        let ncells = dims[0] * dims[1] * dims[2];
        let shrink = 1e-9 * cell;
        let cell_range = |loc: &Self, s: &[u32; 4]| {
            let mut blo = [f64::INFINITY; 3];
            let mut bhi = [f64::NEG_INFINITY; 3];
            for &vi in s {
                for a in 0..3 {
                    blo[a] = blo[a].min(vertices[vi as usize].0[a]);
                    bhi[a] = bhi[a].max(vertices[vi as usize].0[a]);
                }
            }
            let a = loc.clamped_cell([blo[0] + shrink, blo[1] + shrink, blo[2] + shrink]);
            let b = loc.clamped_cell([bhi[0] - shrink, bhi[1] - shrink, bhi[2] - shrink]);
            (a, b)
        };
        let mut counts = vec![0u32; ncells + 1];
        for s in simplices {
            let (a, b) = cell_range(&loc, s);
            for i in a[0]..=b[0] {
                for j in a[1]..=b[1] {
                    for k in a[2]..=b[2] {
                        counts[loc.flat([i, j, k]) + 1] += 1;
                    }
                }
            }
        }
        for c in 1..counts.len() {
            counts[c] += counts[c - 1];
        }
        let mut cursor = counts.clone();
        let mut entries = vec![0u32; counts[ncells] as usize];
        for (sid, s) in simplices.iter().enumerate() {
            let (a, b) = cell_range(&loc, s);
            for i in a[0]..=b[0] {
                for j in a[1]..=b[1] {
                    for k in a[2]..=b[2] {
                        let c = loc.flat([i, j, k]);
                        entries[cursor[c] as usize] = sid as u32;
                        cursor[c] += 1;
                    }
                }
            }
        }
        loc.offsets = counts;
        loc.entries = entries;
        loc
    }

    fn flat(&self, c: [usize; 3]) -> usize {
        (c[0] * self.dims[1] + c[1]) * self.dims[2] + c[2]
    }

    fn clamped_cell(&self, p: [f64; 3]) -> [usize; 3] {
        [0, 1, 2].map(|a| {
            let t = ((p[a] - self.origin[a]) / self.cell).floor();
            t.clamp(0.0, (self.dims[a] - 1) as f64) as usize
        })
    }

    /// Cells overlapping the box `[p - tol, p + tol]`, or `None` if the box
    /// misses the grid entirely.
    fn cells_near(&self, p: &AlgebraVector, tol: f64) -> Option<([usize; 3], [usize; 3])> {
        let mut a = [0usize; 3];
        let mut b = [0usize; 3];
        for ax in 0..3 {
            let lo = ((p.0[ax] - tol - self.origin[ax]) / self.cell).floor();
            let hi = ((p.0[ax] + tol - self.origin[ax]) / self.cell).floor();
            let top = (self.dims[ax] - 1) as f64;
            if !(hi >= 0.0 && lo <= top) {
                return None;
            }
            a[ax] = lo.max(0.0) as usize;
            b[ax] = hi.min(top) as usize;
        }
        Some((a, b))
    }

    fn bucket(&self, c: [usize; 3]) -> &[u32] {
        let f = self.flat(c);
        &self.entries[self.offsets[f] as usize..self.offsets[f + 1] as usize]
    }
}

/// A tetrahedral simplicial complex over a region of su(2).
#[derive(Clone, Debug)]
pub struct SimplicialMesh {
    vertices: Vec<AlgebraVector>,
    simplices: Vec<[u32; 4]>,
    flags: Vec<VertexFlag>,
    h: f64,
    rho: f64,
    target_radius: f64,
    star_offsets: Vec<u32>,
    star_entries: Vec<u32>,
    locator: Locator,
}

impl SimplicialMesh {
    /// Kuhn triangulation of the ball of radius `rho`, lattice spacing
    /// `h/√3` so that the longest edge (the cube diagonal) is exactly `h`.
    pub fn triangulate_ball(rho: f64, target_radius: f64, h: f64) -> Result<Self, MeshError> {
        let finite = rho.is_finite() && target_radius.is_finite() && h.is_finite();
        if !finite || h <= 0.0 || target_radius <= 0.0 {
            return Err(MeshError::InvalidGeometry(
                "rho, target radius and h must be positive and finite".into(),
            ));
        }
        if !(target_radius < rho && rho <= MAX_RHO) {
            return Err(MeshError::InvalidGeometry(format!(
                "need 0 < r_T < rho <= 1.75π, got r_T = {target_radius}, rho = {rho}"
            )));
        }
        if h > target_radius {
            return Err(MeshError::InvalidGeometry(format!(
                "h = {h} must not exceed the target radius {target_radius}"
            )));
        }
        let spacing = h / 3f64.sqrt();
        let m = (rho / spacing).ceil() as i64 + 1;
        let side = (2 * m + 1) as usize;
        let lattice = |i: i64, j: i64, k: i64| -> usize {
            (((i + m) as usize * side) + (j + m) as usize) * side + (k + m) as usize
        };

        let mut tets: Vec<[usize; 4]> = Vec::new();
        for i in -m..m {
            for j in -m..m {
                for k in -m..m {
                    let base = [i, j, k];
                    for perm in KUHN_PERMUTATIONS {
                        let mut corner = base;
                        let mut tet = [lattice(i, j, k); 4];
                        let mut sum = [0i64; 3];
                        for (step, &axis) in perm.iter().enumerate() {
                            corner[axis] += 1;
                            tet[step + 1] = lattice(corner[0], corner[1], corner[2]);
                            // vertex `step + 1` carries offsets of all axes so far
                            for &a in &perm[..=step] {
                                sum[a] += 1;
                            }
                        }
                        let centroid =
                            [0, 1, 2].map(|a| (base[a] as f64 + sum[a] as f64 / 4.0) * spacing);
                        let r2: f64 = centroid.iter().map(|c| c * c).sum();
                        if r2 <= rho * rho {
                            tets.push(tet);
                        }
                    }
                }
            }
        }

        // Number the used lattice points in lexicographic order.
        let mut ids = vec![u32::MAX; side * side * side];
        for t in &tets {
            for &l in t {
                ids[l] = 0;
            }
        }
        let mut vertices = Vec::new();
        for (l, id) in ids.iter_mut().enumerate() {
            if *id == 0 {
                *id = vertices.len() as u32;
                let i = (l / (side * side)) as i64 - m;
                let j = ((l / side) % side) as i64 - m;
                let k = (l % side) as i64 - m;
                vertices.push(AlgebraVector::new(
                    i as f64 * spacing,
                    j as f64 * spacing,
                    k as f64 * spacing,
                ));
            }
        }
        let simplices: Vec<[u32; 4]> = tets.iter().map(|t| t.map(|l| ids[l])).collect();
        Self::assemble(vertices, simplices, h, rho, target_radius, spacing)
    }

    /// Builds a mesh from explicit geometry. `h` becomes the longest edge and
    /// `rho` the largest vertex norm.
    pub fn from_simplices(
        vertices: Vec<AlgebraVector>,
        simplices: Vec<[u32; 4]>,
        target_radius: f64,
    ) -> Result<Self, MeshError> {
        if simplices.is_empty() {
            return Err(MeshError::InvalidGeometry("no simplices".into()));
        }
        for (sid, s) in simplices.iter().enumerate() {
            if s.iter().any(|&v| v as usize >= vertices.len()) {
                return Err(MeshError::InvalidSimplex(sid));
            }
        }
        let h = simplices
            .iter()
            .map(|s| max_edge(&vertices, s))
            .fold(0.0, f64::max);
        let rho = vertices.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let mean_edge = simplices
            .iter()
            .map(|s| max_edge(&vertices, s))
            .sum::<f64>()
            / simplices.len() as f64;
        Self::assemble(
            vertices,
            simplices,
            h,
            rho,
            target_radius,
            mean_edge / 3f64.sqrt(),
        )
    }

    fn assemble(
        vertices: Vec<AlgebraVector>,
        simplices: Vec<[u32; 4]>,
        h: f64,
        rho: f64,
        target_radius: f64,
        cell: f64,
    ) -> Result<Self, MeshError> {
        for (sid, s) in simplices.iter().enumerate() {
            if signed_volume(&vertices, s).abs() <= MIN_VOLUME {
                return Err(MeshError::DegenerateSimplex(sid));
            }
        }

        // Hull faces belong to exactly one tetrahedron.
        let mut faces: Vec<[u32; 3]> = Vec::with_capacity(simplices.len() * 4);
        for s in &simplices {
            for skip in 0..4 {
                let mut f = [0u32; 3];
                let mut n = 0;
                for (i, &v) in s.iter().enumerate() {
                    if i != skip {
                        f[n] = v;
                        n += 1;
                    }
                }
                f.sort_unstable();
                faces.push(f);
            }
        }
        faces.sort_unstable();
        let mut on_hull = vec![false; vertices.len()];
        let mut i = 0;
        while i < faces.len() {
            let mut j = i + 1;
            while j < faces.len() && faces[j] == faces[i] {
                j += 1;
            }
            if j - i == 1 {
                for &v in &faces[i] {
                    on_hull[v as usize] = true;
                }
            }
            i = j;
        }
        drop(faces);

        let flags = vertices
            .iter()
            .zip(&on_hull)
            .map(|(v, &hull)| {
                if v.norm() <= target_radius {
                    VertexFlag::Target
                } else if hull {
                    VertexFlag::OuterBoundary
                } else {
                    VertexFlag::Interior
                }
            })
            .collect();

        let mut star_offsets = vec![0u32; vertices.len() + 1];
        for s in &simplices {
            for &v in s {
                star_offsets[v as usize + 1] += 1;
            }
        }
        for k in 1..star_offsets.len() {
            star_offsets[k] += star_offsets[k - 1];
        }
        let mut cursor = star_offsets.clone();
        let mut star_entries = vec![0u32; simplices.len() * 4];
        for (sid, s) in simplices.iter().enumerate() {
            for &v in s {
                star_entries[cursor[v as usize] as usize] = sid as u32;
                cursor[v as usize] += 1;
            }
        }

        let locator = Locator::build(&vertices, &simplices, cell);
        Ok(Self {
            vertices,
            simplices,
            flags,
            h,
            rho,
            target_radius,
            star_offsets,
            star_entries,
            locator,
        })
    }

    pub fn vertices(&self) -> &[AlgebraVector] {
        &self.vertices
    }

    pub fn simplices(&self) -> &[[u32; 4]] {
        &self.simplices
    }

    pub fn flags(&self) -> &[VertexFlag] {
        &self.flags
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn simplex_count(&self) -> usize {
        self.simplices.len()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn target_radius(&self) -> f64 {
        self.target_radius
    }

    pub fn is_target(&self, vertex: usize) -> bool {
        self.flags[vertex] == VertexFlag::Target
    }

    pub fn simplex_vertices(&self, simplex_id: usize) -> Result<[AlgebraVector; 4], MeshError> {
        let s = self
            .simplices
            .get(simplex_id)
            .ok_or(MeshError::InvalidSimplex(simplex_id))?;
        Ok(s.map(|v| self.vertices[v as usize]))
    }

    /// Solves `Σ b_i v_i = p, Σ b_i = 1` on one simplex. Weights are negative
    /// when `p` lies outside it.
    pub fn barycentric_weights(
        &self,
        simplex_id: usize,
        p: &AlgebraVector,
    ) -> Result<[f64; 4], MeshError> {
        let s = self
            .simplices
            .get(simplex_id)
            .ok_or(MeshError::InvalidSimplex(simplex_id))?;
        barycentric(&self.vertices, s, p).ok_or(MeshError::DegenerateSimplex(simplex_id))
    }

    /// Finds the simplex containing `p`, preferring the lowest index when `p`
    /// sits on a shared face.
    pub fn locate(&self, p: &AlgebraVector) -> Result<BarycentricLocation, MeshError> {
        let tol = 1e-9 * self.locator.cell;
        let (a, b) = self
            .locator
            .cells_near(p, tol)
            .ok_or(MeshError::OutOfDomain(*p))?;
        let mut best: Option<BarycentricLocation> = None;
        for i in a[0]..=b[0] {
            for j in a[1]..=b[1] {
                for k in a[2]..=b[2] {
                    for &sid in self.locator.bucket([i, j, k]) {
                        let sid = sid as usize;
                        if best.is_some_and(|b| b.simplex_id <= sid) {
                            continue;
                        }
                        let Some(w) = barycentric(&self.vertices, &self.simplices[sid], p) else {
                            continue;
                        };
                        if w.iter().all(|&x| x >= INSIDE_TOL) {
                            best = Some(BarycentricLocation {
                                simplex_id: sid,
                                weights: w,
                            });
                        }
                    }
                }
            }
        }
        best.ok_or(MeshError::OutOfDomain(*p))
    }

    /// Piecewise-linear interpolation of per-vertex `values` at `p`.
    pub fn interpolate(&self, values: &[f64], p: &AlgebraVector) -> Result<f64, MeshError> {
        let loc = self.locate(p)?;
        let s = &self.simplices[loc.simplex_id];
        Ok((0..4).map(|i| loc.weights[i] * values[s[i] as usize]).sum())
    }

    /// All simplices having `vertex` as a corner.
    pub fn star(&self, vertex: usize) -> Result<&[u32], MeshError> {
        if vertex >= self.vertices.len() {
            return Err(MeshError::InvalidVertex(vertex));
        }
        let (a, b) = (self.star_offsets[vertex], self.star_offsets[vertex + 1]);
        Ok(&self.star_entries[a as usize..b as usize])
    }

    pub fn max_edge_length(&self) -> f64 {
        self.simplices
            .iter()
            .map(|s| max_edge(&self.vertices, s))
            .fold(0.0, f64::max)
    }

    pub fn min_volume(&self) -> f64 {
        self.simplices
            .iter()
            .map(|s| signed_volume(&self.vertices, s).abs())
            .fold(f64::INFINITY, f64::min)
    }
}

fn max_edge(vertices: &[AlgebraVector], s: &[u32; 4]) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..4 {
        for j in i + 1..4 {
            m = m.max((vertices[s[i] as usize] - vertices[s[j] as usize]).norm());
        }
    }
    m
}

fn signed_volume(vertices: &[AlgebraVector], s: &[u32; 4]) -> f64 {
    let v0 = vertices[s[0] as usize].0;
    let e1 = vertices[s[1] as usize].0 - v0;
    let e2 = vertices[s[2] as usize].0 - v0;
    let e3 = vertices[s[3] as usize].0 - v0;
    e1.dot(&e2.cross(&e3)) / 6.0
}

/// Cramer's rule on the edge matrix `[v1 - v0, v2 - v0, v3 - v0]`.
fn barycentric(vertices: &[AlgebraVector], s: &[u32; 4], p: &AlgebraVector) -> Option<[f64; 4]> {
    let v0 = vertices[s[0] as usize].0;
    let e1 = vertices[s[1] as usize].0 - v0;
    let e2 = vertices[s[2] as usize].0 - v0;
    let e3 = vertices[s[3] as usize].0 - v0;
    let d = p.0 - v0;
    let c23 = e2.cross(&e3);
    let det = e1.dot(&c23);
    let scale = e1.norm() * e2.norm() * e3.norm();
    if !(det.abs() > DEGENERACY_TOL * scale) {
        return None;
    }
    let b1 = d.dot(&c23) / det;
    let b2 = e1.dot(&d.cross(&e3)) / det;
    let b3 = e1.dot(&e2.cross(&d)) / det;
    Some([1.0 - b1 - b2 - b3, b1, b2, b3])
}
