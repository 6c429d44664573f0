//! Implicit solid (annular disk minus pipe bores) and its surface mesh.
//!
//! The signed distance is sampled on a cylindrical `(r, φ, z)` grid whose
//! angular spacing divides the pipe pitch, so samples from one sector cover
//! the whole ring. Each grid cube is split into six tetrahedra sharing its
//! main diagonal, which gives a crack-free surface without ambiguity tables.

use rayon::prelude::*;
use thiserror::Error;

use super::derive::derive_geometry;
use super::pitch::{check_feasibility, FeasibilityReason};
use super::{GeometryError, PipeDiffuserDesign};

pub const MIN_RESOLUTION: u32 = 8;
/// Interpolation clamp; keeps surface vertices off grid nodes.
const T_CLAMP: f64 = 0.02;
/// Grid margin beyond the solid's bounding shell, in cells.
const MARGIN_CELLS: f64 = 2.0;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("design is infeasible: {0:?}")]
    Infeasible(FeasibilityReason),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TriangleMesh {
    pub vertices: Vec<[f32; 3]>,
    pub triangles: Vec<[u32; 3]>,
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn edge_key(a: u32, b: u32) -> u64 {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    ((lo as u64) << 32) | hi as u64
}

impl TriangleMesh {
    fn corner(&self, v: u32) -> [f64; 3] {
        self.vertices[v as usize].map(f64::from)
    }

    fn area_vector(&self, t: usize) -> [f64; 3] {
        let [a, b, c] = self.triangles[t].map(|v| self.corner(v));
        cross(sub(b, a), sub(c, a))
    }

    /// Unit normal from the winding order (right-hand rule).
    pub fn unit_normal(&self, t: usize) -> [f32; 3] {
        let n = self.area_vector(t);
        let len = dot(n, n).sqrt();
        if len == 0.0 {
            return [0.0; 3];
        }
        n.map(|c| (c / len) as f32)
    }

    /// Corner coordinates of every triangle, in triangle order.
    pub fn facets(&self) -> Vec<[[f32; 3]; 3]> {
        self.triangles
            .iter()
            .map(|t| t.map(|v| self.vertices[v as usize]))
            .collect()
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let n = self.area_vector(t);
        0.5 * dot(n, n).sqrt()
    }

    pub fn min_triangle_area(&self) -> f64 {
        (0..self.triangles.len())
            .into_par_iter()
            .map(|t| self.triangle_area(t))
            .reduce(|| f64::INFINITY, f64::min)
    }

    /// Enclosed volume; positive when normals point outward.
    pub fn signed_volume(&self) -> f64 {
        self.triangles
            .par_iter()
            .map(|t| {
                let [a, b, c] = t.map(|v| self.corner(v));
                dot(a, cross(b, c)) / 6.0
            })
            .sum()
    }

    /// Undirected edges not shared by exactly two triangles, sorted.
    pub fn boundary_edges(&self) -> Vec<(u32, u32)> {
        let mut keys: Vec<u64> = self
            .triangles
            .iter()
            .flat_map(|&[a, b, c]| [edge_key(a, b), edge_key(b, c), edge_key(c, a)])
            .collect();
        keys.par_sort_unstable();
        let mut out = Vec::new();
        let mut i = 0;
        while i < keys.len() {
            let mut j = i + 1;
            while j < keys.len() && keys[j] == keys[i] {
                j += 1;
            }
            if j - i != 2 {
                out.push(((keys[i] >> 32) as u32, keys[i] as u32));
            }
            i = j;
        }
        out
    }

    pub fn is_watertight(&self) -> bool {
        !self.triangles.is_empty() && self.boundary_edges().is_empty()
    }

    /// Every directed edge appears once and its reverse exists.
    pub fn is_consistently_oriented(&self) -> bool {
        let mut keys: Vec<u64> = self
            .triangles
            .iter()
            .flat_map(|&[a, b, c]| [(a, b), (b, c), (c, a)])
            .map(|(a, b)| ((a as u64) << 32) | b as u64)
            .collect();
        keys.par_sort_unstable();
        if keys.windows(2).any(|w| w[0] == w[1]) {
            return false;
        }
        keys.par_iter()
            .all(|&k| keys.binary_search(&k.rotate_right(32)).is_ok())
    }
}

/// Annular disk with `n_pipes` conical bores removed. Lengths in mm.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffuserSolid {
    pub inner_radius: f64,
    pub outer_radius: f64,
    pub half_height: f64,
    pub n_pipes: u32,
    pub pitch: f64,
    r_tan: f64,
    throat_radius: f64,
    throat_station: f64,
    upstream_station: f64,
    cone_slope: f64,
    rotations: Vec<(f64, f64)>,
}

impl DiffuserSolid {
    pub fn new(design: &PipeDiffuserDesign) -> Result<Self, MeshError> {
        let report = check_feasibility(design)?;
        if !report.feasible {
            return Err(MeshError::Infeasible(report.reason));
        }
        let g = derive_geometry(design);
        let pitch = design.pitch();
        Ok(Self {
            inner_radius: g.r_3a,
            outer_radius: 0.5 * g.d4_actual,
            half_height: 0.5 * design.passage_height,
            n_pipes: design.n_pipes,
            pitch,
            r_tan: design.r_tan(),
            throat_radius: 0.5 * design.d_th,
            throat_station: g.throat_station,
            upstream_station: g.upstream_station(),
            cone_slope: (0.5 * design.two_theta).tan(),
            rotations: (0..design.n_pipes)
                .map(|k| (k as f64 * pitch).sin_cos())
                .collect(),
        })
    }

    /// Negative inside the material, positive in air. Not an exact distance
    /// near the bores, but its zero set is the solid's surface.
    pub fn signed_distance(&self, p: [f64; 3]) -> f64 {
        let [x, y, z] = p;
        let r = x.hypot(y);
        let disk = (self.inner_radius - r)
            .max(r - self.outer_radius)
            .max(z.abs() - self.half_height);
        let bore = self
            .rotations
            .iter()
            .map(|&(s, c)| {
                let lx = x * c + y * s;
                let ly = -x * s + y * c;
                let radius =
                    self.throat_radius + (ly - self.throat_station).max(0.0) * self.cone_slope;
                ((lx - self.r_tan).hypot(z) - radius).max(self.upstream_station - ly)
            })
            .fold(f64::INFINITY, f64::min);
        disk.max(-bore)
    }
}

/// Periodic cylindrical sampling grid covering the solid.
struct Grid {
    r0: f64,
    dr: f64,
    nr: usize,
    dphi: f64,
    /// Angular nodes per pipe sector.
    m: usize,
    /// Angular nodes around the full ring.
    nj: usize,
    z0: f64,
    dz: f64,
    nz: usize,
    /// Samples for one sector, indexed `(i·m + j)·(nz+1) + k`.
    values: Vec<f64>,
}

impl Grid {
    fn new(solid: &DiffuserSolid, spacing: f64) -> Result<Self, MeshError> {
        let r0 = solid.inner_radius - MARGIN_CELLS * spacing;
        let r1 = solid.outer_radius + MARGIN_CELLS * spacing;
        let nr = ((r1 - r0) / spacing).ceil() as usize;
        let z1 = solid.half_height + MARGIN_CELLS * spacing;
        let nz = (2.0 * z1 / spacing).ceil() as usize;
        let m = (solid.pitch * r1 / spacing).ceil().max(1.0) as usize;
        let nj = m * solid.n_pipes as usize;
        let nodes = (nr + 1) as u64 * nj as u64 * (nz + 1) as u64;
        if nodes >= u32::MAX as u64 {
            return Err(MeshError::Config(format!(
                "sampling grid of {nodes} nodes is too large; lower the resolution"
            )));
        }
        let mut grid = Self {
            r0,
            dr: (r1 - r0) / nr as f64,
            nr,
            dphi: solid.pitch / m as f64,
            m,
            nj,
            z0: -z1,
            dz: 2.0 * z1 / nz as f64,
            nz,
            values: Vec::new(),
        };
        let plane = m * (nz + 1);
        grid.values = (0..=nr)
            .into_par_iter()
            .flat_map_iter(|i| {
                let g = &grid;
                (0..plane).map(move |jk| {
                    let (j, k) = (jk / (g.nz + 1), jk % (g.nz + 1));
                    solid.signed_distance(g.cartesian(i as f64, j as f64, k as f64))
                })
            })
            .collect();
        Ok(grid)
    }

    fn cartesian(&self, i: f64, j: f64, k: f64) -> [f64; 3] {
        let r = self.r0 + i * self.dr;
        let (s, c) = (j * self.dphi).sin_cos();
        [r * c, r * s, self.z0 + k * self.dz]
    }

    fn id(&self, i: usize, j: usize, k: usize) -> u32 {
        ((i * self.nj + j % self.nj) * (self.nz + 1) + k) as u32
    }

    fn decode(&self, id: u32) -> (usize, usize, usize) {
        let id = id as usize;
        let k = id % (self.nz + 1);
        let rest = id / (self.nz + 1);
        (rest / self.nj, rest % self.nj, k)
    }

    fn value(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[(i * self.m + j % self.m) * (self.nz + 1) + k]
    }

    /// Surface crossing on the grid edge between two nodes.
    fn edge_point(&self, key: u64) -> [f64; 3] {
        let (ia, mut ja, ka) = self.decode((key >> 32) as u32);
        let (ib, mut jb, kb) = self.decode(key as u32);
        // Undo the angular wrap so the edge spans one cell.
        if ja.abs_diff(jb) > 1 {
            if ja == 0 {
                ja = self.nj;
            } else {
                jb = self.nj;
            }
        }
        let va = self.value(ia, ja, ka);
        let vb = self.value(ib, jb, kb);
        let t = (va / (va - vb)).clamp(T_CLAMP, 1.0 - T_CLAMP);
        let lerp = |a: usize, b: usize| a as f64 + t * (b as f64 - a as f64);
        self.cartesian(lerp(ia, ib), lerp(ja, jb), lerp(ka, kb))
    }
}

/// The six tetrahedra of a cube around its 0–7 diagonal. Corner `c` has
/// offsets `(c & 1, c >> 1 & 1, c >> 2 & 1)` along `(r, φ, z)`.
const TETS: [[usize; 4]; 6] = [
    [0, 1, 3, 7],
    [0, 1, 5, 7],
    [0, 2, 3, 7],
    [0, 2, 6, 7],
    [0, 4, 5, 7],
    [0, 4, 6, 7],
];

fn cell_triangles(grid: &Grid, i: usize, j: usize, k: usize, out: &mut Vec<[u64; 3]>) {
    let mut ids = [0u32; 8];
    let mut vals = [0f64; 8];
    for c in 0..8 {
        let (di, dj, dk) = (c & 1, (c >> 1) & 1, (c >> 2) & 1);
        ids[c] = grid.id(i + di, j + dj, k + dk);
        vals[c] = grid.value(i + di, j + dj, k + dk);
    }
    let inside = vals.map(|v| v <= 0.0);
    if inside.iter().all(|&b| b) || inside.iter().all(|&b| !b) {
        return;
    }
    let pos = |c: usize| {
        grid.cartesian(
            (i + (c & 1)) as f64,
            (j + ((c >> 1) & 1)) as f64,
            (k + ((c >> 2) & 1)) as f64,
        )
    };

    for tet in TETS {
        let ins: Vec<usize> = tet.iter().copied().filter(|&c| inside[c]).collect();
        let outs: Vec<usize> = tet.iter().copied().filter(|&c| !inside[c]).collect();
        let e = |a: usize, b: usize| edge_key(ids[a], ids[b]);
        let tris: Vec<[u64; 3]> = match (ins.as_slice(), outs.as_slice()) {
            ([a], [b, c, d]) => vec![[e(*a, *b), e(*a, *c), e(*a, *d)]],
            ([a, b, c], [d]) => vec![[e(*d, *a), e(*d, *b), e(*d, *c)]],
            ([a, b], [c, d]) => vec![
                [e(*a, *c), e(*a, *d), e(*b, *d)],
                [e(*a, *c), e(*b, *d), e(*b, *c)],
            ],
            _ => continue,
        };
        let mut away = [0.0; 3];
        for &c in &outs {
            let p = pos(c);
            for d in 0..3 {
                away[d] += p[d] / outs.len() as f64;
            }
        }
        for mut tri in tris {
            let [p0, p1, p2] = tri.map(|key| grid.edge_point(key));
            let normal = cross(sub(p1, p0), sub(p2, p0));
            let centre = [0, 1, 2].map(|d| (p0[d] + p1[d] + p2[d]) / 3.0);
            if dot(normal, sub(away, centre)) < 0.0 {
                tri.swap(1, 2);
            }
            out.push(tri);
        }
    }
}

/// Surface of a feasible design. `resolution` is grid cells per throat diameter.
pub fn build_surface_mesh(
    design: &PipeDiffuserDesign,
    resolution: u32,
) -> Result<TriangleMesh, MeshError> {
    if resolution < MIN_RESOLUTION {
        return Err(MeshError::Config(format!(
            "resolution {resolution} is below the minimum of {MIN_RESOLUTION}"
        )));
    }
    let solid = DiffuserSolid::new(design)?;
    mesh_solid(&solid, design.d_th / resolution as f64)
}

/// Surface of `solid` sampled at grid spacing `spacing` (mm).
pub fn mesh_solid(solid: &DiffuserSolid, spacing: f64) -> Result<TriangleMesh, MeshError> {
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(MeshError::Config(format!("grid spacing {spacing} mm")));
    }
    let grid = Grid::new(solid, spacing)?;
    let keyed: Vec<[u64; 3]> = (0..grid.nr)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut out = Vec::new();
            for j in 0..grid.nj {
                for k in 0..grid.nz {
                    cell_triangles(&grid, i, j, k, &mut out);
                }
            }
            out
        })
        .collect();

    let mut edges: Vec<u64> = keyed.iter().flatten().copied().collect();
    edges.par_sort_unstable();
    edges.dedup();
    let vertices = edges
        .par_iter()
        .map(|&key| grid.edge_point(key).map(|c| c as f32))
        .collect();
    let triangles = keyed
        .par_iter()
        .map(|tri| tri.map(|key| edges.binary_search(&key).expect("edge recorded") as u32))
        .collect();
    Ok(TriangleMesh {
        vertices,
        triangles,
    })
}
