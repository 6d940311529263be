//! Level-set meshes (OBJ) and sampled curves (CSV).

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use hconvex::{Point3, SetOracle};

use crate::CliError;

/// Smallest accepted grid resolution.
pub const MIN_RESOLUTION: usize = 8;

/// Kuhn subdivision of the unit cube; corner bits are `x | y << 1 | t << 2`.
const TETS: [[usize; 4]; 6] = [
    [0, 1, 3, 7],
    [0, 1, 5, 7],
    [0, 2, 3, 7],
    [0, 2, 6, 7],
    [0, 4, 5, 7],
    [0, 4, 6, 7],
];

/// Triangle mesh with 0-based face indices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Point3>,
    pub faces: Vec<[usize; 3]>,
}

struct Grid {
    n: usize,
    origin: [f64; 3],
    step: [f64; 3],
    values: Vec<f64>,
}

impl Grid {
    fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n * (j + self.n * k)
    }

    fn point(&self, idx: usize) -> Point3 {
        let (i, j, k) = (
            idx % self.n,
            (idx / self.n) % self.n,
            idx / (self.n * self.n),
        );
        Point3::new(
            self.origin[0] + i as f64 * self.step[0],
            self.origin[1] + j as f64 * self.step[1],
            self.origin[2] + k as f64 * self.step[2],
        )
    }
}

/// Boundary of `δ_τ K` by marching tetrahedra over a `resolution³` grid
/// covering the bounding box of `δ_τ K` with one spare cell on every side.
pub fn levelset_mesh(k: &SetOracle, tau: f64, resolution: usize) -> Result<Mesh, CliError> {
    if resolution < MIN_RESOLUTION {
        return Err(CliError::Usage(format!(
            "resolution must be at least {MIN_RESOLUTION}, got {resolution}"
        )));
    }
    if !k.is_compact() {
        return Err(hconvex::Error::NonCompact(k.label().to_string()).into());
    }
    let kt = k.dilated(tau)?;
    let b = *kt.bbox();
    let n = resolution;
    let step: [f64; 3] = std::array::from_fn(|a| (b.hi[a] - b.lo[a]) / (n - 3) as f64);
    let origin: [f64; 3] = std::array::from_fn(|a| b.lo[a] - step[a]);
    let mut grid = Grid {
        n,
        origin,
        step,
        values: Vec::new(),
    };
    grid.values = (0..n * n * n)
        .map(|idx| kt.defect(grid.point(idx)))
        .collect();

    let mut mesh = Mesh::default();
    let mut edge_vertex: HashMap<(usize, usize), usize> = HashMap::new();
    for kk in 0..n - 1 {
        for j in 0..n - 1 {
            for i in 0..n - 1 {
                let corners: [usize; 8] = std::array::from_fn(|c| {
                    grid.index(i + (c & 1), j + ((c >> 1) & 1), kk + ((c >> 2) & 1))
                });
                for tet in TETS {
                    let ids = tet.map(|c| corners[c]);
                    march_tet(&grid, ids, &mut mesh, &mut edge_vertex);
                }
            }
        }
    }
    Ok(mesh)
}

fn march_tet(
    grid: &Grid,
    ids: [usize; 4],
    mesh: &mut Mesh,
    cache: &mut HashMap<(usize, usize), usize>,
) {
    let inside: Vec<usize> = ids
        .iter()
        .copied()
        .filter(|&g| grid.values[g] <= 0.0)
        .collect();
    let outside: Vec<usize> = ids
        .iter()
        .copied()
        .filter(|&g| grid.values[g] > 0.0)
        .collect();
    let tris: Vec<[(usize, usize); 3]> = match (inside.len(), outside.len()) {
        (1, 3) => vec![[
            (inside[0], outside[0]),
            (inside[0], outside[1]),
            (inside[0], outside[2]),
        ]],
        (3, 1) => vec![[
            (inside[0], outside[0]),
            (inside[1], outside[0]),
            (inside[2], outside[0]),
        ]],
        (2, 2) => {
            let (a, b, c, d) = (inside[0], inside[1], outside[0], outside[1]);
            vec![[(a, c), (a, d), (b, d)], [(a, c), (b, d), (b, c)]]
        }
        _ => return,
    };
    let centroid = |set: &[usize]| {
        let s = set.iter().fold([0.0; 3], |acc, &g| {
            let p = grid.point(g).to_array();
            [acc[0] + p[0], acc[1] + p[1], acc[2] + p[2]]
        });
        s.map(|v| v / set.len() as f64)
    };
    let (ci, co) = (centroid(&inside), centroid(&outside));
    let outward = [co[0] - ci[0], co[1] - ci[1], co[2] - ci[2]];
    for tri in tris {
        let mut f = tri.map(|(a, b)| edge_point(grid, a, b, mesh, cache));
        let [p0, p1, p2] = f.map(|v| mesh.vertices[v].to_array());
        let (u, w) = (sub(p1, p0), sub(p2, p0));
        let normal = [
            u[1] * w[2] - u[2] * w[1],
            u[2] * w[0] - u[0] * w[2],
            u[0] * w[1] - u[1] * w[0],
        ];
        if normal[0] * outward[0] + normal[1] * outward[1] + normal[2] * outward[2] < 0.0 {
            f.swap(1, 2);
        }
        if f[0] != f[1] && f[1] != f[2] && f[0] != f[2] {
            mesh.faces.push(f);
        }
    }
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Crossing on the edge from inside corner `a` to outside corner `b`.
fn edge_point(
    grid: &Grid,
    a: usize,
    b: usize,
    mesh: &mut Mesh,
    cache: &mut HashMap<(usize, usize), usize>,
) -> usize {
    *cache.entry((a.min(b), a.max(b))).or_insert_with(|| {
        let (da, db) = (grid.values[a], grid.values[b]);
        let s = if db.is_finite() && db > da {
            (da / (da - db)).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let (pa, pb) = (grid.point(a), grid.point(b));
        mesh.vertices.push(Point3::new(
            pa.x + s * (pb.x - pa.x),
            pa.y + s * (pb.y - pa.y),
            pa.t + s * (pb.t - pa.t),
        ));
        mesh.vertices.len() - 1
    })
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_obj(mesh: &Mesh, path: &Path) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path).map_err(io_err(path))?);
    let mut body = String::new();
    for v in &mesh.vertices {
        body.push_str(&format!("v {} {} {}\n", v.x, v.y, v.t));
    }
    for f in &mesh.faces {
        body.push_str(&format!("f {} {} {}\n", f[0] + 1, f[1] + 1, f[2] + 1));
    }
    w.write_all(body.as_bytes()).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

/// Writes the mesh of `∂(δ_τ K)` to `path`.
pub fn export_levelset(
    k: &SetOracle,
    tau: f64,
    resolution: usize,
    path: &Path,
) -> Result<Mesh, CliError> {
    let mesh = levelset_mesh(k, tau, resolution)?;
    write_obj(&mesh, path)?;
    Ok(mesh)
}

/// Reads the `v` lines of an OBJ file.
pub fn read_obj_vertices(path: &Path) -> Result<Vec<Point3>, CliError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    text.lines()
        .filter_map(|l| l.strip_prefix("v "))
        .map(|l| {
            let c: Vec<f64> = l
                .split_whitespace()
                .map(str::parse)
                .collect::<Result<_, _>>()
                .map_err(|e| CliError::Usage(format!("bad vertex line `{l}`: {e}")))?;
            match c[..] {
                [x, y, t] => Ok(Point3::new(x, y, t)),
                _ => Err(CliError::Usage(format!("bad vertex line `{l}`"))),
            }
        })
        .collect()
}

/// Pairs samples with `θ_k = k/(m−1)`.
pub fn curve_rows(curve: &[Point3]) -> Vec<(f64, Point3)> {
    let m = curve.len();
    curve
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let theta = if m > 1 {
                k as f64 / (m - 1) as f64
            } else {
                0.0
            };
            (theta, p)
        })
        .collect()
}

/// CSV with header `theta,x,y,t` and 17 significant digits per value.
pub fn export_curve(curve: &[Point3], path: &Path) -> Result<(), CliError> {
    if curve.is_empty() {
        return Err(CliError::Usage("cannot export an empty curve".into()));
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["theta", "x", "y", "t"])
        .map_err(|e| csv_err(path, e))?;
    for (theta, p) in curve_rows(curve) {
        let row = [theta, p.x, p.y, p.t].map(|v| format!("{v:.16e}"));
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_curve(path: &Path) -> Result<Vec<(f64, Point3)>, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    r.deserialize::<(f64, f64, f64, f64)>()
        .map(|row| {
            let (theta, x, y, t) = row.map_err(|e| csv_err(path, e))?;
            Ok((theta, Point3::new(x, y, t)))
        })
        .collect()
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use hconvex::SetDescriptor;

    fn ball() -> SetOracle {
        SetDescriptor::KoranyiBall { r: 1.0 }.build().unwrap()
    }

    #[test]
    fn tiny_resolution_is_rejected() {
        assert!(matches!(
            levelset_mesh(&ball(), 1.0, 7),
            Err(CliError::Usage(_))
        ));
    }

    #[test]
    fn mesh_is_closed() {
        let mesh = levelset_mesh(&ball(), 1.0, 16).unwrap();
        assert!(!mesh.faces.is_empty());
        let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
        for f in &mesh.faces {
            for e in 0..3 {
                let (a, b) = (f[e], f[(e + 1) % 3]);
                *edges.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        assert!(edges.values().all(|&c| c == 2));
    }

    #[test]
    fn rows_use_uniform_theta() {
        let rows = curve_rows(&[Point3::default(); 5]);
        assert_eq!(
            rows.iter().map(|r| r.0).collect::<Vec<_>>(),
            [0.0, 0.25, 0.5, 0.75, 1.0]
        );
    }
}
