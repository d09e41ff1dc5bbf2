//! Coloured, oriented point clouds with optional part labels, ASCII PLY I/O,
//! and normal estimation.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use nalgebra::Matrix3;

use super::{Point3, Vec3};
use crate::error::{Error, Result};

/// Surface point cloud: positions, RGB colours, unit normals, and optional
/// per-point part labels. Normals may be absent (empty) until estimated.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    positions: Vec<Point3>,
    colours: Vec<[u8; 3]>,
    normals: Vec<Vec3>,
    labels: Option<Vec<u32>>,
}

impl PointCloud {
    pub fn new(
        positions: Vec<Point3>,
        colours: Vec<[u8; 3]>,
        normals: Vec<Vec3>,
        labels: Option<Vec<u32>>,
    ) -> Result<Self> {
        let n = positions.len();
        if colours.len() != n || (!normals.is_empty() && normals.len() != n) {
            return Err(Error::ShapeMismatch(format!(
                "positions {n}, colours {}, normals {}",
                colours.len(),
                normals.len()
            )));
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::ShapeMismatch(format!(
                    "positions {n}, labels {}",
                    l.len()
                )));
            }
        }
        for nv in &normals {
            if (nv.norm() - 1.0).abs() > 1e-6 {
                return Err(Error::InvalidParameter(format!(
                    "normal {nv:?} is not unit length"
                )));
            }
        }
        Ok(Self {
            positions,
            colours,
            normals,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Point3] {
        &self.positions
    }

    pub fn colours(&self) -> &[[u8; 3]] {
        &self.colours
    }

    pub fn normals(&self) -> &[Vec3] {
        &self.normals
    }

    pub fn has_normals(&self) -> bool {
        !self.normals.is_empty()
    }

    pub fn labels(&self) -> Option<&[u32]> {
        self.labels.as_deref()
    }

    pub fn set_labels(&mut self, labels: Option<Vec<u32>>) {
        self.labels = labels;
    }

    pub fn centroid(&self) -> Point3 {
        let mut sum = Vec3::zeros();
        for p in &self.positions {
            sum += p.coords;
        }
        Point3::from(sum / self.positions.len().max(1) as f64)
    }

    /// ASCII PLY with x,y,z,red,green,blue and optional nx,ny,nz, label.
    pub fn write_ply<W: Write>(&self, mut w: W) -> Result<()> {
        let n = self.len();
        writeln!(w, "ply")?;
        writeln!(w, "format ascii 1.0")?;
        writeln!(w, "element vertex {n}")?;
        writeln!(w, "property double x")?;
        writeln!(w, "property double y")?;
        writeln!(w, "property double z")?;
        writeln!(w, "property uchar red")?;
        writeln!(w, "property uchar green")?;
        writeln!(w, "property uchar blue")?;
        if self.has_normals() {
            writeln!(w, "property double nx")?;
            writeln!(w, "property double ny")?;
            writeln!(w, "property double nz")?;
        }
        if self.labels.is_some() {
            writeln!(w, "property int label")?;
        }
        writeln!(w, "end_header")?;
        for i in 0..n {
            let p = self.positions[i];
            let c = self.colours[i];
            write!(w, "{} {} {} {} {} {}", p.x, p.y, p.z, c[0], c[1], c[2])?;
            if self.has_normals() {
                let nv = self.normals[i];
                write!(w, " {} {} {}", nv.x, nv.y, nv.z)?;
            }
            if let Some(l) = &self.labels {
                write!(w, " {}", l[i])?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn save_ply(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_ply(std::io::BufWriter::new(file))
    }

    pub fn read_ply<R: std::io::Read>(r: R) -> Result<PointCloud> {
        let mut lines = BufReader::new(r).lines();
        let magic = lines.next().ok_or_else(|| Error::Parse("empty PLY".into()))??;
        if magic.trim() != "ply" {
            return Err(Error::Parse("missing ply magic".into()));
        }
        let mut n = 0usize;
        let mut props: Vec<String> = Vec::new();
        for line in lines.by_ref() {
            let line = line?;
            let toks: Vec<&str> = line.split_whitespace().collect();
            match toks.as_slice() {
                ["format", fmt, ..] => {
                    if *fmt != "ascii" {
                        return Err(Error::Parse("only ascii PLY supported".into()));
                    }
                }
                ["element", "vertex", count] => {
                    n = count
                        .parse()
                        .map_err(|e| Error::Parse(format!("bad vertex count: {e}")))?;
                }
                ["element", ..] => {
                    return Err(Error::Parse("only vertex elements supported".into()))
                }
                ["property", _, name] => props.push((*name).to_string()),
                ["end_header"] => break,
                _ => {}
            }
        }
        let col = |name: &str| props.iter().position(|p| p == name);
        let (ix, iy, iz) = match (col("x"), col("y"), col("z")) {
            (Some(a), Some(b), Some(c)) => (a, b, c),
            _ => return Err(Error::Parse("PLY missing x/y/z".into())),
        };
        let rgb = match (col("red"), col("green"), col("blue")) {
            (Some(a), Some(b), Some(c)) => Some((a, b, c)),
            _ => None,
        };
        let nrm = match (col("nx"), col("ny"), col("nz")) {
            (Some(a), Some(b), Some(c)) => Some((a, b, c)),
            _ => None,
        };
        let lab = col("label");

        let mut positions = Vec::with_capacity(n);
        let mut colours = Vec::with_capacity(n);
        let mut normals = Vec::new();
        let mut labels = Vec::new();
        for line in lines.take(n) {
            let line = line?;
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() < props.len() {
                return Err(Error::Parse("short PLY row".into()));
            }
            let f = |i: usize| -> Result<f64> {
                toks[i]
                    .parse()
                    .map_err(|e| Error::Parse(format!("bad PLY value: {e}")))
            };
            positions.push(Point3::new(f(ix)?, f(iy)?, f(iz)?));
            if let Some((r, g, b)) = rgb {
                colours.push([f(r)? as u8, f(g)? as u8, f(b)? as u8]);
            } else {
                colours.push([0, 0, 0]);
            }
            if let Some((a, b, c)) = nrm {
                let v = Vec3::new(f(a)?, f(b)?, f(c)?);
                let len = v.norm();
                normals.push(if len > 0.0 { v / len } else { Vec3::z() });
            }
            if let Some(i) = lab {
                labels.push(f(i)? as u32);
            }
        }
        if positions.len() != n {
            return Err(Error::Parse("PLY row count mismatch".into()));
        }
        PointCloud::new(
            positions,
            colours,
            normals,
            if lab.is_some() { Some(labels) } else { None },
        )
    }

    pub fn load_ply(path: impl AsRef<Path>) -> Result<PointCloud> {
        let file = std::fs::File::open(path)?;
        Self::read_ply(BufReader::new(file))
    }
}

/// Estimate unit normals by local k-nearest-neighbour plane fits.
///
/// The normal sign is chosen to point away from the cloud centroid, which
/// stands in for a camera viewpoint on synthetic data.
pub fn estimate_normals(cloud: &PointCloud, k: usize) -> Result<PointCloud> {
    if k < 3 {
        return Err(Error::InvalidParameter("k must be >= 3".into()));
    }
    if cloud.len() < k {
        return Err(Error::TooFewPoints {
            have: cloud.len(),
            need: k,
        });
    }
    let pts = cloud.positions();
    let grid = super::PointGrid::build(pts);
    let centroid = cloud.centroid();
    let mut normals = Vec::with_capacity(pts.len());
    for (i, p) in pts.iter().enumerate() {
        let neigh = grid.k_nearest(p, k, Some(i));
        let mut mean = Vec3::zeros();
        for &j in &neigh {
            mean += pts[j].coords;
        }
        mean /= neigh.len() as f64;
        let mut cov = Matrix3::zeros();
        for &j in &neigh {
            let d = pts[j].coords - mean;
            cov += d * d.transpose();
        }
        let eig = nalgebra::SymmetricEigen::new(cov);
        // smallest eigenvalue's eigenvector
        let mut kmin = 0;
        for c in 1..3 {
            if eig.eigenvalues[c] < eig.eigenvalues[kmin] {
                kmin = c;
            }
        }
        let mut n = eig.eigenvectors.column(kmin).into_owned();
        let len = n.norm();
        n = if len > 0.0 { n / len } else { Vec3::z() };
        if n.dot(&(p - centroid)) < 0.0 {
            n = -n;
        }
        normals.push(n);
    }
    PointCloud::new(
        pts.to_vec(),
        cloud.colours().to_vec(),
        normals,
        cloud.labels().map(|l| l.to_vec()),
    )
}
