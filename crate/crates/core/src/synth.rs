//! Synthetic test domains: structured annuli and constrained Delaunay
//! triangulations of disks and squares with elliptical holes.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64 as C64;
use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};

use crate::error::{Error, Result};
use crate::mesh::TriMesh;

/// Outer boundary of a generated domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outline {
    Circle { center: C64, radius: f64 },
    /// Axis-aligned square centered at the origin.
    Square { half: f64 },
}

impl Outline {
    fn contains(&self, z: C64) -> bool {
        match *self {
            Outline::Circle { center, radius } => (z - center).norm() < radius,
            Outline::Square { half } => z.re.abs() < half && z.im.abs() < half,
        }
    }

    fn distance_inside(&self, z: C64) -> f64 {
        match *self {
            Outline::Circle { center, radius } => radius - (z - center).norm(),
            Outline::Square { half } => (half - z.re.abs()).min(half - z.im.abs()),
        }
    }

    fn sample(&self, h: f64) -> Vec<C64> {
        match *self {
            Outline::Circle { center, radius } => circle_points(center, radius, h),
            Outline::Square { half } => {
                let k = ((2.0 * half) / h).ceil().max(1.0) as usize;
                let corners = [
                    C64::new(-half, -half),
                    C64::new(half, -half),
                    C64::new(half, half),
                    C64::new(-half, half),
                ];
                let mut pts = Vec::with_capacity(4 * k);
                for i in 0..4 {
                    let (a, b) = (corners[i], corners[(i + 1) % 4]);
                    pts.extend((0..k).map(|s| a + (b - a) * (s as f64 / k as f64)));
                }
                pts
            }
        }
    }
}

/// Elliptical hole with axis-aligned semi-axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hole {
    pub center: C64,
    pub rx: f64,
    pub ry: f64,
}

impl Hole {
    pub fn circle(center: C64, radius: f64) -> Self {
        Hole { center, rx: radius, ry: radius }
    }

    fn level(&self, z: C64) -> f64 {
        let d = z - self.center;
        ((d.re / self.rx).powi(2) + (d.im / self.ry).powi(2)).sqrt()
    }

    fn contains(&self, z: C64) -> bool {
        self.level(z) < 1.0
    }

    /// Lower bound on the distance from an outside point to the ellipse.
    fn clearance(&self, z: C64) -> f64 {
        (self.level(z) - 1.0) * self.rx.min(self.ry)
    }

    fn sample(&self, h: f64) -> Vec<C64> {
        // near-uniform spacing along the ellipse by inverting its arc length
        let fine = 4096;
        let at = |t: f64| self.center + C64::new(self.rx * t.cos(), self.ry * t.sin());
        let mut s = vec![0.0; fine + 1];
        for i in 1..=fine {
            s[i] = s[i - 1] + (at(TAU * i as f64 / fine as f64) - at(TAU * (i - 1) as f64 / fine as f64)).norm();
        }
        let k = (s[fine] / h).ceil().max(8.0) as usize;
        let mut out = Vec::with_capacity(k);
        let mut j = 0;
        for i in 0..k {
            let target = s[fine] * i as f64 / k as f64;
            while s[j + 1] < target {
                j += 1;
            }
            let frac = (target - s[j]) / (s[j + 1] - s[j]);
            out.push(at(TAU * (j as f64 + frac) / fine as f64));
        }
        out
    }
}

fn circle_points(center: C64, radius: f64, h: f64) -> Vec<C64> {
    let k = ((TAU * radius) / h).ceil().max(8.0) as usize;
    (0..k).map(|i| center + C64::from_polar(radius, TAU * i as f64 / k as f64)).collect()
}

/// Structured annulus between radii `r_in < r_out` centered at the origin.
/// Rings are spaced geometrically so that cells stay close to square.
pub fn annulus(r_in: f64, r_out: f64, sectors: usize, rings: usize) -> Result<TriMesh> {
    if !(r_in > 0.0 && r_in < r_out) || sectors < 3 || rings < 1 {
        return Err(Error::Config("annulus needs 0 < r_in < r_out, sectors >= 3, rings >= 1".into()));
    }
    let mut pts = Vec::with_capacity(sectors * (rings + 1));
    for i in 0..=rings {
        let r = r_in * (r_out / r_in).powf(i as f64 / rings as f64);
        // stagger alternate rings by half a sector
        let shift = if i % 2 == 1 { PI / sectors as f64 } else { 0.0 };
        for s in 0..sectors {
            pts.push(C64::from_polar(r, TAU * s as f64 / sectors as f64 + shift));
        }
    }
    let id = |i: usize, s: usize| i * sectors + s % sectors;
    let mut faces = Vec::with_capacity(2 * sectors * rings);
    for i in 0..rings {
        for s in 0..sectors {
            if i % 2 == 0 {
                faces.push([id(i, s), id(i, s + 1), id(i + 1, s)]);
                faces.push([id(i, s + 1), id(i + 1, s + 1), id(i + 1, s)]);
            } else {
                faces.push([id(i, s), id(i + 1, s + 1), id(i + 1, s)]);
                faces.push([id(i, s), id(i, s + 1), id(i + 1, s + 1)]);
            }
        }
    }
    TriMesh::from_planar(&pts, faces)
}

/// Annulus whose vertices sit at angles `theta + warp * sin(theta)` instead
/// of uniformly. The domain is still a circle domain, but arc-length
/// boundary placement no longer reproduces the identity.
pub fn warped_annulus(r_in: f64, r_out: f64, sectors: usize, rings: usize, warp: f64) -> Result<TriMesh> {
    if !(warp.abs() < 1.0) {
        return Err(Error::Config("warp must lie in (-1, 1)".into()));
    }
    let base = annulus(r_in, r_out, sectors, rings)?;
    let pts: Vec<C64> = base
        .positions()
        .iter()
        .map(|z| {
            let t = z.arg();
            C64::from_polar(z.norm(), t + warp * t.sin())
        })
        .collect();
    TriMesh::from_planar(&pts, base.faces().to_vec())
}

/// Image of `mesh` under the disk automorphism `z -> (z - a) / (1 - conj(a) z)`.
/// Circles map to circles, so a circle domain stays a circle domain.
pub fn mobius_image(mesh: &TriMesh, a: C64) -> Result<TriMesh> {
    if !(a.norm() < 1.0) {
        return Err(Error::Config("automorphism parameter must lie in the unit disk".into()));
    }
    let pts: Vec<C64> = mesh.positions().iter().map(|&z| (z - a) / (1.0 - a.conj() * z)).collect();
    TriMesh::from_planar(&pts, mesh.faces().to_vec())
}

/// Triangulated domain with target edge length about `h`.
pub fn domain(outline: Outline, holes: &[Hole], h: f64) -> Result<TriMesh> {
    if !(h > 0.0) {
        return Err(Error::Config("edge length must be positive".into()));
    }
    let mut cdt: ConstrainedDelaunayTriangulation<Point2<f64>> = ConstrainedDelaunayTriangulation::new();
    let insert = |cdt: &mut ConstrainedDelaunayTriangulation<Point2<f64>>, z: C64| {
        cdt.insert(Point2::new(z.re, z.im))
            .map_err(|e| Error::Config(format!("triangulation failed: {e:?}")))
    };
    let mut loops = vec![outline.sample(h)];
    loops.extend(holes.iter().map(|c| c.sample(h)));
    for lp in &loops {
        let handles = lp.iter().map(|&z| insert(&mut cdt, z)).collect::<Result<Vec<_>>>()?;
        for i in 0..handles.len() {
            cdt.add_constraint(handles[i], handles[(i + 1) % handles.len()]);
        }
    }

    // hexagonal lattice of interior points
    let (lo, hi) = match outline {
        Outline::Circle { center, radius } => (center - C64::new(radius, radius), center + C64::new(radius, radius)),
        Outline::Square { half } => (C64::new(-half, -half), C64::new(half, half)),
    };
    let dy = h * 3f64.sqrt() / 2.0;
    let rows = ((hi.im - lo.im) / dy).ceil() as usize;
    let cols = ((hi.re - lo.re) / h).ceil() as usize + 1;
    for j in 0..=rows {
        let off = if j % 2 == 1 { h / 2.0 } else { 0.0 };
        for i in 0..=cols {
            let z = C64::new(lo.re + off + i as f64 * h, lo.im + j as f64 * dy);
            let clear = outline.distance_inside(z) > 0.6 * h
                && holes.iter().all(|c| c.clearance(z) > 0.6 * h);
            if clear {
                insert(&mut cdt, z)?;
            }
        }
    }

    let inside = |z: C64| outline.contains(z) && holes.iter().all(|c| !c.contains(z));
    let mut remap = vec![usize::MAX; cdt.num_vertices()];
    let mut pts = Vec::new();
    let mut faces = Vec::new();
    for f in cdt.inner_faces() {
        let vs = f.vertices();
        let p: Vec<C64> = vs.iter().map(|v| C64::new(v.position().x, v.position().y)).collect();
        if !inside((p[0] + p[1] + p[2]) / 3.0) {
            continue;
        }
        let mut tri = [0; 3];
        for k in 0..3 {
            let old = vs[k].fix().index();
            if remap[old] == usize::MAX {
                remap[old] = pts.len();
                pts.push(p[k]);
            }
            tri[k] = remap[old];
        }
        faces.push(tri);
    }
    TriMesh::from_planar(&pts, faces)
}

/// Disk of the given radius at the origin.
pub fn disk(radius: f64, h: f64) -> Result<TriMesh> {
    domain(Outline::Circle { center: C64::new(0.0, 0.0), radius }, &[], h)
}

/// Square of side 2 with a centered hole of radius 0.5.
pub fn square_with_hole(h: f64) -> Result<TriMesh> {
    domain(Outline::Square { half: 1.0 }, &[Hole::circle(C64::new(0.0, 0.0), 0.5)], h)
}

/// Unit disk with a circular and an elliptical hole.
pub fn triply_connected_disk(h: f64) -> Result<TriMesh> {
    domain(
        Outline::Circle { center: C64::new(0.0, 0.0), radius: 1.0 },
        &[
            Hole::circle(C64::new(-0.4, 0.1), 0.2),
            Hole { center: C64::new(0.45, -0.15), rx: 0.3, ry: 0.18 },
        ],
        h,
    )
}

/// Square of side 2 with two holes of different sizes.
pub fn square_with_two_holes(h: f64) -> Result<TriMesh> {
    domain(
        Outline::Square { half: 1.0 },
        &[
            Hole::circle(C64::new(-0.45, 0.3), 0.25),
            Hole::circle(C64::new(0.4, -0.35), 0.3),
        ],
        h,
    )
}

/// Spherical cap over the disk of radius 0.8 on the unit sphere, with a
/// hole above the disk of radius 0.3 at the origin.
pub fn hemisphere_cap_with_hole(h: f64) -> Result<TriMesh> {
    let flat = domain(
        Outline::Circle { center: C64::new(0.0, 0.0), radius: 0.8 },
        &[Hole::circle(C64::new(0.1, 0.05), 0.3)],
        h,
    )?;
    let vertices = flat
        .vertices()
        .iter()
        .map(|v| [v[0], v[1], (1.0 - v[0] * v[0] - v[1] * v[1]).sqrt()])
        .collect();
    TriMesh::new(vertices, flat.faces().to_vec())
}

/// Rectangle [-1, 1] x [-0.5, 0.5] with a rectangular window in its middle
/// third, on a `cols x rows` grid rolled around a cylinder of radius 1.5.
/// Grid cells stay planar, so the surface is exactly developable.
pub fn developable_strip(cols: usize, rows: usize) -> Result<TriMesh> {
    if cols < 3 || rows < 3 {
        return Err(Error::Config("strip needs at least 3 x 3 cells".into()));
    }
    let r = 1.5;
    let id = |i: usize, j: usize| j * (cols + 1) + i;
    let window = |i: usize, j: usize| i >= cols / 3 && i < cols - cols / 3 && j >= rows / 3 && j < rows - rows / 3;
    let mut vertices = Vec::with_capacity((cols + 1) * (rows + 1));
    for j in 0..=rows {
        for i in 0..=cols {
            let u = -1.0 + 2.0 * i as f64 / cols as f64;
            let v = -0.5 + j as f64 / rows as f64;
            vertices.push([r * (u / r).sin(), v, r * (1.0 - (u / r).cos())]);
        }
    }
    let mut faces = Vec::new();
    for j in 0..rows {
        for i in 0..cols {
            if window(i, j) {
                continue;
            }
            faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    // drop vertices that only belonged to the window
    let mut used = vec![usize::MAX; vertices.len()];
    let mut kept = Vec::new();
    for f in faces.iter_mut() {
        for v in f.iter_mut() {
            if used[*v] == usize::MAX {
                used[*v] = kept.len();
                kept.push(vertices[*v]);
            }
            *v = used[*v];
        }
    }
    TriMesh::new(kept, faces)
}
