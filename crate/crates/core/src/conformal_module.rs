//! Radii and centers of the inner circles of the target punctured disk.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::TriMesh;

/// Smallest admissible inner radius.
pub const MIN_RADIUS: f64 = 1e-3;
/// Gap kept between circles, and between a circle and the unit circle.
pub const MARGIN: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct ConformalModule {
    radii: Vec<f64>,
    centers: Vec<C64>,
}

/// Perturbation of the module, one entry per inner loop.
#[derive(Debug, Clone, PartialEq)]
pub struct ModuleUpdate {
    pub delta_centers: Vec<C64>,
    pub delta_radii: Vec<f64>,
}

impl ModuleUpdate {
    pub fn zero(n_inner: usize) -> Self {
        ModuleUpdate { delta_centers: vec![C64::new(0.0, 0.0); n_inner], delta_radii: vec![0.0; n_inner] }
    }

    pub fn is_zero(&self) -> bool {
        self.delta_radii.iter().all(|&r| r == 0.0) && self.delta_centers.iter().all(|c| c.norm() == 0.0)
    }
}

/// Circle fitted by the algebraic (Kåsa) least-squares method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub center: C64,
    pub radius: f64,
}

/// Minimizes sum (x^2 + y^2 + D x + E y + F)^2 over D, E, F.
pub fn fit_circle(points: &[C64]) -> Option<Circle> {
    if points.len() < 3 {
        return None;
    }
    // centre the data for conditioning
    let n = points.len() as f64;
    let mean = points.iter().sum::<C64>() / n;
    let scale = points.iter().map(|p| (p - mean).norm()).fold(0.0, f64::max);
    if !(scale > 0.0) {
        return None;
    }
    let mut ata = Matrix3::<f64>::zeros();
    let mut atb = Vector3::<f64>::zeros();
    for p in points {
        let q = (p - mean) / scale;
        let row = Vector3::new(q.re, q.im, 1.0);
        ata += row * row.transpose();
        atb -= row * q.norm_sqr();
    }
    let sol = ata.lu().solve(&atb)?;
    let (d, e, f) = (sol[0], sol[1], sol[2]);
    let r2 = 0.25 * (d * d + e * e) - f;
    if !r2.is_finite() || r2 <= 0.0 {
        return None;
    }
    // collinear points give a huge, ill-determined circle
    let radius = r2.sqrt();
    if radius > 1e8 || ata.determinant().abs() < 1e-12 * n * n * n {
        return None;
    }
    Some(Circle { center: mean + C64::new(-0.5 * d, -0.5 * e) * scale, radius: radius * scale })
}

impl ConformalModule {
    pub fn new(radii: Vec<f64>, centers: Vec<C64>) -> Result<Self> {
        let m = ConformalModule { radii, centers };
        m.validate()?;
        Ok(m)
    }

    /// Unit disk with no holes.
    pub fn empty() -> Self {
        ConformalModule { radii: Vec::new(), centers: Vec::new() }
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn centers(&self) -> &[C64] {
        &self.centers
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    /// Circle for boundary loop `k`; loop 0 is the unit circle.
    pub fn circle(&self, k: usize) -> Circle {
        if k == 0 {
            Circle { center: C64::new(0.0, 0.0), radius: 1.0 }
        } else {
            Circle { center: self.centers[k - 1], radius: self.radii[k - 1] }
        }
    }

    /// Circle centers indexed by boundary loop, outer first.
    pub fn loop_centers(&self) -> Vec<C64> {
        std::iter::once(C64::new(0.0, 0.0)).chain(self.centers.iter().copied()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.radii.len() != self.centers.len() {
            return Err(Error::Module("radii and centers differ in length".into()));
        }
        for (i, (&r, &c)) in self.radii.iter().zip(&self.centers).enumerate() {
            if !(r > 0.0 && r < 1.0) || !r.is_finite() || !c.re.is_finite() || !c.im.is_finite() {
                return Err(Error::Module(format!("circle {i} has radius {r}")));
            }
            if c.norm() + r >= 1.0 {
                return Err(Error::Module(format!("circle {i} leaves the unit disk")));
            }
        }
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                if (self.centers[i] - self.centers[j]).norm() <= self.radii[i] + self.radii[j] {
                    return Err(Error::Module(format!("circles {i} and {j} overlap")));
                }
            }
        }
        Ok(())
    }

    /// For a single inner circle: the radius ratio of the concentric annulus
    /// that is Möbius-equivalent to this domain.
    pub fn annulus_ratio(&self) -> Option<f64> {
        if self.len() != 1 {
            return None;
        }
        let (c, r) = (self.centers[0].norm(), self.radii[0]);
        // disk automorphism z -> (z - a)/(1 - a z) with real a centring the hole
        let (p, q) = (c - r, c + r);
        let a = if p + q == 0.0 {
            0.0
        } else {
            let s = 1.0 + p * q;
            (s - (s * s - (p + q) * (p + q)).sqrt()) / (p + q)
        };
        Some((q - a) / (1.0 - a * q))
    }

    /// Returns the updated module and the number of clamped circles.
    pub fn apply_update(&self, update: &ModuleUpdate, damping: f64) -> (ConformalModule, usize) {
        let n = self.len();
        let mut radii = self.radii.clone();
        let mut centers = self.centers.clone();
        let mut clamped = vec![false; n];
        for i in 0..n {
            let r = self.radii[i] + damping * update.delta_radii[i];
            let c = self.centers[i] + damping * update.delta_centers[i];
            let rmax = 1.0 - MARGIN - MIN_RADIUS;
            let r_ok = r.clamp(MIN_RADIUS, rmax);
            if r_ok != r || !r.is_finite() {
                clamped[i] = true;
            }
            radii[i] = if r.is_finite() { r_ok } else { self.radii[i] };
            centers[i] = if c.re.is_finite() && c.im.is_finite() { c } else { self.centers[i] };
            let limit = 1.0 - MARGIN - radii[i];
            if centers[i].norm() > limit {
                let dir = if centers[i].norm() > 0.0 { centers[i] / centers[i].norm() } else { C64::new(1.0, 0.0) };
                centers[i] = dir * limit;
                clamped[i] = true;
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                let d = (centers[i] - centers[j]).norm();
                if d < radii[i] + radii[j] + MARGIN {
                    clamped[i] = true;
                    clamped[j] = true;
                    let room = d - MARGIN;
                    if room >= 2.0 * MIN_RADIUS {
                        let s = room / (radii[i] + radii[j]);
                        radii[i] = (radii[i] * s).max(MIN_RADIUS);
                        radii[j] = (radii[j] * s).max(MIN_RADIUS);
                    } else {
                        // centers collapsed together: keep both circles where they were
                        radii[i] = self.radii[i];
                        radii[j] = self.radii[j];
                        centers[i] = self.centers[i];
                        centers[j] = self.centers[j];
                    }
                }
            }
        }
        let count = clamped.iter().filter(|&&c| c).count();
        (ConformalModule { radii, centers }, count)
    }

    pub fn to_json(&self) -> ModuleJson {
        ModuleJson {
            radii: self.radii.clone(),
            centers: self.centers.iter().map(|c| [c.re, c.im]).collect(),
        }
    }

    pub fn from_json(j: &ModuleJson) -> Result<Self> {
        Self::new(j.radii.clone(), j.centers.iter().map(|c| C64::new(c[0], c[1])).collect())
    }
}

/// `{"radii": [...], "centers": [[re, im], ...]}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuleJson {
    pub radii: Vec<f64>,
    pub centers: Vec<[f64; 2]>,
}

/// Similarity taking the outer loop's fitted circle to the unit circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization {
    pub center: C64,
    pub scale: f64,
}

impl Normalization {
    pub fn apply(&self, z: C64) -> C64 {
        (z - self.center) * self.scale
    }
}

/// Fits a circle to every boundary loop, normalizes the outer one to the
/// unit circle and returns the inner circles clamped into a valid module.
pub fn initial_module(mesh: &TriMesh) -> Result<ConformalModule> {
    initial_module_with_normalization(mesh).map(|(m, _)| m)
}

pub fn initial_module_with_normalization(mesh: &TriMesh) -> Result<(ConformalModule, Normalization)> {
    let pts = mesh.positions();
    let circles = mesh
        .boundary_loops()
        .iter()
        .enumerate()
        .map(|(k, lp)| {
            let loop_pts: Vec<C64> = lp.iter().map(|&v| pts[v]).collect();
            fit_circle(&loop_pts).ok_or_else(|| Error::CircleFit {
                loop_index: k,
                message: "boundary vertices are (nearly) collinear".into(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let norm = Normalization { center: circles[0].center, scale: 1.0 / circles[0].radius };
    let radii: Vec<f64> = circles[1..].iter().map(|c| c.radius * norm.scale).collect();
    let centers: Vec<C64> = circles[1..].iter().map(|c| norm.apply(c.center)).collect();
    let raw = ConformalModule { radii: radii.clone(), centers: centers.clone() };
    let (module, _) = raw.apply_update(&ModuleUpdate::zero(radii.len()), 0.0);
    module.validate().map_err(|e| Error::Module(format!("initial circle fit is infeasible: {e}")))?;
    Ok((module, norm))
}
