//! Per-face complex derivatives and Beltrami coefficients of piecewise-affine
//! maps, plus dilation, composition and target transfer.

use std::io::{BufRead, BufReader, Read, Write};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::mesh::TriMesh;

/// Piecewise-constant Beltrami coefficient, one value per face, with
/// sup-norm strictly below 1.
#[derive(Debug, Clone, PartialEq)]
pub struct BeltramiField {
    values: Vec<C64>,
}

impl BeltramiField {
    pub fn new(values: Vec<C64>) -> Result<Self> {
        if let Some(j) = values.iter().position(|m| !m.re.is_finite() || !m.im.is_finite()) {
            return Err(Error::InvalidMu(format!("non-finite value on face {j}")));
        }
        if let Some(j) = values.iter().position(|m| m.norm() >= 1.0) {
            return Err(Error::InvalidMu(format!(
                "|mu| = {} >= 1 on face {j}",
                values[j].norm()
            )));
        }
        Ok(BeltramiField { values })
    }

    /// No sup-norm check; for coefficients of intermediate, possibly
    /// folded, maps.
    pub(crate) fn from_raw(values: Vec<C64>) -> Self {
        BeltramiField { values }
    }

    pub fn zeros(faces: usize) -> Self {
        BeltramiField { values: vec![C64::new(0.0, 0.0); faces] }
    }

    pub fn constant(faces: usize, mu: C64) -> Result<Self> {
        Self::new(vec![mu; faces])
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Max over faces of |mu|.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|m| m.norm()).fold(0.0, f64::max)
    }

    /// Reads `face_index,re,im` rows; every face in `0..faces` must appear once.
    pub fn read_csv<R: Read>(reader: R, faces: usize) -> Result<Self> {
        let mut values = vec![None; faces];
        for (i, line) in BufReader::new(reader).lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || (i == 0 && line.starts_with("face_index")) {
                continue;
            }
            let err = |m: &str| Error::Parse { line: i + 1, message: m.to_string() };
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 3 {
                return Err(err("expected face_index,re,im"));
            }
            let j: usize = cols[0].parse().map_err(|_| err("invalid face index"))?;
            let re: f64 = cols[1].parse().map_err(|_| err("invalid real part"))?;
            let im: f64 = cols[2].parse().map_err(|_| err("invalid imaginary part"))?;
            let slot = values.get_mut(j).ok_or_else(|| err("face index out of range"))?;
            if slot.replace(C64::new(re, im)).is_some() {
                return Err(err("duplicate face index"));
            }
        }
        let values = values
            .into_iter()
            .enumerate()
            .map(|(j, v)| v.ok_or_else(|| Error::Parse { line: 0, message: format!("face {j} missing") }))
            .collect::<Result<Vec<_>>>()?;
        Self::new(values)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "face_index,re,im")?;
        for (j, m) in self.values.iter().enumerate() {
            writeln!(w, "{j},{},{}", m.re, m.im)?;
        }
        Ok(())
    }
}

/// Per-face `f_z` and `f_zbar` of a piecewise-affine map.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceDerivatives {
    pub fz: Vec<C64>,
    pub fzbar: Vec<C64>,
}

impl FaceDerivatives {
    /// `conj(f_z) / f_z` on face `j`.
    pub fn rotation(&self, j: usize) -> C64 {
        self.fz[j].conj() / self.fz[j]
    }

    /// Jacobian determinant |f_z|^2 - |f_zbar|^2 on face `j`.
    pub fn jacobian(&self, j: usize) -> f64 {
        self.fz[j].norm_sqr() - self.fzbar[j].norm_sqr()
    }
}

/// Linear functionals taking the three image vertices of a triangle to the
/// affine map's `f_z` and `f_zbar`.
#[derive(Debug, Clone, Copy)]
pub struct GradientStencil {
    pub dz: [C64; 3],
    pub dzbar: [C64; 3],
}

impl GradientStencil {
    /// Built from the source triangle; `None` when it is degenerate.
    pub fn new(w: [C64; 3]) -> Option<Self> {
        let e1 = w[1] - w[0];
        let e2 = w[2] - w[0];
        let det = e1 * e2.conj() - e1.conj() * e2;
        if det.norm() <= f64::EPSILON * e1.norm() * e2.norm() {
            return None;
        }
        let inv = 1.0 / det;
        let dz = [(e1.conj() - e2.conj()) * inv, e2.conj() * inv, -e1.conj() * inv];
        let dzbar = [(e2 - e1) * inv, -e2 * inv, e1 * inv];
        Some(GradientStencil { dz, dzbar })
    }

    pub fn apply(&self, z: [C64; 3]) -> (C64, C64) {
        let fz = self.dz[0] * z[0] + self.dz[1] * z[1] + self.dz[2] * z[2];
        let fzbar = self.dzbar[0] * z[0] + self.dzbar[1] * z[1] + self.dzbar[2] * z[2];
        (fz, fzbar)
    }
}

pub(crate) fn face_points(points: &[C64], f: &[usize; 3]) -> [C64; 3] {
    [points[f[0]], points[f[1]], points[f[2]]]
}

pub(crate) fn stencils(mesh: &TriMesh) -> Result<Vec<GradientStencil>> {
    let pts = mesh.positions();
    mesh.faces()
        .iter()
        .enumerate()
        .map(|(j, f)| GradientStencil::new(face_points(&pts, f)).ok_or(Error::Degenerate { face: j }))
        .collect()
}

pub(crate) fn derivatives_with(stencils: &[GradientStencil], faces: &[[usize; 3]], map: &[C64]) -> FaceDerivatives {
    let (fz, fzbar) = stencils
        .iter()
        .zip(faces)
        .map(|(s, f)| s.apply(face_points(map, f)))
        .unzip();
    FaceDerivatives { fz, fzbar }
}

/// Derivatives of the piecewise-affine map taking the planar mesh to `map`.
pub fn face_derivatives(mesh: &TriMesh, map: &[C64]) -> Result<FaceDerivatives> {
    check_map_len(mesh, map)?;
    Ok(derivatives_with(&stencils(mesh)?, mesh.faces(), map))
}

pub(crate) fn check_map_len(mesh: &TriMesh, map: &[C64]) -> Result<()> {
    if map.len() != mesh.vertex_count() {
        return Err(Error::Mismatch(format!(
            "map has {} values for {} vertices",
            map.len(),
            mesh.vertex_count()
        )));
    }
    Ok(())
}

/// mu = f_zbar / f_z per face, without the sup-norm check.
pub(crate) fn mu_values(d: &FaceDerivatives) -> Result<Vec<C64>> {
    d.fz.iter()
        .zip(&d.fzbar)
        .enumerate()
        .map(|(j, (&fz, &fzbar))| {
            if fz.norm() == 0.0 {
                Err(Error::VanishingDerivative { face: j })
            } else {
                Ok(fzbar / fz)
            }
        })
        .collect()
}

/// Beltrami coefficient of `map`. Fails if f_z vanishes on a face or if the
/// map is not quasi-conformal (|mu| >= 1 somewhere).
pub fn beltrami_coefficient(mesh: &TriMesh, map: &[C64]) -> Result<BeltramiField> {
    BeltramiField::new(mu_values(&face_derivatives(mesh, map)?)?)
}

/// (1 + |mu|_inf) / (1 - |mu|_inf)
pub fn maximal_dilation(mu: &BeltramiField) -> Result<f64> {
    let k = mu.sup_norm();
    if k >= 1.0 {
        return Err(Error::InvalidMu(format!("sup-norm {k} >= 1")));
    }
    Ok((1.0 + k) / (1.0 - k))
}

fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::Mismatch(format!("{what} has {got} faces, expected {want}")));
    }
    Ok(())
}

/// Beltrami coefficient of `g ∘ f`, given `mu_f`, the derivatives of `f`, and
/// `mu_g` already sampled at the image of every source face.
pub fn compose_beltrami(
    mu_f: &BeltramiField,
    derivs_f: &FaceDerivatives,
    mu_g_on_image: &BeltramiField,
) -> Result<BeltramiField> {
    let m = mu_f.len();
    check_len("derivatives", derivs_f.fz.len(), m)?;
    check_len("mu_g", mu_g_on_image.len(), m)?;
    let mut out = Vec::with_capacity(m);
    for j in 0..m {
        let (mf, mg) = (mu_f.values[j], mu_g_on_image.values[j]);
        if derivs_f.fz[j].norm() == 0.0 {
            return Err(Error::VanishingDerivative { face: j });
        }
        let r = derivs_f.rotation(j);
        let den = 1.0 + r * mf.conj() * mg;
        if den.norm() < 1e-14 {
            return Err(Error::InvalidMu(format!("near-singular composition on face {j}")));
        }
        out.push((mf + r * mg) / den);
    }
    BeltramiField::new(out)
}

/// Target coefficient on the flattened domain such that composing with the
/// flattening yields `mu` on the surface.
pub fn transfer_target(
    mu: &BeltramiField,
    mu_phi: &BeltramiField,
    derivs_phi: &FaceDerivatives,
) -> Result<BeltramiField> {
    let m = mu.len();
    check_len("mu_phi", mu_phi.len(), m)?;
    check_len("derivatives", derivs_phi.fz.len(), m)?;
    let mut out = Vec::with_capacity(m);
    for j in 0..m {
        let (a, p) = (mu.values[j], mu_phi.values[j]);
        if derivs_phi.fz[j].norm() == 0.0 {
            return Err(Error::VanishingDerivative { face: j });
        }
        let den = 1.0 - a * p.conj();
        if den.norm() <= 1e-14 {
            return Err(Error::InvalidMu(format!("transfer denominator vanishes on face {j}")));
        }
        out.push((a - p) / (derivs_phi.rotation(j) * den));
    }
    BeltramiField::new(out).map_err(|e| match e {
        Error::InvalidMu(msg) => Error::InvalidMu(format!("transferred target unreachable: {msg}")),
        e => e,
    })
}
