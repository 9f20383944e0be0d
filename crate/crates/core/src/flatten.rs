//! Least-squares conformal flattening of a surface mesh into the plane.
//!
//! Each face is measured in a local orthonormal frame whose x-axis is the
//! global X axis projected onto the face plane (global Y when X is nearly
//! normal). Beltrami coefficients of the flattening are reported in those
//! frames, which is the chart convention used for surface targets.

use num_complex::Complex64 as C64;

use crate::beltrami::{mu_values, BeltramiField, FaceDerivatives, GradientStencil};
use crate::error::{Error, Result};
use crate::mesh::{cross, dot, flip_count, norm, signed_area, sub, TriMesh};
use crate::sparse::{gram, matvec_transpose, solve_spd, TripletBuilder};

/// A flattened mesh together with the flattening's per-face Beltrami
/// coefficient and derivatives in the local face charts.
#[derive(Debug, Clone)]
pub struct Flattening {
    pub mesh: TriMesh,
    pub mu: BeltramiField,
    pub derivatives: FaceDerivatives,
}

/// Coordinates of a face's corners in its local frame.
pub fn local_chart(v: [[f64; 3]; 3]) -> [C64; 3] {
    let e1 = sub(v[1], v[0]);
    let e2 = sub(v[2], v[0]);
    let n = cross(e1, e2);
    let nn = norm(n);
    let n = [n[0] / nn, n[1] / nn, n[2] / nn];
    let axis = if n[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let d = dot(axis, n);
    let x = sub(axis, [d * n[0], d * n[1], d * n[2]]);
    let xn = norm(x);
    let x = [x[0] / xn, x[1] / xn, x[2] / xn];
    let y = cross(n, x);
    let p = |w: [f64; 3]| C64::new(dot(w, x), dot(w, y));
    [C64::new(0.0, 0.0), p(e1), p(e2)]
}

fn two_pins(mesh: &TriMesh) -> (usize, usize) {
    let vs = mesh.vertices();
    let b = mesh.boundary_vertices();
    let far = |from: usize| {
        *b.iter()
            .max_by(|&&p, &&q| norm(sub(vs[p], vs[from])).total_cmp(&norm(sub(vs[q], vs[from]))))
            .unwrap()
    };
    let p0 = far(b[0]);
    (p0, far(p0))
}

/// Flattens `mesh`. Planar meshes are returned unchanged with a zero
/// coefficient.
pub fn initial_flatten(mesh: &TriMesh) -> Result<Flattening> {
    let m = mesh.face_count();
    if mesh.is_planar() {
        return Ok(Flattening {
            mesh: mesh.clone(),
            mu: BeltramiField::zeros(m),
            derivatives: FaceDerivatives { fz: vec![C64::new(1.0, 0.0); m], fzbar: vec![C64::new(0.0, 0.0); m] },
        });
    }

    let n = mesh.vertex_count();
    let vs = mesh.vertices();
    let stencils: Vec<GradientStencil> = mesh
        .faces()
        .iter()
        .enumerate()
        .map(|(j, f)| {
            GradientStencil::new(local_chart([vs[f[0]], vs[f[1]], vs[f[2]]])).ok_or(Error::Degenerate { face: j })
        })
        .collect::<Result<_>>()?;

    let (p0, p1) = two_pins(mesh);
    let z0 = C64::new(vs[p0][0], vs[p0][1]);
    let dir = C64::new(vs[p1][0] - vs[p0][0], vs[p1][1] - vs[p0][1]);
    let dir = if dir.norm() > 0.0 { dir / dir.norm() } else { C64::new(1.0, 0.0) };
    let z1 = z0 + dir * norm(sub(vs[p1], vs[p0]));

    // unknown index per vertex; pinned vertices move to the right-hand side
    let mut col = vec![usize::MAX; n];
    let mut free = 0;
    for (v, c) in col.iter_mut().enumerate() {
        if v != p0 && v != p1 {
            *c = free;
            free += 1;
        }
    }
    let pinned = |v: usize| if v == p0 { Some(z0) } else if v == p1 { Some(z1) } else { None };

    let areas = mesh.face_areas();
    let mut b = TripletBuilder::new(2 * m, 2 * free);
    let mut rhs = vec![0.0; 2 * m];
    for (j, (f, s)) in mesh.faces().iter().zip(&stencils).enumerate() {
        let w = areas[j].sqrt();
        for k in 0..3 {
            let c = s.dzbar[k] * w;
            let v = f[k];
            if let Some(z) = pinned(v) {
                let t = c * z;
                rhs[j] -= t.re;
                rhs[m + j] -= t.im;
            } else {
                let i = col[v];
                b.push(j, i, c.re);
                b.push(j, free + i, -c.im);
                b.push(m + j, i, c.im);
                b.push(m + j, free + i, c.re);
            }
        }
    }
    let a = b.build()?;
    let normal = gram(&a)?;
    let x = solve_spd(&normal, &[matvec_transpose(&a, &rhs)])?.remove(0);
    let mut uv = vec![C64::new(0.0, 0.0); n];
    for v in 0..n {
        uv[v] = pinned(v).unwrap_or_else(|| C64::new(x[col[v]], x[free + col[v]]));
    }

    let total: f64 = mesh.faces().iter().map(|f| signed_area(&uv, f)).sum();
    if total < 0.0 {
        uv.iter_mut().for_each(|z| *z = z.conj());
    }
    let flips = mesh.faces().iter().filter(|f| signed_area(&uv, f) <= 0.0).count();
    if flips > 0 {
        return Err(Error::Flattening { flips });
    }

    let mut fz = Vec::with_capacity(m);
    let mut fzbar = Vec::with_capacity(m);
    for (f, s) in mesh.faces().iter().zip(&stencils) {
        let (a, b) = s.apply([uv[f[0]], uv[f[1]], uv[f[2]]]);
        fz.push(a);
        fzbar.push(b);
    }
    let derivatives = FaceDerivatives { fz, fzbar };
    let mu = BeltramiField::new(mu_values(&derivatives)?)?;
    let flat = TriMesh::from_planar(&uv, mesh.faces().to_vec())?;
    debug_assert_eq!(flip_count(&flat, &uv), 0);
    Ok(Flattening { mesh: flat, mu, derivatives })
}
