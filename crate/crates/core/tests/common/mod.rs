//! Shared fixtures and independent oracles for the integration tests.
//!
//! Nothing here calls into the library's numerical kernels: derivatives are
//! recovered by solving each face's affine map directly, and the harmonic
//! modulus uses its own Laplacian assembly and conjugate gradients.

#![allow(dead_code)]

use qcmc::{Complex64 as C64, TriMesh};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `nx x ny` grid over the unit square with interior vertices jittered by
/// up to `jitter` cell widths. Jitter below 0.3 keeps every face positive.
pub fn jittered_grid(rng: &mut impl Rng, nx: usize, ny: usize, jitter: f64) -> TriMesh {
    let (hx, hy) = (1.0 / nx as f64, 1.0 / ny as f64);
    let mut pts = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            let mut z = C64::new(i as f64 * hx, j as f64 * hy);
            if i > 0 && i < nx && j > 0 && j < ny {
                z += C64::new(rng.gen_range(-jitter..jitter) * hx, rng.gen_range(-jitter..jitter) * hy);
            }
            pts.push(z);
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut faces = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            if (i + j) % 2 == 0 {
                faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            } else {
                faces.push([id(i, j), id(i + 1, j), id(i, j + 1)]);
                faces.push([id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
    }
    TriMesh::from_planar(&pts, faces).unwrap()
}

/// Orientation-preserving random map: identity plus a small smooth bump
/// and vertex noise.
pub fn near_identity_map(rng: &mut impl Rng, mesh: &TriMesh, amp: f64) -> Vec<C64> {
    let a = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    mesh.positions()
        .iter()
        .map(|&z| {
            let noise = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            z + amp * (a * (z * z) * 0.5 + noise * 0.05)
        })
        .collect()
}

pub fn random_complex(rng: &mut impl Rng, max_norm: f64) -> C64 {
    let r = max_norm * rng.gen_range(0.0f64..1.0).sqrt();
    C64::from_polar(r, rng.gen_range(0.0..std::f64::consts::TAU))
}

/// `(f_z, f_zbar)` of the affine map taking `src` to `dst`, found by solving
/// the 2x2 real system for the linear part.
pub fn affine_derivatives(src: [C64; 3], dst: [C64; 3]) -> (C64, C64) {
    let (e1, e2) = (src[1] - src[0], src[2] - src[0]);
    let (d1, d2) = (dst[1] - dst[0], dst[2] - dst[0]);
    // [a b; c d] [e.re; e.im] = [d.re; d.im] for both edges
    let det = e1.re * e2.im - e2.re * e1.im;
    let a = (d1.re * e2.im - d2.re * e1.im) / det;
    let b = (d2.re * e1.re - d1.re * e2.re) / det;
    let c = (d1.im * e2.im - d2.im * e1.im) / det;
    let d = (d2.im * e1.re - d1.im * e2.re) / det;
    let fz = C64::new(a + d, c - b) * 0.5;
    let fzbar = C64::new(a - d, c + b) * 0.5;
    (fz, fzbar)
}

pub fn face_points(pts: &[C64], f: &[usize; 3]) -> [C64; 3] {
    [pts[f[0]], pts[f[1]], pts[f[2]]]
}

pub fn triangle_area(p: [C64; 3]) -> f64 {
    let (u, v) = (p[1] - p[0], p[2] - p[0]);
    0.5 * (u.re * v.im - u.im * v.re)
}

/// Dense brute-force energy: sum of area * |f_zbar - mu f_z|^2.
pub fn energy_oracle(mesh: &TriMesh, map: &[C64], mu: &[C64]) -> f64 {
    let src = mesh.positions();
    mesh.faces()
        .iter()
        .enumerate()
        .map(|(j, f)| {
            let (fz, fzbar) = affine_derivatives(face_points(&src, f), face_points(map, f));
            triangle_area(face_points(&src, f)) * (fzbar - mu[j] * fz).norm_sqr()
        })
        .sum()
}

/// Modulus `rho = r_inner / r_outer` of the annulus conformally equivalent to
/// a doubly connected mesh, from the Dirichlet energy `D` of the discrete
/// harmonic function that is 0 on the outer and 1 on the inner boundary:
/// `D = 2 pi / ln(1 / rho)`.
pub fn harmonic_modulus(mesh: &TriMesh) -> f64 {
    assert_eq!(mesh.inner_loop_count(), 1);
    let pts = mesh.positions();
    let n = pts.len();
    // cotangent weights on edges
    let mut nbrs: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for f in mesh.faces() {
        for k in 0..3 {
            let (o, i, j) = (f[k], f[(k + 1) % 3], f[(k + 2) % 3]);
            let (u, v) = (pts[i] - pts[o], pts[j] - pts[o]);
            let w = 0.5 * (u.re * v.re + u.im * v.im) / (u.re * v.im - u.im * v.re).abs();
            nbrs[i].push((j, w));
            nbrs[j].push((i, w));
        }
    }
    let mut value = vec![0.0; n];
    let mut fixed = vec![false; n];
    for (k, lp) in mesh.boundary_loops().iter().enumerate() {
        for &v in lp {
            fixed[v] = true;
            value[v] = if k == 0 { 0.0 } else { 1.0 };
        }
    }
    let apply = |x: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| {
                if fixed[i] {
                    return 0.0;
                }
                nbrs[i].iter().map(|&(j, w)| w * (x[i] - if fixed[j] { 0.0 } else { x[j] })).sum()
            })
            .collect()
    };
    // right-hand side from the fixed values
    let b: Vec<f64> = (0..n)
        .map(|i| {
            if fixed[i] {
                0.0
            } else {
                nbrs[i].iter().filter(|&&(j, _)| fixed[j]).map(|&(j, w)| w * value[j]).sum()
            }
        })
        .collect();
    let x = conjugate_gradient(apply, &b, 1e-13, 20 * n);
    for i in 0..n {
        if !fixed[i] {
            value[i] = x[i];
        }
    }
    // each (edge, face) pair sits in two adjacency lists
    let mut dirichlet = 0.0;
    for (i, list) in nbrs.iter().enumerate() {
        for &(j, w) in list {
            dirichlet += 0.5 * w * (value[i] - value[j]).powi(2);
        }
    }
    (-std::f64::consts::TAU / dirichlet).exp()
}

pub fn conjugate_gradient(apply: impl Fn(&[f64]) -> Vec<f64>, b: &[f64], tol: f64, max_iter: usize) -> Vec<f64> {
    let n = b.len();
    let dot = |a: &[f64], c: &[f64]| a.iter().zip(c).map(|(x, y)| x * y).sum::<f64>();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let stop = tol * tol * rr.max(f64::MIN_POSITIVE);
    for _ in 0..max_iter {
        if rr <= stop {
            break;
        }
        let ap = apply(&p);
        let alpha = rr / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let next = dot(&r, &r);
        let beta = next / rr;
        rr = next;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    x
}

/// Counts boundary edges by brute force: edges used by exactly one face.
pub fn boundary_edge_count(mesh: &TriMesh) -> usize {
    let mut count = std::collections::HashMap::new();
    for f in mesh.faces() {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            *count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    count.values().filter(|&&c| c == 1).count()
}

pub fn rotate_mesh(mesh: &TriMesh, theta: f64) -> TriMesh {
    let r = C64::from_polar(1.0, theta);
    let pts: Vec<C64> = mesh.positions().iter().map(|z| r * z).collect();
    TriMesh::from_planar(&pts, mesh.faces().to_vec()).unwrap()
}
