//! Sparse matrices for the Beltrami operator `d/dzbar - mu d/dz` and for the
//! boundary constraints on admissible variations.
//!
//! Vectors of per-vertex complex values are stacked as all real parts
//! followed by all imaginary parts.

use num_complex::Complex64 as C64;

use crate::beltrami::{stencils, BeltramiField};
use crate::conformal_module::{ConformalModule, ModuleUpdate};
use crate::error::{Error, Result};
use crate::mesh::TriMesh;
use crate::sparse::{matvec, SpMat, TripletBuilder};

/// 2n reals: real parts then imaginary parts.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedVector(pub Vec<f64>);

impl StackedVector {
    pub fn from_complex(values: &[C64]) -> Self {
        let mut v: Vec<f64> = values.iter().map(|z| z.re).collect();
        v.extend(values.iter().map(|z| z.im));
        StackedVector(v)
    }

    pub fn to_complex(&self) -> Vec<C64> {
        let n = self.0.len() / 2;
        (0..n).map(|i| C64::new(self.0[i], self.0[n + i])).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Real 2m x 2n matrix of the Beltrami operator on a mesh with m faces and
/// n vertices. Row j holds Re of face j's residual, row m + j its Im.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub matrix: SpMat,
    pub faces: usize,
    pub vertices: usize,
}

impl OperatorMatrix {
    pub fn apply(&self, u: &StackedVector) -> Vec<f64> {
        matvec(&self.matrix, &u.0)
    }

    /// The product as one complex residual per face.
    pub fn apply_complex(&self, map: &[C64]) -> Vec<C64> {
        let y = self.apply(&StackedVector::from_complex(map));
        (0..self.faces).map(|j| C64::new(y[j], y[self.faces + j])).collect()
    }
}

/// Operator matrix: `(A U)` stacks Re then Im of `f_zbar - mu f_z` per face.
pub fn assemble_operator(mesh: &TriMesh, mu: &BeltramiField) -> Result<OperatorMatrix> {
    assemble(mesh, mu, None)
}

/// As [`assemble_operator`] with each face's rows scaled by sqrt(area), so
/// that `|A U|^2` is the area-weighted Beltrami energy.
pub fn assemble_weighted_operator(mesh: &TriMesh, mu: &BeltramiField) -> Result<OperatorMatrix> {
    let w: Vec<f64> = mesh.face_areas().iter().map(|a| a.sqrt()).collect();
    assemble(mesh, mu, Some(&w))
}

fn assemble(mesh: &TriMesh, mu: &BeltramiField, weights: Option<&[f64]>) -> Result<OperatorMatrix> {
    let (m, n) = (mesh.face_count(), mesh.vertex_count());
    if mu.len() != m {
        return Err(Error::Mismatch(format!("mu has {} faces, mesh has {m}", mu.len())));
    }
    if mu.sup_norm() >= 1.0 {
        return Err(Error::InvalidMu("sup-norm >= 1".into()));
    }
    let st = stencils(mesh)?;
    let mut b = TripletBuilder::new(2 * m, 2 * n);
    for (j, (f, s)) in mesh.faces().iter().zip(&st).enumerate() {
        let w = weights.map_or(1.0, |w| w[j]);
        let muj = mu.values()[j];
        for k in 0..3 {
            // residual contribution c z_k, with c = dzbar - mu dz
            let c = (s.dzbar[k] - muj * s.dz[k]) * w;
            let v = f[k];
            b.push(j, v, c.re);
            b.push(j, n + v, -c.im);
            b.push(m + j, v, c.im);
            b.push(m + j, n + v, c.re);
        }
    }
    Ok(OperatorMatrix { matrix: b.build()?, faces: m, vertices: n })
}

/// Which reduced variable each column of a [`ConstraintMatrix`] represents.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnLayout {
    /// Interior vertices; column i is Re, column r + i is Im of vertex `interior[i]`.
    pub interior: Vec<usize>,
    /// Boundary vertices in loop order; column 2r + j is the tangential
    /// displacement of `boundary[j]`.
    pub boundary: Vec<usize>,
    /// Per inner loop, the factor multiplying its three module columns.
    pub module_scales: Vec<f64>,
}

impl ColumnLayout {
    pub fn fixed_columns(&self) -> usize {
        2 * self.interior.len() + self.boundary.len()
    }

    /// First of the `[Re dc, Im dc, dr]` columns for inner loop `k >= 1`.
    pub fn module_column(&self, k: usize) -> usize {
        self.fixed_columns() + 3 * (k - 1)
    }
}

/// Maps reduced variations to admissible per-vertex variations (2n rows).
#[derive(Debug, Clone)]
pub struct ConstraintMatrix {
    pub matrix: SpMat,
    pub layout: ColumnLayout,
    pub augmented: bool,
}

impl ConstraintMatrix {
    pub fn ncols(&self) -> usize {
        self.matrix.ncols()
    }

    /// delta g = K x
    pub fn expand(&self, reduced: &[f64]) -> StackedVector {
        StackedVector(matvec(&self.matrix, reduced))
    }

    /// Physical center and radius perturbations encoded in `reduced`.
    pub fn module_update(&self, reduced: &[f64]) -> ModuleUpdate {
        let n_inner = self.layout.module_scales.len();
        let mut up = ModuleUpdate::zero(n_inner);
        if !self.augmented {
            return up;
        }
        for k in 1..=n_inner {
            let c = self.layout.module_column(k);
            let s = self.layout.module_scales[k - 1];
            up.delta_centers[k - 1] = C64::new(reduced[c], reduced[c + 1]) * s;
            up.delta_radii[k - 1] = reduced[c + 2] * s;
        }
        up
    }
}

/// Builds the constraint matrix at the current map. Boundary vertices slide
/// along the tangent of their target circle; with `augment_module`, inner
/// loops also translate and change radius as a whole.
pub fn assemble_constraints(
    mesh: &TriMesh,
    current_map: &[C64],
    module: &ConformalModule,
    augment_module: bool,
) -> Result<ConstraintMatrix> {
    let n = mesh.vertex_count();
    if current_map.len() != n {
        return Err(Error::Mismatch("map length differs from vertex count".into()));
    }
    if module.len() != mesh.inner_loop_count() {
        return Err(Error::Mismatch(format!(
            "module has {} circles, mesh has {} inner loops",
            module.len(),
            mesh.inner_loop_count()
        )));
    }
    let interior = mesh.interior_vertices();
    let boundary = mesh.boundary_vertices();
    let info = mesh.boundary_vertex_info(current_map, &module.loop_centers())?;
    let r = interior.len();
    let n_inner = module.len();
    let module_scales: Vec<f64> =
        mesh.boundary_loops()[1..].iter().map(|lp| 1.0 / (lp.len() as f64).sqrt()).collect();
    let layout = ColumnLayout { interior, boundary, module_scales };
    let ncols = layout.fixed_columns() + if augment_module { 3 * n_inner } else { 0 };

    let mut b = TripletBuilder::new(2 * n, ncols);
    for (i, &v) in layout.interior.iter().enumerate() {
        b.push(v, i, 1.0);
        b.push(n + v, r + i, 1.0);
    }
    for (j, (&v, bi)) in layout.boundary.iter().zip(&info).enumerate() {
        b.push(v, 2 * r + j, bi.tangent.re);
        b.push(n + v, 2 * r + j, bi.tangent.im);
        if augment_module && bi.loop_index > 0 {
            let k = bi.loop_index;
            let c = layout.module_column(k);
            let s = layout.module_scales[k - 1];
            let radial = -C64::i() * bi.tangent;
            b.push(v, c, s);
            b.push(n + v, c + 1, s);
            b.push(v, c + 2, radial.re * s);
            b.push(n + v, c + 2, radial.im * s);
        }
    }
    Ok(ConstraintMatrix { matrix: b.build()?, layout, augmented: augment_module })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::column_nnz;

    fn single_triangle() -> TriMesh {
        let pts = [C64::new(1.0, 0.0), C64::new(-0.5, 0.8), C64::new(-0.5, -0.8)];
        TriMesh::from_planar(&pts, vec![[0, 1, 2]]).unwrap()
    }

    #[test]
    fn identity_is_in_kernel_for_conformal_target() {
        let m = single_triangle();
        let a = assemble_operator(&m, &BeltramiField::zeros(1)).unwrap();
        let y = a.apply(&StackedVector::from_complex(&m.positions()));
        assert!(y.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn conjugation_gives_unit_residual() {
        let m = single_triangle();
        let a = assemble_operator(&m, &BeltramiField::zeros(1)).unwrap();
        let map: Vec<C64> = m.positions().iter().map(|z| z.conj()).collect();
        let y = a.apply(&StackedVector::from_complex(&map));
        assert!((y[0] - 1.0).abs() < 1e-14 && y[1].abs() < 1e-14);
    }

    #[test]
    fn rows_have_at_most_six_entries() {
        let m = single_triangle();
        let mu = BeltramiField::constant(1, C64::new(0.2, 0.3)).unwrap();
        let a = assemble_operator(&m, &mu).unwrap();
        let t = a.matrix.transpose().to_col_major().unwrap();
        for row in 0..2 {
            assert!(column_nnz(&t, row) <= 6);
        }
        // identity residual is -mu
        let r = a.apply_complex(&m.positions());
        assert!((r[0] + mu.values()[0]).norm() < 1e-14);
    }

    #[test]
    fn all_boundary_triangle_constraint_shape() {
        let m = single_triangle();
        let k = assemble_constraints(&m, &m.positions(), &ConformalModule::empty(), false).unwrap();
        assert_eq!((k.matrix.nrows(), k.matrix.ncols()), (6, 3));
        for j in 0..3 {
            assert!(column_nnz(&k.matrix, j) <= 2);
            let col = crate::sparse::column(&k.matrix, j);
            let norm: f64 = col.iter().map(|(_, v)| v * v).sum();
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn stacking_roundtrip() {
        let z = vec![C64::new(1.0, 2.0), C64::new(-3.0, 0.5)];
        let s = StackedVector::from_complex(&z);
        assert_eq!(s.0, vec![1.0, -3.0, 2.0, 0.5]);
        assert_eq!(s.to_complex(), z);
    }
}
