//! Quasi-conformal parameterization of multiply-connected planar domains
//! onto punctured unit disks.
//!
//! The map and the inner circles of the target disk are optimized together
//! by repeated sparse least-squares steps on the Beltrami energy
//! `sum area * |f_zbar - mu f_z|^2`. A typical run:
//!
//! ```
//! use qcmc::{synth, solve_qcmc, BeltramiField, SolverConfig};
//!
//! let mesh = synth::annulus(0.4, 1.0, 32, 5).unwrap();
//! let mu = BeltramiField::zeros(mesh.face_count());
//! let (state, report) = solve_qcmc(&mesh, &mu, &SolverConfig::default()).unwrap();
//! assert_eq!(report.flips, 0);
//! assert!((state.module.radii()[0] - 0.4).abs() < 0.01);
//! ```

pub mod beltrami;
pub mod cli;
pub mod conformal_module;
pub mod diagnostics;
pub mod error;
pub mod flatten;
pub mod io;
pub mod mesh;
pub mod operator;
pub mod solver;
pub mod sparse;
pub mod synth;

pub use beltrami::{
    beltrami_coefficient, compose_beltrami, face_derivatives, maximal_dilation, transfer_target, BeltramiField,
    FaceDerivatives,
};
pub use conformal_module::{fit_circle, initial_module, Circle, ConformalModule, ModuleUpdate};
pub use error::{Error, Result};
pub use flatten::{initial_flatten, Flattening};
pub use mesh::{flip_count, TriMesh};
pub use operator::{assemble_constraints, assemble_operator, ConstraintMatrix, OperatorMatrix, StackedVector};
pub use solver::{
    beltrami_energy, descent_step, harmonic_initial_map, solve_fixed_module, solve_qcmc, ParamState, SolveReport,
    SolverConfig,
};

pub use num_complex::Complex64;
