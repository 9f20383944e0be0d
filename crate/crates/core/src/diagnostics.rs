//! Angle distortion, summary statistics and histograms.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::mesh::{cross, dot, norm, sub, TriMesh};

/// Population mean and standard deviation; NaN entries are skipped.
pub fn mean_std(samples: &[f64]) -> (f64, f64) {
    let finite: Vec<f64> = samples.iter().copied().filter(|x| x.is_finite()).collect();
    if finite.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = finite.len() as f64;
    let mean = finite.iter().sum::<f64>() / n;
    let var = finite.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn corner_angle_3d(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    let (u, v) = (sub(b, a), sub(c, a));
    norm(cross(u, v)).atan2(dot(u, v))
}

fn corner_angle(a: C64, b: C64, c: C64) -> f64 {
    // angle at a between ab and ac
    let u = b - a;
    let v = c - a;
    if u.norm() == 0.0 || v.norm() == 0.0 {
        return f64::NAN;
    }
    (u.conj() * v).arg().abs()
}

/// Per-corner (image angle - source angle), three entries per face in face
/// vertex order. Source angles are measured in 3D, so surface meshes are
/// compared against their own geometry. All corners of a collapsed image
/// face are NaN.
pub fn angle_distortion(mesh: &TriMesh, map: &[C64]) -> Vec<f64> {
    let src = mesh.vertices();
    let mut out = Vec::with_capacity(3 * mesh.face_count());
    for f in mesh.faces() {
        let (p, q) = (map[f[1]] - map[f[0]], map[f[2]] - map[f[0]]);
        let collapsed = (p.conj() * q).im.abs() <= 1e-15 * p.norm_sqr().max(q.norm_sqr());
        for k in 0..3 {
            if collapsed {
                out.push(f64::NAN);
                continue;
            }
            let (a, b, c) = (f[k], f[(k + 1) % 3], f[(k + 2) % 3]);
            let before = corner_angle_3d(src[a], src[b], src[c]);
            let after = corner_angle(map[a], map[b], map[c]);
            out.push(after - before);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionSummary {
    pub mean_abs: f64,
    pub std_abs: f64,
    pub undefined: usize,
}

pub fn summarize_distortion(distortion: &[f64]) -> DistortionSummary {
    let abs: Vec<f64> = distortion.iter().map(|d| d.abs()).collect();
    let (mean_abs, std_abs) = mean_std(&abs);
    DistortionSummary { mean_abs, std_abs, undefined: distortion.iter().filter(|d| d.is_nan()).count() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub statistic: String,
    pub bin_edges: Vec<f64>,
    pub counts: Vec<usize>,
}

pub const DEFAULT_BINS: usize = 50;

impl Histogram {
    /// Uniform bins over the observed range of the finite samples.
    pub fn uniform(statistic: &str, samples: &[f64], bins: usize) -> Self {
        let bins = bins.max(1);
        let finite: Vec<f64> = samples.iter().copied().filter(|x| x.is_finite()).collect();
        let (mut lo, mut hi) = finite
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
        if finite.is_empty() {
            lo = 0.0;
            hi = 1.0;
        } else if hi <= lo {
            lo -= 0.5;
            hi += 0.5;
        }
        let width = (hi - lo) / bins as f64;
        let bin_edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
        let mut counts = vec![0; bins];
        for x in finite {
            let i = (((x - lo) / width) as usize).min(bins - 1);
            counts[i] += 1;
        }
        Histogram { statistic: statistic.to_string(), bin_edges, counts }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// `bin_lo,bin_hi,count` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("bin_lo,bin_hi,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            s.push_str(&format!("{},{},{}\n", self.bin_edges[i], self.bin_edges[i + 1], c));
        }
        s
    }
}

pub const REPORT_SCHEMA: u32 = 1;

/// Summary written after a parameterization run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: u32,
    pub mesh: String,
    pub faces: usize,
    pub vertices: usize,
    pub time_seconds: f64,
    pub mu_error_mean: f64,
    pub mu_error_std: f64,
    pub flips: usize,
    pub iterations: usize,
    pub converged: bool,
    pub clamp_events: usize,
    pub energy_initial: f64,
    pub energy_final: f64,
    pub angle_distortion_mean: f64,
    pub angle_distortion_std: f64,
    pub angle_undefined: usize,
    pub fixed_module: bool,
    pub module: crate::conformal_module::ModuleJson,
    pub warnings: Vec<String>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> crate::error::Result<Self> {
        let r: RunReport = serde_json::from_str(text)
            .map_err(|e| crate::error::Error::Parse { line: e.line(), message: e.to_string() })?;
        if r.schema != REPORT_SCHEMA {
            return Err(crate::error::Error::Parse { line: 0, message: format!("unsupported schema {}", r.schema) });
        }
        Ok(r)
    }
}
