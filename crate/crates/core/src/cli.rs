//! Drivers behind the `qcmc` binary: parameterize a mesh and write its
//! artifacts, flatten surfaces, compare and tabulate run reports.

use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::beltrami::{transfer_target, BeltramiField};
use crate::diagnostics::{angle_distortion, summarize_distortion, Histogram, RunReport, DEFAULT_BINS, REPORT_SCHEMA};
use crate::error::{Error, Result};
use crate::flatten::initial_flatten;
use crate::io::{load_mesh, save_obj, MeshFormat};
use crate::mesh::TriMesh;
use crate::operator::{assemble_constraints, assemble_weighted_operator};
use crate::solver::{solve_qcmc, ParamState, SolveReport, SolverConfig};
use crate::sparse::write_matrix_market;

#[derive(Debug, Clone, PartialEq)]
pub enum MuSource {
    Zero,
    Constant(C64),
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::Config(format!("unknown report format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input_path: PathBuf,
    pub output_prefix: PathBuf,
    pub mu_source: MuSource,
    pub solver: SolverConfig,
    pub report_formats: BTreeSet<ReportFormat>,
    pub dump_matrices: bool,
}

impl RunConfig {
    pub fn new(input_path: impl Into<PathBuf>, output_prefix: impl Into<PathBuf>) -> Self {
        RunConfig {
            input_path: input_path.into(),
            output_prefix: output_prefix.into(),
            mu_source: MuSource::Zero,
            solver: SolverConfig::default(),
            report_formats: [ReportFormat::Json].into_iter().collect(),
            dump_matrices: false,
        }
    }
}

/// Parses `re,im`.
pub fn parse_complex(s: &str) -> Result<C64> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || Error::Config(format!("expected re,im but got {s:?}"));
    if parts.len() != 2 {
        return Err(bad());
    }
    let re = parts[0].parse::<f64>().map_err(|_| bad())?;
    let im = parts[1].parse::<f64>().map_err(|_| bad())?;
    Ok(C64::new(re, im))
}

/// `<prefix><suffix>`, e.g. `out/run` + `_report.json`.
pub fn artifact_path(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn load_target(source: &MuSource, faces: usize) -> Result<BeltramiField> {
    match source {
        MuSource::Zero => Ok(BeltramiField::zeros(faces)),
        MuSource::Constant(mu) => BeltramiField::constant(faces, *mu),
        MuSource::File(path) => BeltramiField::read_csv(File::open(path)?, faces),
    }
}

fn input_mesh(path: &Path) -> Result<TriMesh> {
    let format = MeshFormat::from_path(path)
        .ok_or_else(|| Error::Config(format!("cannot infer mesh format of {}", path.display())))?;
    load_mesh(path, format)
}

/// Everything produced by one parameterization.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub mesh: TriMesh,
    pub state: ParamState,
    pub solve: SolveReport,
    pub report: RunReport,
    pub angle_distortion: Vec<f64>,
    pub mu_error: Vec<f64>,
}

/// Loads, flattens if needed, solves and summarizes without writing files.
pub fn parameterize(mesh: TriMesh, name: &str, mu_source: &MuSource, config: &SolverConfig) -> Result<RunOutput> {
    config.validate()?;
    let mu_surface = load_target(mu_source, mesh.face_count())?;
    let flat = initial_flatten(&mesh)?;
    let target = transfer_target(&mu_surface, &flat.mu, &flat.derivatives)?;

    let (state, solve) = solve_qcmc(&flat.mesh, &target, config)?;

    let mu_error: Vec<f64> =
        state.mu_current.values().iter().zip(target.values()).map(|(a, b)| (a - b).norm()).collect();
    let distortion = angle_distortion(&mesh, &state.map);
    let summary = summarize_distortion(&distortion);
    let report = RunReport {
        schema: REPORT_SCHEMA,
        mesh: name.to_string(),
        faces: mesh.face_count(),
        vertices: mesh.vertex_count(),
        time_seconds: solve.time_seconds,
        mu_error_mean: solve.mu_error_mean,
        mu_error_std: solve.mu_error_std,
        flips: solve.flips,
        iterations: solve.iterations_used,
        converged: solve.converged,
        clamp_events: solve.clamp_events,
        energy_initial: solve.energy_trace[0],
        energy_final: *solve.energy_trace.last().unwrap(),
        angle_distortion_mean: summary.mean_abs,
        angle_distortion_std: summary.std_abs,
        angle_undefined: summary.undefined,
        fixed_module: config.fixed_module,
        module: state.module.to_json(),
        warnings: solve.warnings.iter().map(ToString::to_string).collect(),
    };
    Ok(RunOutput { mesh, state, solve, report, angle_distortion: distortion, mu_error })
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    ensure_parent(path)?;
    fs::write(path, text)?;
    Ok(())
}

fn report_csv(r: &RunReport) -> String {
    format!(
        "mesh,faces,vertices,time_seconds,mu_error_mean,mu_error_std,flips,iterations,converged,\
         angle_distortion_mean,angle_distortion_std\n{},{},{},{},{},{},{},{},{},{},{}\n",
        r.mesh,
        r.faces,
        r.vertices,
        r.time_seconds,
        r.mu_error_mean,
        r.mu_error_std,
        r.flips,
        r.iterations,
        r.converged,
        r.angle_distortion_mean,
        r.angle_distortion_std
    )
}

/// Runs a parameterization and writes all artifacts under the output prefix.
pub fn run_parameterize(config: &RunConfig) -> Result<RunOutput> {
    let mesh = input_mesh(&config.input_path)?;
    let name = config.input_path.file_name().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    let out = parameterize(mesh, &name, &config.mu_source, &config.solver)?;
    let p = |suffix: &str| artifact_path(&config.output_prefix, suffix);

    let obj = p(".obj");
    ensure_parent(&obj)?;
    save_obj(&obj, &out.mesh, Some(&out.state.map))?;
    write_text(&p("_module.json"), &serde_json::to_string_pretty(&out.state.module.to_json()).unwrap())?;

    let mut trace = String::from("iter,energy,mu_diff\n");
    for (i, e) in out.solve.energy_trace.iter().enumerate() {
        let d = if i == 0 { String::new() } else { out.solve.mu_diff_trace[i - 1].to_string() };
        trace.push_str(&format!("{i},{e},{d}\n"));
    }
    write_text(&p("_energy.csv"), &trace)?;
    write_text(&p("_hist_angle.csv"), &Histogram::uniform("angle_distortion", &out.angle_distortion, DEFAULT_BINS).to_csv())?;
    write_text(&p("_hist_mu_error.csv"), &Histogram::uniform("beltrami_error", &out.mu_error, DEFAULT_BINS).to_csv())?;

    if config.report_formats.contains(&ReportFormat::Json) {
        write_text(&p("_report.json"), &out.report.to_json())?;
    }
    if config.report_formats.contains(&ReportFormat::Csv) {
        write_text(&p("_report.csv"), &report_csv(&out.report))?;
    }
    if config.dump_matrices {
        dump_matrices(config, &out)?;
    }
    Ok(out)
}

fn dump_matrices(config: &RunConfig, out: &RunOutput) -> Result<()> {
    let flat = initial_flatten(&out.mesh)?;
    let mu = load_target(&config.mu_source, out.mesh.face_count())?;
    let target = transfer_target(&mu, &flat.mu, &flat.derivatives)?;
    let a = assemble_weighted_operator(&flat.mesh, &target)?;
    let k = assemble_constraints(&flat.mesh, &out.state.map, &out.state.module, !config.solver.fixed_module)?;
    for (suffix, m) in [("_A.mtx", &a.matrix), ("_K.mtx", &k.matrix)] {
        let path = artifact_path(&config.output_prefix, suffix);
        ensure_parent(&path)?;
        let mut w = BufWriter::new(File::create(path)?);
        write_matrix_market(&mut w, m)?;
        w.flush()?;
    }
    Ok(())
}

/// Flattens a surface mesh and writes the planar mesh and the flattening's
/// Beltrami coefficient.
pub fn run_flatten(input: &Path, prefix: &Path) -> Result<()> {
    let mesh = input_mesh(input)?;
    let flat = initial_flatten(&mesh)?;
    let obj = artifact_path(prefix, ".obj");
    ensure_parent(&obj)?;
    save_obj(&obj, &flat.mesh, None)?;
    let mut w = BufWriter::new(File::create(artifact_path(prefix, "_mu.csv"))?);
    flat.mu.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn read_report(path: &Path) -> Result<RunReport> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("missing run artifact {}: {e}", path.display())))?;
    RunReport::from_json(&text)
}

fn run_label(path: &Path) -> String {
    let stem = path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    stem.strip_suffix("_report").unwrap_or(&stem).to_string()
}

/// Side-by-side angle distortion and Beltrami error of two runs on the same
/// mesh, as CSV.
pub fn run_compare(report_a: &Path, report_b: &Path) -> Result<String> {
    let a = read_report(report_a)?;
    let b = read_report(report_b)?;
    if (a.faces, a.vertices) != (b.faces, b.vertices) {
        return Err(Error::Mismatch(format!(
            "runs are on different meshes ({} faces / {} vertices vs {} / {})",
            a.faces, a.vertices, b.faces, b.vertices
        )));
    }
    let mut s = String::from("run,angle_distortion_mean,angle_distortion_std,mu_error_mean,mu_error_std\n");
    for (path, r) in [(report_a, &a), (report_b, &b)] {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            run_label(path),
            r.angle_distortion_mean,
            r.angle_distortion_std,
            r.mu_error_mean,
            r.mu_error_std
        ));
    }
    Ok(s)
}

/// Fixed-width table of the headline fields of several reports.
pub fn run_report(paths: &[PathBuf]) -> Result<String> {
    let mut s = format!(
        "{:<24} {:>8} {:>8} {:>9} {:>10} {:>10} {:>6}\n",
        "mesh", "faces", "vertices", "time(s)", "mean(mu)", "std(mu)", "flips"
    );
    for p in paths {
        let r = read_report(p)?;
        s.push_str(&format!(
            "{:<24} {:>8} {:>8} {:>9.3} {:>10.4} {:>10.4} {:>6}\n",
            r.mesh, r.faces, r.vertices, r.time_seconds, r.mu_error_mean, r.mu_error_std, r.flips
        ));
    }
    Ok(s)
}

#[derive(Serialize)]
struct ErrorJson<'a> {
    kind: &'a str,
    message: String,
}

/// Machine-readable error description.
pub fn error_json(err: &Error) -> String {
    serde_json::to_string(&ErrorJson { kind: err.kind(), message: err.to_string() }).unwrap()
}
