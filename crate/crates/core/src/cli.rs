//! Batch front-end: job configs, runners, and independent verification.
//!
//! One job per invocation: `beltrami <command> --config job.json [--out dir]
//! [--seed u64]`. All diagnostics go to standard error as JSON lines; exit
//! code 0 means converged, 1 a configuration error, 2 solver nonconvergence
//! or a failed verification.

use crate::anisotropic::{
    solve_poisson_semilinear, weak_residual, MatrixField, QPresetKind, WeakTestSet,
};
use crate::beltrami::{
    principal_map, solve_inhomogeneous, BeltramiCoefficient, LinearSolveConfig, SolveReport,
};
use crate::builtins::{cinf_cutoff, radial_bump, random_smooth_field};
use crate::error::{Error, Result};
use crate::field::{ComplexField, RealField};
use crate::grid::Grid;
use crate::io;
use crate::semilinear::{solve_semilinear, ContinuationConfig, Nonlinearity};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    SolveBeltrami,
    SolveSemilinear,
    SolvePoisson,
    Map,
    Verify,
    Export,
}

impl Command {
    pub fn parse(s: &str) -> Result<Command> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::Config(format!("unknown command \"{}\"", s)))
    }

    fn name(&self) -> &'static str {
        match self {
            Command::SolveBeltrami => "solve-beltrami",
            Command::SolveSemilinear => "solve-semilinear",
            Command::SolvePoisson => "solve-poisson",
            Command::Map => "map",
            Command::Verify => "verify",
            Command::Export => "export",
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    #[serde(rename = "L")]
    pub l: f64,
}

/// A field input: either a BFLD file or a named builtin generator.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amp: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outer: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a11: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a12: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a22: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outer: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuationSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
}

/// One reproducible job: a structured record of every input.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JobConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    pub grid: GridSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<FieldSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<FieldSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<FieldSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<MatrixSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<QSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear: Option<LinearSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub continuation: Option<ContinuationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<PathBuf>,
}

impl JobConfig {
    pub fn load(path: &Path) -> Result<JobConfig> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid.n, self.grid.l)
    }

    fn linear_config(&self) -> Result<LinearSolveConfig> {
        let mut cfg = LinearSolveConfig::default();
        if let Some(s) = &self.linear {
            if let Some(t) = s.tol {
                cfg.tol = t;
            }
            if let Some(m) = s.max_iter {
                cfg.max_iter = m;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn continuation_config(&self) -> Result<ContinuationConfig> {
        let mut cfg = ContinuationConfig::default();
        if let Some(s) = &self.continuation {
            if let Some(v) = s.tau_steps {
                cfg.tau_steps = v;
            }
            if let Some(v) = s.theta {
                cfg.theta = v;
            }
            if let Some(v) = s.inner_tol {
                cfg.inner_tol = v;
            }
            if let Some(v) = s.inner_max_iter {
                cfg.inner_max_iter = v;
            }
            if let Some(v) = s.tol {
                cfg.linear.tol = v;
            }
            if let Some(v) = s.max_iter {
                cfg.linear.max_iter = v;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn diag(value: serde_json::Value) {
    eprintln!("{}", value);
}

fn require<'a, T>(field: &'a Option<T>, name: &str) -> Result<&'a T> {
    field
        .as_ref()
        .ok_or_else(|| Error::Config(format!("job needs a \"{}\" input", name)))
}

fn build_complex(spec: &FieldSpec, grid: Grid, job_seed: u64) -> Result<ComplexField> {
    if let Some(p) = &spec.path {
        let mut f = match io::probe_dtype(p)? {
            0 => io::read_real(p)?.to_complex(),
            _ => io::read_complex(p)?,
        };
        f.grid.same_as(&grid)?;
        f.support_radius = Some(grid.guard_radius());
        return Ok(f);
    }
    let guard = grid.guard_radius();
    match spec.builtin.as_deref() {
        Some("zero") | None => Ok(ComplexField::zeros(grid)),
        Some("radial_bump") => {
            let amp = spec.amp.unwrap_or(1.0);
            let radius = spec.radius.unwrap_or(0.5 * guard);
            if radius <= 0.0 || radius > guard {
                return Err(Error::Config("bump radius must lie in (0, L/2]".into()));
            }
            Ok(radial_bump(grid, amp, radius).to_complex())
        }
        Some("disk") => {
            let k = spec.k.unwrap_or(spec.amp.unwrap_or(1.0));
            let phase = spec.phase.unwrap_or(0.0);
            let inner = spec.inner.unwrap_or(0.5 * guard);
            let outer = spec.outer.unwrap_or(0.9 * guard);
            if !(0.0 < inner && inner < outer && outer <= guard) {
                return Err(Error::Config("disk needs 0 < inner < outer <= L/2".into()));
            }
            let c = Complex64::from_polar(k, phase);
            let cut = cinf_cutoff(grid, inner, outer);
            let mut f = cut.to_complex();
            for v in f.data.iter_mut() {
                *v *= c;
            }
            Ok(f)
        }
        Some("random") => {
            let width = spec.width.unwrap_or(3.0);
            let mut f = random_smooth_field(grid, spec.seed.unwrap_or(job_seed), width);
            if let Some(amp) = spec.amp {
                let sup = f.norm_p(f64::INFINITY).max(f64::MIN_POSITIVE);
                f = f.scale(Complex64::new(amp / sup, 0.0));
                f.support_radius = Some(guard);
            }
            Ok(f)
        }
        Some(other) => Err(Error::Config(format!("unknown builtin \"{}\"", other))),
    }
}

fn build_real(spec: &FieldSpec, grid: Grid, job_seed: u64) -> Result<RealField> {
    if let Some(p) = &spec.path {
        let mut f = io::read_real(p)?;
        f.grid.same_as(&grid)?;
        f.support_radius = Some(grid.guard_radius());
        return Ok(f);
    }
    let f = build_complex(spec, grid, job_seed)?;
    let support = f.support_radius;
    let mut out = f.re();
    out.support_radius = support;
    Ok(out)
}

fn build_mu(spec: Option<&FieldSpec>, grid: Grid, job_seed: u64) -> Result<BeltramiCoefficient> {
    match spec {
        None => Ok(BeltramiCoefficient::zero(grid)),
        Some(s) => BeltramiCoefficient::new(build_complex(s, grid, job_seed)?),
    }
}

/// Constant matrices are rendered by blending their µ to zero outside the
/// core with a C-infinity cutoff, which keeps det A = 1 everywhere and the
/// coefficient compactly anisotropic.
fn build_matrix(spec: Option<&MatrixSpec>, grid: Grid) -> Result<MatrixField> {
    let spec = match spec {
        None => return Ok(MatrixField::identity(grid)),
        Some(s) => s,
    };
    if let Some(p) = &spec.manifest {
        let a = io::read_matrix(p)?;
        a.grid().same_as(&grid)?;
        return Ok(a);
    }
    match spec.preset.as_deref() {
        Some("identity") | None => Ok(MatrixField::identity(grid)),
        Some("constant") => {
            let a11 = spec.a11.unwrap_or(1.0);
            let a12 = spec.a12.unwrap_or(0.0);
            let a22 = spec.a22.unwrap_or_else(|| {
                if a11 == 0.0 {
                    1.0
                } else {
                    (1.0 + a12 * a12) / a11
                }
            });
            let det = a11 * a22 - a12 * a12;
            if (det - 1.0).abs() > 1e-9 {
                return Err(Error::Ellipticity(format!(
                    "constant preset must have det A = 1, got {}",
                    det
                )));
            }
            let denom = 2.0 + a11 + a22;
            if denom <= 0.0 {
                return Err(Error::Ellipticity("det(I + A) must be positive".into()));
            }
            let mu0 = Complex64::new(a22 - a11, -2.0 * a12) / denom;
            let guard = grid.guard_radius();
            let inner = spec.inner.unwrap_or(0.6 * guard);
            let outer = spec.outer.unwrap_or(0.9 * guard);
            if !(0.0 < inner && inner < outer && outer <= guard) {
                return Err(Error::Config("matrix blend needs 0 < inner < outer <= L/2".into()));
            }
            let cut = cinf_cutoff(grid, inner, outer);
            let mut f = cut.to_complex();
            for v in f.data.iter_mut() {
                *v *= mu0;
            }
            let mu = BeltramiCoefficient::new(f)?;
            Ok(crate::anisotropic::a_from_mu(&mu))
        }
        Some(other) => Err(Error::Config(format!("unknown matrix preset \"{}\"", other))),
    }
}

fn build_q(spec: Option<&QSpec>) -> Result<Nonlinearity> {
    let spec = match spec {
        None => return Ok(Nonlinearity::constant(Complex64::new(1.0, 0.0))),
        Some(s) => s,
    };
    match spec.kind.as_str() {
        "constant" => Ok(Nonlinearity::constant(Complex64::new(
            spec.value.unwrap_or(1.0),
            0.0,
        ))),
        "power" => crate::anisotropic::preset_q(QPresetKind::Power, spec.lambda),
        "signed_power" => crate::anisotropic::preset_q(QPresetKind::SignedPower, spec.lambda),
        "neg_exp" => crate::anisotropic::preset_q(QPresetKind::NegExp, None),
        other => Err(Error::Config(format!("unknown nonlinearity \"{}\"", other))),
    }
}

#[derive(Serialize)]
struct JobReport<'a> {
    command: &'static str,
    n: usize,
    #[serde(rename = "L")]
    l: f64,
    seed: u64,
    solve: &'a SolveReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    weak_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    weak_test_seed: Option<u64>,
}

fn write_report(dir: &Path, report: &JobReport) -> Result<()> {
    std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(report)?)?;
    let mut summary = String::new();
    summary.push_str(&format!("command: {}\n", report.command));
    summary.push_str(&format!("grid: n={} L={}\n", report.n, report.l));
    summary.push_str(&format!("seed: {}\n", report.seed));
    summary.push_str(&format!("iterations: {}\n", report.solve.iterations));
    summary.push_str(&format!("final residual: {:e}\n", report.solve.final_residual));
    summary.push_str(&format!("converged: {}\n", report.solve.converged));
    if let Some(w) = report.weak_residual {
        summary.push_str(&format!("weak residual: {:e}\n", w));
    }
    std::fs::write(dir.join("summary.txt"), summary)?;
    Ok(())
}

fn check_converged(report: &SolveReport) -> Result<()> {
    if report.converged {
        Ok(())
    } else {
        Err(Error::Diverged(format!(
            "solver stopped at residual {:e} without reaching tolerance",
            report.final_residual
        )))
    }
}

/// Run one job. `out` overrides the config's output directory, `seed` the
/// config's seed.
pub fn run(
    command: Command,
    config: &JobConfig,
    out: Option<&Path>,
    seed: Option<u64>,
) -> Result<()> {
    let grid = config.grid()?;
    let job_seed = seed.or(config.seed).unwrap_or(0);
    let out_dir = out
        .map(Path::to_path_buf)
        .or_else(|| config.outputs.clone())
        .ok_or_else(|| Error::Config("no output directory (set \"outputs\" or --out)".into()))?;
    if command != Command::Verify && command != Command::Export {
        std::fs::create_dir_all(&out_dir)?;
    }
    diag(serde_json::json!({
        "event": "start", "command": command.name(), "n": grid.n(),
        "L": grid.half_extent(), "seed": job_seed,
    }));

    match command {
        Command::SolveBeltrami => {
            let mu = build_mu(config.mu.as_ref(), grid, job_seed)?;
            let sigma = build_complex(require(&config.sigma, "sigma")?, grid, job_seed)?;
            let cfg = config.linear_config()?;
            let (omega, report) = solve_inhomogeneous(&mu, &sigma, &cfg)?;
            io::write_complex(&out_dir.join("omega.bfld"), &omega)?;
            io::write_complex(&out_dir.join("mu.bfld"), mu.field())?;
            io::write_complex(&out_dir.join("sigma.bfld"), &sigma)?;
            write_report(
                &out_dir,
                &JobReport {
                    command: command.name(),
                    n: grid.n(),
                    l: grid.half_extent(),
                    seed: job_seed,
                    solve: &report,
                    weak_residual: None,
                    weak_test_seed: None,
                },
            )?;
            diag(serde_json::json!({
                "event": "done", "iterations": report.iterations,
                "final_residual": report.final_residual, "converged": report.converged,
            }));
            check_converged(&report)
        }
        Command::SolveSemilinear => {
            let mu = build_mu(config.mu.as_ref(), grid, job_seed)?;
            let sigma = build_complex(require(&config.sigma, "sigma")?, grid, job_seed)?;
            let q = build_q(config.q.as_ref())?;
            let cfg = config.continuation_config()?;
            let (omega, report) = solve_semilinear(&mu, &sigma, &q, &cfg)?;
            io::write_complex(&out_dir.join("omega.bfld"), &omega)?;
            io::write_complex(&out_dir.join("mu.bfld"), mu.field())?;
            io::write_complex(&out_dir.join("sigma.bfld"), &sigma)?;
            write_report(
                &out_dir,
                &JobReport {
                    command: command.name(),
                    n: grid.n(),
                    l: grid.half_extent(),
                    seed: job_seed,
                    solve: &report,
                    weak_residual: None,
                    weak_test_seed: None,
                },
            )?;
            diag(serde_json::json!({
                "event": "done", "iterations": report.iterations,
                "final_residual": report.final_residual, "converged": report.converged,
            }));
            check_converged(&report)
        }
        Command::SolvePoisson => {
            let a = build_matrix(config.matrix.as_ref(), grid)?;
            let g = build_real(require(&config.source, "source")?, grid, job_seed)?;
            let q = build_q(config.q.as_ref())?;
            let cfg = config.continuation_config()?;
            let (u, report, artifacts) = solve_poisson_semilinear(&a, &g, &q, &cfg)?;
            let tests = WeakTestSet::generate(grid, 20, job_seed);
            let wres = weak_residual(&u, &a, &g, &q, &tests);
            io::write_real(&out_dir.join("u.bfld"), &u)?;
            io::write_complex(&out_dir.join("omega.bfld"), &artifacts.omega)?;
            io::write_real(&out_dir.join("source.bfld"), &g)?;
            io::write_matrix(&out_dir.join("matrix.json"), &a)?;
            write_report(
                &out_dir,
                &JobReport {
                    command: command.name(),
                    n: grid.n(),
                    l: grid.half_extent(),
                    seed: job_seed,
                    solve: &report,
                    weak_residual: Some(wres),
                    weak_test_seed: Some(tests.seed()),
                },
            )?;
            diag(serde_json::json!({
                "event": "done", "iterations": report.iterations,
                "final_residual": report.final_residual, "converged": report.converged,
                "weak_residual": wres,
            }));
            check_converged(&report)
        }
        Command::Map => {
            let mu = build_mu(config.mu.as_ref(), grid, job_seed)?;
            let cfg = config.linear_config()?;
            let map = principal_map(&mu, &cfg)?;
            io::write_complex(&out_dir.join("forward.bfld"), map.forward())?;
            io::write_real(&out_dir.join("jacobian.bfld"), map.jacobian())?;
            io::write_complex(&out_dir.join("mu.bfld"), mu.field())?;
            let report = SolveReport::trivial();
            write_report(
                &out_dir,
                &JobReport {
                    command: command.name(),
                    n: grid.n(),
                    l: grid.half_extent(),
                    seed: job_seed,
                    solve: &report,
                    weak_residual: None,
                    weak_test_seed: None,
                },
            )?;
            diag(serde_json::json!({"event": "done"}));
            Ok(())
        }
        Command::Verify => verify(config, &out_dir, job_seed),
        Command::Export => export(&out_dir),
    }
}

fn export(dir: &Path) -> Result<()> {
    let mut exported = 0usize;
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("bfld"))
        .collect();
    entries.sort();
    for path in entries {
        let (grid, values) = match io::probe_dtype(&path)? {
            0 => {
                let f = io::read_real(&path)?;
                (f.grid, f.data.iter().map(|v| Complex64::new(*v, 0.0)).collect::<Vec<_>>())
            }
            _ => {
                let f = io::read_complex(&path)?;
                (f.grid, f.data)
            }
        };
        let out = path.with_extension("csv");
        io::export_csv(&out, grid, &values)?;
        diag(serde_json::json!({"event": "exported", "file": out.display().to_string()}));
        exported += 1;
    }
    if exported == 0 {
        return Err(Error::Config(format!(
            "no .bfld files to export in {}",
            dir.display()
        )));
    }
    Ok(())
}

// ---- independent verification -------------------------------------------
//
// verify recomputes residuals from the on-disk fields with 4th-order finite
// differences, never trusting (or reading) the solver's residual history.
// Finite differences act on node totals directly, so they are immune to the
// periodic-vs-polynomial-tail split the spectral pipeline relies on; the
// two-band margin at the window edge avoids wraparound.

const FD_MARGIN: usize = 3;
const FD_TOL: f64 = 1e-3;

fn fd_axis(vals: &[Complex64], grid: Grid, along_x: bool) -> Vec<Complex64> {
    let n = grid.n();
    let h = grid.dx();
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    for k in FD_MARGIN..n - FD_MARGIN {
        for j in FD_MARGIN..n - FD_MARGIN {
            let at = |d: i64| {
                let (jj, kk) = if along_x {
                    ((j as i64 + d) as usize, k)
                } else {
                    (j, (k as i64 + d) as usize)
                };
                vals[kk * n + jj]
            };
            out[k * n + j] = (45.0 * (at(1) - at(-1)) - 9.0 * (at(2) - at(-2))
                + (at(3) - at(-3)))
                / (60.0 * h);
        }
    }
    out
}

fn fd_wirtinger(vals: &[Complex64], grid: Grid) -> (Vec<Complex64>, Vec<Complex64>) {
    let dx = fd_axis(vals, grid, true);
    let dy = fd_axis(vals, grid, false);
    let i = Complex64::new(0.0, 1.0);
    let dz = dx
        .iter()
        .zip(&dy)
        .map(|(a, b)| 0.5 * (a - i * b))
        .collect();
    let dzbar = dx
        .iter()
        .zip(&dy)
        .map(|(a, b)| 0.5 * (a + i * b))
        .collect();
    (dz, dzbar)
}

/// Relative L² over interior nodes of (ω_z̄ − µ ω_z − rhs).
fn fd_beltrami_residual(
    omega: &ComplexField,
    mu: &BeltramiCoefficient,
    rhs: &[Complex64],
) -> f64 {
    let grid = omega.grid;
    let n = grid.n();
    let vals = omega.total();
    let (dz, dzbar) = fd_wirtinger(&vals, grid);
    let mu_t = mu.field().total();
    let mut res_sq = 0.0;
    let mut scale_sq = 0.0;
    for k in FD_MARGIN..n - FD_MARGIN {
        for j in FD_MARGIN..n - FD_MARGIN {
            let i = k * n + j;
            let r = dzbar[i] - mu_t[i] * dz[i] - rhs[i];
            res_sq += r.norm_sqr();
            scale_sq += rhs[i].norm_sqr() + dz[i].norm_sqr();
        }
    }
    (res_sq / scale_sq.max(f64::MIN_POSITIVE)).sqrt()
}

struct Check {
    name: &'static str,
    value: f64,
    tol: f64,
}

impl Check {
    fn passed(&self) -> bool {
        self.value <= self.tol
    }
}

fn verify(config: &JobConfig, dir: &Path, job_seed: u64) -> Result<()> {
    if !dir.is_dir() {
        return Err(Error::Config(format!(
            "output directory {} does not exist",
            dir.display()
        )));
    }
    let grid = config.grid()?;
    let command = config
        .command
        .ok_or_else(|| Error::Config("verify needs \"command\" in the config".into()))?;
    let mut checks = Vec::new();
    match command {
        Command::SolveBeltrami | Command::SolveSemilinear => {
            let omega = io::read_complex(&dir.join("omega.bfld"))?;
            omega.grid.same_as(&grid)?;
            let mu = build_mu(config.mu.as_ref(), grid, job_seed)?;
            let sigma = build_complex(require(&config.sigma, "sigma")?, grid, job_seed)?;
            let rhs: Vec<Complex64> = if command == Command::SolveSemilinear {
                let q = build_q(config.q.as_ref())?;
                omega
                    .total()
                    .iter()
                    .zip(sigma.total())
                    .map(|(w, s)| s * q.eval(*w))
                    .collect()
            } else {
                sigma.total()
            };
            checks.push(Check {
                name: "beltrami-residual",
                value: fd_beltrami_residual(&omega, &mu, &rhs),
                tol: FD_TOL,
            });
        }
        Command::SolvePoisson => {
            let u = io::read_real(&dir.join("u.bfld"))?;
            u.grid.same_as(&grid)?;
            let a = io::read_matrix(&dir.join("matrix.json"))?;
            a.grid().same_as(&grid)?;
            let g = build_real(require(&config.source, "source")?, grid, job_seed)?;
            let q = build_q(config.q.as_ref())?;
            checks.push(Check {
                name: "poisson-residual",
                value: fd_poisson_residual(&u, &a, &g, &q),
                tol: 5.0 * FD_TOL,
            });
        }
        Command::Map => {
            let forward = io::read_complex(&dir.join("forward.bfld"))?;
            forward.grid.same_as(&grid)?;
            let mu = build_mu(config.mu.as_ref(), grid, job_seed)?;
            // f_zbar = µ f_z: the principal map solves the homogeneous equation
            let rhs = vec![Complex64::new(0.0, 0.0); grid.len()];
            checks.push(Check {
                name: "map-residual",
                value: fd_beltrami_residual(&forward, &mu, &rhs),
                tol: FD_TOL,
            });
        }
        Command::Verify | Command::Export => {
            return Err(Error::Config(
                "config \"command\" must name the solve that produced the artifacts".into(),
            ));
        }
    }
    let mut all_pass = true;
    for c in &checks {
        let status = if c.passed() { "pass" } else { "fail" };
        all_pass &= c.passed();
        println!("check {}: {} ({:e} vs tol {:e})", c.name, status, c.value, c.tol);
        diag(serde_json::json!({
            "event": "check", "name": c.name, "value": c.value,
            "tol": c.tol, "passed": c.passed(),
        }));
    }
    if all_pass {
        Ok(())
    } else {
        Err(Error::Diverged("verification failed".into()))
    }
}

/// Relative L² of div(A∇u) − G·Q(u) over interior nodes.
fn fd_poisson_residual(u: &RealField, a: &MatrixField, g: &RealField, q: &Nonlinearity) -> f64 {
    let grid = u.grid;
    let n = grid.n();
    let vals: Vec<Complex64> = u.total().iter().map(|v| Complex64::new(*v, 0.0)).collect();
    let ux = fd_axis(&vals, grid, true);
    let uy = fd_axis(&vals, grid, false);
    let mut px = vec![Complex64::new(0.0, 0.0); n * n];
    let mut py = vec![Complex64::new(0.0, 0.0); n * n];
    for k in 0..n {
        for j in 0..n {
            let i = grid.index(j, k);
            let (a11, a12, a22) = a.value(j, k);
            px[i] = a11 * ux[i] + a12 * uy[i];
            py[i] = a12 * ux[i] + a22 * uy[i];
        }
    }
    let div = {
        let dxx = fd_axis(&px, grid, true);
        let dyy = fd_axis(&py, grid, false);
        dxx.iter().zip(&dyy).map(|(a, b)| a + b).collect::<Vec<_>>()
    };
    let g_t = g.total();
    let u_t = u.total();
    let margin = 2 * FD_MARGIN; // chained stencils double the edge band
    let mut res_sq = 0.0;
    let mut scale_sq = 0.0;
    for k in margin..n - margin {
        for j in margin..n - margin {
            let i = grid.index(j, k);
            let rhs = g_t[i] * q.eval(Complex64::new(u_t[i], 0.0)).re;
            let r = div[i].re - rhs;
            res_sq += r * r;
            scale_sq += rhs * rhs + div[i].norm_sqr();
        }
    }
    (res_sq / scale_sq.max(f64::MIN_POSITIVE)).sqrt()
}

/// Map an error to the process exit code: 2 for solver/verification
/// failures, 1 for everything else (configuration, I/O, formats).
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Diverged(_)
        | Error::Blowup(_)
        | Error::NewtonStagnation
        | Error::NonpositiveJacobian(_)
        | Error::InversionCoverage { .. }
        | Error::NotConjugate(_) => 2,
        _ => 1,
    }
}

pub fn report_error(e: &Error) {
    diag(serde_json::json!({"event": "error", "message": e.to_string()}));
}
