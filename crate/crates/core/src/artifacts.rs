//! Run directories and the data files written into them.
//!
//! ```text
//! <dir>/config.txt            canonical copy of the run configuration
//! <dir>/mesh.vtk              mesh with the finest solution as point data
//! <dir>/fields_eps_<e>.csv    x,y,sigma,theta,rho,q,Wminus,Wplus
//! <dir>/kernels/<kind>.bin    CAVK1 kernel tables
//! <dir>/report.json           RunReport
//! <dir>/plotdata/*.csv        sweep, cauchy and convergence histories
//! ```
//!
//! Numbers in CSV files carry 17 significant digits.

use std::fs;
use std::path::{Path, PathBuf};

use crate::chart::ChartRow;
use crate::config::RunConfig;
use crate::diagnostics::{EpsRecord, RunReport};
use crate::entropy::ConvexityReport;
use crate::error::{CavError, Result};
use crate::kernel::{container, KernelTransform};
use crate::mesh::Mesh;
use crate::solver::{Solution, Solver};

pub const CONFIG_FILE: &str = "config.txt";
pub const REPORT_FILE: &str = "report.json";
pub const MESH_FILE: &str = "mesh.vtk";

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// RFC-4180 CSV with a header row.
pub fn csv_string<I, R>(header: &[&str], rows: I) -> Result<String>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    let fmt = |e: csv::Error| CavError::Format(e.to_string());
    w.write_record(header).map_err(fmt)?;
    for r in rows {
        w.write_record(r.into_iter().collect::<Vec<_>>()).map_err(fmt)?;
    }
    let bytes = w.into_inner().map_err(|e| CavError::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CavError::Format(e.to_string()))
}

fn floats(v: &[f64]) -> Vec<String> {
    v.iter().map(|&x| fmt_f64(x)).collect()
}

pub fn chart_csv(rows: &[ChartRow]) -> Result<String> {
    csv_string(
        &["nu", "rho", "q", "sigma", "k", "kprime", "kdoubleprime", "M"],
        rows.iter().map(|r| floats(&[r.nu, r.rho, r.q, r.sigma, r.k, r.kprime, r.kdoubleprime, r.mach])),
    )
}

pub fn convexity_csv(rep: &ConvexityReport) -> Result<String> {
    csv_string(&["nu", "theta", "margin1", "margin2"], rep.rows.iter().map(|r| floats(&r[..])))
}

pub fn fields_csv(mesh: &Mesh, s: &Solution) -> Result<String> {
    csv_string(
        &["x", "y", "sigma", "theta", "rho", "q", "Wminus", "Wplus"],
        mesh.vertices.iter().enumerate().map(|(i, p)| {
            floats(&[p[0], p[1], s.sigma[i], s.theta[i], s.rho[i], s.q[i], s.w_minus[i], s.w_plus[i]])
        }),
    )
}

pub fn fields_vtk(mesh: &Mesh, s: Option<&Solution>) -> String {
    match s {
        Some(s) => mesh.to_vtk(
            &[
                ("sigma", &s.sigma),
                ("theta", &s.theta),
                ("rho", &s.rho),
                ("q", &s.q),
                ("Wminus", &s.w_minus),
                ("Wplus", &s.w_plus),
            ],
            &[],
        ),
        None => mesh.to_vtk(&[], &[]),
    }
}

/// Shortest round-trip decimal, used in file names.
pub fn eps_tag(eps: f64) -> String {
    format!("{eps:?}")
}

#[derive(Debug, Clone)]
pub struct ArtifactStore {
    pub dir: PathBuf,
}

impl ArtifactStore {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir.join("kernels"))?;
        fs::create_dir_all(dir.join("plotdata"))?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    /// Opens an existing run directory.
    pub fn open(dir: &Path) -> Result<Self> {
        if !dir.join(CONFIG_FILE).is_file() {
            return Err(CavError::Config(format!("{} has no {CONFIG_FILE}", dir.display())));
        }
        Ok(Self { dir: dir.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn put(&self, name: &str, body: &str) -> Result<PathBuf> {
        let p = self.path(name);
        fs::write(&p, body)?;
        Ok(p)
    }

    pub fn write_config(&self, cfg: &RunConfig) -> Result<PathBuf> {
        self.put(CONFIG_FILE, &cfg.to_text())
    }

    pub fn config(&self) -> Result<RunConfig> {
        RunConfig::load(&self.path(CONFIG_FILE))
    }

    pub fn write_mesh(&self, mesh: &Mesh, s: Option<&Solution>) -> Result<PathBuf> {
        self.put(MESH_FILE, &fields_vtk(mesh, s))
    }

    pub fn write_fields(&self, mesh: &Mesh, s: &Solution) -> Result<PathBuf> {
        self.put(&format!("fields_eps_{}.csv", eps_tag(s.epsilon)), &fields_csv(mesh, s)?)
    }

    pub fn write_kernel(&self, kt: &KernelTransform) -> Result<PathBuf> {
        let p = self.path(&format!("kernels/{}.bin", kt.kind.name()));
        container::write_table(&p, kt)?;
        Ok(p)
    }

    pub fn write_report(&self, rep: &RunReport) -> Result<PathBuf> {
        self.put(REPORT_FILE, &rep.to_json())
    }

    pub fn report(&self) -> Result<RunReport> {
        let text = fs::read_to_string(self.path(REPORT_FILE))?;
        serde_json::from_str(&text).map_err(|e| CavError::Format(format!("{REPORT_FILE}: {e}")))
    }

    /// Sweep table, Cauchy differences and per-epsilon iteration histories.
    pub fn write_plotdata(&self, rep: &RunReport, sols: &[Solution]) -> Result<Vec<PathBuf>> {
        let mut out = Vec::new();
        let special_max = |r: &EpsRecord| r.entropy.first().map_or(0.0, |p| p.max);
        let first_dec = |r: &EpsRecord| r.decomposition.first().map_or((0.0, 0.0), |d| (d.d1, d.d2_l1));
        let sweep = csv_string(
            &[
                "epsilon",
                "iterations",
                "min_q",
                "max_abs_theta",
                "dissipation",
                "mass_residual",
                "curl_residual",
                "entropy_defect_special",
                "d1",
                "d2_l1",
                "obstacle_trace_min",
            ],
            rep.records.iter().map(|r| {
                let (d1, d2) = first_dec(r);
                let mut row = vec![fmt_f64(r.epsilon), r.iterations.to_string()];
                row.extend(floats(&[
                    r.min_q,
                    r.max_abs_theta,
                    r.dissipation,
                    r.mass_residual,
                    r.curl_residual,
                    special_max(r),
                    d1,
                    d2,
                    r.obstacle_trace_min,
                ]));
                row
            }),
        )?;
        out.push(self.put("plotdata/sweep.csv", &sweep)?);
        let c = &rep.cauchy;
        let cauchy = csv_string(
            &["eps_coarse", "eps_fine", "difference"],
            c.differences.iter().enumerate().map(|(i, &d)| floats(&[c.epsilons[i], c.epsilons[i + 1], d])),
        )?;
        out.push(self.put("plotdata/cauchy.csv", &cauchy)?);
        for s in sols {
            let hist = csv_string(
                &["iteration", "update", "residual", "omega"],
                s.history.iter().map(|h| {
                    let mut row = vec![h.iter.to_string()];
                    row.extend(floats(&[h.update, h.residual, h.omega]));
                    row
                }),
            )?;
            out.push(self.put(&format!("plotdata/convergence_eps_{}.csv", eps_tag(s.epsilon)), &hist)?);
        }
        Ok(out)
    }
}

pub struct RunOutcome {
    pub mesh: Mesh,
    pub solutions: Vec<Solution>,
    pub report: RunReport,
}

/// Meshes, sweeps and evaluates the diagnostics for `cfg`; with a store,
/// writes every artifact including the kernels named in `kernel.kinds`.
pub fn run_sweep(cfg: &RunConfig, store: Option<&ArtifactStore>) -> Result<RunOutcome> {
    cfg.validate()?;
    if let Some(st) = store {
        st.write_config(cfg)?;
    }
    let mesh = Mesh::build(&cfg.domain)?;
    let solutions = Solver::new(&mesh, &cfg.solver)?.sweep()?;
    let report = RunReport::build(&mesh, &cfg.solver, &solutions, &[])?;
    if let Some(st) = store {
        st.write_mesh(&mesh, solutions.last())?;
        for s in &solutions {
            st.write_fields(&mesh, s)?;
        }
        for &kind in &cfg.kernel.kinds {
            st.write_kernel(&KernelTransform::build(cfg.kernel.nu_star, kind, &cfg.kernel.grid)?)?;
        }
        st.write_report(&report)?;
        st.write_plotdata(&report, &solutions)?;
    }
    Ok(RunOutcome { mesh, solutions, report })
}
