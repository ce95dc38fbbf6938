//! Argument parsing and command dispatch.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use stmdm::experiments::{heuristic_steiner, run_suite, write_runs_csv, GeneratorSpec, SuiteSpec};
use stmdm::mdm::{
    coverage_check, energetic_points, horseshoe_circle, horseshoe_stadium, sample_compact, solve_mdm_finite,
    solve_mdm_numeric, stadium_competitor, verify_mdm, CompactSetDescriptor, MdmNetwork, NumericConfig,
};
use stmdm::mst::{mst, ratio_report, write_ratio_csv, RatioRow};
use stmdm::steiner::{solve_exact_with, verify_tree, SolveOptions};
use stmdm::topology::{count_full_topologies, DEFAULT_N_MAX};
use stmdm::{Error, Network64, Point64, Tolerance64, Tree64};

use crate::io::{
    coords, parse_instance, CoverageJson, EnergeticJson, InstanceError, InstanceFile, NetworkJson, Problem, ReportJson,
    ResultFile, SolverJson, TolJson, TreeJson, SCHEMA_VERSION,
};
use crate::render::{render_svg, RenderOptions};

/// Environment variable naming the default tolerance profile.
pub const TOL_ENV: &str = "STMDM_TOL";

#[derive(Debug, Parser)]
#[command(name = "stmdm", version, about = "Steiner trees and maximal distance minimizers")]
struct Cli {
    /// Tolerance profile: default, loose or strict. Falls back to $STMDM_TOL.
    #[arg(long, global = true)]
    tol: Option<String>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Steiner tree commands
    #[command(subcommand)]
    Steiner(SteinerCmd),
    /// Maximal distance minimizer commands
    #[command(subcommand)]
    Mdm(MdmCmd),
    /// Experiment suites
    #[command(subcommand)]
    Exp(ExpCmd),
    /// Draw a result file as SVG
    Render(RenderArgs),
}

#[derive(Debug, Subcommand)]
enum SteinerCmd {
    /// Shortest tree; exact up to --nmax terminals, heuristic beyond
    Solve(SolveArgs),
    /// Number of full topologies on n terminals
    Count {
        #[arg(long)]
        n: usize,
    },
    /// Steiner length over MST length
    Ratio {
        #[command(flatten)]
        io: SolveArgs,
        /// Append a CSV row here
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum MdmCmd {
    /// Finite solver for small point sets, penalty solver otherwise
    Solve {
        #[command(flatten)]
        io: SolveArgs,
        /// Samples of M used by the penalty solver
        #[arg(long)]
        density: Option<usize>,
    },
    /// Horseshoe for a circle or stadium instance
    Horseshoe(InOut),
    /// Non-horseshoe competitor for a stadium instance
    Competitor(InOut),
}

#[derive(Debug, Subcommand)]
enum ExpCmd {
    /// Run a suite description and write one CSV row per run
    Run {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Overrides the seed of every random study
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Debug, Args)]
struct InOut {
    #[arg(long = "in")]
    input: PathBuf,
    /// Defaults to stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    io: InOut,
    #[arg(long, default_value_t = DEFAULT_N_MAX)]
    nmax: usize,
}

#[derive(Debug, Args)]
struct RenderArgs {
    #[command(flatten)]
    io: InOut,
    /// Project 3-d results onto the xy-plane
    #[arg(long)]
    project: bool,
    #[arg(long, default_value_t = 640.0)]
    width: f64,
}

/// Why a command failed; each variant has its own exit code.
#[derive(Debug)]
pub enum Failure {
    Validation { kind: &'static str, field: String, message: String },
    NotConverged(String),
    Io { path: String, message: String },
    Solver(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation { .. } => 3,
            Self::NotConverged(_) => 4,
            Self::Io { .. } | Self::Solver(_) => 1,
        }
    }

    /// One JSON object on a single line.
    pub fn line(&self) -> String {
        let v = match self {
            Self::Validation { kind, field, message } => {
                json!({"error": "validation", "kind": kind, "field": field, "message": message})
            }
            Self::NotConverged(m) => json!({"error": "not_converged", "message": m}),
            Self::Io { path, message } => json!({"error": "io", "path": path, "message": message}),
            Self::Solver(m) => json!({"error": "solver", "message": m}),
        };
        v.to_string()
    }

    fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Validation {
            kind: "invalid_value",
            field: field.into(),
            message: message.into(),
        }
    }
}

impl From<InstanceError> for Failure {
    fn from(e: InstanceError) -> Self {
        Self::Validation {
            kind: e.kind.as_str(),
            field: e.field,
            message: e.message,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let field = match &e {
            Error::InvalidParameter { name, .. } => *name,
            Error::OutOfRange { what, .. } => *what,
            Error::DimensionMismatch { .. } | Error::DimensionTooSmall { .. } | Error::NonFinite => "terminals",
            Error::Infeasible(_) => "r",
            _ => return Self::Solver(e.to_string()),
        };
        Self::invalid(field, e.to_string())
    }
}

type Outcome = Result<(), Failure>;

/// Runs one invocation and returns the process exit code.
pub fn run<I, S>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(stdout, "{text}");
            } else {
                let _ = write!(stderr, "{text}");
            }
            return code;
        }
    };
    match dispatch(cli, stdout, stderr) {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(stderr, "{}", f.line());
            f.exit_code()
        }
    }
}

fn profile(flag: Option<String>) -> Result<(String, Tolerance64), Failure> {
    let name = flag
        .or_else(|| std::env::var(TOL_ENV).ok().filter(|s| !s.is_empty()))
        .unwrap_or_else(|| "default".to_string());
    let tol = match name.as_str() {
        "default" => Tolerance64::default(),
        "loose" => Tolerance64::loose(),
        "strict" => Tolerance64::strict(),
        other => {
            return Err(Failure::invalid(
                "tol",
                format!("unknown tolerance profile {other:?}; expected default, loose or strict"),
            ))
        }
    };
    Ok((name, tol))
}

fn dispatch(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Outcome {
    let (name, tol) = profile(cli.tol)?;
    let ctx = Ctx { profile: name, tol };
    match cli.cmd {
        Cmd::Steiner(SteinerCmd::Count { n }) => {
            let c = count_full_topologies(n)?;
            emit(stdout, format!("{c}\n").as_bytes())
        }
        Cmd::Steiner(SteinerCmd::Solve(a)) => ctx.steiner_solve(&a, stdout),
        Cmd::Steiner(SteinerCmd::Ratio { io, csv }) => ctx.steiner_ratio(&io, csv.as_deref(), stdout),
        Cmd::Mdm(MdmCmd::Solve { io, density }) => ctx.mdm_solve(&io, density, stdout),
        Cmd::Mdm(MdmCmd::Horseshoe(io)) => ctx.mdm_horseshoe(&io, stdout),
        Cmd::Mdm(MdmCmd::Competitor(io)) => ctx.mdm_competitor(&io, stdout),
        Cmd::Exp(ExpCmd::Run { input, csv, seed }) => ctx.exp_run(&input, csv.as_deref(), seed, stdout),
        Cmd::Render(a) => render(&a, stdout, stderr),
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn write_to(path: Option<&Path>, bytes: &[u8], stdout: &mut dyn Write) -> Outcome {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| Failure::Io {
            path: p.display().to_string(),
            message: e.to_string(),
        }),
        None => emit(stdout, bytes),
    }
}

fn emit(stdout: &mut dyn Write, bytes: &[u8]) -> Outcome {
    stdout.write_all(bytes).map_err(|e| Failure::Io {
        path: "-".into(),
        message: e.to_string(),
    })
}

fn load(path: &Path, want: Problem) -> Result<InstanceFile, Failure> {
    let inst = parse_instance(&read(path)?)?;
    if inst.problem != want {
        let expected = match want {
            Problem::Steiner => "steiner",
            Problem::Mdm => "mdm",
        };
        return Err(Failure::invalid("problem", format!("this command needs a {expected} instance")));
    }
    Ok(inst)
}

/// Writes the result, then reports non-convergence if needed.
fn finish(result: &ResultFile, out: Option<&Path>, stdout: &mut dyn Write) -> Outcome {
    write_to(out, &result.to_json(), stdout)?;
    if result.solver.converged {
        Ok(())
    } else {
        Err(Failure::NotConverged(format!(
            "{} did not converge; partial result written",
            result.solver.name
        )))
    }
}

struct Ctx {
    profile: String,
    tol: Tolerance64,
}

impl Ctx {
    fn solver(&self, name: &str, iterations: usize, converged: bool, density: Option<usize>) -> SolverJson {
        SolverJson {
            name: name.to_string(),
            iterations,
            converged,
            profile: self.profile.clone(),
            tolerances: TolJson::from(&self.tol),
            density,
        }
    }

    /// Exact below `nmax + 1` terminals, heuristic above.
    fn best_tree(&self, pts: &[Point64], nmax: usize) -> Result<(Tree64, Vec<Vec<(usize, usize)>>, bool, &'static str), Failure> {
        if pts.len() <= nmax {
            let sol = solve_exact_with(pts, &self.tol, &SolveOptions { n_max: nmax })?;
            let cominimal = sol.cominimal.iter().map(|t| t.edges().to_vec()).collect();
            let ok = sol.all_converged();
            Ok((sol.best, cominimal, ok, "exact"))
        } else {
            let tree = heuristic_steiner(pts, &self.tol)?;
            let ok = tree.converged();
            Ok((tree, Vec::new(), ok, "heuristic"))
        }
    }

    fn tree_result(&self, inst: &InstanceFile, tree: &Tree64, cominimal: Vec<Vec<(usize, usize)>>, solver: SolverJson) -> ResultFile {
        let rep = verify_tree(tree, &self.tol);
        let degrees = tree.topology().degrees();
        ResultFile {
            schema_version: SCHEMA_VERSION.into(),
            instance_digest: inst.digest(),
            problem: Problem::Steiner,
            dim: inst.dim,
            length: tree.length(),
            tree: Some(TreeJson {
                terminals: tree.terminals().iter().map(coords).collect(),
                steiner_points: tree.steiner_points().iter().map(coords).collect(),
                edges: tree.topology().edges().to_vec(),
                cominimal,
            }),
            network: None,
            report: ReportJson {
                min_angle: rep.min_angle,
                max_degree: rep.max_degree,
                degrees,
                is_tree: rep.is_tree,
                degenerate_edges: rep.degenerate_edges,
                segment_count: None,
                coverage: None,
                energetic_points: Vec::new(),
            },
            solver,
        }
    }

    fn steiner_solve(&self, a: &SolveArgs, stdout: &mut dyn Write) -> Outcome {
        let inst = load(&a.io.input, Problem::Steiner)?;
        let pts = inst.points().expect("steiner instances hold points");
        let (tree, cominimal, converged, name) = self.best_tree(&pts, a.nmax)?;
        let solver = self.solver(name, tree.iterations(), converged, None);
        let result = self.tree_result(&inst, &tree, cominimal, solver);
        finish(&result, a.io.out.as_deref(), stdout)
    }

    fn steiner_ratio(&self, a: &SolveArgs, csv: Option<&Path>, stdout: &mut dyn Write) -> Outcome {
        let inst = load(&a.io.input, Problem::Steiner)?;
        let pts = inst.points().expect("steiner instances hold points");
        let rep = ratio_report(&pts, &self.tol, &SolveOptions { n_max: a.nmax })?;
        if let Some(path) = csv {
            let id: String = inst.digest().chars().take(12).collect();
            let mut buf = Vec::new();
            write_ratio_csv(&[RatioRow::new(id, &pts, &rep)], &mut buf).map_err(|e| Failure::Io {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            write_to(Some(path), &buf, stdout)?;
        }
        if let Some(out) = &a.io.out {
            let name = if rep.restricted { "restricted" } else { "exact" };
            let solver = self.solver(name, rep.tree.iterations(), rep.tree.converged(), None);
            let result = self.tree_result(&inst, &rep.tree, Vec::new(), solver);
            write_to(Some(out), &result.to_json(), stdout)?;
        }
        emit(stdout, format!("{}\n", rep.ratio).as_bytes())
    }

    fn mdm_solve(&self, a: &SolveArgs, density: Option<usize>, stdout: &mut dyn Write) -> Outcome {
        let inst = load(&a.io.input, Problem::Mdm)?;
        let r = inst.r.expect("validated mdm instance has r");
        let desc = inst.descriptor();
        if let Some(pts) = inst.points().filter(|p| p.len() <= a.nmax) {
            let sol = solve_mdm_finite(&pts, r, &self.tol)?;
            let solver = self.solver("finite", 0, sol.converged, None);
            let result = self.mdm_result(&inst, &sol.network, solver, None)?;
            return finish(&result, a.io.out.as_deref(), stdout);
        }
        let density = density.unwrap_or_else(|| desc.default_density(r));
        let init = initial_network(&desc, r, density, &self.tol)?;
        let config = NumericConfig {
            density: Some(density),
            ..NumericConfig::default()
        };
        let out = solve_mdm_numeric(&desc, r, &init, &config, &self.tol)?;
        let solver = self.solver("penalty", out.epochs, out.feasible, Some(density));
        let result = self.mdm_result(&inst, &out.network, solver, Some(density))?;
        finish(&result, a.io.out.as_deref(), stdout)
    }

    fn mdm_horseshoe(&self, a: &InOut, stdout: &mut dyn Write) -> Outcome {
        let inst = load(&a.input, Problem::Mdm)?;
        let r = inst.r.expect("validated mdm instance has r");
        let h = match inst.descriptor() {
            CompactSetDescriptor::Circle { radius } => horseshoe_circle(radius, r, &self.tol)?,
            CompactSetDescriptor::Stadium { radius, seg_len } => horseshoe_stadium(radius, r, seg_len, &self.tol)?,
            _ => return Err(Failure::invalid("terminals.kind", "horseshoes exist for circles and stadiums only")),
        };
        let result = self.mdm_result(&inst, &h.network, self.solver("horseshoe", 0, true, None), None)?;
        finish(&result, a.out.as_deref(), stdout)
    }

    fn mdm_competitor(&self, a: &InOut, stdout: &mut dyn Write) -> Outcome {
        let inst = load(&a.input, Problem::Mdm)?;
        let r = inst.r.expect("validated mdm instance has r");
        let CompactSetDescriptor::Stadium { radius, seg_len } = inst.descriptor() else {
            return Err(Failure::invalid("terminals.kind", "the competitor is built for stadiums only"));
        };
        let c = stadium_competitor(radius, r, seg_len, &self.tol)?;
        let result = self.mdm_result(&inst, &c.network, self.solver("competitor", 0, true, None), None)?;
        finish(&result, a.out.as_deref(), stdout)
    }

    fn mdm_result(&self, inst: &InstanceFile, net: &Network64, solver: SolverJson, density: Option<usize>) -> Result<ResultFile, Failure> {
        let r = inst.r.expect("validated mdm instance has r");
        let desc = inst.descriptor();
        let closed = matches!(
            desc,
            CompactSetDescriptor::Circle { .. } | CompactSetDescriptor::Stadium { .. } | CompactSetDescriptor::Polygon(_)
        );
        let samples = sample_compact(&desc, density.unwrap_or_else(|| desc.default_density(r)))?;
        let cov = coverage_check(net, &samples, r, &self.tol)?;
        let energetic = energetic_points(net, &samples, r, &self.tol)?;
        let finite = match &desc {
            CompactSetDescriptor::Points(p) => Some(p.len()),
            _ => None,
        };
        let rep = verify_mdm(net, finite, &self.tol);
        let degrees = net.degrees();
        Ok(ResultFile {
            schema_version: SCHEMA_VERSION.into(),
            instance_digest: inst.digest(),
            problem: Problem::Mdm,
            dim: inst.dim,
            length: net.length(),
            tree: None,
            network: Some(NetworkJson {
                vertices: net.vertices().iter().map(coords).collect(),
                edges: net.edges().to_vec(),
                r,
                compact: samples.iter().map(coords).collect(),
                closed,
            }),
            report: ReportJson {
                min_angle: rep.min_angle(),
                max_degree: degrees.iter().copied().max().unwrap_or(0),
                degrees,
                is_tree: rep.connected && !rep.has_cycle,
                degenerate_edges: Vec::new(),
                segment_count: Some(rep.segment_count),
                coverage: Some(CoverageJson {
                    max_defect: cov.max_defect,
                    covered: cov.covered,
                    samples: samples.len(),
                }),
                energetic_points: energetic
                    .points
                    .iter()
                    .map(|(x, y)| EnergeticJson {
                        x: coords(x),
                        witness: coords(y),
                    })
                    .collect(),
            },
            solver,
        })
    }

    fn exp_run(&self, input: &Path, csv: Option<&Path>, seed: Option<u64>, stdout: &mut dyn Write) -> Outcome {
        let mut spec: SuiteSpec = serde_json::from_slice(&read(input)?).map_err(|e| Failure::invalid("suite", e.to_string()))?;
        if let Some(s) = seed {
            for study in &mut spec.studies {
                if let GeneratorSpec::Random { seed, .. } = &mut study.generator {
                    *seed = s;
                }
            }
        }
        let runs = run_suite(&spec, &self.tol);
        let mut buf = Vec::new();
        write_runs_csv(&runs, &mut buf).map_err(|e| Failure::Io {
            path: csv.map_or("-".into(), |p| p.display().to_string()),
            message: e.to_string(),
        })?;
        write_to(csv, &buf, stdout)
    }
}

/// Starting network for the penalty solver: the horseshoe where one exists,
/// otherwise the MST of the samples, which lies on `M` and is feasible.
fn initial_network(desc: &CompactSetDescriptor<f64>, r: f64, density: usize, tol: &Tolerance64) -> Result<Network64, Failure> {
    let horseshoe = match *desc {
        CompactSetDescriptor::Circle { radius } if radius > r => Some(horseshoe_circle(radius, r, tol)?),
        CompactSetDescriptor::Stadium { radius, seg_len } if radius > r => Some(horseshoe_stadium(radius, r, seg_len, tol)?),
        _ => None,
    };
    if let Some(h) = horseshoe {
        return Ok(h.network);
    }
    let samples = sample_compact(desc, density)?;
    if samples.len() == 1 {
        return Ok(MdmNetwork::point(samples[0].clone()));
    }
    let m = mst(&samples)?;
    Ok(Network64::new(samples, m.edges)?)
}

fn render(a: &RenderArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Outcome {
    let result = ResultFile::from_json(&read(&a.io.input)?)?;
    if !(a.width > 0.0) {
        return Err(Failure::invalid("width", "must be positive"));
    }
    let opts = RenderOptions {
        width: a.width,
        project: a.project,
    };
    let svg = render_svg(&result, &opts).map_err(|e| Failure::invalid("dim", e.to_string()))?;
    if let Some(w) = &svg.warning {
        let _ = writeln!(stderr, "{}", json!({"warning": w}));
    }
    write_to(a.io.out.as_deref(), &svg.bytes, stdout)
}
