//! Command-line interface: parameter derivation, quantum spectrum tables,
//! action-map evaluation, flow integration, and the verification harness.
//!
//! Exit codes: 0 on success, 1 on verification or runtime-domain failure
//! (including a flow that leaves the interior), 2 on usage errors.
//! Diagnostics go to stderr only; records go to stdout or `--output`.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use rsiiib_core::classical::{
    action_map_opts, derive_params, flow_rk4, local_hamiltonian, CouplingParams, DarbouxPoint,
    EvalOptions, FlowOptions, Membership,
};
use rsiiib_core::quantum::{spectrum_table, QuantizationData};
use rsiiib_core::verify::{run_suite, Suite, VerifyConfig, DEFAULT_SAMPLES, DEFAULT_SEED};

#[derive(Parser)]
#[command(
    name = "rsiiib",
    version,
    about = "Compactified Ruijsenaars-Schneider system: parameters, spectra, action maps, flows and verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Derive (a, y) from (n, M, g) or vice versa and describe the polytope.
    Params(ParamsCmd),
    /// Joint spectrum of the quantized action operators and Hamiltonians.
    Qspectrum(QspectrumCmd),
    /// Evaluate the action map at a phase-space point.
    #[command(name = "action-map")]
    ActionMap(ActionMapCmd),
    /// Integrate the local Hamiltonian flow with RK4.
    Flow(FlowCmd),
    /// Run the randomized verification suites.
    Verify(VerifyCmd),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Write records to this path instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Coupling parameters: exactly one of (M, g) or (a, y).
#[derive(Args)]
struct CouplingArgs {
    /// Particle number (n >= 2).
    #[arg(long)]
    n: usize,
    /// Integer level M >= 1 (with --g).
    #[arg(long = "M", value_parser = clap::value_parser!(u32).range(1..))]
    big_m: Option<u32>,
    /// Coupling g > 0 (with --M).
    #[arg(long)]
    g: Option<f64>,
    /// Inverse-length scale a > 0 (with --y).
    #[arg(long, conflicts_with_all = ["big_m", "g"], requires = "y")]
    a: Option<f64>,
    /// Signed coupling y with 0 < |y| < pi/n (with --a).
    #[arg(long, requires = "a", allow_hyphen_values = true)]
    y: Option<f64>,
}

#[derive(Args)]
struct ParamsCmd {
    #[command(flatten)]
    coupling: CouplingArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct QspectrumCmd {
    #[command(flatten)]
    coupling: CouplingArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct PointArgs {
    /// Comma-separated gamma coordinates (default: polytope centroid).
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<String>,
    /// Comma-separated theta coordinates (default: zeros).
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<String>,
}

#[derive(Args)]
struct TolArgs {
    /// Unitarity tolerance for constructed matrices.
    #[arg(long = "tol-unitarity")]
    tol_unitarity: Option<f64>,
    /// Eigendecomposition acceptance tolerance.
    #[arg(long = "tol-eig")]
    tol_eig: Option<f64>,
    /// Alcove anchoring tolerance.
    #[arg(long = "tol-alcove")]
    tol_alcove: Option<f64>,
    /// Polytope facet refusal radius.
    #[arg(long = "tol-facet")]
    tol_facet: Option<f64>,
}

impl TolArgs {
    fn eval_options(&self) -> EvalOptions {
        let mut opts = EvalOptions::default();
        if let Some(t) = self.tol_unitarity {
            opts.unitarity_tol = t;
        }
        if let Some(t) = self.tol_eig {
            opts.eig_tol = t;
        }
        if let Some(t) = self.tol_alcove {
            opts.alcove_match_tol = t;
        }
        if let Some(t) = self.tol_facet {
            opts.facet_margin = t;
        }
        opts
    }
}

#[derive(Args)]
struct ActionMapCmd {
    #[command(flatten)]
    coupling: CouplingArgs,
    #[command(flatten)]
    point: PointArgs,
    #[command(flatten)]
    tols: TolArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct FlowCmd {
    #[command(flatten)]
    coupling: CouplingArgs,
    #[command(flatten)]
    point: PointArgs,
    #[command(flatten)]
    tols: TolArgs,
    /// Integration time.
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    /// Time step.
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct VerifyCmd {
    #[command(flatten)]
    coupling: CouplingArgs,
    /// Suite to run: classical, double, quantum or all.
    #[arg(long, default_value = "all")]
    suite: String,
    /// Samples per randomized check.
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    /// Master seed; sub-seeds are derived per check and sample.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Per-check tolerance override, repeatable: --tol <check>=<value>.
    #[arg(long = "tol", value_name = "CHECK=VALUE")]
    tol: Vec<String>,
    #[command(flatten)]
    out: OutputArgs,
}

enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    fn usage<E: std::fmt::Display>(e: E) -> Self {
        CliError::Usage(e.to_string())
    }

    fn runtime<E: std::fmt::Display>(e: E) -> Self {
        CliError::Runtime(e.to_string())
    }
}

struct Resolved {
    params: CouplingParams,
    /// Present when M is an integer (given directly or recovered from (a, y)).
    big_m: Option<u32>,
}

impl CouplingArgs {
    fn resolve(&self) -> Result<Resolved, CliError> {
        match (self.big_m, self.g, self.a, self.y) {
            (Some(m), Some(g), None, None) => {
                let params = derive_params(self.n, m, g).map_err(CliError::usage)?;
                Ok(Resolved {
                    params,
                    big_m: Some(m),
                })
            }
            (None, None, Some(a), Some(y)) => {
                let params = CouplingParams::from_ay(self.n, a, y).map_err(CliError::usage)?;
                let m = params.big_m();
                let big_m = if (m - m.round()).abs() < 1e-9 && m.round() >= 1.0 {
                    Some(m.round() as u32)
                } else {
                    None
                };
                Ok(Resolved { params, big_m })
            }
            _ => Err(CliError::Usage(
                "supply exactly one of (--M, --g) or (--a, --y)".to_string(),
            )),
        }
    }
}

fn parse_coords(
    raw: &Option<String>,
    expected: usize,
    name: &str,
) -> Result<Option<Vec<f64>>, CliError> {
    let Some(raw) = raw else {
        return Ok(None);
    };
    let values: Result<Vec<f64>, _> = raw.split(',').map(|s| s.trim().parse::<f64>()).collect();
    let values =
        values.map_err(|e| CliError::Usage(format!("could not parse --{name} `{raw}`: {e}")))?;
    if values.len() != expected {
        return Err(CliError::Usage(format!(
            "--{name} needs {expected} components, got {}",
            values.len()
        )));
    }
    Ok(Some(values))
}

fn resolve_point(coupling: &Resolved, point: &PointArgs) -> Result<DarbouxPoint, CliError> {
    let dim = coupling.params.n() - 1;
    let gamma = parse_coords(&point.gamma, dim, "gamma")?
        .unwrap_or_else(|| coupling.params.polytope().centroid());
    let theta = parse_coords(&point.theta, dim, "theta")?.unwrap_or_else(|| vec![0.0; dim]);
    DarbouxPoint::new(gamma, theta).map_err(CliError::usage)
}

fn write_out(out: &OutputArgs, content: &str) -> Result<(), CliError> {
    match &out.output {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(content.as_bytes())
                .map_err(CliError::runtime)
        }
    }
}

fn join_f64(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn join_u32(v: &[u32]) -> String {
    v.iter()
        .map(|x| format!("{x}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn params_json(params: &CouplingParams, big_m: Option<u32>) -> serde_json::Value {
    json!({
        "n": params.n(),
        "M": big_m.map(|m| json!(m)).unwrap_or(json!(params.big_m())),
        "g": params.g(),
        "a": params.a(),
        "y": params.y(),
    })
}

fn cmd_params(cmd: &ParamsCmd) -> Result<ExitCode, CliError> {
    let resolved = cmd.coupling.resolve()?;
    let p = &resolved.params;
    let poly = p.polytope();
    let content = match cmd.out.format {
        Format::Json => {
            let doc = json!({
                "params": params_json(p, resolved.big_m),
                "polytope": {
                    "dimension": p.n() - 1,
                    "coordinate_lower_bound": poly.g(),
                    "sum_upper_bound": poly.sum_upper(),
                },
            });
            format!("{}\n", serde_json::to_string(&doc).map_err(CliError::runtime)?)
        }
        Format::Csv => format!(
            "n;M;g;a;y;gamma_lower;sum_upper\n{};{};{};{};{};{};{}\n",
            p.n(),
            p.big_m(),
            p.g(),
            p.a(),
            p.y(),
            poly.g(),
            poly.sum_upper()
        ),
        Format::Text => format!(
            "n = {}\nM = {}\ng = {}\na = {}\ny = {}\npolytope: gamma_j >= {}, sum gamma <= {} (dimension {})\n",
            p.n(),
            p.big_m(),
            p.g(),
            p.a(),
            p.y(),
            poly.g(),
            poly.sum_upper(),
            p.n() - 1
        ),
    };
    write_out(&cmd.out, &content)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_qspectrum(cmd: &QspectrumCmd) -> Result<ExitCode, CliError> {
    let resolved = cmd.coupling.resolve()?;
    let Some(big_m) = resolved.big_m else {
        return Err(CliError::Usage(
            "the quantization condition requires an integer M >= 1".to_string(),
        ));
    };
    let q = QuantizationData::new(resolved.params.n(), big_m, resolved.params.g())
        .map_err(CliError::usage)?;
    let (rows, _) = spectrum_table(&q);

    let content = match cmd.out.format {
        Format::Json => {
            let states: Vec<serde_json::Value> = rows
                .iter()
                .map(|r| {
                    json!({
                        "nu": r.nu,
                        "actions": r.actions,
                        "e": r.e.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
                        "h_real": r.h_real,
                    })
                })
                .collect();
            let doc = json!({
                "params": params_json(&resolved.params, Some(big_m)),
                "states": states,
            });
            format!(
                "{}\n",
                serde_json::to_string(&doc).map_err(CliError::runtime)?
            )
        }
        Format::Csv => {
            let mut out = String::from("nu;actions;e_re;e_im;h_real\n");
            for r in &rows {
                let e_re: Vec<f64> = r.e.iter().map(|z| z.re).collect();
                let e_im: Vec<f64> = r.e.iter().map(|z| z.im).collect();
                out.push_str(&format!(
                    "{};{};{};{};{}\n",
                    join_u32(&r.nu),
                    join_f64(&r.actions),
                    join_f64(&e_re),
                    join_f64(&e_im),
                    join_f64(&r.h_real)
                ));
            }
            out
        }
        Format::Text => {
            let mut out = format!(
                "qspectrum n={} M={} g={} (a={}, y={}); {} states\n",
                resolved.params.n(),
                big_m,
                resolved.params.g(),
                resolved.params.a(),
                resolved.params.y(),
                rows.len()
            );
            for r in &rows {
                out.push_str(&format!(
                    "nu=({}) actions=({}) h_real=({})\n",
                    join_u32(&r.nu),
                    join_f64(&r.actions),
                    join_f64(&r.h_real)
                ));
            }
            out
        }
    };
    write_out(&cmd.out, &content)?;
    Ok(ExitCode::SUCCESS)
}

fn classify_point_error(e: rsiiib_core::classical::ClassicalError) -> CliError {
    use rsiiib_core::classical::ClassicalError::*;
    match e {
        OutsidePolytope { .. } | FacetTooClose { .. } => CliError::usage(e),
        other => CliError::runtime(other),
    }
}

fn cmd_action_map(cmd: &ActionMapCmd) -> Result<ExitCode, CliError> {
    let resolved = cmd.coupling.resolve()?;
    let params = &resolved.params;
    let p = resolve_point(&resolved, &cmd.point)?;
    let opts = cmd.tols.eval_options();
    let membership = params.polytope().membership(p.gamma(), opts.facet_margin);
    if membership == Membership::Outside {
        return Err(CliError::Usage(format!(
            "gamma = ({}) lies outside the polytope",
            join_f64(p.gamma())
        )));
    }
    let actions = action_map_opts(&p, params, &opts).map_err(classify_point_error)?;
    let image_membership = params.polytope().membership(&actions, 1e-10);

    let content = match cmd.out.format {
        Format::Json => {
            let doc = json!({
                "params": params_json(params, resolved.big_m),
                "gamma": p.gamma(),
                "theta": p.theta(),
                "actions": actions,
                "membership": format!("{image_membership:?}"),
            });
            format!(
                "{}\n",
                serde_json::to_string(&doc).map_err(CliError::runtime)?
            )
        }
        Format::Csv => format!(
            "gamma;theta;actions;membership\n{};{};{};{:?}\n",
            join_f64(p.gamma()),
            join_f64(p.theta()),
            join_f64(&actions),
            image_membership
        ),
        Format::Text => format!(
            "gamma = ({})\ntheta = ({})\nactions = ({})\nmembership = {:?}\n",
            join_f64(p.gamma()),
            join_f64(p.theta()),
            join_f64(&actions),
            image_membership
        ),
    };
    write_out(&cmd.out, &content)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_flow(cmd: &FlowCmd) -> Result<ExitCode, CliError> {
    let resolved = cmd.coupling.resolve()?;
    let params = resolved.params;
    let p0 = resolve_point(&resolved, &cmd.point)?;
    if !(cmd.dt > 0.0 && cmd.t > 0.0) {
        return Err(CliError::Usage("--t and --dt must be positive".to_string()));
    }
    let opts = cmd.tols.eval_options();
    let flow_opts = FlowOptions {
        facet_margin: opts.facet_margin,
        ..FlowOptions::default()
    };
    let h = |q: &DarbouxPoint| local_hamiltonian(q, &params);
    let traj =
        flow_rk4(h, &p0, &params, cmd.t, cmd.dt, &flow_opts).map_err(classify_point_error)?;

    // Per-step records with energy and actions.
    let mut records = Vec::with_capacity(traj.points.len());
    for (t, point) in traj.times.iter().zip(&traj.points) {
        let energy = local_hamiltonian(point, &params).map_err(CliError::runtime)?;
        let actions = action_map_opts(point, &params, &opts).map_err(CliError::runtime)?;
        records.push((*t, point.clone(), energy, actions));
    }
    let h0 = records[0].2;
    let a0 = records[0].3.clone();
    let dh = records
        .iter()
        .map(|r| (r.2 - h0).abs())
        .fold(0.0_f64, f64::max);
    let da = records
        .iter()
        .flat_map(|r| r.3.iter().zip(&a0).map(|(x, y)| (x - y).abs()))
        .fold(0.0_f64, f64::max);

    let content = match cmd.out.format {
        Format::Json => {
            let trajectory: Vec<serde_json::Value> = records
                .iter()
                .map(|(t, point, energy, actions)| {
                    json!({
                        "t": t,
                        "gamma": point.gamma(),
                        "theta": point.theta(),
                        "H": energy,
                        "alpha": actions,
                    })
                })
                .collect();
            let doc = json!({
                "params": params_json(&params, resolved.big_m),
                "trajectory": trajectory,
                "summary": {"dH_max": dh, "dAlpha_max": da, "exited": traj.exited},
            });
            format!(
                "{}\n",
                serde_json::to_string(&doc).map_err(CliError::runtime)?
            )
        }
        Format::Csv | Format::Text => {
            let mut out = String::from("t;gamma;theta;H;alpha\n");
            for (t, point, energy, actions) in &records {
                out.push_str(&format!(
                    "{};{};{};{};{}\n",
                    t,
                    join_f64(point.gamma()),
                    join_f64(point.theta()),
                    energy,
                    join_f64(actions)
                ));
            }
            out.push_str(&format!(
                "# dH_max={dh} dAlpha_max={da} exited={} steps={}\n",
                traj.exited,
                records.len() - 1
            ));
            out
        }
    };
    write_out(&cmd.out, &content)?;
    if traj.exited {
        eprintln!("flow left the polytope interior; trajectory truncated");
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(cmd: &VerifyCmd) -> Result<ExitCode, CliError> {
    let resolved = cmd.coupling.resolve()?;
    let Some(big_m) = resolved.big_m else {
        return Err(CliError::Usage(
            "verification sweeps require an integer M >= 1".to_string(),
        ));
    };
    let suite: Suite = cmd.suite.parse().map_err(CliError::Usage)?;
    let mut cfg = VerifyConfig::new(resolved.params.n(), big_m, resolved.params.g());
    cfg.samples = cmd.samples;
    cfg.seed = cmd.seed;
    for raw in &cmd.tol {
        let Some((name, value)) = raw.split_once('=') else {
            return Err(CliError::Usage(format!(
                "--tol expects CHECK=VALUE, got `{raw}`"
            )));
        };
        let value: f64 = value
            .parse()
            .map_err(|e| CliError::Usage(format!("bad tolerance `{raw}`: {e}")))?;
        cfg.tol_overrides.insert(name.to_string(), value);
    }
    let report = run_suite(suite, &cfg).map_err(CliError::Usage)?;

    let content = match cmd.out.format {
        Format::Json => {
            let doc = serde_json::to_value(&report).map_err(CliError::runtime)?;
            format!(
                "{}\n",
                serde_json::to_string(&doc).map_err(CliError::runtime)?
            )
        }
        Format::Csv => {
            let mut out = String::from("name;samples;max_residual;tolerance;passed;asserted\n");
            for c in &report.checks {
                out.push_str(&format!(
                    "{};{};{};{};{};{}\n",
                    c.name, c.samples, c.max_residual, c.tolerance, c.passed, c.asserted
                ));
            }
            out.push_str(&format!("# overall={}\n", report.passed));
            out
        }
        Format::Text => report.render_text(),
    };
    write_out(&cmd.out, &content)?;
    Ok(if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Params(cmd) => cmd_params(cmd),
        Command::Qspectrum(cmd) => cmd_qspectrum(cmd),
        Command::ActionMap(cmd) => cmd_action_map(cmd),
        Command::Flow(cmd) => cmd_flow(cmd),
        Command::Verify(cmd) => cmd_verify(cmd),
    };
    match result {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
