use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use chanfid::channel_file::resolve_channel;
use chanfid::config::Config;
use chanfid::pipeline::{self, SolveSettings, Solver};
use chanfid::records::{export_sdpa, param_labels, write_json, Manifest};
use chanfid::verify::{self, Suite};
use chanfid::{exit, Error};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

/// Upper bounds on quantum channel fidelity from a symmetry-reduced
/// semidefinite hierarchy.
///
/// Exit codes: 0 success, 1 failed verification check, 2 bad input,
/// 3 channel not CPTP, 4 solver did not converge, 5 I/O error.
#[derive(Parser)]
#[command(name = "chanfid", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one level of the hierarchy; prints a JSON record.
    Solve {
        #[command(flatten)]
        instance: InstanceArgs,
        /// ipm (accurate) or admm (first-order).
        #[arg(long)]
        solver: Option<Solver>,
        /// Solver tolerance (IPM relative gap or ADMM residual).
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
        /// Also write the record, including the solution vector, here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the reduced program in SDPA sparse format plus a JSON manifest.
    Export {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long, default_value = "sdpa")]
        format: String,
        /// Output `.dat-s` path; the manifest goes next to it.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an invariant suite: combinatorics, pairing, oracle, monotonic or all.
    Verify {
        #[arg(long)]
        suite: String,
        /// Highest level for the monotonic suite.
        #[arg(long, default_value_t = 3)]
        max_level: usize,
    },
    /// Quick end-to-end check of the installation.
    SelfTest,
}

#[derive(Args)]
struct InstanceArgs {
    /// Built-in channel name or path to a channel JSON file.
    #[arg(long)]
    channel: Option<String>,
    /// Parameter of a built-in channel family (default 0).
    #[arg(long)]
    param: Option<f64>,
    /// Message dimension.
    #[arg(long = "M")]
    m: Option<usize>,
    /// Hierarchy level n ≥ 1.
    #[arg(long)]
    level: Option<usize>,
    /// JSON file with defaults for any of these flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads (computation is currently sequential).
    #[arg(long)]
    threads: Option<usize>,
}

impl InstanceArgs {
    fn merged(&self, extra: Config) -> Result<Config, Error> {
        let flags = Config {
            channel: self.channel.clone(),
            param: self.param,
            m: self.m,
            level: self.level,
            threads: self.threads,
            ..extra
        };
        let file = match &self.config {
            Some(p) => Config::load(p)?,
            None => Config::default(),
        };
        let c = flags.over(file);
        if c.threads == Some(0) {
            return Err(Error::BadInput("--threads must be ≥ 1".into()));
        }
        Ok(c)
    }
}

fn required<T>(v: Option<T>, flag: &str) -> Result<T, Error> {
    v.ok_or_else(|| Error::BadInput(format!("missing required argument --{flag}")))
}

fn print_json(v: &impl serde::Serialize) {
    println!(
        "{}",
        serde_json::to_string_pretty(v).expect("records serialize")
    );
}

fn cmd_solve(
    instance: &InstanceArgs,
    solver: Option<Solver>,
    tol: Option<f64>,
    max_iter: Option<usize>,
    out: Option<PathBuf>,
) -> Result<i32, Error> {
    let c = instance.merged(Config {
        solver,
        tol,
        max_iter,
        out,
        ..Default::default()
    })?;
    let channel = required(c.channel, "channel")?;
    let settings = SolveSettings {
        m: required(c.m, "M")?,
        level: required(c.level, "level")?,
        solver: c.solver.unwrap_or_default(),
        tol: c.tol,
        max_iter: c.max_iter,
    };
    let spec = resolve_channel(&channel, c.param)?;
    let (mut record, res) = pipeline::solve(&spec, &channel, c.param, &settings)?;
    print_json(&record);
    eprintln!(
        "{} (M={}, level {}): value {:.9} [{}] via {} in {:.0} ms, {} iterations, gap {:.1e}",
        channel,
        settings.m,
        settings.level,
        record.value,
        record.status,
        record.solver,
        record.timings_ms.total,
        record.iterations,
        record.gap
    );
    if let Some(path) = c.out {
        record.assignment = Some(res.assignment.clone());
        write_json(&record, &path)?;
    }
    Ok(if pipeline::converged(&res) {
        exit::OK
    } else {
        exit::NOT_CONVERGED
    })
}

fn cmd_export(instance: &InstanceArgs, format: &str, out: Option<PathBuf>) -> Result<i32, Error> {
    if format != "sdpa" {
        return Err(Error::BadInput(format!(
            "unsupported format `{format}` (only sdpa)"
        )));
    }
    let c = instance.merged(Config {
        out,
        ..Default::default()
    })?;
    let channel = required(c.channel, "channel")?;
    let path = required(c.out, "out")?;
    let (m, level) = (required(c.m, "M")?, required(c.level, "level")?);
    let t = Instant::now();
    let spec = resolve_channel(&channel, c.param)?;
    let p = pipeline::prepare(&spec, m, level)?;
    let assembly_ms = t.elapsed().as_secs_f64() * 1e3;

    let t = Instant::now();
    export_sdpa(&p.sdp, &param_labels(&p.params), &path)?;
    let mut manifest = Manifest::new(&channel, &p.reduced, &p.sdp, &p.params);
    manifest.sdpa_file = path.file_name().map(|f| f.to_string_lossy().into_owned());
    let manifest_path = path.with_extension("manifest.json");
    write_json(&manifest, &manifest_path)?;
    let write_ms = t.elapsed().as_secs_f64() * 1e3;

    print_json(&json!({
        "sdpa": path,
        "manifest": manifest_path,
        "level": level,
        "M": m,
        "num_vars": 2 * p.sdp.num_vars,
        "block_struct": manifest.sdpa_block_struct,
        "timings_ms": { "assembly": assembly_ms, "write": write_ms },
    }));
    eprintln!(
        "wrote {} ({} SDPA variables, {} blocks) and {}",
        path.display(),
        2 * p.sdp.num_vars,
        manifest.sdpa_block_struct.len(),
        manifest_path.display()
    );
    Ok(exit::OK)
}

fn report_verify(report: &verify::VerifyReport) -> i32 {
    print_json(report);
    for s in &report.suites {
        let failed = s.checks.iter().filter(|c| !c.passed).count();
        eprintln!(
            "{:<14} {}  {} checks, {} failed, {:.0} ms",
            s.suite,
            if s.passed { "PASS" } else { "FAIL" },
            s.checks.len(),
            failed,
            s.elapsed_ms
        );
        for c in s.checks.iter().filter(|c| !c.passed) {
            eprintln!("  failed {}: {}", c.name, c.detail);
        }
    }
    if report.passed {
        exit::OK
    } else {
        exit::CHECK_FAILED
    }
}

fn cmd_self_test() -> i32 {
    let t = Instant::now();
    let mut checks = verify::combinatorics(3, 4);
    checks.extend(verify::pairing(&[(2, 3), (4, 1)]));
    checks.extend(verify::oracle(1, 1e-4));
    let report = verify::VerifyReport {
        passed: checks.iter().all(|c| c.passed),
        suites: vec![verify::SuiteReport {
            suite: "self-test".into(),
            passed: checks.iter().all(|c| c.passed),
            elapsed_ms: t.elapsed().as_secs_f64() * 1e3,
            checks,
        }],
    };
    report_verify(&report)
}

fn run(cli: Cli) -> Result<i32, Error> {
    match cli.command {
        Command::Solve {
            instance,
            solver,
            tol,
            max_iter,
            out,
        } => cmd_solve(&instance, solver, tol, max_iter, out),
        Command::Export {
            instance,
            format,
            out,
        } => cmd_export(&instance, &format, out),
        Command::Verify { suite, max_level } => {
            let suites = Suite::parse_arg(&suite)?;
            if max_level == 0 {
                return Err(Error::BadInput("level must be ≥ 1".into()));
            }
            Ok(report_verify(&verify::run(&suites, max_level)))
        }
        Command::SelfTest => Ok(cmd_self_test()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            let code = e.exit_code();
            let mut body = json!({ "error": e.to_string(), "exit_code": code });
            if let Error::NotCptp(r) = &e {
                body["report"] = json!({
                    "min_eigenvalue": r.min_eigenvalue,
                    "psd_deviation": r.psd_deviation,
                    "tp_deviation": r.tp_deviation,
                    "passes": r.passes,
                });
            }
            print_json(&body);
            eprintln!("error: {e}");
            ExitCode::from(code as u8)
        }
    }
}
