//! Command-line entry point: single runs, convergence studies and
//! scheme-comparison sweeps driven by a key=value config file.

use std::fs;
use std::io::Write;
use std::process::ExitCode;

use conlaw::config::RunConfig;
use conlaw::driver::{self, RunError};
use conlaw::output;
use conlaw::system::{Scheme, SCHEME_NAMES};

const EXIT_NUMERICAL: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn print_usage() {
    eprintln!("Usage: conlaw <command> <config> [options]");
    eprintln!();
    eprintln!("Commands:");
    eprintln!("  run <config>                       single run; prints a report");
    eprintln!("  convergence <config> --levels N,.. grid study over DoF counts (CSV)");
    eprintln!("  sweep <config> --schemes A,B,..    compare schemes at one resolution (CSV)");
    eprintln!();
    eprintln!("Options:");
    eprintln!("  --out <path>       write CSV/report to a file instead of stdout");
    eprintln!("  --dump <path>      write the final field (run command)");
    eprintln!("  --dump-format csv|vtk");
    eprintln!("  --gamma-dump <path>  per-cell sensor state (run command, WENO)");
    eprintln!();
    eprintln!("The CONLAW_THREADS environment variable overrides the threads key.");
    eprintln!("Exit codes: 0 success, 1 numerical failure, 2 configuration error.");
}

struct Cli {
    command: String,
    config_path: String,
    levels: Vec<usize>,
    schemes: Vec<String>,
    out: Option<String>,
    dump: Option<String>,
    dump_format: Option<String>,
    gamma_dump: Option<String>,
}

fn parse_args(args: &[String]) -> Result<Cli, String> {
    if args.len() < 2 {
        return Err("missing command and config path".to_string());
    }
    let mut cli = Cli {
        command: args[0].clone(),
        config_path: args[1].clone(),
        levels: Vec::new(),
        schemes: Vec::new(),
        out: None,
        dump: None,
        dump_format: None,
        gamma_dump: None,
    };
    let mut i = 2;
    while i < args.len() {
        let need_value = |i: usize| -> Result<String, String> {
            args.get(i + 1).cloned().ok_or_else(|| format!("{} needs a value", args[i]))
        };
        match args[i].as_str() {
            "--levels" => {
                cli.levels = need_value(i)?
                    .split(',')
                    .map(|s| s.trim().parse::<usize>().map_err(|_| format!("bad level '{s}'")))
                    .collect::<Result<_, _>>()?;
                i += 2;
            }
            "--schemes" => {
                cli.schemes = need_value(i)?.split(',').map(|s| s.trim().to_string()).collect();
                i += 2;
            }
            "--out" => {
                cli.out = Some(need_value(i)?);
                i += 2;
            }
            "--dump" => {
                cli.dump = Some(need_value(i)?);
                i += 2;
            }
            "--dump-format" => {
                cli.dump_format = Some(need_value(i)?);
                i += 2;
            }
            "--gamma-dump" => {
                cli.gamma_dump = Some(need_value(i)?);
                i += 2;
            }
            other => return Err(format!("unknown option '{other}'")),
        }
    }
    Ok(cli)
}

fn write_out(path: Option<&str>, bytes: &[u8]) -> std::io::Result<()> {
    match path {
        Some(p) => fs::write(p, bytes),
        None => std::io::stdout().write_all(bytes),
    }
}

fn run_command(cli: &Cli) -> Result<(), (u8, String)> {
    let config_err = |m: String| (EXIT_CONFIG, m);
    let text = fs::read_to_string(&cli.config_path)
        .map_err(|e| config_err(format!("cannot read {}: {e}", cli.config_path)))?;
    let mut cfg = RunConfig::parse(&text).map_err(|e| config_err(e.to_string()))?;
    if let Ok(threads) = std::env::var("CONLAW_THREADS") {
        let n = threads
            .parse::<usize>()
            .map_err(|_| config_err(format!("bad CONLAW_THREADS value '{threads}'")))?;
        cfg.threads = Some(n);
        cfg.deterministic = Some(false);
    }
    if let Some(d) = &cli.dump {
        cfg.dump = Some(d.clone());
    }
    if let Some(d) = &cli.dump_format {
        cfg.dump_format = Some(d.clone());
    }
    if let Some(d) = &cli.gamma_dump {
        cfg.gamma_dump = Some(d.clone());
    }

    let map_run_err = |e: RunError| match e {
        RunError::Invalid(m) => (EXIT_CONFIG, m),
        RunError::Numerical(m) => (EXIT_NUMERICAL, m),
    };

    match cli.command.as_str() {
        "run" => {
            let plan = cfg.resolve(None).map_err(|e| config_err(e.to_string()))?;
            let out = driver::execute(&plan).map_err(map_run_err)?;
            let mut buf = Vec::new();
            output::write_report(&out.report, &mut buf).unwrap();
            write_out(cli.out.as_deref(), &buf)
                .map_err(|e| (EXIT_NUMERICAL, format!("write failed: {e}")))?;
            if let Some(path) = &cfg.dump {
                let mut buf = Vec::new();
                match (plan.problem.dim, cfg.dump_format.as_deref().unwrap_or("csv")) {
                    (1, "csv") => {
                        output::dump_field_1d(&out.field.space, &out.field.coeffs, &mut buf)
                    }
                    (2, "csv") => {
                        output::dump_field_2d(&out.field.space, &out.field.coeffs, &mut buf)
                    }
                    (2, "vtk") => {
                        output::dump_field_vtk(&out.field.space, &out.field.coeffs, &mut buf)
                    }
                    (_, fmt) => {
                        return Err(config_err(format!(
                            "dump_format '{fmt}' not available for this problem"
                        )))
                    }
                }
                .unwrap();
                fs::write(path, &buf)
                    .map_err(|e| (EXIT_NUMERICAL, format!("write failed: {e}")))?;
            }
            if let Some(path) = &cfg.gamma_dump {
                let sensor = out.system.sensor().ok_or_else(|| {
                    config_err("gamma_dump requires scheme = WENO".to_string())
                })?;
                let state = sensor.state(
                    &out.field.space,
                    out.system.stencil_set(),
                    &out.field.coeffs,
                );
                let mut buf = Vec::new();
                output::dump_gamma(&out.field.space, &state, &mut buf).unwrap();
                fs::write(path, &buf)
                    .map_err(|e| (EXIT_NUMERICAL, format!("write failed: {e}")))?;
            }
            Ok(())
        }
        "convergence" => {
            if cli.levels.is_empty() {
                return Err(config_err("convergence needs --levels N1,N2,...".to_string()));
            }
            let plan = cfg.resolve(Some(1)).map_err(|e| config_err(e.to_string()))?;
            let rows = driver::convergence(&plan, &cli.levels).map_err(map_run_err)?;
            let mut buf = Vec::new();
            output::write_convergence_csv(&rows, &mut buf).unwrap();
            write_out(cli.out.as_deref(), &buf)
                .map_err(|e| (EXIT_NUMERICAL, format!("write failed: {e}")))?;
            Ok(())
        }
        "sweep" => {
            if cli.schemes.is_empty() {
                return Err(config_err("sweep needs --schemes A,B,...".to_string()));
            }
            let mut reports = Vec::new();
            for name in &cli.schemes {
                if Scheme::parse(name).is_none() {
                    return Err(config_err(format!(
                        "unknown scheme '{name}'; valid: {}",
                        SCHEME_NAMES.join(", ")
                    )));
                }
                let mut scheme_cfg = cfg.clone();
                scheme_cfg.scheme = Some(name.clone());
                let plan = scheme_cfg.resolve(None).map_err(|e| config_err(e.to_string()))?;
                let out = driver::execute(&plan).map_err(map_run_err)?;
                reports.push(out.report);
            }
            let mut buf = Vec::new();
            output::write_sweep_csv(&reports, &mut buf).unwrap();
            write_out(cli.out.as_deref(), &buf)
                .map_err(|e| (EXIT_NUMERICAL, format!("write failed: {e}")))?;
            Ok(())
        }
        other => Err(config_err(format!("unknown command '{other}'"))),
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--help" || a == "-h") || args.is_empty() {
        print_usage();
        return ExitCode::from(if args.is_empty() { EXIT_CONFIG } else { 0 });
    }
    let cli = match parse_args(&args) {
        Ok(cli) => cli,
        Err(msg) => {
            eprintln!("error: {msg}");
            print_usage();
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match run_command(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
