use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ppweno::harness::{builtin_cases, convergence_study, run_case};
use ppweno::io::{write_convergence, write_run, CaseSource, IoError, IoResult, RunConfig, OUTPUT_ROOT_VAR};
use ppweno::rk::{RkScheme, StepReport};

#[derive(Parser)]
#[command(name = "ppweno", version, about = "WENO5 solver with maximum-principle and positivity-preserving flux limiters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one case and write field and step-log CSV files.
    Run {
        #[command(flatten)]
        common: Common,
        /// Cells along x (y follows from square cells).
        #[arg(long)]
        n: Option<usize>,
    },
    /// Run a doubling grid sequence and write a convergence table.
    Converge {
        #[command(flatten)]
        common: Common,
        /// Comma-separated doubling sequence, e.g. 40,80,160.
        #[arg(long, value_delimiter = ',', required = true)]
        grids: Vec<usize>,
    },
    /// List the built-in cases.
    List {
        /// Print full case definitions as JSON.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum Rk {
    Rk3,
    Rk4,
}

#[derive(Args)]
struct Common {
    /// Built-in case name or path to a JSON case file.
    #[arg(long)]
    case: String,
    #[arg(long, value_enum)]
    limiter: Option<Switch>,
    #[arg(long)]
    cfl: Option<f64>,
    #[arg(long = "eps-weno")]
    eps_weno: Option<f64>,
    #[arg(long, value_enum)]
    rk: Option<Rk>,
    /// Final time.
    #[arg(long = "t-end")]
    t_end: Option<f64>,
    /// Output directory [default: $PPWENO_OUTPUT_ROOT/<case> or output/<case>].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print step progress to stderr (repeat for every step).
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

impl Common {
    fn config(&self, grids: Vec<usize>) -> RunConfig {
        RunConfig {
            grids,
            limiter: self.limiter.map(|s| matches!(s, Switch::On)),
            cfl: self.cfl,
            eps_weno: self.eps_weno,
            rk: self.rk.map(|r| match r {
                Rk::Rk3 => RkScheme::Rk3,
                Rk::Rk4 => RkScheme::Rk4,
            }),
            t_end: self.t_end,
            out_dir: self.out.clone(),
            verbosity: self.verbose,
            ..RunConfig::new(CaseSource::parse(&self.case))
        }
    }
}

fn progress(verbosity: u8, prefix: &str, r: &StepReport) {
    let every = if verbosity > 1 { 1 } else { 100 };
    if verbosity > 0 && r.step % every == 0 {
        eprintln!(
            "{prefix}step {:6} t {:.6e} dt {:.3e} limited {:6} min_rho {:.3e}",
            r.step, r.time, r.dt, r.limited_faces, r.min_density
        );
    }
}

fn run(cfg: RunConfig) -> IoResult<()> {
    let case = cfg.resolve()?;
    let res = run_case(&case, None, &mut |r| progress(cfg.verbosity, "", r))?;
    let dir = cfg.output_dir(&case.name);
    for path in write_run(&dir, &res)? {
        println!("wrote {}", path.display());
    }
    let pressure = res.min_pressure().map(|p| format!(" min_pressure {p:e}")).unwrap_or_default();
    println!(
        "{}: {}x{} cells, {} steps, min_density {:e}{pressure}, limited faces {}",
        case.name,
        res.nx,
        res.ny,
        res.steps(),
        res.min_density(),
        res.limiter_activations()
    );
    if let Some(n) = res.norms {
        println!("l1 {:e} l1_mean {:e} linf {:e}", n.l1, n.l1_mean, n.linf);
    }
    Ok(())
}

fn converge(cfg: RunConfig) -> IoResult<()> {
    let case = cfg.resolve()?;
    let report = convergence_study(&case, &cfg.grids, &mut |n, r| progress(cfg.verbosity, &format!("[{n}] "), r))?;
    let path = write_convergence(&cfg.output_dir(&case.name), &case, &report)?;
    println!("wrote {}", path.display());
    println!("{:>6} {:>12} {:>12} {:>7} {:>12} {:>7}", "n", "l1", "l1_mean", "order", "linf", "order");
    for r in &report.rows {
        let ord = |o: Option<f64>| o.map(|v| format!("{v:.2}")).unwrap_or_else(|| "-".into());
        println!(
            "{:>6} {:>12.4e} {:>12.4e} {:>7} {:>12.4e} {:>7}",
            r.n,
            r.l1,
            r.l1_mean,
            ord(r.l1_order),
            r.linf,
            ord(r.linf_order)
        );
    }
    Ok(())
}

fn list(json: bool) {
    let cases = builtin_cases();
    if json {
        let all: Vec<String> = cases.iter().map(|c| c.to_json()).collect();
        println!("[{}]", all.join(",\n"));
        return;
    }
    for c in cases {
        println!("{:20} {}", c.name, c.description);
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { common, n } => run(common.config(n.into_iter().collect())),
        Command::Converge { common, grids } => converge(common.config(grids)),
        Command::List { json } => {
            list(json);
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(&e),
    }
}

fn report(e: &IoError) -> ExitCode {
    eprintln!("ppweno: {e}");
    if matches!(e, IoError::Filesystem { .. }) {
        eprintln!("ppweno: output root can be set with {OUTPUT_ROOT_VAR}");
    }
    eprintln!("{}", e.machine_line());
    ExitCode::from(e.exit_code() as u8)
}
