use std::path::PathBuf;
use std::process::ExitCode;

use bhwave_cli::commands::{self, TestFn, TestFnArgs};
use bhwave_cli::config::{key_help, Assignments, Config};
use bhwave_core::{Error, LawKind, Result};
use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

/// Exit status for malformed command lines.
const USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(
    name = "bhwave",
    version,
    about = "Blow-up of semilinear waves on Schwarzschild backgrounds",
    after_help = key_help()
)]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

/// Flags overriding config-file values; all accept the file's value syntax.
#[derive(Args, Debug)]
struct Overrides {
    /// Config file with `key = value` lines and `[section]` headers.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Any config key, e.g. `--set t_max_cap=500`; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long, global = true, help = "spatial dimension [default: 3]")]
    n: Option<String>,
    #[arg(long = "mass", global = true, help = "black-hole mass M [default: 1]")]
    mass: Option<String>,
    #[arg(long, global = true, help = "nonlinearity power [default: 2]")]
    p: Option<String>,
    #[arg(long, global = true, help = "u for |u|^p, ut for |u_t|^p [default: u]")]
    kind: Option<String>,
    #[arg(long, global = true, help = "data amplitude [default: 0.5]")]
    eps: Option<String>,
    #[arg(long, global = true, help = "damping strength [default: 0]")]
    mu1: Option<String>,
    #[arg(long, global = true, help = "damping exponent, > 1 [default: 2]")]
    beta: Option<String>,
    #[arg(long, global = true, help = "potential strength [default: 0]")]
    mu2: Option<String>,
    #[arg(long, global = true, help = "potential exponent, > 2 [default: 3]")]
    gamma: Option<String>,
    #[arg(long = "support-radius", global = true, help = "data support radius R [default: 2]")]
    support_radius: Option<String>,
    #[arg(long, global = true, help = "tortoise spacing [default: 0.02]")]
    ds: Option<String>,
    #[arg(long, global = true, help = "dt/ds [default: 0.9]")]
    cfl: Option<String>,
    #[arg(long = "t-max", global = true, help = "final time [default: 64]")]
    t_max: Option<String>,
    #[arg(long, global = true, help = "blow-up amplitude [default: 1e10]")]
    threshold: Option<String>,
    #[arg(long = "output-stride", global = true, help = "steps between diagnostic rows [default: automatic]")]
    output_stride: Option<String>,
    #[arg(long, global = true, help = "Richardson refinement true|false [default: true]")]
    refine: Option<String>,
    #[arg(long = "out-dir", global = true, help = "output directory [default: out, env BHWAVE_OUT_DIR]")]
    out_dir: Option<String>,
    /// Worker threads [default: available parallelism].
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// More progress output; repeat for more.
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Background geometry tables.
    Geometry {
        #[command(subcommand)]
        action: GeometryAction,
    },
    /// Tabulate a test function and its certificate.
    Testfn(TestFnCli),
    /// Run one blow-up simulation.
    Solve,
    /// Lifespan sweep over a geometric amplitude ladder.
    Sweep {
        /// Discard stored records instead of resuming.
        #[arg(long)]
        fresh: bool,
    },
    /// Fit the lifespan law to stored sweep records.
    Fit {
        /// JSON-lines records [default: <out_dir>/records.jsonl].
        #[arg(long)]
        records: Option<PathBuf>,
        /// Law to fit [default: the theorem's law].
        #[arg(long)]
        law: Option<String>,
    },
    /// Run the certificate suite.
    Verify,
}

#[derive(Subcommand, Debug)]
enum GeometryAction {
    /// CSV of r, s, F, Q, J, D, V on radii log-spaced in r - 2M.
    Probe {
        #[arg(long = "r-min")]
        r_min: Option<f64>,
        #[arg(long = "r-max", default_value_t = 50.0)]
        r_max: f64,
        #[arg(long, default_value_t = 200)]
        points: usize,
    },
    /// Critical exponents and the lifespan law for the configured power.
    Exponents,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Which {
    Phi,
    Psi,
    Psi0,
    Ba,
}

#[derive(Args, Debug)]
struct TestFnCli {
    #[arg(value_enum)]
    which: Which,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long = "s-min", default_value_t = -60.0, allow_negative_numbers = true)]
    s_min: f64,
    #[arg(long = "s-max", default_value_t = 200.0)]
    s_max: f64,
    #[arg(long = "r-max", default_value_t = 200.0)]
    r_max: f64,
    /// Exponent of b_a.
    #[arg(long, default_value_t = 0.5)]
    a: f64,
    /// Times for b_a.
    #[arg(long = "t-list", value_delimiter = ',', default_value = "10,20,40,80")]
    t_list: Vec<f64>,
    #[arg(long = "s-points", default_value_t = 40)]
    s_points: usize,
}

fn resolve(o: &Overrides) -> Result<Config> {
    let mut a = match &o.config {
        Some(path) => Assignments::from_file(path)?,
        None => Assignments::default(),
    };
    let flags = [
        ("n", "--n", &o.n),
        ("M", "--mass", &o.mass),
        ("p", "--p", &o.p),
        ("kind", "--kind", &o.kind),
        ("eps", "--eps", &o.eps),
        ("mu1", "--mu1", &o.mu1),
        ("beta", "--beta", &o.beta),
        ("mu2", "--mu2", &o.mu2),
        ("gamma", "--gamma", &o.gamma),
        ("R", "--support-radius", &o.support_radius),
        ("ds", "--ds", &o.ds),
        ("cfl", "--cfl", &o.cfl),
        ("t_max", "--t-max", &o.t_max),
        ("threshold", "--threshold", &o.threshold),
        ("output_stride", "--output-stride", &o.output_stride),
        ("refine", "--refine", &o.refine),
        ("out_dir", "--out-dir", &o.out_dir),
    ];
    for item in &o.set {
        let (k, v) = item.split_once('=').ok_or_else(|| Error::Parse {
            location: "flag --set".into(),
            message: format!("expected KEY=VALUE, found {item:?}"),
        })?;
        a.set(k.trim(), v.trim(), &format!("flag --set {}", k.trim()), None)?;
    }
    for (key, flag, value) in flags {
        if let Some(v) = value {
            a.set(key, v, &format!("flag {flag}"), None)?;
        }
    }
    if o.verbose > 0 {
        a.set("verbosity", &o.verbose.to_string(), "flag --verbose", None)?;
    }
    let env = std::env::var("BHWAVE_OUT_DIR").ok();
    a.resolve(env.as_deref())
}

fn dispatch(cli: Cli) -> Result<i32> {
    if let Some(jobs) = cli.overrides.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .map_err(|e| Error::Validation(format!("--jobs: {e}")))?;
    }
    let config = resolve(&cli.overrides)?;
    match cli.command {
        Command::Geometry { action } => {
            let stdout = std::io::stdout();
            let mut out = stdout.lock();
            match action {
                GeometryAction::Probe { r_min, r_max, points } => commands::geometry_probe(&config, r_min, r_max, points, &mut out),
                GeometryAction::Exponents => commands::geometry_exponents(&config, &mut out),
            }
        }
        Command::Testfn(t) => {
            let which = match t.which {
                Which::Phi => TestFn::Phi,
                Which::Psi => TestFn::Psi,
                Which::Psi0 => TestFn::Psi0,
                Which::Ba => TestFn::Ba,
            };
            let args = TestFnArgs {
                which,
                lambda: t.lambda,
                s_min: t.s_min,
                s_max: t.s_max,
                r_max: t.r_max,
                a: t.a,
                t_list: t.t_list,
                s_points: t.s_points,
            };
            commands::testfn(&config, &args)
        }
        Command::Solve => commands::solve(&config),
        Command::Sweep { fresh } => commands::sweep(&config, fresh),
        Command::Fit { records, law } => {
            let law: Option<LawKind> = law.map(|l| l.parse()).transpose()?;
            commands::fit(&config, records.as_deref(), law)
        }
        Command::Verify => commands::verify(&config),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
