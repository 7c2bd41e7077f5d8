use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::Value;

use qwalk::bell::{bell_coins, bell_target, BellParams};
use qwalk::circuit::{cost_with, loglog_slope, CostModel};
use qwalk::error::Error;
use qwalk::io::{self, Meta};
use qwalk::log_scheme::synthesize_scheme2;
use qwalk::state::{target_fidelity, TargetState};
use qwalk::stepwise::synthesize_scheme1;
use qwalk::walk::{trace, Schedule};

const DEFAULT_TOL: f64 = 1e-10;

#[derive(Parser)]
#[command(name = "qwalk", version, about = "Coin schedules for quantum-walk state engineering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a schedule for a target state.
    Synth(SynthArgs),
    /// Run a schedule and write the final walk state.
    Run {
        #[arg(long)]
        schedule: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check that a schedule prepares a target.
    Verify {
        #[arg(long)]
        schedule: PathBuf,
        #[arg(long)]
        target: PathBuf,
        /// Accept when fidelity >= 1 - tol [default: $QWALK_TOL or 1e-10].
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Closed-form schedule for a generalized Bell state.
    Bell {
        #[command(flatten)]
        params: BellArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        target_out: Option<PathBuf>,
    },
    /// Lower a bipartite schedule to two sites and count long-distance CNOTs.
    Cost {
        #[arg(long)]
        schedule: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = CostModel::default().cnots_per_cross_block)]
        cnots_per_block: usize,
    },
    /// Cost stepwise schedules of random bipartite targets over a range of d.
    Sweep {
        #[arg(long, value_delimiter = ',', default_values_t = [4, 8, 16, 32, 64])]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Scheme {
    Stepwise,
    Log,
    Bell,
}

impl Scheme {
    fn name(self) -> &'static str {
        match self {
            Scheme::Stepwise => "stepwise",
            Scheme::Log => "log",
            Scheme::Bell => "bell",
        }
    }
}

#[derive(Args)]
struct BellArgs {
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    n: i64,
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    m: i64,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_enum, default_value_t = Scheme::Stepwise)]
    scheme: Scheme,
    /// Target state JSON file.
    #[arg(long, conflicts_with = "random")]
    target: Option<PathBuf>,
    /// Draw a random target (complex Gaussian amplitudes, normalized).
    #[arg(long)]
    random: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2)]
    c: usize,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    n: i64,
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    m: i64,
    #[arg(long)]
    out: PathBuf,
    /// Also write the target that was synthesized.
    #[arg(long)]
    target_out: Option<PathBuf>,
    /// Print every non-identity block.
    #[arg(long)]
    dump: bool,
}

/// Failure with the process exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NotPowerOfTwo(_) | Error::NotBipartite(_) | Error::NonFrontierBlock { .. } => 3,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn input(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(command: Command) -> CliResult<u8> {
    match command {
        Command::Synth(args) => synth(&args).map(|_| 0),
        Command::Run { schedule, out } => {
            let (schedule, _) = io::read_schedule(&schedule)?;
            let (state, _) = trace(&schedule)?;
            emit(out.as_deref(), &io::walk_state_to_json(&state)?)?;
            Ok(0)
        }
        Command::Verify { schedule, target, tol } => verify(&schedule, &target, tol),
        Command::Bell { params, out, target_out } => {
            let args = SynthArgs {
                scheme: Scheme::Bell,
                target: None,
                random: false,
                seed: 0,
                c: 2,
                d: Some(params.d),
                n: params.n,
                m: params.m,
                out,
                target_out,
                dump: false,
            };
            synth(&args).map(|_| 0)
        }
        Command::Cost {
            schedule,
            out,
            cnots_per_block,
        } => {
            let (schedule, _) = io::read_schedule(&schedule)?;
            let model = CostModel {
                cnots_per_cross_block: cnots_per_block,
            };
            let report = cost_with(&schedule, model)?;
            println!("{report}");
            if let Some(path) = out {
                io::write_json(path, &report)?;
            }
            Ok(0)
        }
        Command::Sweep { dims, seed, out } => sweep(&dims, seed, out.as_deref()).map(|_| 0),
    }
}

fn emit(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| input(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn synth(args: &SynthArgs) -> CliResult<()> {
    let mut meta = Meta::new();
    meta.insert("scheme".into(), Value::from(args.scheme.name()));
    let target = if args.scheme == Scheme::Bell {
        let d = args.d.ok_or_else(|| input("--d is required for the bell scheme"))?;
        let params = BellParams::new(d, args.n, args.m)?;
        meta.insert("n".into(), Value::from(params.n()));
        meta.insert("m".into(), Value::from(params.m()));
        bell_target(params)
    } else if let Some(path) = &args.target {
        io::read_target(path).map_err(|e| input(format!("{}: {e}", path.display())))?
    } else if args.random {
        let d = args.d.ok_or_else(|| input("--d is required with --random"))?;
        if args.c == 0 || d == 0 {
            return Err(input("--c and --d must be positive"));
        }
        meta.insert("seed".into(), Value::from(args.seed));
        TargetState::random(args.c, d, &mut ChaCha8Rng::seed_from_u64(args.seed))
    } else {
        return Err(input("give --target FILE or --random"));
    };

    let schedule = match args.scheme {
        Scheme::Stepwise => synthesize_scheme1(&target)?,
        Scheme::Log => synthesize_scheme2(&target)?,
        Scheme::Bell => {
            let params = BellParams::new(target.dimension(), args.n, args.m)?;
            bell_coins(params)?
        }
    };
    meta.insert("c".into(), Value::from(target.party_count()));
    meta.insert("d".into(), Value::from(target.dimension()));

    std::fs::write(&args.out, io::schedule_to_json(&schedule, &meta)?).map_err(Error::from)?;
    if let Some(path) = &args.target_out {
        std::fs::write(path, io::target_to_json(&target)?).map_err(Error::from)?;
    }
    println!(
        "{} steps, total shift {}, {} non-identity blocks in {} non-identity steps",
        schedule.steps.len(),
        schedule.total_shift(),
        schedule.non_identity_blocks(),
        schedule.non_identity_steps()
    );
    if args.dump {
        print!("{}", io::dump_blocks(&schedule));
    }
    Ok(())
}

fn tolerance(flag: Option<f64>) -> CliResult<f64> {
    if let Some(t) = flag {
        return Ok(t);
    }
    match std::env::var("QWALK_TOL") {
        Ok(v) => v.trim().parse().map_err(|_| input(format!("QWALK_TOL={v} is not a number"))),
        Err(_) => Ok(DEFAULT_TOL),
    }
}

fn verify(schedule: &Path, target: &Path, tol: Option<f64>) -> CliResult<u8> {
    let tol = tolerance(tol)?;
    let (schedule, _): (Schedule, Meta) = io::read_schedule(schedule)?;
    let target = io::read_target(target)?;
    let (state, log) = trace(&schedule)?;
    let fidelity = target_fidelity(&state, &target)?;
    println!("fidelity    {fidelity:.17}");
    println!("norm drift  {:.3e}", (state.norm() - 1.0).abs());
    for entry in &log {
        let tag = if entry.step == schedule.steps.len() { "final".to_string() } else { entry.step.to_string() };
        let status = if entry.coin_spread <= tol { "ok" } else { "spread" };
        println!("step {tag:>5}  coin {status:<6} {:.3e}", entry.coin_spread);
    }
    if fidelity >= 1.0 - tol {
        println!("PASS (tol {tol:e})");
        Ok(0)
    } else {
        println!("FAIL (tol {tol:e})");
        Ok(1)
    }
}

#[derive(Serialize)]
struct SweepRow {
    d: usize,
    cross_blocks: usize,
    long_distance_cnots: usize,
}

#[derive(Serialize)]
struct SweepReport {
    seed: u64,
    rows: Vec<SweepRow>,
    slope: f64,
}

fn sweep(dims: &[usize], seed: u64, out: Option<&Path>) -> CliResult<()> {
    if dims.len() < 2 || dims.contains(&0) {
        return Err(input("--dims needs at least two positive dimensions"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    println!("{:>6} {:>12} {:>14}", "d", "cross blocks", "long-distance");
    for &d in dims {
        let target = TargetState::random(2, d, &mut rng);
        let report = cost_with(&synthesize_scheme1(&target)?, CostModel::default())?;
        println!("{d:>6} {:>12} {:>14}", report.cross_blocks(), report.long_distance_cnots);
        rows.push(SweepRow {
            d,
            cross_blocks: report.cross_blocks(),
            long_distance_cnots: report.long_distance_cnots,
        });
    }
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.d as f64, r.long_distance_cnots as f64)).collect();
    let slope = loglog_slope(&points);
    println!("log-log slope {slope:.4}");
    if let Some(path) = out {
        io::write_json(path, &SweepReport { seed, rows, slope })?;
    }
    Ok(())
}
