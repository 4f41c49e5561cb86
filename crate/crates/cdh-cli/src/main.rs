//! Command-line front end: evaluate polynomials, tabulate measures,
//! sample trajectories, and run the verification suite.
//!
//! Exit codes: 0 success (all checks pass), 1 verification failure,
//! 2 invalid input.

mod report;

use clap::{Args, Parser, Subcommand};

use cdh::measure::{self, ProcessParams};
use cdh::poly::CdhParams;
use cdh::process;

#[derive(Parser)]
#[command(name = "cdh", version, about = "Continuous dual Hahn polynomials, measures, and processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the monic polynomial p_n on a grid; CSV `x,value`.
    Poly(PolyArgs),
    /// Tabulate a measure as JSON (optionally with a CSV density table).
    #[command(subcommand)]
    Measure(MeasureCmd),
    /// Sample process trajectories; CSV `replicate,time,state`.
    Sample(SampleArgs),
    /// Run a verification suite; JSON report array on stdout.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct FamilyArgs {
    /// Parameter α of the polynomial family.
    #[arg(long, allow_negative_numbers = true)]
    alpha: f64,
    /// Parameter β (with --gamma; reals).
    #[arg(long, requires = "gamma", conflicts_with_all = ["pair_re", "pair_im"], allow_negative_numbers = true)]
    beta: Option<f64>,
    /// Parameter γ (with --beta; reals).
    #[arg(long, allow_negative_numbers = true)]
    gamma: Option<f64>,
    /// Real part of the conjugate pair β, γ = re ∓ i·im.
    #[arg(long, requires = "pair_im", allow_negative_numbers = true)]
    pair_re: Option<f64>,
    /// Imaginary part of the conjugate pair.
    #[arg(long, allow_negative_numbers = true)]
    pair_im: Option<f64>,
}

impl FamilyArgs {
    fn params(&self) -> Result<CdhParams, String> {
        match (self.beta, self.gamma, self.pair_re, self.pair_im) {
            (Some(b), Some(g), None, None) => Ok(CdhParams::new_real(self.alpha, b, g)),
            (None, None, Some(re), Some(im)) => Ok(CdhParams::new_conjugate(self.alpha, re, im)),
            _ => Err("give either --beta/--gamma or --pair-re/--pair-im".into()),
        }
    }
}

#[derive(Args)]
struct PolyArgs {
    #[command(flatten)]
    family: FamilyArgs,
    /// Degree n of the polynomial.
    #[arg(long)]
    n: usize,
    /// Single evaluation point.
    #[arg(long, conflicts_with_all = ["x_min", "x_max", "x_steps"], allow_negative_numbers = true)]
    x: Option<f64>,
    #[arg(long, requires_all = ["x_max", "x_steps"], allow_negative_numbers = true)]
    x_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    x_max: Option<f64>,
    #[arg(long)]
    x_steps: Option<usize>,
}

#[derive(Args, Clone)]
struct ProcessArgs {
    /// Parameter A (real case; with --b).
    #[arg(long, requires = "b", conflicts_with_all = ["pair_re", "pair_im"], allow_negative_numbers = true)]
    a: Option<f64>,
    /// Parameter B (real case; B ≥ A).
    #[arg(long, allow_negative_numbers = true)]
    b: Option<f64>,
    /// Real part of the conjugate pair A, B = re ∓ i·im.
    #[arg(long, requires = "pair_im", allow_negative_numbers = true)]
    pair_re: Option<f64>,
    /// Imaginary part of the conjugate pair.
    #[arg(long, allow_negative_numbers = true)]
    pair_im: Option<f64>,
    /// Parameter C.
    #[arg(long, allow_negative_numbers = true)]
    c: f64,
}

impl ProcessArgs {
    fn params(&self) -> Result<ProcessParams, String> {
        match (self.a, self.b, self.pair_re, self.pair_im) {
            (Some(a), Some(b), None, None) => {
                ProcessParams::new_real(a, b, self.c).map_err(|e| e.to_string())
            }
            (None, None, Some(re), Some(im)) => {
                ProcessParams::new_conjugate(re, im, self.c).map_err(|e| e.to_string())
            }
            _ => Err("give either --a/--b or --pair-re/--pair-im".into()),
        }
    }
}

#[derive(Subcommand)]
enum MeasureCmd {
    /// Marginal law at time t.
    Marginal {
        #[command(flatten)]
        process: ProcessArgs,
        #[arg(long, allow_negative_numbers = true)]
        t: f64,
        /// lo:hi:steps for an additional CSV density table.
        #[arg(long)]
        density_grid: Option<String>,
    },
    /// Transition kernel from (s, x) to time t.
    Kernel {
        #[arg(long, allow_negative_numbers = true)]
        c: f64,
        #[arg(long, allow_negative_numbers = true)]
        s: f64,
        #[arg(long, allow_negative_numbers = true)]
        t: f64,
        #[arg(long, allow_negative_numbers = true)]
        x: f64,
        #[arg(long)]
        density_grid: Option<String>,
    },
    /// σ-finite entrance law at time t (unnormalized).
    Entrance {
        #[arg(long, allow_negative_numbers = true)]
        a: f64,
        #[arg(long, allow_negative_numbers = true)]
        c: f64,
        #[arg(long, allow_negative_numbers = true)]
        t: f64,
        #[arg(long)]
        density_grid: Option<String>,
    },
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    process: ProcessArgs,
    /// Comma-separated times, or the keyword `tau`.
    #[arg(long, allow_hyphen_values = true)]
    times: String,
    #[arg(long, default_value_t = 1)]
    replicates: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Emit the standard-form transform (relabels the clock).
    #[arg(long)]
    standard_form: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// orthogonality | martingale | chapman | marginal-evolution |
    /// entrance-limit | commutator | qvar-matrix | weyl | all
    #[arg(long)]
    suite: String,
    /// `default` or a path to a JSON grid file.
    #[arg(long, default_value = "default")]
    grid: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Operator expression for the weyl suite: normal-ordered, printed in
    /// canonical form, and verified to reduce to zero.
    #[arg(long)]
    expr: Option<String>,
}

fn fail(code: i32, msg: &str) -> ! {
    eprintln!("error: {msg}");
    std::process::exit(code);
}

/// 17 significant digits: round-trip exact for f64.
fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn main() {
    if let Ok(threads) = std::env::var("CDH_THREADS") {
        let n: usize = threads
            .parse()
            .unwrap_or_else(|_| fail(2, "CDH_THREADS must be a positive integer"));
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .ok();
    }
    let cli = Cli::parse();
    match cli.command {
        Command::Poly(args) => cmd_poly(args),
        Command::Measure(cmd) => cmd_measure(cmd),
        Command::Sample(args) => cmd_sample(args),
        Command::Verify(args) => cmd_verify(args),
    }
}

fn cmd_poly(args: PolyArgs) {
    let params = args.family.params().unwrap_or_else(|e| fail(2, &e));
    let grid: Vec<f64> = match (args.x, args.x_min, args.x_max, args.x_steps) {
        (Some(x), ..) => vec![x],
        (None, Some(lo), Some(hi), Some(steps)) => {
            if steps < 2 || hi <= lo {
                fail(2, "need x_min < x_max and x_steps >= 2");
            }
            (0..steps)
                .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
                .collect()
        }
        _ => fail(2, "give either --x or --x-min/--x-max/--x-steps"),
    };
    println!("x,value");
    for x in grid {
        match cdh::poly::eval_poly(&params, args.n, x) {
            Ok(v) => println!("{},{}", fmt17(x), fmt17(v)),
            Err(e) => fail(2, &e.to_string()),
        }
    }
}

fn parse_density_grid(spec: &str) -> (f64, f64, usize) {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        fail(2, "--density-grid wants lo:hi:steps");
    }
    let lo: f64 = parts[0].parse().unwrap_or_else(|_| fail(2, "bad grid lo"));
    let hi: f64 = parts[1].parse().unwrap_or_else(|_| fail(2, "bad grid hi"));
    let steps: usize = parts[2].parse().unwrap_or_else(|_| fail(2, "bad grid steps"));
    if !(lo > 0.0 && hi > lo && steps >= 2) {
        fail(2, "need 0 < lo < hi and steps >= 2");
    }
    (lo, hi, steps)
}

fn emit_measure(m: &measure::MixedMeasure, density_grid: Option<String>) {
    println!(
        "{}",
        serde_json::to_string_pretty(&m.to_json()).expect("measure serialization")
    );
    if let Some(spec) = density_grid {
        let (lo, hi, steps) = parse_density_grid(&spec);
        println!("x,density");
        for i in 0..steps {
            let x = lo + (hi - lo) * i as f64 / (steps - 1) as f64;
            match m.density_eval(x) {
                Ok(v) => println!("{},{}", fmt17(x), fmt17(v)),
                Err(e) => fail(2, &e.to_string()),
            }
        }
    }
}

fn cmd_measure(cmd: MeasureCmd) {
    match cmd {
        MeasureCmd::Marginal {
            process,
            t,
            density_grid,
        } => {
            let pp = process.params().unwrap_or_else(|e| fail(2, &e));
            let m = measure::marginal_law(&pp, t).unwrap_or_else(|e| fail(2, &e.to_string()));
            emit_measure(&m, density_grid);
        }
        MeasureCmd::Kernel {
            c,
            s,
            t,
            x,
            density_grid,
        } => {
            let m =
                measure::transition_kernel(c, s, t, x).unwrap_or_else(|e| fail(2, &e.to_string()));
            emit_measure(&m, density_grid);
        }
        MeasureCmd::Entrance {
            a,
            c,
            t,
            density_grid,
        } => {
            let m = measure::entrance_law(a, c, t).unwrap_or_else(|e| fail(2, &e.to_string()));
            emit_measure(&m, density_grid);
        }
    }
}

fn cmd_sample(args: SampleArgs) {
    let pp = args.process.params().unwrap_or_else(|e| fail(2, &e));
    let times: Vec<f64> = if args.times.trim() == "tau" {
        vec![pp.tau()]
    } else {
        args.times
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .unwrap_or_else(|_| fail(2, "bad --times list"))
    };
    let ensemble = process::sample_ensemble(&pp, &times, args.replicates, args.seed)
        .unwrap_or_else(|e| fail(2, &e.to_string()));
    println!("replicate,time,state");
    for (i, traj) in ensemble.iter().enumerate() {
        let traj = if args.standard_form {
            process::standard_form_transform(&pp, traj)
                .unwrap_or_else(|e| fail(2, &e.to_string()))
        } else {
            traj.clone()
        };
        for (t, x) in traj.times.iter().zip(&traj.states) {
            println!("{i},{},{}", fmt17(*t), fmt17(*x));
        }
    }
}

fn cmd_verify(args: VerifyArgs) {
    let grid = report::load_grid(&args.grid).unwrap_or_else(|e| fail(2, &e));
    let reports = report::run_suites(&args.suite, &grid, args.seed, args.expr.as_deref())
        .unwrap_or_else(|e| fail(2, &e));
    if reports.is_empty() {
        fail(2, "suite selected no checks (empty grid)");
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&reports).expect("report serialization")
    );
    if reports.iter().all(|r| r.pass) {
        std::process::exit(0);
    }
    std::process::exit(1);
}
