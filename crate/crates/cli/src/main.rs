//! `cvass`: command-line front end for continuous VASS reachability.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{error::ErrorKind, Args, Parser, Subcommand};
use thiserror::Error;

use cvass::geometry::{describe, GeomError, ReachDescriptor};
use cvass::lp::{self, LinearSystem, LpError};
use cvass::model::{
    parse_configuration, parse_lps, parse_query, parse_vass, parse_witness, simulate, write_configuration,
    write_lps, write_query, write_vass, write_witness, Configuration, Lps, ModelError, QueryFile, RunWitness,
    SemanticsMode, Vass,
};
use cvass::oracle::{self, GridSpec, OracleError};
use cvass::reach::{self, EnumBudget, EnumStats, Query, ReachError, Verdict};
use cvass::zerotest::{self, ExactCoverInstance, ZeroTestError};
use cvass::{Rational, RationalVec};

const EXIT_REACHABLE: u8 = 0;
const EXIT_UNREACHABLE: u8 = 1;
const EXIT_INCONCLUSIVE: u8 = 2;
const EXIT_ERROR: u8 = 3;

/// Default repetition bound for continuous zero-test schemes.
const DEFAULT_ZTEST_REPS: usize = 64;

#[derive(Debug, Error)]
enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Model(#[from] ModelError),
    #[error("{0}")]
    Reach(#[from] ReachError),
    #[error("{0}")]
    ZeroTest(#[from] ZeroTestError),
    #[error("{0}")]
    Lp(#[from] LpError),
    #[error("{0}")]
    Oracle(#[from] OracleError),
    #[error("{0}")]
    Geom(#[from] GeomError),
    #[error("{0}")]
    Usage(String),
}

type CliResult = Result<u8, CliError>;

fn usage<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Usage(msg.into()))
}

#[derive(Debug, Parser)]
#[command(name = "cvass", version, about = "Reachability for continuous vector addition systems with states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct QueryArgs {
    /// Query file; relative `vass` and `lps` paths resolve against its directory.
    #[arg(long)]
    query: Option<PathBuf>,
    #[arg(long)]
    vass: Option<PathBuf>,
    #[arg(long)]
    lps: Option<PathBuf>,
    /// Source configuration, e.g. "q0 0 1/2".
    #[arg(long)]
    from: Option<String>,
    /// Target configuration.
    #[arg(long)]
    to: Option<String>,
    /// q, qnonneg, ztest-cont or ztest-disc.
    #[arg(long)]
    mode: Option<String>,
    /// Cycle repetition bound for continuous zero-test schemes.
    #[arg(long)]
    reps: Option<usize>,
}

#[derive(Debug, Args)]
struct BudgetArgs {
    #[arg(long, conflicts_with = "exhaustive")]
    max_cycles: Option<usize>,
    #[arg(long, conflicts_with = "exhaustive")]
    max_cycle_len: Option<usize>,
    #[arg(long, conflicts_with = "exhaustive")]
    max_path_len: Option<usize>,
    #[arg(long, conflicts_with = "exhaustive")]
    max_schemes: Option<usize>,
    /// Search up to the completeness bounds so that Unreachable is definitive.
    #[arg(long)]
    exhaustive: bool,
    /// Worker threads for scheme checking.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decide reachability along a given linear path scheme.
    Check {
        #[command(flatten)]
        query: QueryArgs,
        /// Write the witness here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decide reachability by enumerating schemes.
    Solve {
        #[command(flatten)]
        query: QueryArgs,
        #[command(flatten)]
        budget: BudgetArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate a run; exits 1 and names the failing step if it is invalid.
    Verify {
        #[arg(long)]
        vass: PathBuf,
        #[arg(long)]
        witness: PathBuf,
        #[arg(long, default_value = "q")]
        mode: String,
        /// Also require the run to end here.
        #[arg(long)]
        to: Option<String>,
    },
    /// Print a witness file in normal form.
    Witness {
        #[arg(long)]
        vass: PathBuf,
        #[arg(long)]
        witness: PathBuf,
        /// Annotate each step with the configuration it reaches.
        #[arg(long)]
        trace: bool,
    },
    /// Print the reachability-set descriptor of a scheme.
    Describe {
        #[arg(long)]
        vass: PathBuf,
        #[arg(long)]
        lps: PathBuf,
    },
    /// Generate instances.
    Gen {
        #[command(subcommand)]
        kind: GenCommand,
    },
    /// Membership raster of a 2-dimensional scheme's displacement set as CSV.
    SampleRegion {
        #[arg(long)]
        vass: PathBuf,
        #[arg(long)]
        lps: PathBuf,
        /// "x0,x1,y0,y1".
        #[arg(long, default_value = "-4,4,-4,4")]
        window: String,
        #[arg(long, default_value_t = 33)]
        resolution: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Brute-force reference procedures.
    Oracle {
        #[command(subcommand)]
        kind: OracleCommand,
    },
}

#[derive(Debug, Subcommand)]
enum GenCommand {
    /// Multiplier-gadget chain for an ExactCover instance.
    Exactcover {
        /// Comma-separated distinct primes.
        #[arg(long)]
        universe: String,
        /// Sets separated by `;`, elements by `,`.
        #[arg(long)]
        sets: String,
        #[arg(long)]
        out_dir: PathBuf,
        /// Base name of the emitted files.
        #[arg(long, default_value = "exactcover")]
        name: String,
    },
}

#[derive(Debug, Subcommand)]
enum OracleCommand {
    /// Coefficient-grid run search along a scheme.
    Grid {
        #[command(flatten)]
        query: QueryArgs,
        #[arg(long, default_value_t = 8)]
        denom: u32,
        #[arg(long, default_value_t = 2)]
        max_reps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fourier-Motzkin feasibility of a linear system file.
    Fm {
        #[arg(long)]
        system: PathBuf,
    },
    /// Simplex feasibility of a linear system file.
    Lp {
        #[arg(long)]
        system: PathBuf,
    },
    /// Breadth-first search over discrete zero-test runs along a scheme.
    Bfs {
        #[command(flatten)]
        query: QueryArgs,
        #[arg(long, default_value_t = 64)]
        bound: i64,
    },
    /// Angular classification of a point against a planar cycle cone.
    Cone2d {
        /// Generators separated by `;`, e.g. "1 0;0 1".
        #[arg(long)]
        gens: String,
        #[arg(long)]
        point: String,
    },
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn parse_mode(s: &str) -> Result<SemanticsMode, CliError> {
    SemanticsMode::from_name(s).map_or_else(|| usage(format!("unknown mode `{s}`")), Ok)
}

fn parse_vec(s: &str) -> Result<RationalVec, CliError> {
    s.split_whitespace()
        .map(|t| t.parse::<Rational>().map_err(|e| CliError::Usage(e.to_string())))
        .collect()
}

/// A fully resolved query.
struct Loaded {
    vass: Vass,
    lps: Option<Lps>,
    source: Configuration,
    target: Configuration,
    mode: SemanticsMode,
    reps: Option<usize>,
}

impl QueryArgs {
    fn load(&self) -> Result<Loaded, CliError> {
        let (file, base) = match &self.query {
            Some(p) => (parse_query(&read(p)?)?, p.parent().map(Path::to_path_buf).unwrap_or_default()),
            None => (QueryFile::default(), PathBuf::new()),
        };
        let pick = |flag: &Option<PathBuf>, stored: &Option<String>| {
            flag.clone().or_else(|| stored.as_ref().map(|s| base.join(s)))
        };
        let Some(vass_path) = pick(&self.vass, &file.vass) else {
            return usage("no VASS given (use --vass or a query file)");
        };
        let lps_path = pick(&self.lps, &file.lps);
        let vass_text = read(&vass_path)?;
        let lps_text = lps_path.as_deref().map(read).transpose()?;
        let vass = parse_vass(&vass_text)?;
        let lps = lps_text.map(|t| parse_lps(&t, &vass)).transpose()?;
        let Some(from) = self.from.clone().or(file.from) else { return usage("no source configuration") };
        let Some(to) = self.to.clone().or(file.to) else { return usage("no target configuration") };
        let mode = match &self.mode {
            Some(m) => parse_mode(m)?,
            None => file.mode.unwrap_or(SemanticsMode::Q),
        };
        Ok(Loaded {
            source: parse_configuration(&vass, &from)?,
            target: parse_configuration(&vass, &to)?,
            vass,
            lps,
            mode,
            reps: self.reps.or(file.reps),
        })
    }
}

/// Prints the result line and the witness, returning the exit code.
fn report(vass: &Vass, verdict: &Verdict, out: Option<&Path>) -> CliResult {
    println!("RESULT {}", verdict.name());
    match verdict {
        Verdict::Reachable { witness, scheme } => {
            let text = write_witness(witness, vass);
            println!("scheme {} cycles, {} transitions", scheme.num_cycles(), scheme.len());
            println!("witness {} steps", witness.steps.len());
            match out {
                Some(p) => write(p, &text)?,
                None => print!("{text}"),
            }
            Ok(EXIT_REACHABLE)
        }
        Verdict::Unreachable => Ok(EXIT_UNREACHABLE),
        Verdict::Inconclusive(why) => {
            println!("reason {why}");
            Ok(EXIT_INCONCLUSIVE)
        }
    }
}

fn decide_scheme(q: &Loaded, lps: &Lps) -> Result<Verdict, CliError> {
    Ok(match q.mode {
        SemanticsMode::Q => reach::decide_lps_q(&q.vass, lps, &q.source, &q.target)?,
        SemanticsMode::QNonNeg => reach::decide_lps_nonneg(&q.vass, lps, &q.source, &q.target)?,
        SemanticsMode::ZTestContinuous => zerotest::decide_lps_continuous_ztest(
            &q.vass,
            lps,
            &q.source,
            &q.target,
            q.reps.unwrap_or(DEFAULT_ZTEST_REPS),
        )?,
        SemanticsMode::ZTestDiscrete => zerotest::decide_lps_discrete_ztest(&q.vass, lps, &q.source, &q.target)?,
    })
}

fn cmd_check(args: &QueryArgs, out: Option<&Path>) -> CliResult {
    let q = args.load()?;
    let Some(lps) = &q.lps else { return usage("check needs a scheme (--lps)") };
    let verdict = decide_scheme(&q, lps)?;
    report(&q.vass, &verdict, out)
}

fn budget(vass: &Vass, b: &BudgetArgs) -> EnumBudget {
    let mut budget = if b.exhaustive { EnumBudget::exhaustive(vass) } else { EnumBudget::for_vass(vass) };
    budget.max_cycles = b.max_cycles.unwrap_or(budget.max_cycles);
    budget.max_cycle_len = b.max_cycle_len.unwrap_or(budget.max_cycle_len);
    budget.max_path_len = b.max_path_len.unwrap_or(budget.max_path_len);
    budget.max_schemes = b.max_schemes.unwrap_or(budget.max_schemes);
    budget.jobs = b.jobs.max(1);
    budget
}

fn print_stats(s: &EnumStats) {
    println!(
        "search walks={} cycles={} schemes={} exhaustive={}",
        s.walks, s.simple_cycles, s.schemes_checked, s.exhaustive
    );
}

fn cmd_solve(args: &QueryArgs, b: &BudgetArgs, out: Option<&Path>) -> CliResult {
    let q = args.load()?;
    match q.mode {
        SemanticsMode::Q | SemanticsMode::QNonNeg => {
            let query = Query { vass: &q.vass, source: q.source.clone(), target: q.target.clone(), mode: q.mode, scheme: None };
            let (verdict, stats) = reach::solve_general(&query, &budget(&q.vass, b))?;
            let code = report(&q.vass, &verdict, out)?;
            print_stats(&stats);
            Ok(code)
        }
        // Zero-test queries are only decided along their scheme.
        SemanticsMode::ZTestContinuous | SemanticsMode::ZTestDiscrete => {
            let Some(lps) = &q.lps else {
                return usage(format!("mode {} needs a scheme (--lps)", q.mode));
            };
            let verdict = decide_scheme(&q, lps)?;
            report(&q.vass, &verdict, out)
        }
    }
}

fn load_run(vass: &Path, witness: &Path) -> Result<(Vass, RunWitness), CliError> {
    let (vt, wt) = (read(vass)?, read(witness)?);
    let v = parse_vass(&vt)?;
    let w = parse_witness(&wt, &v)?;
    Ok((v, w))
}

fn cmd_verify(vass: &Path, witness: &Path, mode: &str, to: Option<&str>) -> CliResult {
    let mode = parse_mode(mode)?;
    let (v, w) = load_run(vass, witness)?;
    let target = to.map(|t| parse_configuration(&v, t)).transpose()?;
    match simulate(&v, &w, mode) {
        Ok(end) => {
            if let Some(t) = target.filter(|t| *t != end) {
                println!("INVALID run ends at {}, expected {}", write_configuration(&v, &end), write_configuration(&v, &t));
                return Ok(EXIT_UNREACHABLE);
            }
            println!("VALID {} steps, ends at {}", w.steps.len(), write_configuration(&v, &end));
            Ok(EXIT_REACHABLE)
        }
        Err(e) => {
            println!("INVALID {e}");
            Ok(EXIT_UNREACHABLE)
        }
    }
}

fn cmd_witness(vass: &Path, witness: &Path, trace: bool) -> CliResult {
    let (v, w) = load_run(vass, witness)?;
    if !trace {
        print!("{}", write_witness(&w, &v));
        return Ok(EXIT_REACHABLE);
    }
    let mut s = format!("format 1\nstart {}\n", write_configuration(&v, &w.start));
    let mut x = w.start.values.clone();
    for (t, a) in &w.steps {
        x.add_scaled(a, v.label(*t));
        let (_, dst) = v.transition(*t);
        writeln!(s, "step {} {}  # {} {}", v.transition_name(*t), a, v.state_name(dst), x).unwrap();
    }
    print!("{s}");
    Ok(EXIT_REACHABLE)
}

fn descriptor_text(d: &ReachDescriptor) -> String {
    let mut s = format!("dim {}\n", d.dim);
    writeln!(s, "zonotope {} generators, sigma {}", d.zono.generators().len(), d.zono.sigma()).unwrap();
    for (g, class) in d.zono.generators().iter().zip(d.zono.classes()) {
        writeln!(s, "  gen {g}  # {} labels", class.len()).unwrap();
    }
    for (k, (block, members)) in d.cone_blocks.iter().zip(&d.block_members).enumerate() {
        let ids: Vec<String> = members.iter().map(|m| m.to_string()).collect();
        writeln!(s, "cone {k} rank {} cycles {}", block.rank(), ids.join(",")).unwrap();
        for g in block.generators() {
            writeln!(s, "  gen {g}").unwrap();
        }
    }
    s
}

fn cmd_describe(vass: &Path, lps: &Path) -> CliResult {
    let (vt, lt) = (read(vass)?, read(lps)?);
    let v = parse_vass(&vt)?;
    let l = parse_lps(&lt, &v)?;
    print!("{}", descriptor_text(&describe(&l, &v)));
    Ok(EXIT_REACHABLE)
}

fn parse_u64_list(s: &str) -> Result<Vec<u64>, CliError> {
    s.split(',')
        .map(|t| t.trim().parse().map_err(|_| CliError::Usage(format!("invalid element `{t}`"))))
        .collect()
}

fn cmd_gen_exactcover(universe: &str, sets: &str, out_dir: &Path, name: &str) -> CliResult {
    let universe = parse_u64_list(universe)?;
    let sets = sets.split(';').map(parse_u64_list).collect::<Result<Vec<_>, _>>()?;
    let inst = ExactCoverInstance::new(universe, sets)?;
    let chain = zerotest::gen_exactcover(&inst);
    fs::create_dir_all(out_dir).map_err(|source| CliError::Io { path: out_dir.to_path_buf(), source })?;
    let (vf, lf, qf) = (format!("{name}.vass"), format!("{name}.lps"), format!("{name}.query"));
    let query = QueryFile {
        vass: Some(vf.clone()),
        lps: Some(lf.clone()),
        from: Some(write_configuration(&chain.vass, &chain.source)),
        to: Some(write_configuration(&chain.vass, &chain.target)),
        mode: Some(SemanticsMode::ZTestContinuous),
        reps: Some(DEFAULT_ZTEST_REPS),
    };
    write(&out_dir.join(&vf), &write_vass(&chain.vass))?;
    write(&out_dir.join(&lf), &write_lps(&chain.lps, &chain.vass))?;
    write(&out_dir.join(&qf), &write_query(&query))?;
    println!("exponent {}", inst.exponent());
    println!("target {}", inst.target_product());
    for f in [vf, lf, qf] {
        println!("wrote {f}");
    }
    Ok(EXIT_REACHABLE)
}

fn parse_window(s: &str) -> Result<(Rational, Rational, Rational, Rational), CliError> {
    let parts: Vec<Rational> = s
        .split(',')
        .map(|t| t.trim().parse::<Rational>().map_err(|e| CliError::Usage(e.to_string())))
        .collect::<Result<_, _>>()?;
    match <[Rational; 4]>::try_from(parts) {
        Ok([x0, x1, y0, y1]) => Ok((x0, x1, y0, y1)),
        Err(_) => usage("window must be `x0,x1,y0,y1`"),
    }
}

fn cmd_sample_region(vass: &Path, lps: &Path, window: &str, resolution: usize, out: Option<&Path>) -> CliResult {
    let window = parse_window(window)?;
    let (vt, lt) = (read(vass)?, read(lps)?);
    let v = parse_vass(&vt)?;
    let l = parse_lps(&lt, &v)?;
    let raster = oracle::rasterize(&describe(&l, &v), window, resolution)?;
    let csv = oracle::raster_csv(&raster);
    match out {
        Some(p) => write(p, &csv)?,
        None => print!("{csv}"),
    }
    Ok(EXIT_REACHABLE)
}

fn feasibility(feasible: bool) -> CliResult {
    println!("{}", if feasible { "feasible" } else { "infeasible" });
    Ok(if feasible { EXIT_REACHABLE } else { EXIT_UNREACHABLE })
}

fn cmd_oracle(kind: &OracleCommand) -> CliResult {
    match kind {
        OracleCommand::Grid { query, denom, max_reps, out } => {
            let q = query.load()?;
            let Some(lps) = &q.lps else { return usage("grid search needs a scheme (--lps)") };
            if *denom == 0 {
                return usage("--denom must be positive");
            }
            let found = oracle::grid_search(&q.vass, lps, &q.source, &q.target, q.mode, GridSpec::new(*denom, *max_reps))?;
            let verdict = match found {
                Some(witness) => Verdict::Reachable { witness, scheme: lps.clone() },
                None => Verdict::Inconclusive("no grid run found".into()),
            };
            report(&q.vass, &verdict, out.as_deref())
        }
        OracleCommand::Fm { system } => feasibility(oracle::fm_feasible(&LinearSystem::parse(&read(system)?)?)?),
        OracleCommand::Lp { system } => feasibility(lp::feasible(&LinearSystem::parse(&read(system)?)?).is_feasible()),
        OracleCommand::Bfs { query, bound } => {
            let q = query.load()?;
            let Some(lps) = &q.lps else { return usage("bfs needs a scheme (--lps)") };
            let hit = oracle::bfs_discrete(&q.vass, lps, &q.source, &q.target, *bound);
            println!("RESULT {}", if hit { "reachable" } else { "inconclusive" });
            if !hit {
                println!("reason not found within bound {bound}");
            }
            Ok(if hit { EXIT_REACHABLE } else { EXIT_INCONCLUSIVE })
        }
        OracleCommand::Cone2d { gens, point } => {
            let gens = gens.split(';').map(parse_vec).collect::<Result<Vec<_>, _>>()?;
            let y = parse_vec(point)?;
            if y.dim() != 2 || gens.iter().any(|g| g.dim() != 2) {
                return usage("cone2d works in dimension 2");
            }
            let inside = oracle::cone_classify_2d(&gens, &y);
            println!("{}", if inside { "member" } else { "non-member" });
            Ok(if inside { EXIT_REACHABLE } else { EXIT_UNREACHABLE })
        }
    }
}

fn run(cli: &Cli) -> CliResult {
    match &cli.command {
        Command::Check { query, out } => cmd_check(query, out.as_deref()),
        Command::Solve { query, budget, out } => cmd_solve(query, budget, out.as_deref()),
        Command::Verify { vass, witness, mode, to } => cmd_verify(vass, witness, mode, to.as_deref()),
        Command::Witness { vass, witness, trace } => cmd_witness(vass, witness, *trace),
        Command::Describe { vass, lps } => cmd_describe(vass, lps),
        Command::Gen { kind: GenCommand::Exactcover { universe, sets, out_dir, name } } => {
            cmd_gen_exactcover(universe, sets, out_dir, name)
        }
        Command::SampleRegion { vass, lps, window, resolution, out } => {
            cmd_sample_region(vass, lps, window, *resolution, out.as_deref())
        }
        Command::Oracle { kind } => cmd_oracle(kind),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let ok = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            return ExitCode::from(if ok { 0 } else { EXIT_ERROR });
        }
    };
    eprintln!("cvass {}", env!("CARGO_PKG_VERSION"));
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
