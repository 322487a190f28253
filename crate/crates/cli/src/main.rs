//! One binary, subcommand per operation. Every run is a pure function of
//! (inputs, flags, seed): results are bit-identical across runs and thread
//! counts, and a manifest recording the invocation and input digests is
//! written beside each output file.
//!
//! Exit codes: 0 success, 2 validation error, 3 budget/guard refusal,
//! 64 usage.

mod manifest;

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use brackets_core::bounds;
use brackets_core::config::ToolConfig;
use brackets_core::exact;
use brackets_core::io as formats;
use brackets_core::lp::{parse_solution, LpModel};
use brackets_core::optimize::{self, ExportForm, ExportInputs, SolveBudget};
use brackets_core::pool_eval::{self, TiePolicy};
use brackets_core::probability::{propagate, TeamWinMatrix};
use brackets_core::simulation::{mc_ems, sample_pool, OutcomePool};
use brackets_core::tournament::{EntrySet, Tournament};

use manifest::RunRecorder;

const EXIT_VALIDATION: i32 = 2;
const EXIT_GUARD: i32 = 3;
const EXIT_USAGE: i32 = 64;

#[derive(Parser)]
#[command(
    name = "brackets",
    version,
    about = "Bracket-pool evaluation and optimization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output format for tabular results.
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Configuration file; falls back to $BRACKETS_CONFIG, then built-ins.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Derive P^game and P^round from a team-by-team matrix.
    Propagate(PropagateArgs),
    /// Generate a reproducible pool of simulated outcomes.
    Simulate(SimulateArgs),
    /// Expected maximum score of an entry set (exact, enumeration, or MC).
    Ems(EmsArgs),
    /// Generate an entry set.
    Optimize(OptimizeArgs),
    /// Worst-case guarantee constructions and their verification.
    Bounds(BoundsArgs),
    /// Evaluate participants' entry sets against each other.
    PoolEval(PoolEvalArgs),
    /// Check a solution file against an exported LP model.
    LpCheck(LpCheckArgs),
}

#[derive(Args)]
struct PropagateArgs {
    /// Team-by-team win matrix CSV.
    #[arg(long, conflicts_with = "ratings")]
    pteam: Option<PathBuf>,
    /// Ratings CSV (team_id,rating); mapped through the logistic curve.
    #[arg(long, requires = "teams")]
    ratings: Option<PathBuf>,
    /// Tournament size when reading ratings.
    #[arg(short = 't', long)]
    teams: Option<u32>,
    /// Rating-difference scale.
    #[arg(long, default_value_t = brackets_core::probability::DEFAULT_RATING_SCALE)]
    scale: f64,
    /// Optional output CSV for the team-by-team matrix built from ratings.
    #[arg(long)]
    out_pteam: Option<PathBuf>,
    /// Output CSV for the team-by-game matrix.
    #[arg(long)]
    out_game: PathBuf,
    /// Output CSV for the team-by-round matrix.
    #[arg(long)]
    out_round: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    pteam: PathBuf,
    /// Number of outcomes.
    #[arg(short = 'w', long = "simulations", default_value_t = 10_000)]
    w: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output pool cache file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EmsArgs {
    /// Exact dynamic program (e <= 2 any size, e = 3 up to 8 teams).
    #[arg(long, conflicts_with_all = ["brute", "mc"])]
    exact: bool,
    /// Exact enumeration of all outcomes (up to 16 teams).
    #[arg(long, conflicts_with = "mc")]
    brute: bool,
    /// Monte Carlo estimate over a pool.
    #[arg(long)]
    mc: bool,
    /// Entry-set file.
    #[arg(long)]
    entries: PathBuf,
    /// Team-by-team matrix (required unless --mc reads a pool).
    #[arg(long)]
    pteam: Option<PathBuf>,
    /// Pool cache for --mc; generated from --pteam/-w/--seed when absent.
    #[arg(long)]
    pool: Option<PathBuf>,
    #[arg(short = 'w', long = "simulations", default_value_t = 10_000)]
    w: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long, value_enum)]
    method: Method,
    #[arg(long)]
    pteam: PathBuf,
    /// Number of entries.
    #[arg(short = 'e', long = "entries", default_value_t = 1)]
    entry_count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Samples per optimization step (defaults from the config).
    #[arg(short = 'w', long = "simulations")]
    w: Option<usize>,
    /// Hill-climbing restarts per subproblem (defaults from the config).
    #[arg(long)]
    restarts: Option<usize>,
    /// Output entry-set file (generation methods).
    #[arg(long)]
    entries_out: Option<PathBuf>,
    /// Model form for --method saa-export.
    #[arg(long, value_enum)]
    form: Option<FormArg>,
    /// Output LP file for --method saa-export.
    #[arg(long)]
    lp_out: Option<PathBuf>,
    /// Pool cache (saa/gsaa export); generated when absent.
    #[arg(long)]
    pool: Option<PathBuf>,
    /// Previously chosen entries (sip/gsaa export context).
    #[arg(long)]
    prev: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Single,
    Prop,
    #[value(name = "prop+")]
    PropPlus,
    Gsaa,
    Sip,
    SaaExport,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormArg {
    Ip,
    Saa,
    Sip,
    Gsaa,
}

#[derive(Args)]
struct BoundsArgs {
    /// pair, cover:`<r>`, or example16.
    #[arg(long)]
    construction: String,
    /// Tournament size when no matrix is given (uniform probabilities).
    #[arg(short = 't', long)]
    teams: Option<u32>,
    #[arg(long)]
    pteam: Option<PathBuf>,
    /// Base bracket for `pair` (default: the best single entry).
    #[arg(long)]
    base: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Samples for the non-exhaustive check on large tournaments.
    #[arg(long, default_value_t = 100_000)]
    verify_samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct PoolEvalArgs {
    #[arg(long)]
    field: PathBuf,
    #[arg(long)]
    pool: PathBuf,
    #[arg(long)]
    payoffs: Option<PathBuf>,
    /// Tie policy for payoffs: share or optimistic.
    #[arg(long, default_value = "share")]
    tie: String,
}

#[derive(Args)]
struct LpCheckArgs {
    #[arg(long)]
    lp: PathBuf,
    #[arg(long)]
    sol: PathBuf,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = err.print();
                    std::process::exit(0);
                }
                _ => EXIT_USAGE,
            };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    if let Some(threads) = cli.threads {
        if let Err(err) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: {err}");
            std::process::exit(EXIT_VALIDATION);
        }
    }
    match run(cli) {
        Ok(()) => {}
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(exit_code_for(&err));
        }
    }
}

/// Guard and budget refusals exit 3; everything else is a validation error.
fn exit_code_for(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<exact::EmsError>() {
            if matches!(
                e,
                exact::EmsError::StateGuard { .. } | exact::EmsError::BruteForceTooLarge(_)
            ) {
                return EXIT_GUARD;
            }
        }
        if let Some(optimize::OptimizeError::BadBudget(_)) =
            cause.downcast_ref::<optimize::OptimizeError>()
        {
            return EXIT_GUARD;
        }
        if let Some(brackets_core::tournament::TournamentError::EnumerationTooLarge(_)) =
            cause.downcast_ref::<brackets_core::tournament::TournamentError>()
        {
            return EXIT_GUARD;
        }
    }
    EXIT_VALIDATION
}

fn run(cli: Cli) -> Result<()> {
    let config = load_config(&cli)?;
    match cli.command {
        Command::Propagate(args) => cmd_propagate(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Ems(args) => cmd_ems(args, cli.format),
        Command::Optimize(args) => cmd_optimize(args, cli.format, &config),
        Command::Bounds(args) => cmd_bounds(args, cli.format),
        Command::PoolEval(args) => cmd_pool_eval(args, cli.format),
        Command::LpCheck(args) => cmd_lp_check(args),
    }
}

fn load_config(cli: &Cli) -> Result<ToolConfig> {
    let path = cli
        .config
        .clone()
        .or_else(|| std::env::var_os("BRACKETS_CONFIG").map(PathBuf::from));
    match path {
        None => Ok(ToolConfig::default()),
        Some(path) => {
            let text = std::fs::read_to_string(&path)
                .with_context(|| format!("reading config {}", path.display()))?;
            ToolConfig::parse(&text).with_context(|| format!("parsing config {}", path.display()))
        }
    }
}

fn read_file(rec: &mut RunRecorder, path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    rec.record_input(path, &bytes);
    String::from_utf8(bytes).with_context(|| format!("{} is not UTF-8", path.display()))
}

fn read_binary(rec: &mut RunRecorder, path: &Path) -> Result<Vec<u8>> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    rec.record_input(path, &bytes);
    Ok(bytes)
}

fn load_pteam(rec: &mut RunRecorder, path: &Path) -> Result<(Tournament, TeamWinMatrix)> {
    let text = read_file(rec, path)?;
    let p = formats::read_pteam_csv(&text)?;
    let t = Tournament::new(p.team_count() as u32)?;
    Ok((t, p))
}

fn load_entries(rec: &mut RunRecorder, path: &Path) -> Result<(Tournament, EntrySet)> {
    let text = read_file(rec, path)?;
    Ok(formats::read_entry_set(&text)?)
}

fn load_pool(rec: &mut RunRecorder, path: &Path) -> Result<(Tournament, OutcomePool)> {
    let bytes = read_binary(rec, path)?;
    Ok(formats::read_pool(&bytes)?)
}

// ---------------------------------------------------------------------------

fn cmd_propagate(args: PropagateArgs) -> Result<()> {
    let mut rec = RunRecorder::new("propagate", None);
    let (t, p) = match (&args.pteam, &args.ratings) {
        (Some(path), None) => load_pteam(&mut rec, path)?,
        (None, Some(path)) => {
            let teams = args
                .teams
                .ok_or_else(|| anyhow!("--ratings needs -t <teams>"))?;
            let t = Tournament::new(teams)?;
            let text = read_file(&mut rec, path)?;
            let table = formats::read_ratings_csv(&text, t.team_count())?;
            let p = brackets_core::probability::pteam_from_ratings(&table, args.scale)?;
            (t, p)
        }
        _ => bail!("provide exactly one of --pteam or --ratings"),
    };
    if let Some(out) = &args.out_pteam {
        rec.write_output(out, formats::write_pteam_csv(&p).as_bytes())?;
    }
    let (pg, pr) = propagate(&t, &p)?;
    rec.write_output(
        &args.out_game,
        formats::write_game_matrix_csv(&t, &pg).as_bytes(),
    )?;
    rec.write_output(
        &args.out_round,
        formats::write_round_matrix_csv(&t, &pr).as_bytes(),
    )?;
    println!(
        "propagated {} teams: game matrix -> {}, round matrix -> {}",
        t.team_count(),
        args.out_game.display(),
        args.out_round.display()
    );
    rec.finish()
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let mut rec = RunRecorder::new("simulate", Some(args.seed));
    let (t, p) = load_pteam(&mut rec, &args.pteam)?;
    let pool = sample_pool(&t, &p, args.w, args.seed)?;
    rec.write_output(&args.out, &formats::write_pool(&t, &pool))?;
    println!(
        "simulated {} outcomes (t={}, seed={}) -> {}",
        pool.len(),
        t.team_count(),
        args.seed,
        args.out.display()
    );
    rec.finish()
}

fn print_kv_table(format: Format, headers: &[&str], rows: &[Vec<String>]) {
    match format {
        Format::Csv => {
            println!("{}", headers.join(","));
            for row in rows {
                println!("{}", row.join(","));
            }
        }
        Format::Table => {
            let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
            for row in rows {
                for (w, cell) in widths.iter_mut().zip(row) {
                    *w = (*w).max(cell.len());
                }
            }
            let fmt_row = |cells: Vec<String>| {
                cells
                    .iter()
                    .zip(&widths)
                    .map(|(c, w)| format!("{c:<w$}"))
                    .collect::<Vec<_>>()
                    .join("  ")
            };
            println!(
                "{}",
                fmt_row(headers.iter().map(|s| s.to_string()).collect())
            );
            for row in rows {
                println!("{}", fmt_row(row.clone()));
            }
        }
    }
}

fn cmd_ems(args: EmsArgs, format: Format) -> Result<()> {
    let mut rec = RunRecorder::new("ems", Some(args.seed));
    let (t, set) = load_entries(&mut rec, &args.entries)?;
    let mode_count = args.exact as u8 + args.brute as u8 + args.mc as u8;
    if mode_count != 1 {
        bail!("choose exactly one of --exact, --brute, --mc");
    }
    let need_pteam = || {
        args.pteam
            .as_deref()
            .ok_or_else(|| anyhow!("--pteam is required for this mode"))
    };
    let mut rows = Vec::new();
    if args.exact || args.brute {
        let (tp, p) = load_pteam(&mut rec, need_pteam()?)?;
        if tp != t {
            bail!("entry file and matrix disagree on the tournament size");
        }
        let value = if args.exact {
            exact::dp_ems(&t, &p, &set)?
        } else {
            exact::brute_force_ems(&t, &p, &set)?
        };
        rows.push(vec![
            if args.exact { "exact" } else { "brute" }.to_string(),
            format!("{value:.6}"),
            String::new(),
            String::new(),
        ]);
    } else {
        let pool = match &args.pool {
            Some(path) => {
                let (tp, pool) = load_pool(&mut rec, path)?;
                if tp != t {
                    bail!("entry file and pool disagree on the tournament size");
                }
                pool
            }
            None => {
                let (tp, p) = load_pteam(&mut rec, need_pteam()?)?;
                if tp != t {
                    bail!("entry file and matrix disagree on the tournament size");
                }
                sample_pool(&t, &p, args.w, args.seed)?
            }
        };
        let est = mc_ems(&t, &set, &pool)?;
        rows.push(vec![
            "mc".to_string(),
            format!("{:.6}", est.mean),
            format!("{:.6}", est.sample_sd),
            format!("{:.6}", est.ci95_halfwidth),
        ]);
    }
    print_kv_table(format, &["method", "ems", "sd", "ci95_halfwidth"], &rows);
    rec.finish()
}

fn parse_construction(s: &str) -> Result<(String, Option<u16>)> {
    if let Some(r) = s.strip_prefix("cover:") {
        let round: u16 = r.parse().with_context(|| format!("bad round {r}"))?;
        Ok(("cover".to_string(), Some(round)))
    } else if s == "pair" || s == "example16" {
        Ok((s.to_string(), None))
    } else {
        bail!("unknown construction {s}; expected pair, cover:<r>, example16")
    }
}

fn cmd_bounds(args: BoundsArgs, format: Format) -> Result<()> {
    let mut rec = RunRecorder::new("bounds", Some(args.seed));
    let (t, p) = match (&args.pteam, args.teams) {
        (Some(path), _) => load_pteam(&mut rec, path)?,
        (None, Some(tc)) => {
            let t = Tournament::new(tc)?;
            (t, TeamWinMatrix::uniform(t.team_count()))
        }
        (None, None) => bail!("provide --pteam or -t <teams>"),
    };
    let (_, pr) = propagate(&t, &p)?;
    let (kind, round) = parse_construction(&args.construction)?;
    let (set, claimed) = match kind.as_str() {
        "pair" => {
            let base = match &args.base {
                Some(path) => {
                    let (tb, set) = load_entries(&mut rec, path)?;
                    if tb != t {
                        bail!("base bracket tournament size mismatch");
                    }
                    set.entries()[0].clone()
                }
                None => optimize::best_single_entry(&t, &p)?,
            };
            (
                bounds::complementary_pair(&t, &base, &pr)?,
                t.team_count() as u32 / 4,
            )
        }
        "cover" => {
            let r = round.expect("cover carries a round");
            (bounds::round_cover(&t, r, &pr)?, (1u32 << r) - 1)
        }
        _ => (
            bounds::example16_cover(&t, &pr)?,
            t.team_count() as u32 / 4 + 2,
        ),
    };
    let report = if t.team_count() <= 16 {
        bounds::min_guaranteed_score(&t, &set)?
    } else {
        bounds::min_score_sampled(&t, &set, args.verify_samples, args.seed)?
    };
    if let Some(out) = &args.out {
        rec.write_output(out, formats::write_entry_set(&t, &set).as_bytes())?;
    }
    print_kv_table(
        format,
        &[
            "construction",
            "entries",
            "claimed_min",
            "observed_min",
            "verification",
        ],
        &[vec![
            args.construction.clone(),
            set.len().to_string(),
            claimed.to_string(),
            report.min_score.to_string(),
            if report.exhaustive {
                format!("exhaustive({} outcomes)", report.outcomes_checked)
            } else {
                format!("sampled({} outcomes, not a proof)", report.outcomes_checked)
            },
        ]],
    );
    if report.exhaustive && report.min_score < claimed {
        bail!(
            "construction violates its claimed guarantee: {} < {claimed}",
            report.min_score
        );
    }
    rec.finish()
}

fn cmd_pool_eval(args: PoolEvalArgs, format: Format) -> Result<()> {
    let mut rec = RunRecorder::new("pool-eval", None);
    let policy: TiePolicy = args.tie.parse::<TiePolicy>().map_err(|e| anyhow!("{e}"))?;
    let field_text = read_file(&mut rec, &args.field)?;
    let (t, field) = formats::read_field(&field_text)?;
    let (tp, pool) = load_pool(&mut rec, &args.pool)?;
    if tp != t {
        bail!("field and pool disagree on the tournament size");
    }
    let payoffs = match &args.payoffs {
        Some(path) => Some(formats::read_payoff_csv(&read_file(&mut rec, path)?)?),
        None => None,
    };
    let ems = pool_eval::field_ems(&t, &field, &pool)?;
    let victory = pool_eval::victory_probability(&t, &field, &pool)?;
    let payout = match &payoffs {
        Some(table) => Some(pool_eval::expected_payoff(
            &t, &field, &pool, table, policy,
        )?),
        None => None,
    };
    let mut rows = Vec::new();
    for (idx, (id, est)) in ems.iter().enumerate() {
        let mut row = vec![
            id.clone(),
            field.participants()[idx].1.len().to_string(),
            format!("{:.6}", est.mean),
            format!("{:.6}", est.ci95_halfwidth),
            format!("{:.6}", victory[idx].1),
        ];
        row.push(match &payout {
            Some(p) => format!("{:.6}", p[idx].1),
            None => String::new(),
        });
        rows.push(row);
    }
    print_kv_table(
        format,
        &[
            "participant",
            "entries",
            "ems",
            "ci95_halfwidth",
            "victory_prob",
            "expected_payoff",
        ],
        &rows,
    );
    rec.finish()
}

fn cmd_lp_check(args: LpCheckArgs) -> Result<()> {
    let mut rec = RunRecorder::new("lp-check", None);
    let model = LpModel::parse_lp(&read_file(&mut rec, &args.lp)?)
        .map_err(|e| anyhow!("parsing {}: {e}", args.lp.display()))?;
    let solution = parse_solution(&read_file(&mut rec, &args.sol)?)
        .map_err(|e| anyhow!("parsing {}: {e}", args.sol.display()))?;
    let report = model.check_solution(&solution, args.tol);
    println!("objective {:.6}", report.objective);
    if report.is_ok() {
        println!(
            "solution satisfies all {} constraints",
            model.constraints.len()
        );
        rec.finish()
    } else {
        for v in &report.violations {
            println!("violation: {v}");
        }
        rec.finish()?;
        bail!("{} violations", report.violations.len());
    }
}

fn cmd_optimize(args: OptimizeArgs, format: Format, config: &ToolConfig) -> Result<()> {
    let mut rec = RunRecorder::new("optimize", Some(args.seed));
    let (t, p) = load_pteam(&mut rec, &args.pteam)?;
    let e = args.entry_count;
    let budget = SolveBudget {
        time_limit_seconds: config.budget.time_limit_seconds,
        sample_count: args.w.unwrap_or(config.budget.samples),
        restarts: args.restarts.unwrap_or(config.budget.restarts),
        master_seed: args.seed,
    };

    if args.method == Method::SaaExport {
        return cmd_saa_export(args, rec, &t, &p, &budget, config);
    }

    let set = match args.method {
        Method::Single => {
            if e != 1 {
                bail!("--method single produces exactly one entry; drop -e {e}");
            }
            EntrySet::new(&t, vec![optimize::best_single_entry(&t, &p)?])?
        }
        Method::Prop => {
            let (_, pr) = propagate(&t, &p)?;
            optimize::prop_generate(&t, &pr, e)?
        }
        Method::PropPlus => {
            let (_, pr) = propagate(&t, &p)?;
            optimize::prop_plus_generate(&t, &pr, e, &config.thresholds_for(e))?
        }
        Method::Gsaa => optimize::gsaa_generate(&t, &p, e, &budget)?,
        Method::Sip => optimize::sip_generate(&t, &p, e, &config.diversification_for(e), &budget)?,
        Method::SaaExport => unreachable!(),
    };

    let (pg, _) = propagate(&t, &p)?;
    let rows: Vec<Vec<String>> = set
        .entries()
        .iter()
        .enumerate()
        .map(|(i, b)| {
            vec![
                (i + 1).to_string(),
                b.champion().to_string(),
                format!("{:.6}", optimize::expected_single_score(&t, &pg, b)),
            ]
        })
        .collect();
    print_kv_table(format, &["entry", "champion", "expected_score"], &rows);
    if let Some(out) = &args.entries_out {
        rec.write_output(out, formats::write_entry_set(&t, &set).as_bytes())?;
    }
    rec.finish()
}

fn cmd_saa_export(
    args: OptimizeArgs,
    mut rec: RunRecorder,
    t: &Tournament,
    p: &TeamWinMatrix,
    budget: &SolveBudget,
    config: &ToolConfig,
) -> Result<()> {
    let form = match args.form {
        Some(FormArg::Ip) => ExportForm::Ip,
        Some(FormArg::Saa) => ExportForm::Saa,
        Some(FormArg::Sip) => ExportForm::Sip,
        Some(FormArg::Gsaa) => ExportForm::Gsaa,
        None => bail!("--method saa-export needs --form {{ip,saa,sip,gsaa}}"),
    };
    let out = args
        .lp_out
        .as_deref()
        .ok_or_else(|| anyhow!("--method saa-export needs --lp-out <file>"))?;

    let pool_owned;
    let pool = match (&args.pool, form) {
        (Some(path), _) => {
            let (tp, pool) = load_pool(&mut rec, path)?;
            if tp != *t {
                bail!("pool and matrix disagree on the tournament size");
            }
            pool_owned = pool;
            Some(&pool_owned)
        }
        (None, ExportForm::Saa | ExportForm::Gsaa) => {
            pool_owned = sample_pool(t, p, budget.sample_count, budget.master_seed)?;
            Some(&pool_owned)
        }
        _ => None,
    };
    let previous_owned;
    let (previous, incumbents) = match &args.prev {
        Some(path) => {
            let (tp, set) = load_entries(&mut rec, path)?;
            if tp != *t {
                bail!("previous entries disagree on the tournament size");
            }
            previous_owned = set;
            let incumbents = pool.map(|pool| {
                pool.outcomes()
                    .iter()
                    .map(|o| {
                        brackets_core::tournament::max_set_score_unchecked(
                            t,
                            previous_owned.entries(),
                            o,
                        ) as f64
                    })
                    .collect::<Vec<f64>>()
            });
            (previous_owned.entries().to_vec(), incumbents)
        }
        None => (Vec::new(), None),
    };
    let diversification = config.diversification_for(args.entry_count.max(previous.len() + 1));
    let model = optimize::saa_export(
        t,
        form,
        &ExportInputs {
            pteam: Some(p),
            pool,
            entry_count: args.entry_count,
            previous: &previous,
            incumbents: incumbents.as_deref(),
            config: Some(&diversification),
        },
    )?;
    rec.write_output(out, model.to_lp_string().as_bytes())?;
    println!(
        "wrote {} model: {} variables (binary {}), {} constraints -> {}",
        model.name,
        model.objective.len().max(model.binaries.len()),
        model.binaries.len(),
        model.constraints.len(),
        out.display()
    );
    rec.finish()
}
