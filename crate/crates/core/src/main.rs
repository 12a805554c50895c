//! Command-line front end: every pipeline with reproducible configuration
//! and machine-readable output. Exit codes: 0 success, 1 invalid input,
//! 2 cap abort.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde_json::{json, Value};

use treesat::chains::power_view;
use treesat::cleaning::{clean_pipeline, cleaning_constants};
use treesat::embedding::{embed_census, embed_enumerate, NoForbidden};
use treesat::error::{Error, Result};
use treesat::experiments::{
    enumerate_p_free, la_star_bound, la_star_exact, random_turan_trials, PRNG_VERSION,
};
use treesat::lattice::Family;
use treesat::poset::{rank_functions, Poset};
use treesat::supersat::{
    build_balanced, count_induced_copies, degree_caps, mstar, rank_upper_bound, replay_audit,
    verify_supersaturation,
};

#[derive(Parser)]
#[command(
    name = "treesat",
    version,
    about = "Exact engine for tree-poset embeddings in the Boolean lattice"
)]
struct Cli {
    /// Worker thread cap (0 = all cores); results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Brute-force oracles: copy counts, middle-level reference, rank bound,
    /// exact la*.
    Oracle(OracleArgs),
    /// Supersaturation verifier: copies vs the middle-levels reference.
    Supersat(SupersatArgs),
    /// The iterative cleaning pipeline with a JSON trace dump.
    Clean(CleanArgs),
    /// Embedding census over all roots and rank functions.
    Embed(EmbedArgs),
    /// Balanced collection builder with exact degree caps.
    Balanced(BalancedArgs),
    /// Seeded random Turán trials.
    RandomTuran(RandomTuranArgs),
    /// Count induced-P-free subfamilies of B_n.
    CountFree(CountFreeArgs),
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    poset: PathBuf,
    #[arg(long, value_enum)]
    what: OracleKind,
    /// Host family file; defaults to all of B_n.
    #[arg(long)]
    family: Option<PathBuf>,
    #[arg(long)]
    q: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleKind {
    Copies,
    Mstar,
    RankBound,
    LaStar,
}

#[derive(Args)]
struct SupersatArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    q: usize,
    #[arg(long)]
    poset: PathBuf,
    #[arg(long)]
    family: PathBuf,
    /// Reference gamma for the greedy-embedding count bound, as "a/b" or decimal.
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long, default_value_t = 1)]
    ell: usize,
    /// Reference N for the greedy-embedding count bound.
    #[arg(long)]
    n_param: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CleanArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    q: usize,
    #[arg(long)]
    family: PathBuf,
    #[arg(long)]
    steps: usize,
    /// Practical-mode delta as "a/b" or decimal.
    #[arg(long, conflicts_with = "guaranteed")]
    delta: Option<String>,
    /// Derive delta from the guaranteed-constants formulas instead.
    #[arg(long, requires = "epsilon", requires = "poset_size")]
    guaranteed: bool,
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    poset_size: Option<usize>,
    /// Cap on ground sets for full-chain enumeration.
    #[arg(long, default_value_t = treesat::chains::DEFAULT_CHAIN_CAP)]
    chain_cap: usize,
    /// Cap on witness candidate pools.
    #[arg(long, default_value_t = treesat::cleaning::DEFAULT_POOL_CAP)]
    pool_cap: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EmbedArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    q: usize,
    #[arg(long)]
    poset: PathBuf,
    #[arg(long)]
    family: PathBuf,
    /// Cleaning delta (default 0: keep every marker).
    #[arg(long)]
    delta: Option<String>,
    /// Write every embedding as a JSON line to this path.
    #[arg(long)]
    dump: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BalancedArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    poset: PathBuf,
    #[arg(long)]
    family: PathBuf,
    #[arg(long)]
    delta: String,
    #[arg(long, default_value_t = 1)]
    ell: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RandomTuranArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: String,
    #[arg(long)]
    poset: PathBuf,
    #[arg(long)]
    trials: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CountFreeArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    poset: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses "a/b" fractions and decimal strings exactly (decimals via scaled
/// integers).
fn parse_rational(text: &str) -> Result<BigRational> {
    let text = text.trim();
    if let Some((num, den)) = text.split_once('/') {
        let n = BigInt::from_str(num.trim())
            .map_err(|_| Error::InvalidInput(format!("bad numerator in '{text}'")))?;
        let d = BigInt::from_str(den.trim())
            .map_err(|_| Error::InvalidInput(format!("bad denominator in '{text}'")))?;
        if d.is_zero() {
            return Err(Error::InvalidInput("zero denominator".into()));
        }
        return Ok(BigRational::new(n, d));
    }
    if let Some((whole, frac)) = text.split_once('.') {
        let digits = format!("{whole}{frac}");
        let n = BigInt::from_str(&digits)
            .map_err(|_| Error::InvalidInput(format!("bad decimal '{text}'")))?;
        let d = BigInt::from(10u32).pow(frac.len() as u32);
        return Ok(BigRational::new(n, d));
    }
    let n = BigInt::from_str(text)
        .map_err(|_| Error::InvalidInput(format!("bad rational '{text}'")))?;
    Ok(BigRational::from(n))
}

fn load_poset(path: &PathBuf) -> Result<(String, Poset)> {
    let text = fs::read_to_string(path)?;
    Poset::parse(&text)
}

fn load_family(path: &PathBuf, n: usize) -> Result<Family> {
    let text = fs::read_to_string(path)?;
    let fam = Family::parse(&text)?;
    if fam.n() != n {
        return Err(Error::InvalidInput(format!(
            "family file has n = {}, command line says n = {n}",
            fam.n()
        )));
    }
    Ok(fam)
}

fn unix_seconds() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Every output embeds the tool version and the fully resolved config; the
/// timestamp lives in its own header field and is excluded from
/// reproducibility comparisons.
fn header(config: Value) -> Value {
    json!({
        "tool": "treesat",
        "version": env!("CARGO_PKG_VERSION"),
        "generated_at_unix": unix_seconds(),
        "config": config,
    })
}

fn emit(out: &Option<PathBuf>, payload: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(payload).expect("payload serializes");
    if let Some(path) = out {
        fs::write(path, text)?;
    }
    Ok(())
}

fn run_oracle(args: &OracleArgs) -> Result<Value> {
    let (pname, poset) = load_poset(&args.poset)?;
    let family = match &args.family {
        Some(path) => load_family(path, args.n)?,
        None => Family::complete(args.n),
    };
    let config = json!({
        "subcommand": "oracle",
        "n": args.n,
        "poset": pname,
        "q": args.q,
        "family_size": family.len(),
    });
    let result = match args.what {
        OracleKind::Copies => {
            let counts = count_induced_copies(&family, &poset)?;
            println!("copies {} embeddings {}", counts.copies, counts.embeddings);
            json!({"copies": counts.copies, "embeddings": counts.embeddings})
        }
        OracleKind::Mstar => {
            let q = args
                .q
                .ok_or_else(|| Error::InvalidInput("mstar needs --q".into()))?;
            let value = mstar(args.n, q, &poset)?;
            println!("{value}");
            json!({"mstar": value})
        }
        OracleKind::RankBound => {
            let q = args
                .q
                .ok_or_else(|| Error::InvalidInput("rank-bound needs --q".into()))?;
            let value = rank_upper_bound(args.n, q, &poset);
            println!("{value}");
            json!({"rank_upper_bound": value.to_string()})
        }
        OracleKind::LaStar => {
            let outcome = if family.len() <= treesat::experiments::EXACT_SOLVER_CAP {
                la_star_exact(&family, &poset)?
            } else {
                la_star_bound(&family, &poset)?
            };
            println!("{}", outcome.value);
            json!({
                "la_star": outcome.value,
                "exact": outcome.exact,
                "witness": outcome.witness.to_text(),
            })
        }
    };
    Ok(json!({"header": header(config), "result": result}))
}

fn run_supersat(args: &SupersatArgs) -> Result<Value> {
    let (pname, poset) = load_poset(&args.poset)?;
    let family = load_family(&args.family, args.n)?;
    let gamma = args.gamma.as_deref().map(parse_rational).transpose()?;
    let report = verify_supersaturation(
        &family,
        &poset,
        args.q,
        gamma.as_ref(),
        args.ell,
        args.n_param,
    )?;
    let config = json!({
        "subcommand": "supersat",
        "n": args.n,
        "q": args.q,
        "poset": pname,
        "family_size": report.fam_size,
        "gamma": args.gamma,
        "ell": args.ell,
        "n_param": args.n_param,
    });
    println!(
        "copies {} mstar {} ratio {}",
        report.copies,
        report.mstar,
        report
            .ratio
            .as_ref()
            .map(|r| r.to_string())
            .unwrap_or_else(|| "n/a".into())
    );
    Ok(json!({
        "header": header(config),
        "result": {
            "family_size": report.fam_size,
            "lubell_weight": report.mu.to_string(),
            "copies": report.copies,
            "embeddings": report.embeddings,
            "mstar": report.mstar,
            "ratio": report.ratio.map(|r| r.to_string()),
            "reference_bound": report.reference_bound.map(|b| b.to_string()),
        }
    }))
}

fn run_clean(args: &CleanArgs) -> Result<Value> {
    let family = load_family(&args.family, args.n)?;
    let (delta, mode) = if args.guaranteed {
        let eps = parse_rational(args.epsilon.as_deref().expect("required by clap"))?;
        let size = args.poset_size.expect("required by clap");
        let constants = cleaning_constants(&eps, args.q, size);
        (constants.delta_max, "guaranteed")
    } else {
        let text = args
            .delta
            .as_deref()
            .ok_or_else(|| Error::InvalidInput("clean needs --delta or --guaranteed".into()))?;
        (parse_rational(text)?, "practical")
    };
    let report = treesat::cleaning::clean_pipeline_capped(
        &family,
        args.q,
        &delta,
        args.steps,
        args.chain_cap,
        args.pool_cap,
    )?;
    let config = json!({
        "subcommand": "clean",
        "n": args.n,
        "q": args.q,
        "steps": args.steps,
        "delta": delta.to_string(),
        "mode": mode,
        "chain_cap": args.chain_cap,
        "pool_cap": args.pool_cap,
        "family_size": family.len(),
    });
    println!("incidences {:?} mu {}", report.incidence_counts, report.mu);
    Ok(json!({
        "header": header(config),
        "result": {
            "mu": report.mu.to_string(),
            "epsilon": report.epsilon.map(|e| e.to_string()),
            "incidence_counts": report.incidence_counts,
            "level_set_sizes": report.level_set_sizes,
            "trace": serde_json::from_str::<Value>(&report.trace.to_json()).expect("trace json"),
        }
    }))
}

fn run_embed(args: &EmbedArgs) -> Result<Value> {
    let (pname, poset) = load_poset(&args.poset)?;
    let family = load_family(&args.family, args.n)?;
    let delta = args
        .delta
        .as_deref()
        .map(parse_rational)
        .transpose()?
        .unwrap_or_else(BigRational::zero);
    let report = clean_pipeline(&family, args.q, &delta, poset.size())?;
    let views: Vec<_> = report
        .trace
        .levels
        .iter()
        .map(|t| power_view(t, args.q))
        .collect::<Result<_>>()?;
    let census = embed_census(&poset, args.q, &NoForbidden, &views)?;
    if let Some(dump) = &args.dump {
        let mut lines = String::new();
        let top = views.last().expect("views nonempty");
        for root in 0..poset.size() {
            for rank in rank_functions(&poset, args.q) {
                for f0 in top.level_set(rank.rank(root))?.iter() {
                    for emb in embed_enumerate(&poset, &rank, &NoForbidden, &views, root, f0)? {
                        lines.push_str(&emb.to_json_line());
                        lines.push('\n');
                    }
                }
            }
        }
        fs::write(dump, lines)?;
    }
    let config = json!({
        "subcommand": "embed",
        "n": args.n,
        "q": args.q,
        "poset": pname,
        "delta": delta.to_string(),
        "family_size": family.len(),
    });
    println!(
        "total {} max-per-choice {} distinct-images {}",
        census.total,
        census.max_per_choice,
        census.images.len()
    );
    let entries: Vec<Value> = census
        .entries
        .iter()
        .map(|e| json!({"root": e.root, "ranks": e.ranks, "count": e.count}))
        .collect();
    Ok(json!({
        "header": header(config),
        "result": {
            "total": census.total,
            "max_per_choice": census.max_per_choice,
            "distinct_images": census.images.len(),
            "per_choice": entries,
        }
    }))
}

fn run_balanced(args: &BalancedArgs) -> Result<Value> {
    let (pname, poset) = load_poset(&args.poset)?;
    let family = load_family(&args.family, args.n)?;
    let delta = parse_rational(&args.delta)?;
    let built = build_balanced(&family, &poset, &delta, args.ell)?;
    let caps = degree_caps(&delta, args.n, args.ell, poset.size());
    let caps_ok = built.collection.audit_caps(&caps);
    replay_audit(&built.collection, &poset, &delta, args.ell)?;
    let config = json!({
        "subcommand": "balanced",
        "n": args.n,
        "poset": pname,
        "delta": delta.to_string(),
        "ell": args.ell,
        "family_size": family.len(),
    });
    println!(
        "copies {} target {} reached {} caps-ok {}",
        built.collection.len(),
        built.target,
        built.reached_target,
        caps_ok
    );
    Ok(json!({
        "header": header(config),
        "result": {
            "copies": built.collection.len(),
            "target": built.target.to_string(),
            "reached_target": built.reached_target,
            "caps_ok": caps_ok,
            "collection": serde_json::from_str::<Value>(
                &built.collection.to_json(&delta, args.ell)
            ).expect("collection json"),
        }
    }))
}

fn run_random_turan(args: &RandomTuranArgs) -> Result<Value> {
    let (pname, poset) = load_poset(&args.poset)?;
    let p = parse_rational(&args.p)?;
    let report = random_turan_trials(args.n, &p, &poset, args.trials, args.seed)?;
    let config = json!({
        "subcommand": "random-turan",
        "n": args.n,
        "p": p.to_string(),
        "poset": pname,
        "trials": args.trials,
        "seed": args.seed,
        "prng": PRNG_VERSION,
    });
    if let Some(csv) = &args.csv {
        let mut text = String::new();
        text.push_str(&format!(
            "# treesat {} config {}\n",
            env!("CARGO_PKG_VERSION"),
            config
        ));
        text.push_str(&format!("# generated_at_unix {}\n", unix_seconds()));
        text.push_str("trial,seed,n,p,sample_size,la_star,exact,millis\n");
        for r in &report.records {
            text.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.trial, r.seed, r.n, r.p, r.sample_size, r.la_star, r.exact, r.millis
            ));
        }
        fs::write(csv, text)?;
    }
    println!(
        "trials {} mean {} max {} reference {}",
        args.trials, report.mean, report.max, report.reference
    );
    let rows: Vec<Value> = report
        .records
        .iter()
        .map(|r| {
            json!({
                "trial": r.trial,
                "seed": r.seed,
                "sample_size": r.sample_size,
                "la_star": r.la_star,
                "exact": r.exact,
            })
        })
        .collect();
    Ok(json!({
        "header": header(config),
        "result": {
            "mean": report.mean.to_string(),
            "max": report.max,
            "reference": report.reference.to_string(),
            "prng": report.prng,
            "records": rows,
        }
    }))
}

fn run_count_free(args: &CountFreeArgs) -> Result<Value> {
    let (pname, poset) = load_poset(&args.poset)?;
    let count = enumerate_p_free(args.n, &poset)?;
    println!("{count}");
    let config = json!({
        "subcommand": "count-free",
        "n": args.n,
        "poset": pname,
    });
    Ok(json!({"header": header(config), "result": {"count": count}}))
}

fn dispatch(cli: &Cli) -> Result<()> {
    let (value, out) = match &cli.command {
        Command::Oracle(args) => (run_oracle(args)?, args.out.clone()),
        Command::Supersat(args) => (run_supersat(args)?, args.out.clone()),
        Command::Clean(args) => (run_clean(args)?, args.out.clone()),
        Command::Embed(args) => (run_embed(args)?, args.out.clone()),
        Command::Balanced(args) => (run_balanced(args)?, args.out.clone()),
        Command::RandomTuran(args) => (run_random_turan(args)?, args.out.clone()),
        Command::CountFree(args) => (run_count_free(args)?, args.out.clone()),
    };
    emit(&out, &value)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_cap() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
