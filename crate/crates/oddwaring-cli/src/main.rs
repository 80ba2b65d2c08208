//! Command-line front end: JSON in, JSON out, scripting-friendly exit codes.
//!
//! Exit codes: 0 success or positive verdict, 1 negative mathematical
//! verdict, 2 usage error, 3 resource cap exhausted, 4 contradiction with the
//! expected survey or witness outcome.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use oddwaring::repsearch::{MinRepOutcome, SearchOutcome};
use oddwaring::survey::CaseSpec;
use oddwaring::{bounds, criteria, oddsq, repsearch, survey, CosetSpec, Error, SearchBudget};

const EXIT_OK: u8 = 0;
const EXIT_NEGATIVE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_EXHAUSTED: u8 = 3;
const EXIT_CONTRADICTION: u8 = 4;

#[derive(Parser)]
#[command(name = "oddwaring", version, about = "Sums of odd squares toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Emit JSON (the default; kept for script compatibility).
    #[arg(long, global = true)]
    json: bool,
    /// Suppress non-JSON progress output.
    #[arg(long, global = true)]
    quiet: bool,
    /// Worker thread count for parallel sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Minimal number of odd squares summing to M, with a decomposition.
    Oddsq {
        m: i64,
        /// Decompose with exactly this many parts instead of the minimum.
        #[arg(long)]
        r: Option<i64>,
    },
    /// Smallest admissible r representing a coset, with certificate.
    MinRep {
        #[command(flatten)]
        coset: CosetArg,
        #[arg(long, default_value_t = 32)]
        r_max: usize,
        #[arg(long)]
        max_nodes: Option<u64>,
    },
    /// Decide representability at a fixed r, or print the filter reports.
    Check {
        #[command(flatten)]
        coset: CosetArg,
        #[arg(long, required_unless_present = "filters_only")]
        r: Option<usize>,
        /// Print the necessary-condition report and split certificate only.
        #[arg(long)]
        filters_only: bool,
        #[arg(long)]
        max_nodes: Option<u64>,
    },
    /// Run one or all survey cases for a rank.
    Survey {
        #[arg(long)]
        n: usize,
        /// Case label, e.g. 3-i; all cases of the rank when omitted.
        #[arg(long = "case")]
        case: Option<String>,
        /// Reduced CI bounds instead of the full ones.
        #[arg(long)]
        scaled: bool,
        /// Snapshot file (JSON lines); also enables resumption.
        #[arg(long)]
        snapshot: Option<PathBuf>,
        /// Restrict to one w subcase (1-based indices, comma separated).
        #[arg(long, value_delimiter = ',')]
        w: Option<Vec<usize>>,
        /// Also search a representation certificate for each survivor.
        #[arg(long)]
        certify: bool,
    },
    /// Verify the lower-bound witness suite.
    Witnesses {
        /// Include the slow rank-5 refutation.
        #[arg(long)]
        full: bool,
    },
    /// Evaluate the growth functions and the recursion chain.
    Bounds {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        d: f64,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
    },
    /// Decide whether two cosets are isometric.
    Isometric { a: PathBuf, b: PathBuf },
}

#[derive(Args)]
struct CosetArg {
    /// Path to a coset JSON file {"n":..,"m":[[..]],"w":[..]}.
    #[arg(long)]
    coset: PathBuf,
}

impl CosetArg {
    fn load(&self) -> Result<CosetSpec, String> {
        let text = std::fs::read_to_string(&self.coset)
            .map_err(|e| format!("cannot read {}: {e}", self.coset.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("invalid coset JSON: {e}"))
    }
}

fn emit<T: Serialize>(value: &T) {
    println!(
        "{}",
        serde_json::to_string(value).expect("report serialization")
    );
}

fn error_exit(err: &Error) -> u8 {
    match err {
        Error::Contradiction(_) => EXIT_CONTRADICTION,
        Error::ResourceCap(_) => EXIT_EXHAUSTED,
        _ => EXIT_USAGE,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    #[cfg(feature = "parallel")]
    if let Some(threads) = cli.threads {
        if rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .is_err()
        {
            eprintln!("warning: thread pool already initialized");
        }
    }
    #[cfg(not(feature = "parallel"))]
    if cli.threads.is_some() && !cli.quiet {
        eprintln!("warning: built without the parallel feature; --threads ignored");
    }
    ExitCode::from(run(cli))
}

fn run(cli: Cli) -> u8 {
    match cli.command {
        Command::Oddsq { m, r } => cmd_oddsq(m, r),
        Command::MinRep {
            coset,
            r_max,
            max_nodes,
        } => cmd_min_rep(&coset, r_max, max_nodes),
        Command::Check {
            coset,
            r,
            filters_only,
            max_nodes,
        } => cmd_check(&coset, r, filters_only, max_nodes),
        Command::Survey {
            n,
            case,
            scaled,
            snapshot,
            w,
            certify,
        } => cmd_survey(n, case.as_deref(), scaled, snapshot, w, certify),
        Command::Witnesses { full } => cmd_witnesses(full),
        Command::Bounds { n, d, eps } => cmd_bounds(n, d, eps),
        Command::Isometric { a, b } => cmd_isometric(&a, &b),
    }
}

#[derive(Serialize)]
struct OddsqReport {
    #[serde(rename = "M")]
    m: i64,
    min_r: i64,
    r: i64,
    parts: Option<Vec<i64>>,
}

fn cmd_oddsq(m: i64, r: Option<i64>) -> u8 {
    if m < 1 || r.is_some_and(|r| r < 1) {
        eprintln!("oddsq requires positive M and r");
        return EXIT_USAGE;
    }
    let min_r = oddsq::min_odd_squares(m);
    let r = r.unwrap_or(min_r);
    let parts = oddsq::decompose_odd_squares(m, r).map(|d| d.parts);
    let found = parts.is_some();
    emit(&OddsqReport { m, min_r, r, parts });
    if found {
        EXIT_OK
    } else {
        EXIT_NEGATIVE
    }
}

#[derive(Serialize)]
struct MinRepReport {
    outcome: &'static str,
    r: Option<usize>,
    certificate: Option<oddwaring::RepMatrix>,
    nodes: u64,
}

fn cmd_min_rep(coset: &CosetArg, r_max: usize, max_nodes: Option<u64>) -> u8 {
    let coset = match coset.load() {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("{msg}");
            return EXIT_USAGE;
        }
    };
    let budget = SearchBudget {
        max_nodes,
        canonicalize_columns: true,
    };
    match repsearch::min_representation(&coset, r_max, &budget) {
        Ok((MinRepOutcome::Found { r, rep }, stats)) => {
            emit(&MinRepReport {
                outcome: "found",
                r: Some(r),
                certificate: Some(rep),
                nodes: stats.nodes,
            });
            EXIT_OK
        }
        Ok((MinRepOutcome::NoneAdmissible, stats)) => {
            emit(&MinRepReport {
                outcome: "none",
                r: None,
                certificate: None,
                nodes: stats.nodes,
            });
            EXIT_NEGATIVE
        }
        Ok((MinRepOutcome::Exhausted { r }, stats)) => {
            emit(&MinRepReport {
                outcome: "exhausted",
                r: Some(r),
                certificate: None,
                nodes: stats.nodes,
            });
            EXIT_EXHAUSTED
        }
        Err(e) => {
            eprintln!("{e}");
            error_exit(&e)
        }
    }
}

#[derive(Serialize)]
struct CheckReport {
    representable: Option<bool>,
    proof: &'static str,
    certificate: Option<oddwaring::RepMatrix>,
    nodes: u64,
}

#[derive(Serialize)]
struct FiltersReport {
    necessary: criteria::NecessaryReport,
    split: Option<criteria::SplitCertificate>,
}

fn cmd_check(coset: &CosetArg, r: Option<usize>, filters_only: bool, max_nodes: Option<u64>) -> u8 {
    let coset = match coset.load() {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("{msg}");
            return EXIT_USAGE;
        }
    };
    if filters_only {
        let necessary = match criteria::necessary_conditions(&coset) {
            Ok(rep) => rep,
            Err(e) => {
                eprintln!("{e}");
                return error_exit(&e);
            }
        };
        let split = if coset.q_w() > 8 {
            match criteria::find_split(&coset) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("{e}");
                    return error_exit(&e);
                }
            }
        } else {
            None
        };
        emit(&FiltersReport { necessary, split });
        return EXIT_OK;
    }
    let r = r.expect("clap enforces r unless --filters-only");
    if r == 0 {
        eprintln!("r must be positive");
        return EXIT_USAGE;
    }
    if !criteria::lemma1_congruence_filter(&coset, r as i64) {
        emit(&CheckReport {
            representable: Some(false),
            proof: "necessary-condition",
            certificate: None,
            nodes: 0,
        });
        return EXIT_NEGATIVE;
    }
    let budget = SearchBudget {
        max_nodes,
        canonicalize_columns: true,
    };
    match repsearch::find_representation(&coset, r, &budget) {
        Ok((SearchOutcome::Found(t), stats)) => {
            emit(&CheckReport {
                representable: Some(true),
                proof: "certificate",
                certificate: Some(t),
                nodes: stats.nodes,
            });
            EXIT_OK
        }
        Ok((SearchOutcome::NotRepresentable, stats)) => {
            emit(&CheckReport {
                representable: Some(false),
                proof: "exhaustive",
                certificate: None,
                nodes: stats.nodes,
            });
            EXIT_NEGATIVE
        }
        Ok((SearchOutcome::Exhausted, stats)) => {
            emit(&CheckReport {
                representable: None,
                proof: "exhausted",
                certificate: None,
                nodes: stats.nodes,
            });
            EXIT_EXHAUSTED
        }
        Err(e) => {
            eprintln!("{e}");
            error_exit(&e)
        }
    }
}

fn snapshot_path(explicit: Option<PathBuf>, case: &CaseSpec) -> Option<PathBuf> {
    explicit.or_else(|| {
        std::env::var_os("ODD_WARING_SNAPSHOT_DIR").map(|dir| {
            let mode = if case.scaled { "scaled" } else { "full" };
            PathBuf::from(dir).join(format!("survey-{}-{mode}.jsonl", case.label))
        })
    })
}

fn cmd_survey(
    n: usize,
    label: Option<&str>,
    scaled: bool,
    snapshot: Option<PathBuf>,
    w: Option<Vec<usize>>,
    certify: bool,
) -> u8 {
    let cases = match label {
        Some(label) => match CaseSpec::by_label(label, scaled) {
            Ok(c) if c.n == n => vec![c],
            Ok(c) => {
                eprintln!("case {} has rank {}, not {n}", c.label, c.n);
                return EXIT_USAGE;
            }
            Err(e) => {
                eprintln!("{e}");
                return EXIT_USAGE;
            }
        },
        None => match CaseSpec::standard(n, scaled) {
            Ok(cs) => cs,
            Err(e) => {
                eprintln!("{e}");
                return EXIT_USAGE;
            }
        },
    };
    let mut code = EXIT_OK;
    for case in cases {
        let case = match &w {
            Some(w) => match case.restrict_w(w) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("{e}");
                    return EXIT_USAGE;
                }
            },
            None => case,
        };
        let path = snapshot_path(snapshot.clone(), &case);
        match survey::run_case(&case, path.as_deref()) {
            Ok(mut report) => {
                if certify && !report.survivors.is_empty() {
                    if let Err(e) = survey::certify_all(&mut report, case.n + 10) {
                        eprintln!("{e}");
                        return error_exit(&e);
                    }
                }
                emit(&report);
            }
            Err(e) => {
                eprintln!("{e}");
                code = code.max(error_exit(&e));
            }
        }
    }
    code
}

fn cmd_witnesses(full: bool) -> u8 {
    match survey::run_witnesses(full) {
        Ok(reports) => {
            emit(&reports);
            EXIT_OK
        }
        Err(e) => {
            eprintln!("{e}");
            error_exit(&e)
        }
    }
}

#[derive(Serialize)]
struct BoundsReport {
    n: usize,
    d: f64,
    eps: f64,
    sigma: Vec<f64>,
    alpha_bar: Option<f64>,
    ln_alpha_bar: f64,
    c_bar: Option<f64>,
    ln_c_bar: f64,
    g: Option<f64>,
    ln_g: f64,
    /// True when direct values overflowed and only log-space is meaningful.
    log_space_only: bool,
    envelope_margin: f64,
    chain: Vec<bounds::ChainStep>,
}

fn cmd_bounds(n: usize, d: f64, eps: f64) -> u8 {
    let params = match bounds::BoundParams::new(n, d, eps) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_USAGE;
        }
    };
    let sigma: Vec<f64> = (2..=u32::min(n as u32 + 1, 16))
        .map(|k| bounds::hermite_sigma(k).expect("small k"))
        .collect();
    let alpha = bounds::alpha_bar(n).ok();
    let cbar = bounds::c_bar(n as u64, d).ok();
    let gval = bounds::g(n, d).ok();
    let chain = if n >= 3 {
        match bounds::upper_bound_chain(n, d) {
            Ok(steps) => steps,
            Err(Error::Overflow) => Vec::new(),
            Err(e) => {
                eprintln!("{e}");
                return error_exit(&e);
            }
        }
    } else {
        Vec::new()
    };
    let log_space_only = gval.is_none();
    emit(&BoundsReport {
        n,
        d,
        eps,
        sigma,
        alpha_bar: alpha,
        ln_alpha_bar: bounds::ln_alpha_bar(n),
        c_bar: cbar,
        ln_c_bar: bounds::ln_c_bar(n as u64, d),
        g: gval,
        ln_g: bounds::ln_g(n, d),
        log_space_only,
        envelope_margin: bounds::envelope_margin(&params),
        chain,
    });
    EXIT_OK
}

#[derive(Serialize)]
struct IsometricReport {
    isometric: bool,
}

fn cmd_isometric(a: &PathBuf, b: &PathBuf) -> u8 {
    let load = |p: &PathBuf| -> Result<CosetSpec, String> {
        let text =
            std::fs::read_to_string(p).map_err(|e| format!("cannot read {}: {e}", p.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("invalid coset JSON: {e}"))
    };
    let (ca, cb) = match (load(a), load(b)) {
        (Ok(ca), Ok(cb)) => (ca, cb),
        (Err(msg), _) | (_, Err(msg)) => {
            eprintln!("{msg}");
            return EXIT_USAGE;
        }
    };
    match repsearch::cosets_isometric(&ca, &cb) {
        Ok(verdict) => {
            emit(&IsometricReport { isometric: verdict });
            if verdict {
                EXIT_OK
            } else {
                EXIT_NEGATIVE
            }
        }
        Err(e) => {
            eprintln!("{e}");
            error_exit(&e)
        }
    }
}
