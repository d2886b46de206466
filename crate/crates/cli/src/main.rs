use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};

use hiergap::cosets::{select_lasserre_predicates, verify_coset};
use hiergap::csp::build_nearest_codeword;
use hiergap::ensembles::{degree_profile, min_uncovered_subset, sample_hypergraph, sample_ldpc, ParityCheckGraph};
use hiergap::lashier::{hvc_instance, hvc_lasserre, verify_lasserre};
use hiergap::local::{LocalDistributionFamily, MomentMatrix};
use hiergap::pidist::select_sa_predicates;
use hiergap::rational::{format_rational, parse_rational, Rational};
use hiergap::report::{
    construct_lasserre, construct_sa, decode_report, inject_errors, with_integral_optimum, GapReport, Hierarchy, PipelineError,
};
use hiergap::sahier::verify_family;

#[derive(Parser)]
#[command(name = "hiergap", version, about = "Fractional hierarchy solutions for LDPC decoding, built and checked exactly")]
struct Cli {
    /// Worker threads for parallel work (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    Sa,
    Lasserre,
}

#[derive(clap::Args)]
struct Received {
    /// File holding the received word as 0/1 characters.
    #[arg(long, conflicts_with = "errors")]
    received: Option<PathBuf>,
    /// Inject a uniformly random error pattern of this weight instead.
    #[arg(long)]
    errors: Option<usize>,
    /// Seed for the injected error pattern.
    #[arg(long, default_value_t = 0)]
    error_seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a (d_v, d_c)-regular parity-check code from the configuration model.
    Sample {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        dv: usize,
        #[arg(long, default_value_t = 5)]
        dc: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Alist output; metadata goes next to it with a `.json` suffix.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the degree histogram as JSON.
        #[arg(long)]
        report_degrees: bool,
    },
    /// Select and certify the predicate family for a check degree.
    Predicates {
        #[arg(long)]
        dc: usize,
        #[arg(long, value_enum, default_value = "sa")]
        hierarchy: Which,
    },
    /// Build, verify and collapse a hierarchy solution for one received word.
    Construct {
        #[arg(long)]
        code: PathBuf,
        #[command(flatten)]
        received: Received,
        #[arg(long, value_enum)]
        hierarchy: Which,
        #[arg(long, default_value_t = 2)]
        rounds: usize,
        /// Closure size cap for the SA construction (default: n).
        #[arg(long)]
        budget: Option<usize>,
        /// Seed for the Lasserre coset placement search.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also compute the integral optimum by exhaustive search.
        #[arg(long)]
        integral: bool,
        /// Directory for solution.json and gap.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-verify a stored collapsed solution against the code and received word.
    Verify {
        #[arg(long)]
        code: PathBuf,
        #[command(flatten)]
        received: Received,
        #[arg(long)]
        solution: PathBuf,
        /// Gap report whose value and verdict must agree with the solution.
        #[arg(long)]
        gap: Option<PathBuf>,
    },
    /// Exact LP decoding of a received word.
    LpDecode {
        #[arg(long)]
        code: PathBuf,
        #[command(flatten)]
        received: Received,
    },
    /// Repeated constructions over independent error patterns.
    GapReport {
        #[arg(long)]
        code: PathBuf,
        #[arg(long, value_enum)]
        hierarchy: Which,
        #[arg(long, default_value_t = 2)]
        rounds: usize,
        #[arg(long)]
        errors: usize,
        #[arg(long, default_value_t = 1)]
        trials: usize,
        /// Trial `i` uses error seed `seed + i`.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Vertex cover gap on a random k-uniform hypergraph.
    Hvc {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        k: usize,
        /// Edge density: about beta·n edges.
        #[arg(long, default_value = "1")]
        beta: String,
        /// Coverage target: every (1 − epsilon)n-subset should contain an edge.
        #[arg(long, default_value = "2/5")]
        epsilon: String,
        #[arg(long, default_value_t = 1)]
        rounds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Command outcome that maps onto the process exit code.
enum Status {
    Ok,
    Unverified,
}

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct Usage(String);

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(4);
        }
    };
    match run(cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Unverified) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.is::<Usage>() {
        return 4;
    }
    match e.downcast_ref::<PipelineError>() {
        Some(p) if p.is_cap() => 3,
        Some(p) if p.is_usage() => 4,
        _ => 1,
    }
}

fn run(cli: Cli) -> anyhow::Result<Status> {
    if let Some(j) = cli.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global()?;
    }
    match cli.command {
        Command::Sample { n, dv, dc, seed, out, report_degrees } => sample(n, dv, dc, seed, out, report_degrees),
        Command::Predicates { dc, hierarchy } => predicates(dc, hierarchy),
        Command::Construct { code, received, hierarchy, rounds, budget, seed, integral, out } => {
            let g = read_code(&code)?;
            let word = received_word(&g, &received)?;
            construct(&g, &word, received.errors.map(|_| received.error_seed), hierarchy, rounds, budget, seed, integral, out)
        }
        Command::Verify { code, received, solution, gap } => {
            let g = read_code(&code)?;
            let word = received_word(&g, &received)?;
            verify(&g, &word, &solution, gap.as_deref())
        }
        Command::LpDecode { code, received } => {
            let g = read_code(&code)?;
            let word = received_word(&g, &received)?;
            let (d, mut gap) = decode_report(&g, &word)?;
            gap.instance.error_seed = received.errors.map(|_| received.error_seed);
            print(&json!({ "decode": d, "gap": gap }));
            Ok(Status::Ok)
        }
        Command::GapReport { code, hierarchy, rounds, errors, trials, seed } => {
            let g = read_code(&code)?;
            gap_report(&g, hierarchy, rounds, errors, trials, seed)
        }
        Command::Hvc { n, k, beta, epsilon, rounds, seed } => hvc(n, k, &rational_arg(&beta)?, &rational_arg(&epsilon)?, rounds, seed),
    }
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn print(v: &Value) {
    emit(&(serde_json::to_string_pretty(v).expect("json") + "\n"));
}

fn rational_arg(text: &str) -> anyhow::Result<Rational> {
    parse_rational(text).map_err(|e| Usage(format!("bad rational `{text}`: {e}")).into())
}

fn metadata_path(code: &Path) -> PathBuf {
    let mut s = code.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Reads an alist file, recovering the sampling seed from its metadata file
/// when one sits next to it.
fn read_code(path: &Path) -> anyhow::Result<ParityCheckGraph> {
    let text = fs::read_to_string(path).map_err(|e| Usage(format!("reading {}: {e}", path.display())))?;
    let mut g = ParityCheckGraph::parse_alist(&text).map_err(|e| Usage(format!("parsing {}: {e}", path.display())))?;
    if let Ok(meta) = fs::read_to_string(metadata_path(path)) {
        if let Ok(v) = serde_json::from_str::<Value>(&meta) {
            g.seed = v.get("seed").and_then(Value::as_u64);
        }
    }
    Ok(g)
}

fn received_word(g: &ParityCheckGraph, r: &Received) -> anyhow::Result<Vec<u8>> {
    match (&r.received, r.errors) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).map_err(|e| Usage(format!("reading {}: {e}", path.display())))?;
            let word = parse_word(&text)?;
            if word.len() != g.n {
                bail!(Usage(format!("received word has length {}, code has n = {}", word.len(), g.n)));
            }
            Ok(word)
        }
        (None, Some(w)) => Ok(inject_errors(g.n, w, r.error_seed)?),
        (None, None) => Ok(vec![0; g.n]),
    }
}

fn parse_word(text: &str) -> anyhow::Result<Vec<u8>> {
    text.chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            _ => Err(Usage(format!("received word contains `{c}`")).into()),
        })
        .collect()
}

fn format_word(w: &[u8]) -> String {
    w.iter().map(|b| if *b == 0 { '0' } else { '1' }).collect()
}

fn sample(n: usize, dv: usize, dc: usize, seed: u64, out: Option<PathBuf>, report_degrees: bool) -> anyhow::Result<Status> {
    let g = sample_ldpc(n, dv, dc, seed).map_err(PipelineError::from)?;
    let profile = degree_profile(&g);
    let meta = json!({
        "n": n, "d_v": dv, "d_c": dc, "seed": seed, "m": g.m(),
        "conformant": profile.conformant,
        "version": env!("CARGO_PKG_VERSION"),
    });
    match &out {
        Some(path) => {
            fs::write(path, g.to_alist())?;
            fs::write(metadata_path(path), serde_json::to_string_pretty(&meta)?)?;
        }
        None if !report_degrees => emit(&g.to_alist()),
        None => {}
    }
    if report_degrees {
        print(&serde_json::to_value(&profile)?);
    }
    Ok(Status::Ok)
}

fn predicates(dc: usize, hierarchy: Which) -> anyhow::Result<Status> {
    let mut all_ok = true;
    let doc = match hierarchy {
        Which::Sa => {
            let p = select_sa_predicates(dc).map_err(PipelineError::from)?;
            let entries: Vec<Value> = p
                .entries
                .iter()
                .map(|e| {
                    let report = e.dist.verify();
                    let ok = report.ok() && e.dist.zero_counts_match(e.kind);
                    all_ok &= ok;
                    let weights: serde_json::Map<String, Value> = e
                        .dist
                        .weights()
                        .weights()
                        .iter()
                        .map(|(r, a)| (r.to_string(), Value::String(format_rational(a))))
                        .collect();
                    json!({
                        "arity": e.arity,
                        "kind": e.kind.to_string(),
                        "construction": format!("{:?}", e.construction),
                        "weights_by_zero_count": weights,
                        "balanced": report.balanced,
                        "pairwise_independent": report.pairwise,
                        "parity": e.dist.zero_counts_match(e.kind),
                    })
                })
                .collect();
            json!({ "hierarchy": "SA", "d_c": dc, "q": p.q, "entries": entries })
        }
        Which::Lasserre => {
            let p = select_lasserre_predicates(dc).map_err(PipelineError::from)?;
            let entries = p
                .entries
                .iter()
                .map(|e| {
                    let ok = verify_coset(&e.coset).is_ok_and(|r| r.ok());
                    all_ok &= ok;
                    Ok(json!({
                        "arity": e.arity,
                        "kind": e.kind.to_string(),
                        "verified": ok,
                        "coset": serde_json::from_str::<Value>(&e.coset.to_json())?,
                    }))
                })
                .collect::<anyhow::Result<Vec<Value>>>()?;
            json!({ "hierarchy": "Lasserre", "d_c": dc, "q": p.q, "entries": entries })
        }
    };
    print(&doc);
    Ok(if all_ok { Status::Ok } else { Status::Unverified })
}

#[allow(clippy::too_many_arguments)]
fn construct(
    g: &ParityCheckGraph,
    word: &[u8],
    error_seed: Option<u64>,
    hierarchy: Which,
    rounds: usize,
    budget: Option<usize>,
    seed: u64,
    integral: bool,
    out: Option<PathBuf>,
) -> anyhow::Result<Status> {
    let (solution_json, mut gap, details) = match hierarchy {
        Which::Sa => {
            let c = construct_sa(g, word, rounds, budget.unwrap_or(g.n))?;
            let details = json!({
                "stretched_q": c.stretched.q,
                "stored_sets": c.solution.family.len(),
                "report": c.report,
                "collapsed_report": c.collapsed_report,
                "feldman_objective": format_rational(&c.feldman.objective),
                "feldman_violation": c.feldman.violation,
            });
            let gap = if integral { with_integral_optimum(c.gap, &c.instance) } else { c.gap };
            (c.collapsed.to_json(), gap, details)
        }
        Which::Lasserre => {
            let c = construct_lasserre(g, word, rounds, seed)?;
            let details = json!({
                "coset_q": c.coset_instance.q,
                "placement_attempt": c.placement_attempt,
                "moment_dimension": c.report.dimension,
                "report": c.report,
                "collapsed_report": c.collapsed_report,
            });
            let gap = if integral { with_integral_optimum(c.gap, &c.instance) } else { c.gap };
            (c.collapsed.to_json(), gap, details)
        }
    };
    gap.instance.error_seed = error_seed;
    if let Some(dir) = &out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("solution.json"), &solution_json)?;
        fs::write(dir.join("gap.json"), gap.to_json())?;
        fs::write(dir.join("received.txt"), format_word(word) + "\n")?;
    }
    print(&json!({ "gap": gap, "verification": details }));
    Ok(if gap.verified { Status::Ok } else { Status::Unverified })
}

fn verify(g: &ParityCheckGraph, word: &[u8], solution: &Path, gap: Option<&Path>) -> anyhow::Result<Status> {
    let text = fs::read_to_string(solution).with_context(|| format!("reading {}", solution.display()))?;
    let instance = build_nearest_codeword(g, word).map_err(PipelineError::from)?;
    let (hierarchy, ok, value, report) = if let Ok(mm) = MomentMatrix::from_json(&text) {
        let r = verify_lasserre(&mm, &instance);
        (Hierarchy::Lasserre, r.ok(), r.value.clone(), serde_json::to_value(&r)?)
    } else {
        let fam = LocalDistributionFamily::from_json(&text).with_context(|| format!("parsing {}", solution.display()))?;
        let r = verify_family(&fam, &instance);
        (Hierarchy::Sa, r.ok(), r.value.clone(), serde_json::to_value(&r)?)
    };
    let mut gap_ok = true;
    if let Some(path) = gap {
        let stored = GapReport::from_json(&fs::read_to_string(path)?)?;
        let weight = word.iter().filter(|&&b| b != 0).count();
        gap_ok = stored.consistent() && stored.hierarchy == hierarchy && stored.value_absolute == value && stored.errors == weight;
    }
    print(&json!({
        "hierarchy": hierarchy,
        "verified": ok,
        "value_absolute": format_rational(&value),
        "gap_consistent": gap_ok,
        "report": report,
    }));
    Ok(if ok && gap_ok { Status::Ok } else { Status::Unverified })
}

fn gap_report(g: &ParityCheckGraph, hierarchy: Which, rounds: usize, errors: usize, trials: usize, seed: u64) -> anyhow::Result<Status> {
    let results: Vec<Result<GapReport, PipelineError>> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let s = seed + i;
            let word = inject_errors(g.n, errors, s)?;
            let mut gap = match hierarchy {
                Which::Sa => construct_sa(g, &word, rounds, g.n)?.gap,
                Which::Lasserre => construct_lasserre(g, &word, rounds, s)?.gap,
            };
            gap.instance.error_seed = Some(s);
            Ok(gap)
        })
        .collect();
    let reports = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let verified = reports.iter().all(|r| r.verified);
    let fails = reports.iter().filter(|r| r.decoder_fails).count();
    print(&json!({ "trials": trials, "decoder_fails": fails, "all_verified": verified, "reports": reports }));
    Ok(if verified { Status::Ok } else { Status::Unverified })
}

fn hvc(n: usize, k: usize, beta: &Rational, epsilon: &Rational, rounds: usize, seed: u64) -> anyhow::Result<Status> {
    let h = sample_hypergraph(n, beta, k, seed).map_err(PipelineError::from)?;
    let coverage = min_uncovered_subset(&h, &(Rational::from_integer(1.into()) - epsilon), seed);
    let instance = hvc_instance(&h).map_err(PipelineError::from)?;
    let optimum = hiergap::csp::brute_force_optimum(&instance).map_err(PipelineError::from)?.map(|o| o.ones);
    let lasserre = match hvc_lasserre(&h, rounds, seed) {
        Ok(s) => json!({
            "value": format_rational(&s.value),
            "normalized_value": format_rational(&s.normalized_value),
            "verified": s.report.ok(),
            "ratio": optimum.map(|o| format_rational(&(Rational::from_integer(o.into()) / &s.value))),
        }),
        Err(e) => json!({ "error": e.to_string() }),
    };
    print(&json!({
        "n": n, "k": k, "beta": format_rational(beta), "seed": seed, "edges": h.edges.len(),
        "coverage": coverage,
        "integral_optimum": optimum,
        "lasserre": lasserre,
    }));
    let ok = lasserre.get("verified").and_then(Value::as_bool).unwrap_or(false);
    Ok(if ok { Status::Ok } else { Status::Unverified })
}
