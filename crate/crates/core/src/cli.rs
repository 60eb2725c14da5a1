//! Command-line surface. The `subzerocore` binary is a thin wrapper around [`run`].
//!
//! Exit codes: 0 on success, 1 on any input error (including unknown flags),
//! 2 on internal errors. Summaries go to stdout, diagnostics and the resolved
//! configuration to stderr.

use std::collections::HashMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::bench::{run_bench, BenchConfig};
use crate::coverage::{empirical_coverage, expected_coverage, find_k_for_coverage};
use crate::error::{invalid, Error, Result};
use crate::io::{read_embeddings, read_labels, read_result, write_result};
use crate::selectors::select;
use crate::similarity::pairwise_distances;
use crate::synthetic::MixtureSpec;
use crate::types::{EmbeddingSet, Kernel, Method, SelectionConfig, Threads, DEFAULT_ROW_CAP};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_INTERNAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "subzerocore",
    version,
    about = "Training-free coreset selection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Select a coreset per class and write the result document.
    Select(SelectArgs),
    /// Smallest neighborhood size K whose expected coverage reaches gamma.
    FindK(FindKArgs),
    /// Closed-form expected coverage of a random s-subset.
    ExpectedCoverage(ExpectedCoverageArgs),
    /// Empirical coverage of a stored selection, per class.
    Coverage(CoverageArgs),
    /// Run every method on a seeded Gaussian mixture and print coverage and timing tables.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct SelectArgs {
    /// Embedding file (CSETEMB1 format).
    #[arg(long)]
    embeddings: PathBuf,
    /// Labels CSV with header `index,label`.
    #[arg(long)]
    labels: PathBuf,
    /// Pruning ratio: fraction of samples removed, in [0, 1).
    #[arg(long)]
    alpha: f64,
    /// Target expected coverage used to pick K, in (0, 1).
    #[arg(long, default_value_t = 0.6)]
    gamma: f64,
    /// subzerocore, facility_location, kcenter_greedy or random.
    #[arg(long, default_value = "subzerocore", value_parser = parse_method)]
    method: Method,
    /// shifted-cosine, cosine or rbf:<bandwidth>.
    #[arg(long, default_value = "shifted-cosine", value_parser = parse_kernel)]
    similarity: Kernel,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads, or `auto`.
    #[arg(long, default_value = "auto", value_parser = parse_threads)]
    threads: Threads,
    /// Where to write the JSON result document.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct FindKArgs {
    /// Ground-set size.
    #[arg(long)]
    n: usize,
    /// Coreset size.
    #[arg(long)]
    s: usize,
    /// Target coverage in (0, 1).
    #[arg(long, default_value_t = 0.6)]
    gamma: f64,
}

#[derive(Debug, Args)]
struct ExpectedCoverageArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    s: usize,
    /// Neighborhood size.
    #[arg(long)]
    k: usize,
}

#[derive(Debug, Args)]
struct CoverageArgs {
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    /// Result document written by `select`.
    #[arg(long)]
    selection: PathBuf,
    /// Neighborhood size; defaults to the K recorded for each class.
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Points per class.
    #[arg(long, default_value_t = MixtureSpec::BENCHMARK.per_class)]
    n: usize,
    /// Embedding dimension.
    #[arg(long, default_value_t = MixtureSpec::BENCHMARK.dim)]
    d: usize,
    /// Comma-separated pruning ratios.
    #[arg(long, value_delimiter = ',', default_value = "0.7,0.9,0.99")]
    alpha: Vec<f64>,
    #[arg(long, default_value_t = 0.6)]
    gamma: f64,
    #[arg(long, default_value_t = MixtureSpec::BENCHMARK.classes)]
    classes: usize,
    #[arg(long, default_value_t = MixtureSpec::BENCHMARK.seed)]
    seed: u64,
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_kernel(s: &str) -> std::result::Result<Kernel, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_threads(s: &str) -> std::result::Result<Threads, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Parses `args` (including the program name) and runs the subcommand.
/// Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_INPUT
                }
            };
        }
    };
    let outcome = match cli.command {
        Command::Select(a) => cmd_select(a, out, err),
        Command::FindK(a) => cmd_find_k(a, out),
        Command::ExpectedCoverage(a) => cmd_expected_coverage(a, out),
        Command::Coverage(a) => cmd_coverage(a, out),
        Command::Bench(a) => cmd_bench(a, out, err),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_INPUT
        }
    }
}

fn load_set(embeddings: &PathBuf, labels: &PathBuf) -> Result<EmbeddingSet> {
    let vectors = read_embeddings(embeddings)?;
    let labels = read_labels(labels)?;
    EmbeddingSet::with_row_ids(vectors, labels)
}

fn thread_pool(threads: Threads) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Threads::Fixed(n) = threads {
        builder = builder.num_threads(n.get());
    }
    builder
        .build()
        .map_err(|e| invalid(format!("cannot start thread pool: {e}")))
}

fn cmd_select(a: SelectArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let config = SelectionConfig {
        alpha: a.alpha,
        gamma: a.gamma,
        method: a.method,
        similarity: a.similarity,
        seed: a.seed,
        threads: a.threads,
        row_cap: DEFAULT_ROW_CAP,
    };
    config.validate()?;
    let threads = match config.threads {
        Threads::Auto => "auto".to_string(),
        Threads::Fixed(n) => n.to_string(),
    };
    writeln!(
        err,
        "config: method={} alpha={} gamma={} similarity={} seed={} threads={}",
        config.method, config.alpha, config.gamma, config.similarity, config.seed, threads
    )?;
    let set = load_set(&a.embeddings, &a.labels)?;
    let result = thread_pool(config.threads)?.install(|| select(&set, &config))?;
    write_result(&result, &a.output)?;
    writeln!(out, "class k budget objective coverage")?;
    for c in &result.per_class {
        let k = c.k.map_or_else(|| "-".into(), |k| k.to_string());
        let cov = c
            .empirical_coverage
            .map_or_else(|| "-".into(), |v| format!("{v:.6}"));
        writeln!(
            out,
            "{} {} {} {:.6} {}",
            c.class, k, c.budget, c.objective, cov
        )?;
        if c.k_capped {
            writeln!(
                err,
                "warning: class {}: K hit its cap before reaching gamma",
                c.class
            )?;
        }
    }
    let t = &result.timings;
    writeln!(
        err,
        "selected {} of {} (target {:.1}); distances {:.3}s similarities {:.3}s density {:.3}s greedy {:.3}s total {:.3}s",
        result.totals.selected,
        set.len(),
        result.totals.target,
        t.distances.as_secs_f64(),
        t.similarities.as_secs_f64(),
        t.density.as_secs_f64(),
        t.greedy.as_secs_f64(),
        t.total.as_secs_f64()
    )?;
    Ok(())
}

fn cmd_find_k(a: FindKArgs, out: &mut dyn Write) -> Result<()> {
    let plan = find_k_for_coverage(a.n, a.s, a.gamma)?;
    write!(out, "k={} expected_coverage={}", plan.k, plan.achieved)?;
    if plan.capped {
        write!(out, " capped=true")?;
    }
    writeln!(out)?;
    Ok(())
}

fn cmd_expected_coverage(a: ExpectedCoverageArgs, out: &mut dyn Write) -> Result<()> {
    writeln!(out, "{}", expected_coverage(a.n, a.s, a.k)?)?;
    Ok(())
}

fn cmd_coverage(a: CoverageArgs, out: &mut dyn Write) -> Result<()> {
    let set = load_set(&a.embeddings, &a.labels)?;
    let doc = read_result(&a.selection)?;
    let row_of: HashMap<u64, usize> = set
        .ids()
        .iter()
        .enumerate()
        .map(|(r, &id)| (id, r))
        .collect();
    let class_of_label: HashMap<u32, usize> = (0..set.num_classes())
        .map(|c| (set.class_label(c), c))
        .collect();

    for entry in &doc.per_class {
        let &class = class_of_label
            .get(&entry.class)
            .ok_or_else(|| Error::Class {
                class: entry.class,
                reason: "not present in the labels file".into(),
            })?;
        let members = set.class_rows(class);
        let local_of: HashMap<usize, usize> =
            members.iter().enumerate().map(|(l, &r)| (r, l)).collect();
        let selected = entry
            .selected_ids
            .iter()
            .map(|id| {
                let row = row_of.get(id).ok_or(Error::UnknownId(*id))?;
                local_of.get(row).copied().ok_or_else(|| Error::Class {
                    class: entry.class,
                    reason: format!("selected id {id} belongs to another class"),
                })
            })
            .collect::<Result<Vec<usize>>>()?;
        let k = a.k.or(entry.k).ok_or_else(|| Error::Class {
            class: entry.class,
            reason: "no K recorded; pass --k".into(),
        })?;
        let rows = set.gather(&members);
        let dist = pairwise_distances(rows.view())?;
        let cov = empirical_coverage(&dist, &selected, k)?;
        writeln!(out, "class={} k={} coverage={}", entry.class, k, cov)?;
    }
    Ok(())
}

fn cmd_bench(a: BenchArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let config = BenchConfig {
        mixture: MixtureSpec {
            classes: a.classes,
            per_class: a.n,
            dim: a.d,
            seed: a.seed,
        },
        alphas: a.alpha,
        gamma: a.gamma,
        similarity: Kernel::ShiftedCosine,
        row_cap: DEFAULT_ROW_CAP,
    };
    if let Some(bad) = config.alphas.iter().find(|x| !(0.0..1.0).contains(*x)) {
        return Err(invalid(format!("alpha must be < 1 and >= 0, got {bad}")));
    }
    if !(config.gamma > 0.0 && config.gamma < 1.0) {
        return Err(invalid("gamma must be in (0, 1)"));
    }
    config.check_size()?;
    writeln!(
        err,
        "config: classes={} n={} d={} alpha={:?} gamma={} seed={}",
        a.classes, a.n, a.d, config.alphas, config.gamma, a.seed
    )?;
    let report = run_bench(&config)?;
    write!(out, "{}", report.coverage_table())?;
    writeln!(out)?;
    write!(out, "{}", report.timing_table())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut full = vec!["subzerocore"];
        full.extend_from_slice(args);
        let code = run(full, &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn find_k_output() {
        assert_eq!(
            run_args(&["find-k", "--n", "5", "--s", "2", "--gamma", "0.6"]).1,
            "k=2 expected_coverage=0.7\n"
        );
        assert_eq!(
            run_args(&["find-k", "--n", "10", "--s", "9", "--gamma", "0.99"]).1,
            "k=2 expected_coverage=1\n"
        );
        let (code, _, err) = run_args(&["find-k", "--n", "5", "--s", "5", "--gamma", "0.5"]);
        assert_eq!(code, EXIT_INPUT);
        assert!(err.contains("coreset too large"));
    }

    #[test]
    fn expected_coverage_output() {
        assert_eq!(
            run_args(&["expected-coverage", "--n", "5", "--s", "2", "--k", "1"]).1,
            "0.4\n"
        );
        assert_eq!(
            run_args(&["expected-coverage", "--n", "5", "--s", "2", "--k", "9"]).0,
            EXIT_INPUT
        );
    }

    #[test]
    fn unknown_flags_and_methods_are_input_errors() {
        assert_eq!(
            run_args(&["find-k", "--n", "5", "--s", "2", "--bogus"]).0,
            EXIT_INPUT
        );
        let (code, _, err) = run_args(&[
            "select",
            "--embeddings",
            "e",
            "--labels",
            "l",
            "--alpha",
            "0.5",
            "--method",
            "herding",
            "--output",
            "o",
        ]);
        assert_eq!(code, EXIT_INPUT);
        assert!(err.contains("unknown method"));
    }

    #[test]
    fn alpha_must_be_below_one() {
        let (code, _, err) = run_args(&[
            "select",
            "--embeddings",
            "e",
            "--labels",
            "l",
            "--alpha",
            "1.0",
            "--output",
            "o",
        ]);
        assert_eq!(code, EXIT_INPUT);
        assert!(err.contains("alpha must be < 1"));
    }

    #[test]
    fn help_documents_defaults() {
        let (code, out, _) = run_args(&["select", "--help"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("[default: 0.6]"));
        assert!(out.contains("[default: subzerocore]"));
        for sub in ["find-k", "bench"] {
            assert!(run_args(&[sub, "--help"]).1.contains("[default: 0.6]"));
        }
    }

    #[test]
    fn bench_size_guard() {
        let (code, _, err) = run_args(&["bench", "--n", "1000000000", "--classes", "1"]);
        assert_eq!(code, EXIT_INPUT);
        assert!(err.contains("bytes"));
    }
}
