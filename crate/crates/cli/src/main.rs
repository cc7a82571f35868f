//! `jlpriv`: releases, queries, baselines, audits and benchmark sweeps.
//!
//! Every output starts with a `#` provenance line carrying the command, its
//! parameters and the seed. Releases also write `<output>.meta`, which query
//! commands read back.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use jl_privacy::audit::{audit_covariance, audit_graph, univariate_demo, AuditReport};
use jl_privacy::baselines::{laplace_cut, randomized_response_release, rr_cut_estimate, RrGraph};
use jl_privacy::bench::{bench_sweep, BenchConfig};
use jl_privacy::covariance::{
    answer_direction_query, compute_params_cov, release_covariance_within, release_mean, DataMatrix,
    SanitizedCovariance,
};
use jl_privacy::graph::{parse_edge_list, translate_weights, CutQuery};
use jl_privacy::laplacian::{
    answer_cut_query, compute_params, projected_edge_matrix, release_laplacian_within, LaplacianReleaseParams, SanitizedLaplacian,
};
use jl_privacy::linalg::{format_real, read_matrix_csv, write_matrix_csv};
use jl_privacy::meta::Metadata;
use jl_privacy::sketch::{mix_seed, GENERATOR_ID};
use jl_privacy::Error;

const EXIT_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_INGEST: u8 = 3;
const EXIT_RANGE: u8 = 4;
const EXIT_BUDGET: u8 = 5;
const EXIT_CHECKS: u8 = 6;

#[derive(Parser)]
#[command(name = "jlpriv", version, about = "Differentially private graph and covariance release by random projection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Release a sanitized Laplacian of an edge-list graph.
    ReleaseLaplacian(ReleaseArgs),
    /// Answer cut queries against a Laplacian or randomized-response release.
    QueryCut(QueryArgs),
    /// Release a sanitized covariance of a CSV data matrix.
    ReleaseCovariance(ReleaseArgs),
    /// Answer directional-variance queries against a covariance release.
    QueryVariance(QueryArgs),
    /// Release the noisy column means of a CSV data matrix.
    ReleaseMean(MeanArgs),
    /// Randomized response on every pair of an edge-list graph.
    RrRelease(RrArgs),
    /// Answer cut queries with Laplace noise on the true answers.
    BaselineLaplace(LaplaceArgs),
    /// Audit the Laplacian privacy bounds on random neighbor pairs.
    AuditGraph(AuditGraphArgs),
    /// Audit the covariance privacy bounds on random neighbor pairs.
    AuditCovariance(AuditCovarianceArgs),
    /// Estimate the number of ones in a bit vector from a projected release.
    DemoUnivariate(DemoArgs),
    /// Compare mechanisms on random graphs.
    Bench(BenchArgs),
}

#[derive(Args, Clone, Copy)]
struct Privacy {
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    eta: f64,
    #[arg(long)]
    nu: f64,
}

#[derive(Args)]
struct ReleaseArgs {
    #[command(flatten)]
    privacy: Privacy,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Refuse releases whose working set exceeds this many bytes.
    #[arg(long)]
    max_bytes: Option<u64>,
    /// Also write the projection `O = M E_H` to `<output>.projection` (audits
    /// only; Laplacian releases only).
    #[arg(long)]
    audit_projection: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Keyvalue,
}

#[derive(Args)]
struct QueryArgs {
    /// The released matrix; its metadata is read from `<input>.meta`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct MeanArgs {
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct RrArgs {
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Also write the `{0, 1}` post-processed graph to `<output>.nonnegative`.
    #[arg(long)]
    nonnegative: bool,
}

#[derive(Args)]
struct LaplaceArgs {
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args, Clone, Copy)]
struct AuditPrivacy {
    #[arg(long, default_value_t = 1.0)]
    eps: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 0.5)]
    eta: f64,
    /// Defaults to `2 e^-2`, which makes `8 ln(2/nu)` exactly 16.
    #[arg(long, default_value_t = 2.0 * (-2.0f64).exp())]
    nu: f64,
}

#[derive(Args)]
struct AuditGraphArgs {
    #[command(flatten)]
    privacy: AuditPrivacy,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 8)]
    nodes: usize,
    #[arg(long, default_value_t = 200)]
    pairs: usize,
    /// Monte Carlo samples per side.
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "keyvalue")]
    format: Format,
}

#[derive(Args)]
struct AuditCovarianceArgs {
    #[command(flatten)]
    privacy: AuditPrivacy,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 8)]
    rows: usize,
    #[arg(long, default_value_t = 4)]
    cols: usize,
    #[arg(long, default_value_t = 200)]
    pairs: usize,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "keyvalue")]
    format: Format,
}

#[derive(Args)]
struct DemoArgs {
    #[command(flatten)]
    privacy: Privacy,
    #[arg(long)]
    seed: u64,
    /// Bits separated by whitespace or commas.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "keyvalue")]
    format: Format,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    privacy: Privacy,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    nodes: usize,
    #[arg(long, default_value_t = 0.5)]
    edge_prob: f64,
    #[arg(long, value_delimiter = ',', default_value = "5,10,20,50")]
    sizes: Vec<usize>,
    /// Number of seeds, each with its own release.
    #[arg(long, default_value_t = 200)]
    trials: u64,
    /// Cuts per size per seed.
    #[arg(long, default_value_t = 5)]
    queries: usize,
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Failure with the exit code it maps to.
struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn new(code: u8, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Parse { .. }
            | Error::InvalidGraph(_)
            | Error::InvalidMatrix(_)
            | Error::InvalidQuery(_)
            | Error::DimensionMismatch { .. }
            | Error::Io(_) => EXIT_INGEST,
            Error::ParameterOutOfRange(_)
            | Error::GraphTooSmall { .. }
            | Error::ParametersTooWeak { .. }
            | Error::UnsupportedShape(_) => EXIT_RANGE,
            Error::AllocationBudget { .. } => EXIT_BUDGET,
            _ => EXIT_FAILURE,
        };
        CliError::new(code, e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn read_input(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::new(EXIT_INGEST, format!("cannot read {}: {e}", path.display())))
}

fn write_output(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::new(EXIT_FAILURE, format!("cannot write {}: {e}", path.display())))
}

fn emit(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => write_output(p, text),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::new(EXIT_FAILURE, e.to_string())),
    }
}

fn meta_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

/// `# jlpriv <command> key=value ...`
fn provenance(command: &str, fields: &[(&str, String)]) -> String {
    let mut line = format!("# jlpriv {command}");
    for (k, v) in fields {
        let _ = write!(line, " {k}={v}");
    }
    line.push('\n');
    line
}

fn matrix_text(header: &str, m: &jl_privacy::linalg::Matrix) -> String {
    let mut buf = header.as_bytes().to_vec();
    write_matrix_csv(&mut buf, m).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("csv output is ASCII")
}

fn privacy_fields(p: &Privacy) -> Vec<(&'static str, String)> {
    vec![
        ("eps", format_real(p.eps)),
        ("delta", format_real(p.delta)),
        ("eta", format_real(p.eta)),
        ("nu", format_real(p.nu)),
    ]
}

fn release_metadata(mechanism: &str, p: &Privacy, r: usize, w: f64, seed: u64) -> Metadata {
    let mut meta = Metadata::new();
    meta.set("mechanism", mechanism)
        .set("eps", format_real(p.eps))
        .set("delta", format_real(p.delta))
        .set("eta", format_real(p.eta))
        .set("nu", format_real(p.nu))
        .set("r", r)
        .set("w", format_real(w));
    meta.set("seed", seed);
    meta.set("generator", GENERATOR_ID);
    meta
}

fn release_laplacian_cmd(a: &ReleaseArgs) -> CliResult<()> {
    let g = parse_edge_list(&read_input(&a.input)?)?;
    let p = &a.privacy;
    let params = compute_params(p.eps, p.delta, p.eta, p.nu, g.n())?;
    let released = release_laplacian_within(&g, &params, a.seed, a.max_bytes)?;
    let mut fields = privacy_fields(p);
    fields.extend([
        ("r", params.r.to_string()),
        ("w", format_real(params.w)),
        ("n", params.n.to_string()),
        ("seed", a.seed.to_string()),
        ("generator", GENERATOR_ID.to_string()),
    ]);
    let header = provenance("release-laplacian", &fields);
    write_output(&a.output, &matrix_text(&header, released.l_tilde()))?;
    if a.audit_projection {
        let h = translate_weights(&g, params.w_over_n())?;
        let o = projected_edge_matrix(&h, params.r, a.seed);
        let mut path = a.output.as_os_str().to_owned();
        path.push(".projection");
        write_output(Path::new(&path), &matrix_text(&header, &o))?;
    }
    let mut meta = release_metadata("laplacian", p, params.r, params.w, a.seed);
    meta.set("n", params.n);
    write_output(&meta_path(&a.output), &(header + &meta.to_text()))
}

fn release_covariance_cmd(a: &ReleaseArgs) -> CliResult<()> {
    let data = DataMatrix::new(read_matrix_csv(read_input(&a.input)?.as_bytes())?);
    let p = &a.privacy;
    let params = compute_params_cov(p.eps, p.delta, p.eta, p.nu)?;
    if a.audit_projection {
        return Err(CliError::new(EXIT_USAGE, "--audit-projection applies to release-laplacian only"));
    }
    let released = release_covariance_within(&data, &params, a.seed, a.max_bytes)?;
    let mut fields = privacy_fields(p);
    fields.extend([
        ("r", params.r.to_string()),
        ("w", format_real(params.w)),
        ("n", data.n().to_string()),
        ("d", data.d().to_string()),
        ("seed", a.seed.to_string()),
        ("generator", GENERATOR_ID.to_string()),
    ]);
    let header = provenance("release-covariance", &fields);
    write_output(&a.output, &matrix_text(&header, released.c_tilde()))?;
    let mut meta = release_metadata("covariance", p, params.r, params.w, a.seed);
    meta.set("n", data.n()).set("d", data.d());
    write_output(&meta_path(&a.output), &(header + &meta.to_text()))
}

fn parse_cuts(text: &str, n: usize) -> CliResult<Vec<CutQuery>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let ids = line
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse {
                line: i + 1,
                msg: format!("bad node id: {e}"),
            })?;
        out.push(CutQuery::new(n, ids).map_err(|e| Error::Parse {
            line: i + 1,
            msg: e.to_string(),
        })?);
    }
    Ok(out)
}

fn parse_directions(text: &str, d: usize) -> CliResult<Vec<Vec<f64>>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let x = line
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse {
                line: i + 1,
                msg: format!("bad coordinate: {e}"),
            })?;
        if x.len() != d {
            return Err(Error::Parse {
                line: i + 1,
                msg: format!("direction has {} coordinates, expected {d}", x.len()),
            }
            .into());
        }
        out.push(x);
    }
    Ok(out)
}

fn format_answers(command: &str, fields: &[(&str, String)], answers: &[f64], format: Format) -> String {
    let mut out = provenance(command, fields);
    match format {
        Format::Csv => {
            out.push_str("query,answer\n");
            for (i, a) in answers.iter().enumerate() {
                let _ = writeln!(out, "{i},{}", format_real(*a));
            }
        }
        Format::Keyvalue => {
            for (i, a) in answers.iter().enumerate() {
                let _ = writeln!(out, "answer.{i}={}", format_real(*a));
            }
        }
    }
    out
}

fn read_meta(input: &Path) -> CliResult<Metadata> {
    Ok(Metadata::parse(&read_input(&meta_path(input))?)?)
}

fn meta_privacy(meta: &Metadata) -> CliResult<Privacy> {
    Ok(Privacy {
        eps: meta.require("eps")?,
        delta: meta.require("delta")?,
        eta: meta.require("eta")?,
        nu: meta.require("nu")?,
    })
}

fn query_cut_cmd(a: &QueryArgs) -> CliResult<()> {
    let meta = read_meta(&a.input)?;
    let mechanism = meta.get("mechanism").unwrap_or("laplacian").to_string();
    let seed: u64 = meta.require("seed")?;
    let (answers, fields) = match mechanism.as_str() {
        "laplacian" => {
            let p = meta_privacy(&meta)?;
            let n: usize = meta.require("n")?;
            let params: LaplacianReleaseParams = compute_params(p.eps, p.delta, p.eta, p.nu, n)?;
            let l = read_matrix_csv(read_input(&a.input)?.as_bytes())?;
            let released = SanitizedLaplacian::from_parts(l, params, seed)?;
            let cuts = parse_cuts(&read_input(&a.queries)?, n)?;
            let answers = cuts
                .iter()
                .map(|q| answer_cut_query(&released, q))
                .collect::<jl_privacy::Result<Vec<_>>>()?;
            let mut fields = privacy_fields(&p);
            fields.extend([("n", n.to_string()), ("seed", seed.to_string())]);
            (answers, fields)
        }
        "randomized-response" => {
            let eps: f64 = meta.require("eps")?;
            let h = RrGraph::from_edge_list(&read_input(&a.input)?, eps)?;
            let cuts = parse_cuts(&read_input(&a.queries)?, h.n())?;
            let answers = cuts
                .iter()
                .map(|q| rr_cut_estimate(&h, q))
                .collect::<jl_privacy::Result<Vec<_>>>()?;
            let fields = vec![
                ("mechanism", mechanism.clone()),
                ("eps", format_real(eps)),
                ("n", h.n().to_string()),
                ("seed", seed.to_string()),
            ];
            (answers, fields)
        }
        other => return Err(CliError::new(EXIT_INGEST, format!("unknown release mechanism `{other}`"))),
    };
    emit(a.output.as_deref(), &format_answers("query-cut", &fields, &answers, a.format))
}

fn query_variance_cmd(a: &QueryArgs) -> CliResult<()> {
    let meta = read_meta(&a.input)?;
    let p = meta_privacy(&meta)?;
    let seed: u64 = meta.require("seed")?;
    let d: usize = meta.require("d")?;
    let params = compute_params_cov(p.eps, p.delta, p.eta, p.nu)?;
    let c = read_matrix_csv(read_input(&a.input)?.as_bytes())?;
    if c.nrows() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: c.nrows(),
        }
        .into());
    }
    let released = SanitizedCovariance::from_parts(c, params, seed)?;
    let dirs = parse_directions(&read_input(&a.queries)?, d)?;
    let answers = dirs
        .iter()
        .map(|x| answer_direction_query(&released, x))
        .collect::<jl_privacy::Result<Vec<_>>>()?;
    let mut fields = privacy_fields(&p);
    fields.extend([("d", d.to_string()), ("seed", seed.to_string())]);
    emit(a.output.as_deref(), &format_answers("query-variance", &fields, &answers, a.format))
}

fn release_mean_cmd(a: &MeanArgs) -> CliResult<()> {
    let data = DataMatrix::new(read_matrix_csv(read_input(&a.input)?.as_bytes())?);
    let mean = release_mean(&data, a.eps, a.delta, a.seed)?;
    let fields = [
        ("eps", format_real(a.eps)),
        ("delta", format_real(a.delta)),
        ("n", data.n().to_string()),
        ("d", data.d().to_string()),
        ("seed", a.seed.to_string()),
        ("generator", GENERATOR_ID.to_string()),
    ];
    let mut out = provenance("release-mean", &fields);
    out.push_str(&mean.iter().map(|v| format_real(*v)).collect::<Vec<_>>().join(","));
    out.push('\n');
    write_output(&a.output, &out)
}

fn rr_release_cmd(a: &RrArgs) -> CliResult<()> {
    let g = parse_edge_list(&read_input(&a.input)?)?;
    let h = randomized_response_release(&g, a.eps, a.seed)?;
    let fields = [
        ("eps", format_real(a.eps)),
        ("n", g.n().to_string()),
        ("seed", a.seed.to_string()),
        ("generator", GENERATOR_ID.to_string()),
    ];
    let header = provenance("rr-release", &fields);
    write_output(&a.output, &(header.clone() + &h.to_edge_list()))?;
    if a.nonnegative {
        let mut path = a.output.as_os_str().to_owned();
        path.push(".nonnegative");
        write_output(Path::new(&path), &(header.clone() + &h.to_nonnegative().to_edge_list()))?;
    }
    let mut meta = Metadata::new();
    meta.set("mechanism", "randomized-response")
        .set("eps", format_real(a.eps))
        .set("n", g.n())
        .set("seed", a.seed)
        .set("generator", GENERATOR_ID);
    write_output(&meta_path(&a.output), &(header + &meta.to_text()))
}

fn baseline_laplace_cmd(a: &LaplaceArgs) -> CliResult<()> {
    let g = parse_edge_list(&read_input(&a.input)?)?;
    let cuts = parse_cuts(&read_input(&a.queries)?, g.n())?;
    let answers = cuts
        .iter()
        .enumerate()
        .map(|(i, q)| laplace_cut(&g, q, a.eps, mix_seed(a.seed, i as u64)))
        .collect::<jl_privacy::Result<Vec<_>>>()?;
    let fields = [
        ("eps", format_real(a.eps)),
        ("n", g.n().to_string()),
        ("seed", a.seed.to_string()),
        ("generator", GENERATOR_ID.to_string()),
    ];
    emit(a.output.as_deref(), &format_answers("baseline-laplace", &fields, &answers, a.format))
}

fn report_text(command: &str, fields: &[(&str, String)], report: &AuditReport, format: Format) -> String {
    let mut out = provenance(command, fields);
    match format {
        Format::Keyvalue => out.push_str(&report.to_key_value()),
        Format::Csv => {
            let _ = writeln!(out, "{}", report.csv_header());
            let _ = writeln!(out, "{}", report.to_csv_row());
        }
    }
    out
}

fn audit_fields(p: &AuditPrivacy, seed: u64, extra: &[(&'static str, String)]) -> Vec<(&'static str, String)> {
    let mut fields = vec![
        ("eps", format_real(p.eps)),
        ("delta", format_real(p.delta)),
        ("eta", format_real(p.eta)),
        ("nu", format_real(p.nu)),
    ];
    fields.extend_from_slice(extra);
    fields.push(("seed", seed.to_string()));
    fields.push(("generator", GENERATOR_ID.to_string()));
    fields
}

fn finish_audit(report: &AuditReport) -> CliResult<()> {
    if report.all_pass() {
        Ok(())
    } else {
        Err(CliError::new(EXIT_CHECKS, "audit checks failed"))
    }
}

fn audit_graph_cmd(a: &AuditGraphArgs) -> CliResult<()> {
    let p = &a.privacy;
    let params = LaplacianReleaseParams::without_size_check(p.eps, p.delta, p.eta, p.nu, a.nodes)?;
    let report = audit_graph(&params, a.pairs, a.trials, a.seed)?;
    let fields = audit_fields(
        p,
        a.seed,
        &[
            ("nodes", a.nodes.to_string()),
            ("pairs", a.pairs.to_string()),
            ("trials", a.trials.to_string()),
            ("r", params.r.to_string()),
            ("w", format_real(params.w)),
        ],
    );
    emit(a.output.as_deref(), &report_text("audit-graph", &fields, &report, a.format))?;
    finish_audit(&report)
}

fn audit_covariance_cmd(a: &AuditCovarianceArgs) -> CliResult<()> {
    let p = &a.privacy;
    let params = compute_params_cov(p.eps, p.delta, p.eta, p.nu)?;
    let report = audit_covariance(a.rows, a.cols, &params, a.pairs, a.trials, a.seed)?;
    let fields = audit_fields(
        p,
        a.seed,
        &[
            ("rows", a.rows.to_string()),
            ("cols", a.cols.to_string()),
            ("pairs", a.pairs.to_string()),
            ("trials", a.trials.to_string()),
            ("r", params.r.to_string()),
            ("w", format_real(params.w)),
        ],
    );
    emit(a.output.as_deref(), &report_text("audit-covariance", &fields, &report, a.format))?;
    finish_audit(&report)
}

fn parse_bits(text: &str) -> CliResult<Vec<bool>> {
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| match t {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(CliError::new(EXIT_INGEST, format!("expected 0 or 1, got `{other}`"))),
        })
        .collect()
}

fn demo_cmd(a: &DemoArgs) -> CliResult<()> {
    let bits = parse_bits(&read_input(&a.input)?)?;
    let p = &a.privacy;
    let (estimate, count) = univariate_demo(&bits, p.eps, p.delta, p.eta, p.nu, a.seed)?;
    let mut fields = privacy_fields(p);
    fields.extend([
        ("n", bits.len().to_string()),
        ("seed", a.seed.to_string()),
        ("generator", GENERATOR_ID.to_string()),
    ]);
    let mut out = provenance("demo-univariate", &fields);
    match a.format {
        Format::Keyvalue => {
            let _ = writeln!(out, "estimate={}", format_real(estimate));
            let _ = writeln!(out, "true_count={count}");
        }
        Format::Csv => {
            let _ = writeln!(out, "estimate,true_count");
            let _ = writeln!(out, "{},{count}", format_real(estimate));
        }
    }
    emit(a.output.as_deref(), &out)
}

fn bench_cmd(a: &BenchArgs) -> CliResult<()> {
    let p = &a.privacy;
    let config = BenchConfig {
        n: a.nodes,
        edge_prob: a.edge_prob,
        eps: p.eps,
        delta: p.delta,
        eta: p.eta,
        nu: p.nu,
        sizes: a.sizes.clone(),
        seeds: a.trials,
        queries: a.queries,
        seed: a.seed,
    };
    let report = bench_sweep(&config)?;
    let mut fields = privacy_fields(p);
    fields.extend([
        ("nodes", a.nodes.to_string()),
        ("edge_prob", format_real(a.edge_prob)),
        (
            "sizes",
            a.sizes.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(";"),
        ),
        ("seeds", a.trials.to_string()),
        ("queries", a.queries.to_string()),
        ("r", report.jl.r.to_string()),
        ("w", format_real(report.jl.w)),
        ("seed", a.seed.to_string()),
        ("generator", GENERATOR_ID.to_string()),
    ]);
    emit(a.output.as_deref(), &(provenance("bench", &fields) + &report.to_csv()))
}

fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::ReleaseLaplacian(a) => release_laplacian_cmd(a),
        Command::QueryCut(a) => query_cut_cmd(a),
        Command::ReleaseCovariance(a) => release_covariance_cmd(a),
        Command::QueryVariance(a) => query_variance_cmd(a),
        Command::ReleaseMean(a) => release_mean_cmd(a),
        Command::RrRelease(a) => rr_release_cmd(a),
        Command::BaselineLaplace(a) => baseline_laplace_cmd(a),
        Command::AuditGraph(a) => audit_graph_cmd(a),
        Command::AuditCovariance(a) => audit_covariance_cmd(a),
        Command::DemoUnivariate(a) => demo_cmd(a),
        Command::Bench(a) => bench_cmd(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("jlpriv: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
