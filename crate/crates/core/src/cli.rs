//! `bloat-lens` command line.
//!
//! Exit codes: 0 success, 1 analysis error (some project or file could not be
//! analyzed), 2 usage error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::ingest::{load_project, load_registry, IngestOptions};
use crate::model::{ProjectHistory, Scope};
use crate::report::{
    analyze_project, snapshot_report, OriginSection, PatternSection, ProjectAnalysis,
    SnapshotReport, StatsSection, Summary, Table, TrendSection, UpdateSection,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ANALYSIS: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

const REGISTRY_FILE: &str = "registry.json";

#[derive(Debug, Parser)]
#[command(name = "bloat-lens", version, about = "Bloated dependency detection and history analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Per-snapshot dependency status reports
    Status(CommonArgs),
    /// Bloat trend per project and monthly averages
    Trend(CommonArgs),
    /// Usage-status transition patterns
    Patterns(CommonArgs),
    /// Version updates of direct dependencies, by actor and status
    Updates(CommonArgs),
    /// Origin of each dependency that becomes bloated
    Origins(CommonArgs),
    /// Descriptive statistics of the analyzed projects
    Stats(CommonArgs),
    /// Every analysis plus the combined summary
    All(CommonArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// History file, or a directory of history files (one project each)
    input: PathBuf,
    /// Registry file; defaults to registry.json next to the input
    #[arg(long)]
    registry: Option<PathBuf>,
    /// Output directory; without it results go to standard output
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format; with --out and no format both are written
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Scopes included in the analysis
    #[arg(long, value_delimiter = ',', default_value = "compile,test")]
    scope: Vec<String>,
    /// Author-name substrings identifying bot commits
    #[arg(long, value_delimiter = ',', default_value = "dependabot")]
    bots: Vec<String>,
    /// Projects analyzed in parallel (0 = number of CPUs)
    #[arg(long, env = "BLOAT_LENS_JOBS", default_value_t = 0)]
    jobs: usize,
}

enum Failure {
    Usage(String),
    Analysis(String),
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

/// Runs the command line with explicit output streams.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind::*;
            let text = e.render().to_string();
            return if matches!(e.kind(), DisplayHelp | DisplayVersion) {
                let _ = write!(out, "{text}");
                EXIT_OK
            } else {
                let _ = write!(err, "{text}");
                EXIT_USAGE
            };
        }
    };
    match execute(cli.command, out, err) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            let _ = writeln!(err, "usage: bloat-lens <status|trend|patterns|updates|origins|stats|all> <history-file-or-dir> [--registry FILE] [--out DIR] [--format json|csv]");
            EXIT_USAGE
        }
        Err(Failure::Analysis(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_ANALYSIS
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Which {
    Status,
    Trend,
    Patterns,
    Updates,
    Origins,
    Stats,
    All,
}

fn history_files(input: &Path, registry: &Path) -> Result<Vec<PathBuf>, Failure> {
    if !input.is_dir() {
        return Ok(vec![input.to_path_buf()]);
    }
    let entries = fs::read_dir(input)
        .map_err(|e| Failure::Analysis(format!("{}: {e}", input.display())))?;
    let registry = registry.canonicalize().ok();
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .filter(|p| p.canonicalize().ok() != registry)
        .collect();
    files.sort();
    Ok(files)
}

fn default_registry(input: &Path) -> PathBuf {
    if input.is_dir() {
        input.join(REGISTRY_FILE)
    } else {
        input
            .parent()
            .map(|p| p.join(REGISTRY_FILE))
            .unwrap_or_else(|| PathBuf::from(REGISTRY_FILE))
    }
}

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let (which, args) = match command {
        Command::Status(a) => (Which::Status, a),
        Command::Trend(a) => (Which::Trend, a),
        Command::Patterns(a) => (Which::Patterns, a),
        Command::Updates(a) => (Which::Updates, a),
        Command::Origins(a) => (Which::Origins, a),
        Command::Stats(a) => (Which::Stats, a),
        Command::All(a) => (Which::All, a),
    };

    if !args.input.exists() {
        return Err(Failure::Usage(format!(
            "input {} does not exist",
            args.input.display()
        )));
    }
    let registry_path = args.registry.clone().unwrap_or_else(|| default_registry(&args.input));
    if !registry_path.is_file() {
        return Err(Failure::Usage(format!(
            "registry file {} not found (pass --registry)",
            registry_path.display()
        )));
    }
    let registry = load_registry(&registry_path).map_err(|e| Failure::Analysis(e.to_string()))?;
    let files = history_files(&args.input, &registry_path)?;
    if files.is_empty() {
        return Err(Failure::Usage(format!(
            "no history files in {}",
            args.input.display()
        )));
    }

    let options = IngestOptions {
        bot_patterns: args.bots.clone(),
        scopes: args.scope.iter().map(|s| s.parse::<Scope>().unwrap()).collect(),
        ..IngestOptions::default()
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(|e| Failure::Analysis(format!("thread pool: {e}")))?;

    // Results keep the sorted input order regardless of scheduling.
    let results: Vec<Result<(ProjectHistory, ProjectAnalysis), String>> = pool.install(|| {
        files
            .par_iter()
            .map(|path| {
                let history =
                    load_project(path, &registry, &options).map_err(|e| e.to_string())?;
                let analysis = analyze_project(&history)
                    .map_err(|e| format!("{}: {e}", path.display()))?;
                Ok((history, analysis))
            })
            .collect()
    });

    let mut failed = false;
    let mut histories = Vec::new();
    let mut analyses = Vec::new();
    for r in results {
        match r {
            Ok((h, a)) => {
                histories.push(h);
                analyses.push(a);
            }
            Err(msg) => {
                failed = true;
                let _ = writeln!(err, "error: {msg}");
            }
        }
    }

    let output = Output {
        dir: args.out.as_deref(),
        format: args.format,
    };
    match which {
        Which::Status => output.status(&histories, out)?,
        Which::Trend => output.section("trend", &TrendSection::build(&histories, &analyses), |s| s.tables(), out)?,
        Which::Patterns => output.section("patterns", &PatternSection::build(&analyses), |s| s.tables(), out)?,
        Which::Updates => output.section("updates", &UpdateSection::build(&analyses), |s| s.tables(), out)?,
        Which::Origins => output.section("origins", &OriginSection::build(&analyses), |s| s.tables(), out)?,
        Which::Stats => output.section("stats", &StatsSection::build(&analyses), |s| s.tables(), out)?,
        Which::All => {
            let summary = Summary::build(&histories, &analyses);
            if output.dir.is_some() {
                output.status(&histories, out)?;
                output.section("trend", &summary.trend, |s| s.tables(), out)?;
                output.section("patterns", &summary.patterns, |s| s.tables(), out)?;
                output.section("updates", &summary.updates, |s| s.tables(), out)?;
                output.section("origins", &summary.origins, |s| s.tables(), out)?;
                output.section("stats", &summary.stats, |s| s.tables(), out)?;
            }
            output.section("summary", &summary, |_| Vec::new(), out)?;
        }
    }
    Ok(if failed { EXIT_ANALYSIS } else { EXIT_OK })
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_') { c } else { '_' })
        .collect()
}

#[derive(Serialize)]
struct ProjectStatus<'a> {
    project: &'a str,
    snapshots: Vec<SnapshotReport>,
}

struct Output<'a> {
    dir: Option<&'a Path>,
    format: Option<Format>,
}

impl Output<'_> {
    fn wants(&self, f: Format) -> bool {
        match (self.dir, self.format) {
            (_, Some(chosen)) => chosen == f,
            (Some(_), None) => true,
            (None, None) => f == Format::Json,
        }
    }

    fn write_file(&self, rel: &Path, contents: &str) -> Result<(), Failure> {
        let dir = self.dir.expect("file output requires --out");
        let path = dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)
                .map_err(|e| Failure::Analysis(format!("{}: {e}", parent.display())))?;
        }
        fs::write(&path, contents).map_err(|e| Failure::Analysis(format!("{}: {e}", path.display())))
    }

    fn emit(&self, name: &str, json: Option<String>, tables: Vec<(String, Table)>, out: &mut dyn Write) -> Result<(), Failure> {
        let io = |e: std::io::Error| Failure::Analysis(format!("standard output: {e}"));
        if let Some(json) = json.filter(|_| self.wants(Format::Json)) {
            match self.dir {
                Some(_) => self.write_file(Path::new(&format!("{name}.json")), &json)?,
                None => out.write_all(json.as_bytes()).map_err(io)?,
            }
        }
        if self.wants(Format::Csv) {
            for (file, table) in tables {
                let csv = table.to_csv_string();
                match self.dir {
                    Some(_) => self.write_file(Path::new(&file), &csv)?,
                    None => write!(out, "# {file}\n{csv}\n").map_err(io)?,
                }
            }
        }
        Ok(())
    }

    fn section<T: Serialize>(
        &self,
        name: &str,
        value: &T,
        tables: impl Fn(&T) -> Vec<(String, Table)>,
        out: &mut dyn Write,
    ) -> Result<(), Failure> {
        self.emit(name, Some(to_json(value)), tables(value), out)
    }

    fn status(&self, histories: &[ProjectHistory], out: &mut dyn Write) -> Result<(), Failure> {
        let reports: Vec<ProjectStatus> = histories
            .iter()
            .map(|h| ProjectStatus {
                project: &h.project,
                snapshots: h.snapshots().iter().map(snapshot_report).collect(),
            })
            .collect();
        let mut table = Table::new(&[
            "project", "commit", "timestamp", "kind", "coordinate", "depth", "scope", "status",
        ]);
        for p in &reports {
            for s in &p.snapshots {
                let kind = serde_json::to_value(s.kind).expect("kind serializes");
                for d in &s.dependencies {
                    table.push(vec![
                        p.project.to_string(),
                        s.commit.clone(),
                        s.timestamp.clone(),
                        kind.as_str().unwrap_or_default().to_string(),
                        d.coordinate.clone(),
                        d.depth.to_string(),
                        d.scope.clone(),
                        d.status.to_string(),
                    ]);
                }
            }
        }
        if self.dir.is_some() {
            if self.wants(Format::Json) {
                for p in &reports {
                    for (i, s) in p.snapshots.iter().enumerate() {
                        let rel = Path::new("status")
                            .join(file_stem(p.project))
                            .join(format!("{i:04}-{}.json", file_stem(&s.commit)));
                        self.write_file(&rel, &s.to_json())?;
                    }
                }
            }
            return self.emit("status", None, vec![("status.csv".into(), table)], out);
        }
        self.emit("status", Some(to_json(&reports)), vec![("status.csv".into(), table)], out)
    }
}
