use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use speclab::experiments::{self, CollapseSpec, Family, Manifest};
use speclab::grid::geometric;
use speclab::riesz::{self, REPORT_CSV_HEADER};
use speclab::spectra::{self, BoundarySpec};
use speclab::verify::{self, SCHEMA_VERSION};
use speclab::{Bc, Domain, Error};

#[derive(Parser)]
#[command(name = "speclab", version, about = "Laplacian spectra, Riesz means and semiclassical inequality checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues below lambda_max as CSV `value,multiplicity`
    Spectrum(Opts),
    /// Riesz mean and Pólya ratio at one λ, or a CSV sweep over a grid
    Riesz(Opts),
    /// Run an inequality suite
    Verify(Opts),
    /// Pólya ratios along a collapsing product sequence
    Collapse(Opts),
    /// Extremal traces in a unit-volume family along a λ grid
    Shapeopt(Opts),
    /// Riesz report rows for a domain or family over a grid
    Report(Opts),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Spectrum(_) => "spectrum",
            Command::Riesz(_) => "riesz",
            Command::Verify(_) => "verify",
            Command::Collapse(_) => "collapse",
            Command::Shapeopt(_) => "shapeopt",
            Command::Report(_) => "report",
        }
    }

    fn opts(&self) -> &Opts {
        match self {
            Command::Spectrum(o)
            | Command::Riesz(o)
            | Command::Verify(o)
            | Command::Collapse(o)
            | Command::Shapeopt(o)
            | Command::Report(o) => o,
        }
    }
}

/// Every manifest key is also a flag; flags override the manifest.
#[derive(Args, Clone, Default)]
struct Opts {
    /// `key = value` manifest file
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// worker threads (output does not depend on it)
    #[arg(long)]
    threads: Option<usize>,
    /// report the first comparison of every suite as failed
    #[arg(long)]
    inject_violation: bool,
    #[arg(long)]
    csv: Option<String>,
    #[arg(long)]
    json: Option<String>,
    #[arg(long)]
    suite: Option<String>,
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    domain: Option<String>,
    #[arg(long)]
    bc: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    lambda_min: Option<String>,
    #[arg(long)]
    lambda_max: Option<String>,
    #[arg(long)]
    points_per_decade: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    samples: Option<String>,
    #[arg(long)]
    length: Option<String>,
    #[arg(long)]
    slices: Option<String>,
    #[arg(long)]
    lambda_star: Option<String>,
    #[arg(long)]
    width: Option<String>,
    #[arg(long)]
    cross_section: Option<String>,
    #[arg(long)]
    axis: Option<String>,
    #[arg(long)]
    axis_exponent: Option<String>,
    #[arg(long)]
    r_in_min: Option<String>,
    #[arg(long)]
    r_in_max: Option<String>,
}

impl Opts {
    fn flag_pairs(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("csv", &self.csv),
            ("json", &self.json),
            ("suite", &self.suite),
            ("family", &self.family),
            ("domain", &self.domain),
            ("bc", &self.bc),
            ("gamma", &self.gamma),
            ("lambda", &self.lambda),
            ("lambda_min", &self.lambda_min),
            ("lambda_max", &self.lambda_max),
            ("points_per_decade", &self.points_per_decade),
            ("seed", &self.seed),
            ("samples", &self.samples),
            ("length", &self.length),
            ("slices", &self.slices),
            ("lambda_star", &self.lambda_star),
            ("width", &self.width),
            ("cross_section", &self.cross_section),
            ("axis", &self.axis),
            ("axis_exponent", &self.axis_exponent),
            ("r_in_min", &self.r_in_min),
            ("r_in_max", &self.r_in_max),
        ]
    }
}

enum Failure {
    Usage(String),
    Violation(String),
    Numerical(String),
    /// stdout was closed by the reader, e.g. `| head`
    Closed,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Hypothesis { .. } | Error::Premise { .. } => Failure::Violation(e.to_string()),
            Error::Bracketing { .. } | Error::Quadrature { .. } | Error::Optimizer { .. } => Failure::Numerical(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        if e.kind() == io::ErrorKind::BrokenPipe {
            return Failure::Closed;
        }
        Failure::Usage(format!("i/o error: {e}"))
    }
}

/// Prints a line to stdout; a closed pipe is ignored so the exit status still reflects the run.
fn say(args: std::fmt::Arguments) -> Result<(), Failure> {
    match writeln!(io::stdout().lock(), "{args}") {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

type Run = Result<bool, Failure>;

/// Output paths and the hashed remainder of the merged configuration.
struct Config {
    manifest: Manifest,
    csv: Option<String>,
    json: Option<String>,
}

impl Config {
    fn build(command: &str, opts: &Opts) -> Result<Config, Failure> {
        let mut m = match &opts.manifest {
            Some(p) => Manifest::load(p).map_err(|e| Failure::Usage(format!("manifest {}: {e}", p.display())))?,
            None => Manifest::default(),
        };
        for (k, v) in opts.flag_pairs() {
            if let Some(v) = v {
                m.set(k, v.clone());
            }
        }
        if let Some(c) = m.entries.remove("command") {
            if c != command {
                return Err(Failure::Usage(format!("manifest is for {c:?}, not {command:?}")));
            }
        }
        m.entries.remove("threads");
        let csv = m.entries.remove("csv");
        let json = m.entries.remove("json");
        Ok(Config { manifest: m, csv, json })
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.manifest.get(key)
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64, Failure> {
        Ok(self.manifest.get_f64(key)?.unwrap_or(default))
    }

    fn require(&self, key: &str) -> Result<&str, Failure> {
        self.get(key).ok_or_else(|| Failure::Usage(format!("missing required key {key:?} (flag --{})", key.replace('_', "-"))))
    }

    fn bc(&self) -> Result<Bc, Failure> {
        let s = self.get("bc").unwrap_or("D");
        Bc::parse(s).ok_or_else(|| Failure::Usage(format!("bc: expected D or N, got {s:?}")))
    }

    fn boundary(&self) -> Result<BoundarySpec, Failure> {
        Ok(BoundarySpec::parse(self.get("bc").unwrap_or("D"))?)
    }

    fn header(&self, command: &str) -> serde_json::Map<String, Value> {
        let mut h = serde_json::Map::new();
        h.insert("schema_version".into(), json!(SCHEMA_VERSION));
        h.insert("command".into(), json!(command));
        h.insert("manifest_hash".into(), json!(self.manifest.hash()));
        h.insert("manifest".into(), json!(self.manifest.entries));
        h
    }

    fn write_json(&self, mut h: serde_json::Map<String, Value>, body: Value) -> Result<(), Failure> {
        if let Value::Object(b) = body {
            h.extend(b);
        }
        let text = serde_json::to_string_pretty(&Value::Object(h)).map_err(|e| Failure::Usage(e.to_string()))?;
        if let Some(p) = &self.json {
            std::fs::write(p, text + "\n")?;
        }
        Ok(())
    }

    fn csv_sink(&self) -> Result<Box<dyn Write>, Failure> {
        Ok(match &self.csv {
            Some(p) => Box::new(BufWriter::new(File::create(Path::new(p))?)),
            None => Box::new(BufWriter::new(io::stdout())),
        })
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>, Failure> {
    s.split(',').map(|t| t.trim().parse::<f64>().map_err(|_| Failure::Usage(format!("expected a number list, got {s:?}")))).collect()
}

fn grid_or(cfg: &Config, default: impl FnOnce() -> Vec<f64>) -> Result<Vec<f64>, Failure> {
    Ok(verify::manifest_grid(&cfg.manifest)?.unwrap_or_else(default))
}

fn spectrum(cfg: &Config) -> Run {
    let dom = Domain::parse(cfg.require("domain")?)?;
    let bc = cfg.boundary()?;
    let top = cfg.manifest.get_f64("lambda_max")?.ok_or_else(|| Failure::Usage("missing lambda_max".into()))?;
    let list = spectra::eigenvalues_below(&dom, &bc, top)?;
    let mut w = cfg.csv_sink()?;
    list.write_csv(&mut w)?;
    w.flush()?;
    cfg.write_json(
        cfg.header("spectrum"),
        json!({ "domain": dom.id(), "bc": bc.tag(), "lambda_max": top, "count": list.total(), "first": list.first() }),
    )?;
    Ok(true)
}

fn riesz_cmd(cfg: &Config) -> Run {
    let dom = Domain::parse(cfg.require("domain")?)?;
    let bc = cfg.boundary()?;
    let gamma = cfg.f64_or("gamma", 1.0)?;
    if let Some(lambda) = cfg.manifest.get_f64("lambda")? {
        let trace = riesz::riesz_mean(&dom, &bc, gamma, lambda)?;
        let ratio = trace / riesz::weyl_leading(&dom, gamma, lambda);
        say(format_args!("trace {trace:?}"))?;
        say(format_args!("ratio {ratio:?}"))?;
        cfg.write_json(
            cfg.header("riesz"),
            json!({ "domain": dom.id(), "bc": bc.tag(), "gamma": gamma, "lambda": lambda, "trace": trace, "ratio": ratio }),
        )?;
        return Ok(true);
    }
    let lambdas = verify::manifest_grid(&cfg.manifest)?.ok_or_else(|| Failure::Usage("need lambda or lambda_max".into()))?;
    report_rows(cfg, "riesz", &[dom], &bc, gamma, |_| Ok(lambdas.clone()))
}

fn report_rows(
    cfg: &Config,
    command: &str,
    domains: &[Domain],
    bc: &BoundarySpec,
    gamma: f64,
    grid: impl Fn(&Domain) -> Result<Vec<f64>, Failure>,
) -> Run {
    let mut rows = Vec::new();
    for d in domains {
        rows.extend(riesz::riesz_reports(d, bc, gamma, &grid(d)?)?);
    }
    let mut w = cfg.csv_sink()?;
    riesz::write_reports_csv(&rows, &mut w)?;
    w.flush()?;
    let ratios = rows.iter().map(|r| r.polya_ratio).filter(|r| r.is_finite());
    let (lo, hi) = ratios.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| (a.min(r), b.max(r)));
    cfg.write_json(cfg.header(command), json!({ "csv_header": REPORT_CSV_HEADER, "rows": rows.len(), "min_ratio": lo, "max_ratio": hi }))?;
    Ok(true)
}

fn report(cfg: &Config) -> Run {
    let domains = match cfg.get("domain") {
        Some(d) => vec![Domain::parse(d)?],
        None => verify::family(cfg.get("family").unwrap_or("disks"), cfg.manifest.get_u64("seed")?.unwrap_or(1))?,
    };
    let bc = cfg.boundary()?;
    let gamma = cfg.f64_or("gamma", 1.0)?;
    let explicit = verify::manifest_grid(&cfg.manifest)?;
    report_rows(cfg, "report", &domains, &bc, gamma, |d| match &explicit {
        Some(g) => Ok(g.clone()),
        None => {
            let l1 = spectra::first_eigenvalue(d, &BoundarySpec::Dirichlet)?;
            Ok(geometric(0.5 * l1, 1e3 * l1, 10))
        }
    })
}

fn verify_cmd(cfg: &Config) -> Run {
    if cfg.get("suite").is_none() {
        return Err(Failure::Usage(format!("missing --suite (one of {})", verify::SUITES.join(", "))));
    }
    let reports = verify::run_suite(&cfg.manifest)?;
    let mut ok = true;
    for r in &reports {
        ok &= r.passed();
        say(format_args!(
            "{} {} samples={} violations={} worst_margin={:e}",
            if r.passed() { "PASS" } else { "FAIL" },
            r.suite,
            r.samples,
            r.violations,
            r.worst_margin
        ))?;
        if !r.passed() {
            say(format_args!("  worst case: {}", r.worst_case))?;
        }
        for (k, v) in &r.empirical_constants {
            say(format_args!("  {k} = {v:e}"))?;
        }
    }
    cfg.write_json(cfg.header("verify"), json!({ "passed": ok, "reports": reports }))?;
    Ok(ok)
}

fn collapse(cfg: &Config) -> Run {
    let spec = CollapseSpec {
        cross_section: Domain::parse(cfg.get("cross_section").unwrap_or("interval:2"))?,
        axis: parse_list(cfg.get("axis").unwrap_or("1"))?,
        axis_exponent: cfg.f64_or("axis_exponent", 0.0)?,
        lambda_schedule: grid_or(cfg, || geometric(1e2, 1e6, 1))?,
        gamma: cfg.f64_or("gamma", 1.0)?,
        bc: cfg.bc()?,
        r_in_bounds: (cfg.f64_or("r_in_min", 0.0)?, cfg.f64_or("r_in_max", f64::INFINITY)?),
    };
    let rows = experiments::collapse_experiment(&spec)?;
    let mut w = cfg.csv_sink()?;
    experiments::write_collapse_csv(&rows, &mut w)?;
    w.flush()?;
    let decreasing = rows.windows(2).all(|p| p[1].gap <= p[0].gap);
    let last = rows.last();
    cfg.write_json(
        cfg.header("collapse"),
        json!({
            "limit": last.map(|r| r.limit),
            "final_ratio": last.map(|r| r.ratio),
            "final_gap": last.map(|r| r.gap),
            "gap_nonincreasing": decreasing,
            "steps": rows.len(),
        }),
    )?;
    Ok(true)
}

fn shapeopt(cfg: &Config) -> Run {
    let family = Family::parse(cfg.get("family").unwrap_or("rect2"))?;
    let grid = match cfg.manifest.get_f64("lambda")? {
        Some(l) => vec![l],
        None => grid_or(cfg, || geometric(1e2, 1e6, 1))?,
    };
    let t = experiments::shapeopt_trajectory(family, cfg.bc()?, cfg.f64_or("gamma", 1.0)?, &grid)?;
    let mut w = cfg.csv_sink()?;
    experiments::write_trajectory_csv(&t, &mut w)?;
    w.flush()?;
    cfg.write_json(cfg.header("shapeopt"), json!({ "regime": t.regime, "limit_estimate": t.limit_estimate, "results": t.results }))?;
    Ok(true)
}

fn dispatch(name: &str, opts: &Opts) -> Run {
    let cfg = Config::build(name, opts)?;
    let go = || match name {
        "spectrum" => spectrum(&cfg),
        "riesz" => riesz_cmd(&cfg),
        "verify" => verify_cmd(&cfg),
        "collapse" => collapse(&cfg),
        "shapeopt" => shapeopt(&cfg),
        _ => report(&cfg),
    };
    let run = || if opts.inject_violation { verify::with_injected_violation(go) } else { go() };
    match opts.threads {
        Some(0) => Err(Failure::Usage("--threads must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(|e| Failure::Usage(e.to_string()))?;
            pool.install(run)
        }
        None => run(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = cli.command.name();
    match dispatch(name, cli.command.opts()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Violation(msg)) => {
            eprintln!("speclab {name}: violation: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("speclab {name}: error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("speclab {name}: numerical failure: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Closed) => ExitCode::SUCCESS,
    }
}
