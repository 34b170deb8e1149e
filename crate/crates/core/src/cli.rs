//! Command-line front end.
//!
//! Settings come from an optional `key = value` file (`--config`) and from
//! flags; flags win. Exit codes: 0 success, 1 property failure, 2 configuration
//! error, 3 numeric failure.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path as FsPath, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::error::{Error, Result};
use crate::functions::TestFunction;
use crate::geometry::ChartPoint;
use crate::hilbert::{gram_matrix, scaled_reproducing_residuals, resolution_matrix, BasisSpec};
use crate::operators::{berezin_operator, correspondence_sweep, OperatorMatrix};
use crate::pullback::{DiffeoChart, TorusChart};
use crate::quadrature::QuadratureRule;
use crate::toeplitz::{commutator_sweep, default_level, norm_sweep, toeplitz_matrix};
use crate::torus::{holonomy_grid, multiplicativity_defect, write_holonomy_csv};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PROPERTY: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// Tolerance of the kernel-check suites.
pub const KERNEL_TOL: f64 = 1e-8;
/// Tolerance of the holonomy multiplicativity footer.
pub const MULTIPLICATIVITY_TOL: f64 = 1e-10;
/// Sample points per level in kernel-check.
pub const KERNEL_POINTS: usize = 20;
const MAX_K: i64 = 1000;

#[derive(Parser, Debug)]
#[command(name = "berezin", version, about = "Berezin and Toeplitz quantization experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub options: Options,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Write the orthonormal basis data for (d, m).
    Basis,
    /// Orthonormality, reproducing-kernel and resolution-of-identity residuals.
    KernelCheck,
    /// Correspondence errors e0, e1 of the star product over an m-grid.
    StarSweep,
    /// Toeplitz norm defects and commutator defects over an m-grid.
    ToeplitzSweep,
    /// Holonomies over a (k1, k2) grid of torus loops.
    TorusHolonomy,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Basis => "basis",
            Command::KernelCheck => "kernel-check",
            Command::StarSweep => "star-sweep",
            Command::ToeplitzSweep => "toeplitz-sweep",
            Command::TorusHolonomy => "torus-holonomy",
        }
    }
}

/// Raw settings; every value is parsed and validated in [`RunConfig::resolve`].
#[derive(Args, Debug, Default, Clone)]
pub struct Options {
    /// Complex dimension d.
    #[arg(long = "d", global = true)]
    pub d: Option<String>,
    /// Single level m.
    #[arg(long, global = true)]
    pub m: Option<String>,
    /// Comma-separated levels.
    #[arg(long = "m-list", global = true)]
    pub m_list: Option<String>,
    /// Quadrature level override.
    #[arg(long, global = true)]
    pub level: Option<String>,
    /// First test function id.
    #[arg(long, global = true)]
    pub f: Option<String>,
    /// Second test function id.
    #[arg(long, global = true)]
    pub g: Option<String>,
    /// Output path; metadata goes to a sidecar next to it.
    #[arg(long, global = true)]
    pub out: Option<String>,
    /// Seed for randomized sample points.
    #[arg(long, global = true)]
    pub seed: Option<String>,
    /// Plain key = value settings file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Chart point as comma-separated real, imaginary pairs.
    #[arg(long, global = true)]
    pub mu: Option<String>,
    /// Largest |k1|, |k2| of the holonomy grid.
    #[arg(long = "k-max", global = true)]
    pub k_max: Option<String>,
    /// Operators used by star-sweep: berezin or toeplitz.
    #[arg(long, global = true)]
    pub quantization: Option<String>,
}

const KEYS: [&str; 11] = [
    "d",
    "m",
    "m-list",
    "level",
    "f",
    "g",
    "out",
    "seed",
    "mu",
    "k-max",
    "quantization",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantization {
    Berezin,
    Toeplitz,
}

impl FromStr for Quantization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "berezin" => Ok(Quantization::Berezin),
            "toeplitz" => Ok(Quantization::Toeplitz),
            other => Err(Error::InvalidArgument(format!(
                "unknown quantization '{other}' (expected berezin or toeplitz)"
            ))),
        }
    }
}

impl Quantization {
    fn id(self) -> &'static str {
        match self {
            Quantization::Berezin => "berezin",
            Quantization::Toeplitz => "toeplitz",
        }
    }
}

/// Parse a `key = value` settings file. Blank lines and `#` comments are skipped;
/// `_` in keys is read as `-`.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::InvalidArgument(format!("config line {}: expected key = value", n + 1)))?;
        let key = key.trim().replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            return Err(Error::InvalidArgument(format!("config line {}: unknown key '{key}'", n + 1)));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub d: usize,
    pub m_list: Vec<u32>,
    pub level: Option<u32>,
    pub f: TestFunction,
    pub g: TestFunction,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub mu: Vec<Complex64>,
    pub k_max: i64,
    pub quantization: Quantization,
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("{key}: cannot parse '{value}'")))
}

fn positive(key: &str, value: &str) -> Result<u32> {
    let v: u32 = parse_num(key, value)?;
    if v == 0 {
        return Err(Error::InvalidArgument(format!("{key} must be positive")));
    }
    Ok(v)
}

fn parse_m_list(value: &str) -> Result<Vec<u32>> {
    let list = value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| positive("m-list", s))
        .collect::<Result<Vec<_>>>()?;
    if list.is_empty() {
        return Err(Error::InvalidArgument("empty m-list".into()));
    }
    Ok(list)
}

fn parse_mu(value: &str, d: usize) -> Result<Vec<Complex64>> {
    let parts = value
        .split(',')
        .map(|s| parse_num::<f64>("mu", s))
        .collect::<Result<Vec<_>>>()?;
    if parts.len() != 2 * d || parts.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "mu: expected {} finite reals (real, imaginary per coordinate), got '{value}'",
            2 * d
        )));
    }
    Ok(parts.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect())
}

impl RunConfig {
    /// Merge file settings with flags (flags win) and apply per-command defaults.
    pub fn resolve(command: Command, options: &Options) -> Result<Self> {
        let mut settings = match &options.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::InvalidArgument(format!("config {}: {e}", path.display())))?;
                parse_config(&text)?
            }
            None => BTreeMap::new(),
        };
        let flags = [
            ("d", &options.d),
            ("m", &options.m),
            ("m-list", &options.m_list),
            ("level", &options.level),
            ("f", &options.f),
            ("g", &options.g),
            ("out", &options.out),
            ("seed", &options.seed),
            ("mu", &options.mu),
            ("k-max", &options.k_max),
            ("quantization", &options.quantization),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                settings.insert(key.to_string(), v.clone());
            }
        }
        let get = |k: &str| settings.get(k).map(String::as_str);

        let d = match get("d") {
            Some(v) => positive("d", v)? as usize,
            None => 1,
        };
        let default_list: Vec<u32> = match command {
            Command::Basis => vec![4],
            Command::KernelCheck => vec![2, 4, 8, 16],
            Command::StarSweep | Command::ToeplitzSweep => vec![4, 8, 16, 32, 64],
            Command::TorusHolonomy => vec![2],
        };
        let m_list = match (get("m-list"), get("m")) {
            (Some(list), _) => parse_m_list(list)?,
            (None, Some(m)) => vec![positive("m", m)?],
            (None, None) => default_list,
        };
        if matches!(command, Command::Basis | Command::TorusHolonomy) && m_list.len() != 1 {
            return Err(Error::InvalidArgument(format!("{} takes a single m", command.name())));
        }
        if command == Command::TorusHolonomy && m_list[0] % 2 == 1 {
            return Err(Error::OddLevel(m_list[0]));
        }
        let level = get("level").map(|v| positive("level", v)).transpose()?;
        let (f_default, g_default) = match command {
            Command::ToeplitzSweep => (TestFunction::ReZ, TestFunction::ImZ),
            _ => (TestFunction::ReBump, TestFunction::ImBump),
        };
        let f = get("f").map(TestFunction::from_str).transpose()?.unwrap_or(f_default);
        let g = get("g").map(TestFunction::from_str).transpose()?.unwrap_or(g_default);
        let out = get("out").map(PathBuf::from);
        let seed = get("seed").map(|v| parse_num::<u64>("seed", v)).transpose()?.unwrap_or(0);
        let mu = match get("mu") {
            Some(v) => parse_mu(v, d)?,
            None => vec![Complex64::new(0.3, 0.2); d],
        };
        let k_max = get("k-max").map(|v| parse_num::<i64>("k-max", v)).transpose()?.unwrap_or(3);
        if !(0..=MAX_K).contains(&k_max) {
            return Err(Error::InvalidArgument(format!("k-max must lie in 0..={MAX_K}")));
        }
        if command == Command::TorusHolonomy && d != 1 {
            return Err(Error::InvalidArgument("torus-holonomy runs on the torus (d = 1)".into()));
        }
        let quantization = get("quantization")
            .map(Quantization::from_str)
            .transpose()?
            .unwrap_or(Quantization::Berezin);
        Ok(Self {
            command,
            d,
            m_list,
            level,
            f,
            g,
            out,
            seed,
            mu,
            k_max,
            quantization,
        })
    }
}

/// Everything a command produces.
#[derive(Debug, Default)]
pub struct Report {
    /// Main table or document.
    pub primary: String,
    /// Extra files written next to `--out`, keyed by suffix.
    pub extra: Vec<(String, String)>,
    /// Metadata JSON.
    pub metadata: Option<serde_json::Value>,
    /// Human summary.
    pub summary: String,
    pub property_failed: bool,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_)
        | Error::DimensionMismatch { .. }
        | Error::IndexOutOfRange { .. }
        | Error::OutOfDomain(_)
        | Error::OddLevel(_)
        | Error::ResourceLimit { .. }
        | Error::Io(_) => EXIT_CONFIG,
        _ => EXIT_NUMERIC,
    }
}

fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

fn slope_json(s: Option<f64>) -> serde_json::Value {
    s.map_or(serde_json::Value::Null, |v| json!(v))
}

fn slope_text(s: Option<f64>) -> String {
    s.map_or_else(|| "none".to_string(), sci)
}

fn spec_for(d: usize, m: u32, level: Option<u32>, default: fn(u32) -> u32) -> Result<Arc<BasisSpec>> {
    Ok(Arc::new(BasisSpec::build(d, m, level.unwrap_or_else(|| default(m)))?))
}

pub fn cmd_basis(cfg: &RunConfig) -> Result<Report> {
    let m = cfg.m_list[0];
    let spec = spec_for(cfg.d, m, cfg.level, QuadratureRule::level_for)?;
    let doc = spec.document();
    let mut primary = serde_json::to_string_pretty(&doc)?;
    primary.push('\n');
    Ok(Report {
        primary,
        summary: format!("N = {}\nc(m) = {}\n", spec.len(), sci(spec.c_m())),
        ..Report::default()
    })
}

fn sample_points(rng: &mut ChaCha8Rng, d: usize, count: usize) -> Result<Vec<ChartPoint>> {
    (0..count)
        .map(|_| {
            ChartPoint::new(
                (0..d)
                    .map(|_| {
                        let r = 2.0 * rng.gen::<f64>().sqrt();
                        Complex64::from_polar(r, rng.gen_range(0.0..std::f64::consts::TAU))
                    })
                    .collect(),
            )
        })
        .collect()
}

pub fn cmd_kernel_check(cfg: &RunConfig) -> Result<Report> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut csv = String::from("m,N,level,gram_deviation,scaled_reproducing_residual,resolution_defect\n");
    let mut worst: f64 = 0.0;
    let mut rows = Vec::new();
    for &m in &cfg.m_list {
        let spec = spec_for(cfg.d, m, cfg.level, QuadratureRule::level_for)?;
        let n = spec.len();
        let id = nalgebra::DMatrix::<Complex64>::identity(n, n);
        let gram = (gram_matrix(&spec) - &id).camax();
        let resolution = (resolution_matrix(&spec) - &id).camax();
        let mut reproducing: f64 = 0.0;
        for p in sample_points(&mut rng, cfg.d, KERNEL_POINTS)? {
            for r in scaled_reproducing_residuals(&spec, &p)? {
                reproducing = reproducing.max(r);
            }
        }
        if [gram, resolution, reproducing].iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteIntegrand {
                node: 0,
                point: format!("kernel-check at m = {m}"),
            });
        }
        worst = worst.max(gram).max(resolution).max(reproducing);
        let _ = writeln!(
            csv,
            "{m},{n},{},{},{},{}",
            spec.rule().level(),
            sci(gram),
            sci(reproducing),
            sci(resolution)
        );
        rows.push(json!({"m": m, "N": n, "level": spec.rule().level()}));
    }
    let pass = worst <= KERNEL_TOL;
    Ok(Report {
        primary: csv,
        extra: Vec::new(),
        metadata: Some(json!({
            "command": "kernel-check",
            "d": cfg.d,
            "seed": cfg.seed,
            "points_per_level": KERNEL_POINTS,
            "tolerance": KERNEL_TOL,
            "max_residual": worst,
            "pass": pass,
            "levels": rows,
        })),
        summary: format!(
            "max residual {} ({} at tolerance {})\n",
            sci(worst),
            if pass { "pass" } else { "FAIL" },
            sci(KERNEL_TOL)
        ),
        property_failed: !pass,
    })
}

fn star_builder(cfg: &RunConfig, f: TestFunction) -> impl Fn(u32) -> Result<OperatorMatrix> + Sync + '_ {
    move |m| match cfg.quantization {
        Quantization::Berezin => {
            let spec = spec_for(cfg.d, m, cfg.level, QuadratureRule::level_for)?;
            berezin_operator(spec, &f.sesqui(cfg.d))
        }
        Quantization::Toeplitz => {
            let spec = spec_for(cfg.d, m, cfg.level, default_level)?;
            toeplitz_matrix(spec, &f)
        }
    }
}

pub fn cmd_star_sweep(cfg: &RunConfig) -> Result<Report> {
    let mu = ChartPoint::new(cfg.mu.clone())?;
    let table = correspondence_sweep(star_builder(cfg, cfg.f), star_builder(cfg, cfg.g), &cfg.m_list, &mu)?;
    let mut csv = String::from("m,e0,e1\n");
    for r in &table.rows {
        let _ = writeln!(csv, "{},{},{}", r.m, sci(r.e0), sci(r.e1));
    }
    let (dec0, dec1) = table.strictly_decreasing();
    Ok(Report {
        primary: csv,
        extra: Vec::new(),
        metadata: Some(json!({
            "command": "star-sweep",
            "d": cfg.d,
            "f": cfg.f.id(),
            "g": cfg.g.id(),
            "quantization": cfg.quantization.id(),
            "mu": cfg.mu.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
            "m_list": cfg.m_list,
            "slope_e0": slope_json(table.slope_e0),
            "slope_e1": slope_json(table.slope_e1),
            "e0_strictly_decreasing": dec0,
            "e1_strictly_decreasing": dec1,
        })),
        summary: format!(
            "slope_e0 = {}\nslope_e1 = {}\n",
            slope_text(table.slope_e0),
            slope_text(table.slope_e1)
        ),
        property_failed: false,
    })
}

pub fn cmd_toeplitz_sweep(cfg: &RunConfig) -> Result<Report> {
    let norms = norm_sweep(cfg.f, cfg.d, &cfg.m_list, cfg.level)?;
    let comm = commutator_sweep(cfg.f, cfg.g, cfg.d, &cfg.m_list, cfg.level)?;
    let mut csv = String::from("m,norm,sup,defect\n");
    for r in &norms.rows {
        let _ = writeln!(csv, "{},{},{},{}", r.m, sci(r.norm), sci(r.sup), sci(r.defect));
    }
    let mut comm_csv = String::from("m,commutator_defect\n");
    for r in &comm.rows {
        let _ = writeln!(comm_csv, "{},{}", r.m, sci(r.defect));
    }
    Ok(Report {
        primary: csv,
        extra: vec![("_commutator.csv".to_string(), comm_csv)],
        metadata: Some(json!({
            "command": "toeplitz-sweep",
            "d": cfg.d,
            "f": cfg.f.id(),
            "g": cfg.g.id(),
            "m_list": cfg.m_list,
            "slope_norm_defect": slope_json(norms.slope),
            "slope_commutator_defect": slope_json(comm.slope),
        })),
        summary: format!(
            "slope_norm_defect = {}\nslope_commutator_defect = {}\n",
            slope_text(norms.slope),
            slope_text(comm.slope)
        ),
        property_failed: false,
    })
}

pub fn cmd_torus_holonomy(cfg: &RunConfig) -> Result<Report> {
    let m = cfg.m_list[0];
    let rows = holonomy_grid(cfg.k_max, m)?;
    let mut buf = Vec::new();
    write_holonomy_csv(&rows, &mut buf)?;
    let defect = multiplicativity_defect(&rows);
    let pass = defect <= MULTIPLICATIVITY_TOL;
    Ok(Report {
        primary: String::from_utf8(buf).expect("csv is utf-8"),
        extra: Vec::new(),
        metadata: Some(json!({
            "command": "torus-holonomy",
            "m": m,
            "k_max": cfg.k_max,
            "chart": TorusChart.descriptor(),
            "multiplicativity_defect": defect,
            "tolerance": MULTIPLICATIVITY_TOL,
            "pass": pass,
        })),
        summary: format!(
            "multiplicativity defect {} ({})\n",
            sci(defect),
            if pass { "pass" } else { "FAIL" }
        ),
        property_failed: !pass,
    })
}

pub fn execute(cfg: &RunConfig) -> Result<Report> {
    match cfg.command {
        Command::Basis => cmd_basis(cfg),
        Command::KernelCheck => cmd_kernel_check(cfg),
        Command::StarSweep => cmd_star_sweep(cfg),
        Command::ToeplitzSweep => cmd_toeplitz_sweep(cfg),
        Command::TorusHolonomy => cmd_torus_holonomy(cfg),
    }
}

/// `foo.csv` -> `foo.json`; `foo.json` -> `foo.meta.json`.
pub fn sidecar_path(out: &FsPath) -> PathBuf {
    let candidate = out.with_extension("json");
    if candidate == out {
        out.with_extension("meta.json")
    } else {
        candidate
    }
}

/// `foo.csv` + `_commutator.csv` -> `foo_commutator.csv`.
pub fn suffixed_path(out: &FsPath, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}{suffix}"))
}

fn emit(report: &Report, cfg: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    match &cfg.out {
        Some(out) => {
            std::fs::write(out, &report.primary)?;
            for (suffix, text) in &report.extra {
                std::fs::write(suffixed_path(out, suffix), text)?;
            }
            if let Some(meta) = &report.metadata {
                let mut text = serde_json::to_string_pretty(meta)?;
                text.push('\n');
                std::fs::write(sidecar_path(out), text)?;
            }
            stdout.write_all(report.summary.as_bytes())?;
        }
        None => {
            stdout.write_all(report.primary.as_bytes())?;
            for (_, text) in &report.extra {
                stdout.write_all(b"\n")?;
                stdout.write_all(text.as_bytes())?;
            }
            stderr.write_all(report.summary.as_bytes())?;
        }
    }
    Ok(())
}

/// Parse `args`, run the command and return the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let text = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    let cfg = match RunConfig::resolve(cli.command, &cli.options) {
        Ok(cfg) => cfg,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_CONFIG;
        }
    };
    let outcome = execute(&cfg).and_then(|report| {
        emit(&report, &cfg, stdout, stderr)?;
        Ok(report.property_failed)
    });
    match outcome {
        Ok(false) => EXIT_OK,
        Ok(true) => EXIT_PROPERTY,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}
