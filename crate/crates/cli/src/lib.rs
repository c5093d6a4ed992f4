//! Argument parsing, run configuration and dispatch for the `gl2tower` binary.

use clap::{Args, Parser, Subcommand, ValueEnum};
use gl2tower_core::density::{self, DensityInterval, DensitySource};
use gl2tower_core::invariants::invariants;
use gl2tower_core::reference;
use gl2tower_core::signature;
use gl2tower_core::subgroup::parse_subgroup;
use gl2tower_core::tower::{self, TowerConfig, TowerLattice, TraceTest};
use gl2tower_core::{OpenSubgroup, DATA_SCHEMA_VERSION};
use gl2tower_resolvent::curve::parse_curve;
use gl2tower_resolvent::{certify_image, ProverConfig};
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Flag file derived from the default enumeration (see `export --format flags`).
pub const BUNDLED_FLAGS: &str = include_str!("../data/flags.json");

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failure(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Failure(_) => EXIT_FAILURE,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn failure(e: impl std::fmt::Display) -> CliError {
    CliError::Failure(e.to_string())
}

#[derive(Parser, Debug)]
#[command(name = "gl2tower", about = "Open subgroups of GL2(Z2), modular curve invariants and mod-2^n image certification", disable_version_flag = true)]
pub struct Cli {
    /// Print the data-schema version and exit
    #[arg(long, short = 'V')]
    pub version: bool,
    /// Run the configuration stored in this JSON file
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Write the effective run configuration to this file before running
    #[arg(long, value_name = "FILE")]
    pub dump_config: Option<PathBuf>,
    /// Worker threads (results do not depend on this)
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Subcommand, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "subcommand")]
pub enum Command {
    /// Enumerate the tower of arithmetically maximal subgroups
    Enumerate(EnumerateArgs),
    /// Index, cusps, elliptic points and genus of a subgroup
    Invariants(InvariantsArgs),
    /// Odd-order-reduction density intervals
    Density(DensityArgs),
    /// Signature {(det, tr, fix rank)} of a matrix group
    Signature(SignatureArgs),
    /// Certify the mod-N image of an elliptic curve with resolvents
    Certify(CertifyArgs),
    /// Export a lattice, the derived flag file or the reference tables
    Export(ExportArgs),
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnumerateArgs {
    /// Output file for the lattice JSON (stdout if absent)
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Ignore subgroups of level above this modulus
    #[arg(long)]
    pub max_level: Option<u32>,
    /// Conjugacy test on full preimages at the larger level
    #[arg(long)]
    pub refined_cc: bool,
    /// Require a trace-0 determinant −1 element exactly, not only mod the level
    #[arg(long)]
    pub exact_trace: bool,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    pub checkpoint_every: usize,
    /// Also write the lattice as DOT
    #[arg(long)]
    pub dot: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantsArgs {
    /// Subgroup file (JSON or text form)
    #[arg(long)]
    pub subgroup: PathBuf,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityArgs {
    #[arg(long, conflicts_with_all = ["lattice", "full"])]
    pub subgroup: Option<PathBuf>,
    /// Lattice JSON from `enumerate`
    #[arg(long, conflicts_with = "full")]
    pub lattice: Option<PathBuf>,
    /// Use GL2(Z2) itself
    #[arg(long)]
    pub full: bool,
    /// Interval width target, e.g. 1e-4, 0.001 or 1/1000
    #[arg(long, default_value = "1e-4")]
    pub tol: String,
    /// Report the max and min over flagged nodes and their −I-free layer (needs --lattice)
    #[arg(long, requires = "lattice")]
    pub extremes: bool,
    /// Flag file; the bundled one is used when absent
    #[arg(long, requires = "extremes")]
    pub flags: Option<PathBuf>,
    /// Extremes over every listed node and every −I-free subgroup, ignoring flags
    #[arg(long, requires = "extremes", conflicts_with = "flags")]
    pub no_flags: bool,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignatureArgs {
    #[arg(long)]
    pub modulus: u32,
    /// One generator per line, `[[a,b],[c,d]]`
    #[arg(long)]
    pub generators: PathBuf,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifyArgs {
    /// Coefficients "a1,a2,a3,a4,a6"
    #[arg(long, allow_hyphen_values = true)]
    pub curve: String,
    /// N in {2, 4, 8}; 16 needs --heavy
    #[arg(long)]
    pub modulus: u32,
    /// Subgroup file; GL2(Z/N) when absent
    #[arg(long)]
    pub subgroup: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub prime_bound: u64,
    /// Starting precision in decimal digits (default 200, or 1000 for N = 16)
    #[arg(long)]
    pub digits: Option<u32>,
    #[arg(long, default_value_t = 8000)]
    pub max_digits: u32,
    #[arg(long, default_value_t = 10)]
    pub guard: u32,
    #[arg(long)]
    pub heavy: bool,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExportFormat {
    Dot,
    Json,
    Flags,
    Reference,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportArgs {
    /// Lattice JSON; the tower is enumerated when absent
    #[arg(long)]
    pub lattice: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ExportFormat::Dot)]
    pub format: ExportFormat,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub schema_version: String,
    pub workers: usize,
    pub command: Command,
}

impl RunConfig {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn from_json(s: &str) -> CliResult<RunConfig> {
        serde_json::from_str(s).map_err(|e| usage(format!("bad run configuration: {e}")))
    }

    /// Check every knob before anything runs.
    pub fn validate(&self) -> CliResult<()> {
        if self.workers == 0 {
            return Err(usage("--workers must be at least 1"));
        }
        match &self.command {
            Command::Enumerate(a) => {
                if let Some(m) = a.max_level {
                    if !m.is_power_of_two() || !(2..=256).contains(&m) {
                        return Err(usage(format!("--max-level must be a power of 2 in 2..=256, got {m}")));
                    }
                }
                if a.checkpoint_every == 0 {
                    return Err(usage("--checkpoint-every must be positive"));
                }
            }
            Command::Density(a) => {
                if density::parse_tolerance(&a.tol).is_none() {
                    return Err(usage(format!("--tol must be a positive number like 1e-4 or 1/1000, got {:?}", a.tol)));
                }
                if a.subgroup.is_none() && a.lattice.is_none() && !a.full {
                    return Err(usage("density needs one of --subgroup, --lattice or --full"));
                }
            }
            Command::Signature(a) => {
                if !(2..=256).contains(&a.modulus) {
                    return Err(usage(format!("--modulus must be in 2..=256, got {}", a.modulus)));
                }
            }
            Command::Certify(a) => {
                if ![2, 4, 8, 16].contains(&a.modulus) {
                    return Err(usage(format!("--modulus must be 2, 4, 8 or 16, got {}", a.modulus)));
                }
                if a.modulus == 16 && !a.heavy {
                    return Err(usage("--modulus 16 is a long run; pass --heavy to confirm"));
                }
                if a.prime_bound < 3 || a.prime_bound >= 1 << 32 {
                    return Err(usage("--prime-bound must be in 3..2^32"));
                }
                if a.digits.is_some_and(|d| d < 30) {
                    return Err(usage("--digits must be at least 30"));
                }
                if a.guard == 0 || a.max_digits < 30 {
                    return Err(usage("--guard must be positive and --max-digits at least 30"));
                }
                parse_curve(&a.curve).map_err(|e| usage(format!("--curve: {e}")))?;
            }
            Command::Invariants(_) | Command::Export(_) => {}
        }
        Ok(())
    }
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn read_subgroup(path: &Path) -> CliResult<OpenSubgroup> {
    parse_subgroup(&read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn read_lattice(path: &Path) -> CliResult<TowerLattice> {
    tower::import_json(&read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn emit(out: &Option<PathBuf>, text: &str, stdout: &mut dyn Write) -> CliResult<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| failure(format!("cannot write {}: {e}", p.display()))),
        None => stdout.write_all(text.as_bytes()).map_err(failure),
    }
}

fn default_lattice() -> CliResult<TowerLattice> {
    tower::enumerate_tower(&TowerConfig::default()).map_err(failure)
}

fn interval_json(iv: &DensityInterval) -> serde_json::Value {
    json!({
        "lower": iv.lower.to_string(),
        "upper": iv.upper.to_string(),
        "refinement_level": iv.refinement_level,
        "converged": iv.converged,
    })
}

fn source_json(s: &DensitySource) -> serde_json::Value {
    match s {
        DensitySource::Node(id) => json!({ "node": id }),
        DensitySource::MinusIdentityFree { parent, index } => json!({ "minus_identity_free_of": parent, "index": index }),
    }
}

/// The reference tables shipped with the tool.
pub fn bundled_data() -> serde_json::Value {
    let named = |g: &reference::NamedGenerators| {
        json!({ "name": g.name, "modulus": g.modulus, "generators": g.generators })
    };
    json!({
        "schema_version": DATA_SCHEMA_VERSION,
        "exceptional": reference::EXCEPTIONAL.iter().map(|r| json!({
            "j_invariant": r.j_invariant,
            "name": r.gens.name,
            "modulus": r.gens.modulus,
            "generators": r.gens.generators,
        })).collect::<Vec<_>>(),
        "subgroups": [named(&reference::H57), named(&reference::H57A), named(&reference::H155), named(&reference::K57)],
        "genus_histogram": reference::GENUS_HISTOGRAM.iter().map(|&(g, c)| json!({ "genus": g, "count": c })).collect::<Vec<_>>(),
        "x155_model": reference::X155_MODEL,
        "x155_j_map": reference::X155_J_MAP,
        "row2_curve": reference::ROW2_CURVE,
    })
}

pub fn run(cfg: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult<()> {
    cfg.validate()?;
    match &cfg.command {
        Command::Enumerate(a) => {
            let tc = TowerConfig {
                refined_cc: a.refined_cc,
                trace_test: if a.exact_trace { TraceTest::Exact } else { TraceTest::Residue },
                max_level_exp: a.max_level.map(|m| m.trailing_zeros()),
                checkpoint: a.checkpoint.clone(),
                checkpoint_every: a.checkpoint_every,
                pop_limit: None,
            };
            let lat = tower::enumerate_tower(&tc).map_err(failure)?;
            let s = &lat.stages;
            let _ = writeln!(
                stderr,
                "expanded {} maximal {} passed {} recorded {} (with root) pruned {} listed {} (with root)",
                s.expanded, s.maximal_found, s.passed_filters, s.recorded_with_root, s.pruned_contained, s.listed_with_root
            );
            if let Some(d) = &a.dot {
                fs::write(d, tower::export_dot(&lat)).map_err(failure)?;
            }
            emit(&a.out, &tower::export_json(&lat), stdout)
        }
        Command::Invariants(a) => {
            let h = read_subgroup(&a.subgroup)?;
            let inv = invariants(&h).map_err(failure)?;
            let v = json!({
                "level": h.level(),
                "index": h.index(),
                "psl2_index": inv.psl2_index,
                "cusps": inv.cusps,
                "e2": inv.e2,
                "e3": inv.e3,
                "genus": inv.genus,
                "flags": inv.flags,
            });
            emit(&a.out, &format!("{}\n", serde_json::to_string_pretty(&v).unwrap()), stdout)
        }
        Command::Density(a) => {
            let tol = density::parse_tolerance(&a.tol).expect("validated");
            if a.extremes {
                let lat = read_lattice(a.lattice.as_ref().expect("validated"))?;
                let flags = match (&a.flags, a.no_flags) {
                    (_, true) => None,
                    (Some(p), _) => Some(tower::parse_flag_file(&read(p)?).map_err(|e| usage(e.to_string()))?),
                    (None, _) => Some(tower::parse_flag_file(BUNDLED_FLAGS).map_err(failure)?),
                };
                let ex = density::density_extremes(&lat, flags.as_deref(), &tol)
                    .ok_or_else(|| failure("no subgroup in the domain"))?;
                let v = json!({
                    "considered": ex.considered,
                    "max": { "source": source_json(&ex.max.0), "interval": interval_json(&ex.max.1) },
                    "min": { "source": source_json(&ex.min.0), "interval": interval_json(&ex.min.1) },
                });
                return emit(&a.out, &format!("{}\n", serde_json::to_string_pretty(&v).unwrap()), stdout);
            }
            let rows = if let Some(p) = &a.lattice {
                density::density_report(&read_lattice(p)?, &tol)
            } else {
                let h = match &a.subgroup {
                    Some(p) => read_subgroup(p)?,
                    None => OpenSubgroup::full(),
                };
                vec![(0, density::odd_order_density(&h, &tol))]
            };
            emit(&a.out, &density::report_csv(&rows), stdout)
        }
        Command::Signature(a) => {
            let gens = signature::parse_generators(&read(&a.generators)?, a.modulus)
                .map_err(|e| usage(format!("{}: {e}", a.generators.display())))?;
            let sig = signature::signature(&gens, a.modulus).map_err(failure)?;
            let v = json!({ "modulus": sig.modulus, "triples": sig.triples });
            emit(&a.out, &format!("{}\n", serde_json::to_string_pretty(&v).unwrap()), stdout)
        }
        Command::Certify(a) => {
            let e = parse_curve(&a.curve).map_err(|e| usage(e.to_string()))?;
            if e.is_cm() {
                let _ = writeln!(stderr, "warning: CM curve; the image is not open and the verdict is only about H mod N");
            }
            let h = match &a.subgroup {
                Some(p) => read_subgroup(p)?,
                None => OpenSubgroup::full(),
            };
            let pc = ProverConfig { digits: a.digits, max_digits: a.max_digits, guard: a.guard };
            let report = certify_image(&e, a.modulus, &h, a.prime_bound, &pc).map_err(failure)?;
            emit(&a.out, &format!("{}\n", serde_json::to_string_pretty(&report).unwrap()), stdout)
        }
        Command::Export(a) => {
            let text = match a.format {
                ExportFormat::Reference => format!("{}\n", serde_json::to_string_pretty(&bundled_data()).unwrap()),
                fmt => {
                    let lat = match &a.lattice {
                        Some(p) => read_lattice(p)?,
                        None => default_lattice()?,
                    };
                    match fmt {
                        ExportFormat::Dot => tower::export_dot(&lat),
                        ExportFormat::Json => tower::export_json(&lat),
                        _ => format!("{}\n", serde_json::to_string_pretty(&tower::derive_point_flags(&lat)).unwrap()),
                    }
                }
            };
            emit(&a.out, &text, stdout)
        }
    }
}

/// Parse argv and run; returns the process exit code.
pub fn dispatch<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return code;
        }
    };
    if cli.version {
        let _ = writeln!(stdout, "gl2tower {} data-schema {}", env!("CARGO_PKG_VERSION"), DATA_SCHEMA_VERSION);
        return EXIT_OK;
    }
    let cfg = match (&cli.config, cli.command) {
        (Some(_), Some(_)) => {
            let _ = writeln!(stderr, "error: --config replaces the subcommand; give one or the other");
            return EXIT_USAGE;
        }
        (Some(p), None) => match read(p).and_then(|s| RunConfig::from_json(&s)) {
            Ok(c) => c,
            Err(e) => return report(e, stderr),
        },
        (None, Some(command)) => {
            RunConfig { schema_version: DATA_SCHEMA_VERSION.to_string(), workers: cli.workers, command }
        }
        (None, None) => {
            let _ = writeln!(stderr, "error: a subcommand is required (enumerate, invariants, density, signature, certify, export)");
            return EXIT_USAGE;
        }
    };
    if let Some(p) = &cli.dump_config {
        if let Err(e) = fs::write(p, cfg.to_json()) {
            let _ = writeln!(stderr, "error: cannot write {}: {e}", p.display());
            return EXIT_FAILURE;
        }
    }
    match run(&cfg, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(e) => report(e, stderr),
    }
}

fn report(e: CliError, stderr: &mut dyn Write) -> i32 {
    let code = e.code();
    let msg = match e {
        CliError::Usage(m) => format!("usage error: {m}"),
        CliError::Failure(m) => format!("error: {m}"),
    };
    let _ = writeln!(stderr, "{msg}");
    code
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = dispatch(std::iter::once("gl2tower").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn version_prints_schema() {
        let (code, out, _) = run_args(&["--version"]);
        assert_eq!(code, 0);
        assert!(out.contains(&format!("data-schema {DATA_SCHEMA_VERSION}")));
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run_args(&["--bogus"]).0, 2);
        assert_eq!(run_args(&[]).0, 2);
        assert_eq!(run_args(&["density", "--tol", "abc", "--full"]).0, 2);
        assert_eq!(run_args(&["certify", "--curve", "0,1,0,-28,48", "--modulus", "16"]).0, 2);
        assert_eq!(run_args(&["certify", "--curve", "0,0,0,0,0", "--modulus", "4"]).0, 2);
        assert_eq!(run_args(&["invariants", "--subgroup", "/nonexistent/file"]).0, 2);
    }

    #[test]
    fn config_round_trip() {
        let cfg = RunConfig {
            schema_version: DATA_SCHEMA_VERSION.into(),
            workers: 3,
            command: Command::Certify(CertifyArgs {
                curve: "0,1,0,-28,48".into(),
                modulus: 8,
                subgroup: Some("h.json".into()),
                prime_bound: 500,
                digits: Some(300),
                max_digits: 4000,
                guard: 12,
                heavy: false,
                out: None,
            }),
        };
        let back = RunConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
        assert!(back.validate().is_ok());
    }

    #[test]
    fn bundled_reference_rows() {
        let v = bundled_data();
        assert_eq!(v["exceptional"][0]["j_invariant"], "2^11");
        assert_eq!(v["exceptional"].as_array().unwrap().len(), 8);
        assert_eq!(v["x155_model"], "y^2 = x^3 - 2x");
    }
}
