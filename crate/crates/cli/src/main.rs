//! `ddroot` command-line interface.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{CommandFactory, Parser, Subcommand};

use ddroot::bench::{self, MuSource, OutputFormat, RunConfig};
use ddroot::checks::{self, CheckConfig, Suite};
use ddroot::divdiff::{DividedDifferenceKind, PointOrder};
use ddroot::efficiency::BoundaryCurve;
use ddroot::methods::MethodKind;
use ddroot::problems::{self, ProblemId};

/// Derivative-free multiprecision solvers: benchmark tables, boundary
/// curves and invariant checks.
#[derive(Parser, Debug)]
#[command(name = "ddroot", version, args_override_self = true)]
struct Cli {
    /// key=value file whose keys mirror the long flags; flags win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve registered problems and print result rows.
    Run {
        /// Problem to run; all registered problems when omitted.
        #[arg(long)]
        problem: Option<ProblemId>,
        /// Methods, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "phi0,phi1,phi2")]
        method: Vec<MethodKind>,
        /// Divided-difference operators, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "d1,d2")]
        dd: Vec<DividedDifferenceKind>,
        #[arg(long, default_value_t = 4096)]
        digits: u32,
        /// Cost of a quotient in products.
        #[arg(long, default_value_t = 2.5)]
        ell: f64,
        /// Cost of a scalar evaluation in products; the published value
        /// when omitted.
        #[arg(long, conflicts_with = "estimate_mu")]
        mu: Option<f64>,
        /// Estimate mu from the elementary-operation cost table.
        #[arg(long)]
        estimate_mu: bool,
        #[arg(long, default_value_t = 200)]
        max_iters: usize,
        #[arg(long, default_value = "swapped")]
        point_order: PointOrder,
        #[arg(long, default_value = "md")]
        format: OutputFormat,
    },
    /// Sample a boundary curve mu = G(m, l) as CSV.
    Curves {
        #[arg(long)]
        which: BoundaryCurve,
        #[arg(long, default_value_t = 2.5)]
        ell: f64,
        #[arg(long, default_value_t = 2.0)]
        m_min: f64,
        #[arg(long, default_value_t = 20.0)]
        m_max: f64,
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
    /// Run invariant suites; exits nonzero on any failure.
    Check {
        /// Suite to run; all when omitted.
        #[arg(long)]
        suite: Option<Suite>,
        /// Precision of the table solves.
        #[arg(long, default_value_t = 4096)]
        digits: u32,
        #[arg(long, default_value_t = 256)]
        operator_digits: u32,
        #[arg(long, default_value_t = 100)]
        pairs: usize,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
    },
    /// Recompute a reference root with Phi2/D2.
    Root {
        #[arg(long)]
        problem: ProblemId,
        #[arg(long, default_value_t = problems::REFERENCE_DIGITS)]
        digits: u32,
        /// Directory to write `<problem>_root.txt` into; stdout when omitted.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

/// Reads `key = value` lines; `#` starts a comment.
fn read_config(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut map = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("{}:{}: expected key=value", path.display(), n + 1);
        };
        map.insert(k.trim().replace('_', "-"), v.trim().to_string());
    }
    Ok(map)
}

/// Splices config entries in front of the command-line flags so that
/// later occurrences, i.e. the flags, override them.
fn merged_args(raw: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(pos) = raw.iter().position(|a| a == "--config") else {
        return Ok(raw);
    };
    let path = raw.get(pos + 1).context("--config needs a file")?;
    let config = read_config(Path::new(path))?;
    let cmd = Cli::command();
    let Some(sub_pos) = raw
        .iter()
        .skip(1)
        .position(|a| cmd.find_subcommand(a.to_string_lossy().as_ref()).is_some())
        .map(|p| p + 1)
    else {
        return Ok(raw);
    };
    let sub = cmd
        .find_subcommand(raw[sub_pos].to_string_lossy().as_ref())
        .expect("found above");
    let mut injected = Vec::new();
    for (key, value) in &config {
        let Some(arg) = sub.get_arguments().find(|a| a.get_long() == Some(key.as_str())) else {
            if key != "config" && !Cli::command().get_subcommands().any(|s| s.get_arguments().any(|a| a.get_long() == Some(key.as_str()))) {
                bail!("unknown config key `{key}`");
            }
            continue;
        };
        let is_switch = matches!(arg.get_action(), clap::ArgAction::SetTrue);
        if is_switch {
            if value.parse::<bool>().with_context(|| format!("`{key}` expects true or false"))? {
                injected.push(OsString::from(format!("--{key}")));
            }
        } else {
            injected.push(OsString::from(format!("--{key}")));
            injected.push(OsString::from(value));
        }
    }
    let mut out: Vec<OsString> = raw[..=sub_pos].to_vec();
    out.extend(injected);
    out.extend_from_slice(&raw[sub_pos + 1..]);
    Ok(out)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run {
            problem,
            method,
            dd,
            digits,
            ell,
            mu,
            estimate_mu,
            max_iters,
            point_order,
            format,
        } => {
            let config = RunConfig {
                digits,
                methods: method,
                dd_kinds: dd,
                max_iters,
                format,
                ell,
                mu: match (mu, estimate_mu) {
                    (Some(v), _) => MuSource::Fixed(v),
                    (None, true) => MuSource::Estimated,
                    (None, false) => MuSource::Published,
                },
                point_order,
                ..RunConfig::default()
            };
            let specs = match problem {
                Some(id) => vec![problems::problem(id)],
                None => problems::registry(),
            };
            let mut rows = Vec::new();
            for spec in &specs {
                rows.extend(bench::run_benchmark(spec, &config)?);
            }
            print!("{}", bench::render(&rows, config.format)?);
            let failed: Vec<_> = rows.iter().filter(|r| r.error.is_some()).collect();
            for r in &failed {
                eprintln!("{}: {}", r.label(), r.error.as_deref().unwrap_or_default());
            }
            Ok(failed.is_empty())
        }
        Command::Curves {
            which,
            ell,
            m_min,
            m_max,
            samples,
        } => {
            print!("{}", bench::export_boundary_curves(which, ell, m_min, m_max, samples)?);
            Ok(true)
        }
        Command::Check {
            suite,
            digits,
            operator_digits,
            pairs,
            seed,
        } => {
            let config = CheckConfig {
                digits,
                operator_digits,
                pairs,
                seed,
            };
            let suites = suite.map(|s| vec![s]).unwrap_or_else(|| Suite::ALL.to_vec());
            let mut ok = true;
            for s in suites {
                for outcome in checks::run_suite(s, &config)? {
                    let tag = if outcome.passed { "PASS" } else { "FAIL" };
                    println!("{tag} [{}] {}  {}", outcome.suite, outcome.name, outcome.detail);
                    ok &= outcome.passed;
                }
            }
            Ok(ok)
        }
        Command::Root {
            problem,
            digits,
            out_dir,
        } => {
            let spec = problems::problem(problem);
            let (root, residual) = problems::compute_reference_root(&spec, digits)?;
            eprintln!("||F(root)|| = {}", residual.to_string_radix(10, Some(6)));
            let text = root.join("\n") + "\n";
            match out_dir {
                Some(dir) => {
                    let path = dir.join(format!("{problem}_root.txt"));
                    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
                    eprintln!("wrote {}", path.display());
                }
                None => print!("{text}"),
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = match merged_args(std::env::args_os().collect()) {
        Ok(args) => Cli::parse_from(args),
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn flags_override_config() {
        let dir = std::env::temp_dir().join(format!("ddroot-cli-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.conf");
        std::fs::write(&path, "# defaults\ndigits = 128\nproblem=quad2\nestimate_mu = true\nwhich = g20\n").unwrap();
        let p = path.to_str().unwrap();
        let merged = merged_args(args(&["ddroot", "run", "--config", p, "--digits", "256"])).unwrap();
        let cli = Cli::parse_from(merged);
        match cli.command {
            Command::Run {
                digits,
                problem,
                estimate_mu,
                ..
            } => {
                assert_eq!(digits, 256);
                assert_eq!(problem, Some(ProblemId::Quad2));
                assert!(estimate_mu);
            }
            other => panic!("{other:?}"),
        }
        std::fs::write(&path, "bogus = 1\n").unwrap();
        assert!(merged_args(args(&["ddroot", "run", "--config", p])).is_err());
    }

    #[test]
    fn parses_lists() {
        let cli = Cli::parse_from(args(&["ddroot", "run", "--method", "phi1,phi2", "--dd", "d2", "--format", "json"]));
        match cli.command {
            Command::Run { method, dd, format, .. } => {
                assert_eq!(method, vec![MethodKind::Phi1, MethodKind::Phi2]);
                assert_eq!(dd, vec![DividedDifferenceKind::D2]);
                assert_eq!(format, OutputFormat::Json);
            }
            other => panic!("{other:?}"),
        }
    }
}
