//! `pirtrade`: command-line surface over the storage-retrieval tradeoff
//! workbench.
//!
//! Subcommands: `curve` (tradeoff sweep as CSV or JSON), `bounds` (outer and
//! linear bound checks on one point), `md-check` (binned-region membership of
//! rate files against a distribution file), `simulate` (Monte Carlo error
//! estimate of the binning code), `privacy-audit` (exact audit) and
//! `expurgate` (zero-error extraction with certificate).
//!
//! Exit codes: 0 when the requested computation completed (verdicts live in
//! the report body), 1 on operational errors, 2 when `--strict` is set and a
//! verdict failed. Outputs are byte-stable for fixed flags and seeds.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::json;

use pir_tradeoff::inner_bound::{refine_max_gap, trace_curve, RatePoint};
use pir_tradeoff::md_region::{
    mdstar_membership, BinnedRateVector, RateVector, ReconstructionSets,
};
use pir_tradeoff::outer_bound::{check_linear, check_outer};
use pir_tradeoff::probability::{JointPmf, VarSet};
use pir_tradeoff::sim::{
    build_sw_code, error_map, estimate_error, expurgate, symmetrize, verify_privacy, PirCode,
    SwSeeds, EXHAUSTIVE_CAP,
};
use pir_tradeoff::Tolerances;

#[derive(Parser)]
#[command(
    name = "pirtrade",
    version,
    about = "Two-database PIR storage-retrieval workbench"
)]
struct Cli {
    /// Exit nonzero when a bound check, membership test or audit fails.
    #[arg(long, global = true)]
    strict: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    Base,
    Symmetrized,
    Expurgated,
    Adversarial,
}

#[derive(Subcommand)]
enum Command {
    /// Trace the achievable tradeoff curve with outer-bound slack columns.
    Curve {
        #[arg(long = "p-min", default_value_t = 0.0)]
        p_min: f64,
        #[arg(long = "p-max", default_value_t = 1.0)]
        p_max: f64,
        #[arg(long, default_value_t = 101)]
        steps: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Golden-section refinement of the largest space-sharing gap,
        /// reported on stderr.
        #[arg(long)]
        refine: bool,
        /// Output file (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check one storage-retrieval point against the outer bounds.
    Bounds {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        /// Also evaluate the linear-code bound.
        #[arg(long)]
        linear: bool,
    },
    /// Binned-region membership of a rate file against a distribution file.
    MdCheck {
        /// Joint distribution (JSON schema with exact rational masses).
        #[arg(long)]
        dist: PathBuf,
        /// Rates file: {"R": {name: bits}, "Rp": {name: bits}}.
        #[arg(long)]
        rates: PathBuf,
        /// Reconstruction sets file: [[name, ...], ...].
        #[arg(long)]
        recon: PathBuf,
    },
    /// Monte Carlo error estimate of the binning code.
    Simulate {
        #[arg(long = "L")]
        l: usize,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact privacy audit of a code and its derivatives.
    PrivacyAudit {
        #[arg(long = "L")]
        l: usize,
        #[arg(long, default_value_t = 0.2)]
        delta: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Variant::Base)]
        variant: Variant,
    },
    /// Extract a zero-error code by expurgation and certify it.
    Expurgate {
        #[arg(long = "L")]
        l: usize,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Where to write the reconstructible code parameters.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Fixed-notation formatting at 9 significant digits.
fn sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (8 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), String> {
    match out {
        Some(path) => {
            fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))
        }
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

#[derive(Deserialize)]
struct RatesDoc {
    #[serde(rename = "R")]
    bin: BTreeMap<String, f64>,
    #[serde(rename = "Rp")]
    codebook: BTreeMap<String, f64>,
}

fn run(cli: Cli) -> Result<bool, String> {
    let tol = Tolerances::default();
    match cli.command {
        Command::Curve {
            p_min,
            p_max,
            steps,
            format,
            refine,
            out,
        } => {
            if steps < 2 {
                return Err(format!("steps must be >= 2, got {steps}"));
            }
            if !(0.0..=1.0).contains(&p_min) || !(0.0..=1.0).contains(&p_max) || p_min >= p_max {
                return Err(format!("degenerate p range [{p_min}, {p_max}]"));
            }
            let grid: Vec<f64> = (0..steps)
                .map(|i| p_min + (p_max - p_min) * i as f64 / (steps - 1) as f64)
                .collect();
            let points = trace_curve(&grid).map_err(|e| e.to_string())?;
            let mut all_outer_ok = true;
            let rows: Vec<_> = points
                .iter()
                .map(|pt| {
                    let outer = check_outer(
                        RatePoint {
                            alpha_bar: pt.alpha_bar,
                            beta_bar: pt.beta_bar,
                        },
                        tol,
                    );
                    all_outer_ok &= outer.pass;
                    (pt, outer)
                })
                .collect();
            let text = match format {
                Format::Csv => {
                    let mut s = String::from(
                        "p,alpha_bar,beta_bar,chord_alpha,below_spaceshare,\
                         slack_beta_min,slack_sum,slack_weighted\n",
                    );
                    for (pt, outer) in &rows {
                        s.push_str(&format!(
                            "{},{},{},{},{},{},{},{}\n",
                            sig9(pt.p),
                            sig9(pt.alpha_bar),
                            sig9(pt.beta_bar),
                            sig9(pt.chord_alpha),
                            pt.below_spaceshare,
                            sig9(outer.entries[0].slack),
                            sig9(outer.entries[1].slack),
                            sig9(outer.entries[2].slack),
                        ));
                    }
                    s
                }
                Format::Json => {
                    let arr: Vec<_> = rows
                        .iter()
                        .map(|(pt, outer)| {
                            json!({
                                "p": pt.p,
                                "alpha_bar": pt.alpha_bar,
                                "beta_bar": pt.beta_bar,
                                "chord_alpha": pt.chord_alpha,
                                "below_spaceshare": pt.below_spaceshare,
                                "outer": outer,
                            })
                        })
                        .collect();
                    serde_json::to_string_pretty(&arr).map_err(|e| e.to_string())?
                }
            };
            emit(&out, &text)?;
            if refine {
                let (p_star, gap) = refine_max_gap(p_min.max(1e-6), p_max.min(1.0 - 1e-6), 60)
                    .map_err(|e| e.to_string())?;
                eprintln!(
                    "max space-sharing gap {} at p = {}",
                    sig9(gap),
                    sig9(p_star)
                );
            }
            Ok(all_outer_ok)
        }

        Command::Bounds {
            alpha,
            beta,
            linear,
        } => {
            let point = RatePoint::new(alpha, beta).map_err(|e| e.to_string())?;
            let outer = check_outer(point, tol);
            let mut verdict = outer.pass;
            let mut doc = json!({ "outer": outer });
            if linear {
                let entry = check_linear(point);
                verdict &= entry.slack >= -tol.slack;
                doc["linear"] = json!(entry);
            }
            println!(
                "{}",
                serde_json::to_string_pretty(&doc).map_err(|e| e.to_string())?
            );
            Ok(verdict)
        }

        Command::MdCheck { dist, rates, recon } => {
            let dist_text =
                fs::read_to_string(&dist).map_err(|e| format!("{}: {e}", dist.display()))?;
            let joint = JointPmf::from_json(&dist_text).map_err(|e| e.to_string())?;
            let rates_text =
                fs::read_to_string(&rates).map_err(|e| format!("{}: {e}", rates.display()))?;
            let doc: RatesDoc = serde_json::from_str(&rates_text)
                .map_err(|e| format!("{}: {e}", rates.display()))?;
            let recon_text =
                fs::read_to_string(&recon).map_err(|e| format!("{}: {e}", recon.display()))?;
            let sets: Vec<Vec<String>> = serde_json::from_str(&recon_text)
                .map_err(|e| format!("{}: {e}", recon.display()))?;

            let descriptions: Vec<String> = doc.codebook.keys().cloned().collect();
            let desc_refs: Vec<&str> = descriptions.iter().map(String::as_str).collect();
            let brv = BinnedRateVector::new(
                RateVector::of(doc.bin).map_err(|e| e.to_string())?,
                RateVector::of(doc.codebook).map_err(|e| e.to_string())?,
            )
            .map_err(|e| e.to_string())?;
            let recon_sets = ReconstructionSets::new(sets.into_iter().map(VarSet::of).collect())
                .map_err(|e| e.to_string())?;
            let m = mdstar_membership(&joint, &desc_refs, &recon_sets, &brv, tol)
                .map_err(|e| e.to_string())?;
            println!(
                "{}",
                serde_json::to_string_pretty(&m).map_err(|e| e.to_string())?
            );
            Ok(m.member)
        }

        Command::Simulate {
            l,
            delta,
            trials,
            seed,
            out,
        } => {
            let code = PirCode::from(
                build_sw_code(l, delta, SwSeeds::from_root(seed)).map_err(|e| e.to_string())?,
            );
            let report = estimate_error(&code, trials, seed).map_err(|e| e.to_string())?;
            let text = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?;
            emit(&out, &text)?;
            Ok(true)
        }

        Command::PrivacyAudit {
            l,
            delta,
            seed,
            variant,
        } => {
            let base = PirCode::from(
                build_sw_code(l, delta, SwSeeds::from_root(seed)).map_err(|e| e.to_string())?,
            );
            let code = match variant {
                Variant::Base => base,
                Variant::Symmetrized => symmetrize(base),
                Variant::Expurgated => {
                    let map = error_map(&base, EXHAUSTIVE_CAP).map_err(|e| e.to_string())?;
                    expurgate(&base, &map).map_err(|e| e.to_string())?.0
                }
                Variant::Adversarial => PirCode::AdversarialDb1(Box::new(base)),
            };
            let verdict = verify_privacy(&code, EXHAUSTIVE_CAP).map_err(|e| e.to_string())?;
            println!(
                "{}",
                serde_json::to_string_pretty(&verdict).map_err(|e| e.to_string())?
            );
            Ok(verdict.equal)
        }

        Command::Expurgate {
            l,
            delta,
            seed,
            out,
        } => {
            let base = PirCode::from(
                build_sw_code(l, delta, SwSeeds::from_root(seed)).map_err(|e| e.to_string())?,
            );
            let map = error_map(&base, EXHAUSTIVE_CAP).map_err(|e| e.to_string())?;
            let (wrapped, cert) = expurgate(&base, &map).map_err(|e| e.to_string())?;
            if let Some(path) = &out {
                let spec =
                    serde_json::to_string_pretty(&wrapped.spec()).map_err(|e| e.to_string())?;
                fs::write(path, spec)
                    .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
            }
            println!(
                "{}",
                serde_json::to_string_pretty(&cert).map_err(|e| e.to_string())?
            );
            Ok(cert.zero_error_verified)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let strict = cli.strict;
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) if strict => ExitCode::from(2),
        Ok(false) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
