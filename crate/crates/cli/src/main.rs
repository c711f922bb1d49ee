use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use kahler_acs::campaign::{run_campaign, CampaignConfig, Check, Status};
use kahler_acs::gallery::families;
use kahler_acs::holomorphy::{check_lattice_claim, format_rational_complex, period_lattice};

/// Verification campaigns for almost complex structures on products of
/// momentum level sets.
#[derive(Parser)]
#[command(name = "acsbench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the campaign described by a JSON config file.
    Run {
        config: PathBuf,
        /// Default directory for the report and CSV.
        #[arg(long, env = "ACSBENCH_OUT", default_value = ".")]
        out_dir: PathBuf,
        /// Print the full report instead of a summary.
        #[arg(long)]
        json: bool,
    },
    /// List gallery instances and checks.
    List,
    /// Exact period lattice of the mixing matrix [[A11, A12], [A21, A22]].
    ///
    /// With CLAIM=1, also test whether (Z/DENOM)+i(Z/DENOM) is contained in
    /// the lattice (DENOM=0 uses |det A|).
    #[command(allow_negative_numbers = true)]
    Lattice {
        a11: i64,
        a12: i64,
        a21: i64,
        a22: i64,
        claim: i64,
        denom: i64,
    },
}

fn run(config: PathBuf, out_dir: PathBuf, json: bool) -> anyhow::Result<bool> {
    let cfg = CampaignConfig::from_path(&config)
        .with_context(|| format!("reading {}", config.display()))?;
    let campaign = run_campaign(&cfg)?;
    let (report, csv) = campaign
        .write(&out_dir)
        .context("writing campaign output")?;
    if json {
        println!("{}", campaign.report_json()?);
    } else {
        println!("instance {} seed {}", campaign.report.instance, campaign.report.seed);
        for c in &campaign.report.checks {
            let status = match c.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
            };
            println!(
                "  {:<13} {status}  max residual {:.3e} (threshold {:.1e}), {} samples, {:.2}s",
                c.check, c.max_residual, c.threshold, c.sample_count, c.wall_time_s
            );
            if let Some(w) = &c.witness {
                println!(
                    "      witness: {} sample {} residual {:.3e} vs {:.1e} {}",
                    w.check, w.sample_index, w.residual, w.threshold, w.note
                );
            }
            if let Some(v) = c.details.get("claim_half_lattice").and_then(|v| v.get("verdict")) {
                println!("      {}", v.as_str().unwrap_or_default());
            }
        }
        println!("report {}", report.display());
        println!("csv    {}", csv.display());
    }
    Ok(campaign.passed())
}

fn list() {
    println!("instances:");
    for (pattern, description) in families() {
        println!("  {pattern:<26} {description}");
    }
    println!("checks:");
    for c in Check::ALL {
        println!("  {:<26} {}", c.name(), c.describe());
    }
    println!("  {:<26} every check applicable to the instance", "all");
}

fn lattice(mixing: [[i64; 2]; 2], claim: i64, denom: i64) -> anyhow::Result<()> {
    let lat = period_lattice(mixing)?;
    let det = mixing[0][0] * mixing[1][1] - mixing[0][1] * mixing[1][0];
    println!("A = {mixing:?}, det {det}");
    println!("generators {}, {}", format_rational_complex(lat.generators[0]), format_rational_complex(lat.generators[1]));
    println!("covolume {}", lat.covolume);
    match claim {
        0 => {}
        1 => {
            let c = check_lattice_claim(mixing, denom)?;
            let d = c.denominator;
            if c.equal {
                println!("claim (Z/{d})+i(Z/{d}): equals the period lattice");
            } else if c.contained {
                println!("claim (Z/{d})+i(Z/{d}): contained in the period lattice");
            } else {
                let w = c.witness.map(format_rational_complex).unwrap_or_default();
                println!("claim (Z/{d})+i(Z/{d}): NOT contained, witness {w}");
            }
        }
        _ => bail!("claim flag must be 0 or 1, got {claim}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out_dir, json } => run(config, out_dir, json),
        Command::List => {
            list();
            Ok(true)
        }
        Command::Lattice { a11, a12, a21, a22, claim, denom } => {
            lattice([[a11, a12], [a21, a22]], claim, denom).map(|_| true)
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
