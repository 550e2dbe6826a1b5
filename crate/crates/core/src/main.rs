//! pcause: probability of causation from matched unit data, PN bounds from
//! 2x2 tables, distribution and sensitivity studies, and data simulators.
//!
//! Every subcommand writes a JSON run report to stdout (except `simulate`
//! and `--csv -`, which stream CSV instead), a short human-readable summary
//! to stderr, and a JSON error record to stderr with exit code 1 on failure.
//! "-" stands for stdin or stdout wherever a path is taken.

use std::io::{Read, Write};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use pcause::distribution::{
    bootstrap_distribution, ensemble_distribution, resampling_distribution, PCDistribution,
    StrataRatios,
};
use pcause::estimator::{
    estimate_pc, pc_bounds, pc_under_monotonicity, pc_under_reverse_monotonicity, risk_ratio,
};
use pcause::g2i::{estimate_individual_pc, retention_by_decile, IndividualQuery};
use pcause::io::{
    distribution_to_csv, read_table_csv, read_target_csv, read_units_csv, sweep_to_csv,
    units_to_csv, UnitsData,
};
use pcause::matching::{MatchMode, MatchSpec, Metric, TieRule};
use pcause::model::{
    contingency_from_partition, partition_dataset, ContingencyTable, Regime, Unit,
};
use pcause::pn::{pn_bounds, sensitivity_sweep, CellTarget, SweepEstimator};
use pcause::report::{
    BoundsSummary, Corollary, DecileRetention, G2iSummary, InputDigest, PartitionSummary, Payload,
    RunReport, SimulateSummary,
};
use pcause::synth::{
    gen_example1, load_network_spec, lucas_standin_doc, lucas_template_doc, sample_bayesnet,
};
use pcause::{Error, Result};

#[derive(Parser)]
#[command(
    name = "pcause",
    version,
    about = "Probability of causation from matched unit-level data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Matcher configuration shared by the estimating subcommands.
#[derive(Args)]
struct MatcherArgs {
    /// Distance metric: euclidean_standardized, absolute_difference,
    /// mahalanobis, or identity_threshold
    #[arg(long, default_value = "euclidean_standardized")]
    metric: Metric,

    /// Matches taken per exposed death
    #[arg(long, default_value_t = 1)]
    m: usize,

    /// Tie handling at the m-th place: fractional or lowest_id
    #[arg(long, default_value = "fractional")]
    tie_rule: TieRule,

    /// Pool reuse: with_replacement or balanced_assignment
    #[arg(long, default_value = "with_replacement")]
    mode: MatchMode,

    /// Similarity cutoff in [0,1] for the identity_threshold metric
    /// (exact covariate equality when omitted)
    #[arg(long)]
    threshold_t: Option<f64>,
}

impl MatcherArgs {
    fn spec(&self) -> MatchSpec {
        MatchSpec {
            metric: self.metric,
            m: self.m,
            threshold_t: self.threshold_t,
            tie_rule: self.tie_rule,
            mode: self.mode,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Split a unit dataset into the four exposure/outcome sets
    Partition {
        /// Units CSV (id,x,y,<covariates...>), or - for stdin
        units: String,
    },

    /// Estimate PC by matching exposed deaths against the unexposed pool
    Estimate {
        /// Units CSV, or - for stdin
        units: String,
        #[command(flatten)]
        matcher: MatcherArgs,
    },

    /// Theoretical PC bounds, risk ratio, and the monotonicity corollaries
    Bounds {
        /// Units CSV or 2x2 table CSV (recognized by header), or - for stdin
        input: String,
    },

    /// Tian-Pearl PN bounds from an experimental and an observational table
    Pn {
        /// Table CSV labeled regime,experimental
        experimental: String,
        /// Table CSV labeled regime,observational
        observational: String,
    },

    /// Trace an estimator while one table cell is perturbed k = 0..=k-max
    Sweep {
        /// Experimental table CSV
        experimental: String,
        /// Observational table CSV (required by the pn_lower estimator)
        observational: Option<String>,
        /// Cell to perturb and which table it lives in, e.g. "x'y@experimental"
        #[arg(long)]
        cell: CellTarget,
        /// Last perturbation step
        #[arg(long, default_value_t = 9)]
        k_max: i64,
        /// pn_lower or pc_lower_experimental
        #[arg(long, default_value = "pn_lower")]
        estimator: SweepEstimator,
        /// Write the curve as CSV here too; "-" streams it to stdout in
        /// place of the JSON report
        #[arg(long)]
        csv: Option<String>,
    },

    /// Distribution of PC estimates over resampled data or matcher variants
    Distribution {
        /// Units CSV, or - for stdin
        units: String,
        /// bootstrap, resample, or ensemble
        #[arg(long)]
        method: String,
        /// Iterations for bootstrap/resample (default 1000)
        #[arg(long)]
        iterations: Option<usize>,
        /// Units drawn per arm (resample only)
        #[arg(long)]
        arm_size: Option<usize>,
        /// Stratified resampling ratios "p0,p1": target P(y=1) in the
        /// unexposed and exposed draws
        #[arg(long)]
        strata: Option<String>,
        /// Master seed; iteration i draws from RNG stream i+1
        #[arg(long)]
        seed: u64,
        /// Comma-separated metrics for the ensemble grid
        /// (default euclidean_standardized,absolute_difference)
        #[arg(long)]
        ensemble_metrics: Option<String>,
        /// Comma-separated m values for the ensemble grid (default 1,3,5)
        #[arg(long)]
        ensemble_m: Option<String>,
        #[command(flatten)]
        matcher: MatcherArgs,
        /// Write per-iteration samples as CSV here too; "-" streams them to
        /// stdout in place of the JSON report
        #[arg(long)]
        csv: Option<String>,
    },

    /// Generate synthetic unit data
    Simulate {
        /// Uniform-Id generator with controlled set ratios
        #[arg(long)]
        example1: bool,
        /// Bayesian-network JSON document; @lucas-standin and @lucas-template
        /// name the bundled networks
        #[arg(long, conflicts_with = "example1")]
        network: Option<String>,
        /// Units per arm (example1) or total units (network)
        #[arg(long, default_value_t = 500)]
        n: usize,
        /// Fraction of the unexposed arm surviving into Set A (example1)
        #[arg(long, default_value_t = 0.8)]
        ab_split: f64,
        /// Fraction of the exposed arm surviving into Set C (example1)
        #[arg(long, default_value_t = 0.6)]
        cd_split: f64,
        /// Generator seed
        #[arg(long)]
        seed: u64,
        /// Units CSV destination; "-" (default) streams to stdout
        #[arg(long, default_value = "-")]
        output: String,
    },

    /// PC for one individual: restrict Set D to cases similar to a target
    G2i {
        /// Units CSV, or - for stdin
        units: String,
        /// One-row CSV with the target's covariates
        target: String,
        /// Similarity threshold T in [0, 1]; deciles of T are reported to
        /// help choose it
        #[arg(long)]
        threshold: f64,
        #[command(flatten)]
        matcher: MatcherArgs,
    },
}

fn main() {
    let started = Instant::now();
    let cli = Cli::parse();
    if let Err(e) = run(cli.command, started) {
        let record = serde_json::json!({ "error": e.to_string() });
        eprintln!("{record}");
        std::process::exit(1);
    }
}

/// Collects input bytes and their digests; at most one input may be stdin.
struct Inputs {
    digests: Vec<InputDigest>,
    stdin_taken: bool,
}

impl Inputs {
    fn new() -> Self {
        Inputs {
            digests: Vec::new(),
            stdin_taken: false,
        }
    }

    fn read(&mut self, path: &str) -> Result<Vec<u8>> {
        let bytes = if path == "-" {
            if self.stdin_taken {
                return Err(usage("only one input may come from stdin"));
            }
            self.stdin_taken = true;
            let mut buf = Vec::new();
            std::io::stdin().lock().read_to_end(&mut buf)?;
            buf
        } else {
            std::fs::read(path).map_err(|e| usage(format!("cannot read {path}: {e}")))?
        };
        self.digests.push(InputDigest::of(source_name(path), &bytes));
        Ok(bytes)
    }

    fn units(&mut self, path: &str) -> Result<UnitsData> {
        let bytes = self.read(path)?;
        read_units_csv(&bytes[..], source_name(path))
    }

    fn table(&mut self, path: &str) -> Result<ContingencyTable> {
        let bytes = self.read(path)?;
        read_table_csv(&bytes[..], source_name(path))
    }
}

fn source_name(path: &str) -> &str {
    if path == "-" {
        "<stdin>"
    } else {
        path
    }
}

fn usage(message: impl Into<String>) -> Error {
    Error::CliUsage {
        message: message.into(),
    }
}

fn write_output(path: &str, text: &str) -> Result<()> {
    if path == "-" {
        std::io::stdout().lock().write_all(text.as_bytes())?;
    } else {
        std::fs::write(path, text).map_err(|e| usage(format!("cannot write {path}: {e}")))?;
    }
    Ok(())
}

/// Four decimals for human-facing summaries; the JSON and CSV streams carry
/// full precision.
fn fmt4(v: f64) -> String {
    if v.is_infinite() {
        "inf".to_string()
    } else {
        format!("{v:.4}")
    }
}

fn command_echo() -> Vec<String> {
    std::env::args().skip(1).collect()
}

fn emit(
    inputs: Inputs,
    seed: Option<u64>,
    specs: Vec<MatchSpec>,
    payload: Payload,
    human: String,
    started: Instant,
) -> Result<()> {
    let report = RunReport {
        command: command_echo(),
        inputs: inputs.digests,
        seed,
        specs,
        payload,
        elapsed_ms: started.elapsed().as_millis() as u64,
    };
    std::io::stdout().lock().write_all(report.to_json().as_bytes())?;
    eprintln!("{human}");
    Ok(())
}

fn run(command: Command, started: Instant) -> Result<()> {
    match command {
        Command::Partition { units } => {
            let mut inputs = Inputs::new();
            let data = inputs.units(&units)?;
            let p = partition_dataset(&data.units)?;
            let counts = p.counts();
            let human = format!(
                "A={} B={} C={} D={} | arms {}/{} {}",
                counts.a,
                counts.b,
                counts.c,
                counts.d,
                p.n_unexposed(),
                p.n_exposed(),
                if p.arms_balanced() { "balanced" } else { "UNBALANCED" },
            );
            let payload = Payload::Partition(PartitionSummary {
                counts,
                n_unexposed: p.n_unexposed(),
                n_exposed: p.n_exposed(),
                total: p.total(),
                arms_balanced: p.arms_balanced(),
            });
            emit(inputs, None, vec![], payload, human, started)
        }

        Command::Estimate { units, matcher } => {
            let spec = matcher.spec();
            let mut inputs = Inputs::new();
            let data = inputs.units(&units)?;
            let p = partition_dataset(&data.units)?;
            let e = estimate_pc(&p, &spec)?;
            let human = format!(
                "PC = {} (bounds [{}, {}], RR = {}{})",
                fmt4(e.pc_raw),
                fmt4(e.bound_lower),
                fmt4(e.bound_upper),
                fmt4(e.rr),
                if e.out_of_bounds_flag { "; OUT OF BOUNDS, clamped" } else { "" },
            );
            emit(inputs, None, vec![spec], Payload::Estimate(e), human, started)
        }

        Command::Bounds { input } => {
            let mut inputs = Inputs::new();
            let bytes = inputs.read(&input)?;
            let source = source_name(&input);
            let header = bytes
                .split(|&b| b == b'\n')
                .next()
                .map(|l| String::from_utf8_lossy(l).trim().to_string())
                .unwrap_or_default();
            let table = if header.starts_with("cell,") {
                read_table_csv(&bytes[..], source)?
            } else if header.starts_with("id,") {
                let data = read_units_csv(&bytes[..], source)?;
                let p = partition_dataset(&data.units)?;
                contingency_from_partition(&p, Regime::Observational)
            } else {
                return Err(usage(format!(
                    "{source}: cannot tell a units file from a table file \
                     (the header must start with id,x,y or cell,count)"
                )));
            };
            let (bound_lower, bound_upper) = pc_bounds(&table)?;
            let rr = risk_ratio(&table)?;
            let mono = Corollary::from_result(pc_under_monotonicity(&table));
            let rev = Corollary::from_result(pc_under_reverse_monotonicity(&table));
            let show = |c: &Corollary| match (&c.value, &c.infeasible) {
                (Some(v), _) => fmt4(*v),
                (None, Some(m)) => format!("infeasible ({m})"),
                _ => "?".to_string(),
            };
            let human = format!(
                "PC in [{}, {}]; RR = {}; monotonic: {}; reverse-monotonic: {}",
                fmt4(bound_lower),
                fmt4(bound_upper),
                fmt4(rr),
                show(&mono),
                show(&rev),
            );
            let payload = Payload::Bounds(BoundsSummary {
                table,
                bound_lower,
                bound_upper,
                rr,
                pc_under_monotonicity: mono,
                pc_under_reverse_monotonicity: rev,
            });
            emit(inputs, None, vec![], payload, human, started)
        }

        Command::Pn {
            experimental,
            observational,
        } => {
            let mut inputs = Inputs::new();
            let exp = inputs.table(&experimental)?;
            let obs = inputs.table(&observational)?;
            let r = pn_bounds(&exp, &obs)?;
            let human = format!(
                "PN in [{}, {}] (raw [{}, {}])",
                fmt4(r.pn_lower),
                fmt4(r.pn_upper),
                fmt4(r.raw_lower),
                fmt4(r.raw_upper),
            );
            emit(inputs, None, vec![], Payload::Pn(r), human, started)
        }

        Command::Sweep {
            experimental,
            observational,
            cell,
            k_max,
            estimator,
            csv,
        } => {
            if k_max < 0 {
                return Err(usage(format!("--k-max must be nonnegative, got {k_max}")));
            }
            let mut inputs = Inputs::new();
            let exp = inputs.table(&experimental)?;
            let obs = observational
                .as_deref()
                .map(|p| inputs.table(p))
                .transpose()?;
            let curve = sensitivity_sweep(&exp, obs.as_ref(), cell, 0..=k_max, estimator)?;
            let first = curve.points.first().map(|p| p.value).unwrap_or(f64::NAN);
            let last = curve.points.last().map(|p| p.value).unwrap_or(f64::NAN);
            let human = format!(
                "{} over k = 0..={}: {} -> {}",
                estimator,
                k_max,
                fmt4(first),
                fmt4(last),
            );
            if let Some(path) = csv.as_deref() {
                write_output(path, &sweep_to_csv(&curve))?;
                if path == "-" {
                    eprintln!("{human}");
                    return Ok(());
                }
            }
            emit(inputs, None, vec![], Payload::Sweep(curve), human, started)
        }

        Command::Distribution {
            units,
            method,
            iterations,
            arm_size,
            strata,
            seed,
            ensemble_metrics,
            ensemble_m,
            matcher,
            csv,
        } => {
            let mut inputs = Inputs::new();
            let data = inputs.units(&units)?;
            let only_for = |flag_set: bool, flag: &str, methods: &str| -> Result<()> {
                if flag_set {
                    Err(usage(format!("--{flag} only applies to --method {methods}")))
                } else {
                    Ok(())
                }
            };
            let (d, specs): (PCDistribution, Vec<MatchSpec>) = match method.as_str() {
                "bootstrap" => {
                    only_for(arm_size.is_some(), "arm-size", "resample")?;
                    only_for(strata.is_some(), "strata", "resample")?;
                    only_for(ensemble_metrics.is_some(), "ensemble-metrics", "ensemble")?;
                    only_for(ensemble_m.is_some(), "ensemble-m", "ensemble")?;
                    let spec = matcher.spec();
                    let iters = iterations.unwrap_or(1000);
                    (
                        bootstrap_distribution(&data.units, &spec, iters, seed)?,
                        vec![spec],
                    )
                }
                "resample" => {
                    only_for(ensemble_metrics.is_some(), "ensemble-metrics", "ensemble")?;
                    only_for(ensemble_m.is_some(), "ensemble-m", "ensemble")?;
                    let spec = matcher.spec();
                    let iters = iterations.unwrap_or(1000);
                    let arm = arm_size
                        .ok_or_else(|| usage("--method resample requires --arm-size"))?;
                    let ratios = strata.as_deref().map(parse_strata).transpose()?;
                    (
                        resampling_distribution(&data.units, arm, &spec, iters, ratios, seed)?,
                        vec![spec],
                    )
                }
                "ensemble" => {
                    only_for(iterations.is_some(), "iterations", "bootstrap or resample")?;
                    only_for(arm_size.is_some(), "arm-size", "resample")?;
                    only_for(strata.is_some(), "strata", "resample")?;
                    let metrics = parse_list::<Metric>(
                        ensemble_metrics
                            .as_deref()
                            .unwrap_or("euclidean_standardized,absolute_difference"),
                        "--ensemble-metrics",
                    )?;
                    let ms = parse_list::<usize>(
                        ensemble_m.as_deref().unwrap_or("1,3,5"),
                        "--ensemble-m",
                    )?;
                    let base = matcher.spec();
                    let specs: Vec<MatchSpec> = metrics
                        .iter()
                        .flat_map(|&metric| {
                            ms.iter().map(move |&m| MatchSpec { metric, m, ..base })
                        })
                        .collect();
                    (ensemble_distribution(&data.units, &specs, seed)?, specs)
                }
                other => {
                    return Err(usage(format!(
                        "unknown method {other:?} (expected bootstrap, resample, or ensemble)"
                    )))
                }
            };
            let human = format!(
                "{} samples ({} skipped); median {}, IQR {}, sd {}; envelope [{}, {}]",
                d.samples.len(),
                d.skipped.len(),
                fmt4(d.summary.median),
                fmt4(d.summary.iqr),
                fmt4(d.summary.sd),
                fmt4(d.envelope_lower),
                fmt4(d.envelope_upper),
            );
            if let Some(path) = csv.as_deref() {
                write_output(path, &distribution_to_csv(&d))?;
                if path == "-" {
                    eprintln!("{human}");
                    return Ok(());
                }
            }
            emit(inputs, Some(seed), specs, Payload::Distribution(d), human, started)
        }

        Command::Simulate {
            example1,
            network,
            n,
            ab_split,
            cd_split,
            seed,
            output,
        } => {
            let mut inputs = Inputs::new();
            let (units, names, generator): (Vec<Unit>, Vec<String>, &str) = match (
                example1, &network,
            ) {
                (true, _) => (
                    gen_example1(n, ab_split, cd_split, seed)?,
                    vec!["Id".to_string()],
                    "example1",
                ),
                (false, Some(source)) => {
                    let text = match source.as_str() {
                        "@lucas-standin" => lucas_standin_doc().to_string(),
                        "@lucas-template" => lucas_template_doc().to_string(),
                        path => String::from_utf8(inputs.read(path)?).map_err(|_| {
                            usage(format!("{path}: network document is not UTF-8"))
                        })?,
                    };
                    let net = load_network_spec(&text)?;
                    let names = net
                        .covariate_nodes()
                        .into_iter()
                        .map(str::to_string)
                        .collect();
                    (sample_bayesnet(&net, n, seed)?, names, "network")
                }
                (false, None) => {
                    return Err(usage("pass --example1 or --network <doc.json>"));
                }
            };
            let counts = partition_dataset(&units)?.counts();
            let csv = units_to_csv(&units, &names)?;
            let human = format!(
                "{} units (A={} B={} C={} D={})",
                units.len(),
                counts.a,
                counts.b,
                counts.c,
                counts.d,
            );
            write_output(&output, &csv)?;
            if output == "-" {
                eprintln!("{human}");
                return Ok(());
            }
            let payload = Payload::Simulate(SimulateSummary {
                generator: generator.to_string(),
                units: units.len(),
                counts,
                covariate_names: names,
            });
            emit(inputs, Some(seed), vec![], payload, human, started)
        }

        Command::G2i {
            units,
            target,
            threshold,
            matcher,
        } => {
            let spec = matcher.spec();
            let mut inputs = Inputs::new();
            let data = inputs.units(&units)?;
            let target_bytes = inputs.read(&target)?;
            let target_unit = read_target_csv(
                &target_bytes[..],
                source_name(&target),
                &data.covariate_names,
            )?;
            let p = partition_dataset(&data.units)?;
            let query = IndividualQuery {
                target: target_unit,
                threshold_t: threshold,
                spec,
            };
            let estimate = estimate_individual_pc(&p, &query)?;
            let deciles = retention_by_decile(&p, &query)?
                .into_iter()
                .map(|(t, retained)| DecileRetention { t, retained })
                .collect();
            let human = format!(
                "retained {} of {} exposed deaths at T = {}; PC = {} (bounds [{}, {}])",
                estimate.retained_d.unwrap_or(0),
                p.counts().d,
                threshold,
                fmt4(estimate.pc_raw),
                fmt4(estimate.bound_lower),
                fmt4(estimate.bound_upper),
            );
            let payload = Payload::G2i(G2iSummary {
                threshold_t: threshold,
                estimate,
                retention_by_decile: deciles,
            });
            emit(inputs, None, vec![spec], payload, human, started)
        }
    }
}

fn parse_strata(s: &str) -> Result<StrataRatios> {
    let err = || {
        usage(format!(
            "--strata must be two comma-separated probabilities \"p0,p1\", got {s:?}"
        ))
    };
    let (p0, p1) = s.split_once(',').ok_or_else(err)?;
    Ok(StrataRatios {
        p_effect_given_cause0: p0.trim().parse().map_err(|_| err())?,
        p_effect_given_cause1: p1.trim().parse().map_err(|_| err())?,
    })
}

fn parse_list<T>(s: &str, flag: &str) -> Result<Vec<T>>
where
    T: std::str::FromStr,
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(|item| {
            item.trim()
                .parse::<T>()
                .map_err(|e| usage(format!("{flag}: {e}")))
        })
        .collect()
}
