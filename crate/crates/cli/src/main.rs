use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mbc_core::axioms::{
    check_bal, check_cons, check_pmon, check_rmon, falsify, search, AxiomError,
};
use mbc_core::crastar::crastar_rows;
use mbc_core::io::write_solutions;
use mbc_core::rational::parse_rational;
use mbc_core::rules::{cra_rows, RuleError};
use mbc_core::{
    cra_exact, cra_sample, crastar_exact, crastar_sample, csp, parse_problem, random_mbc,
    write_problem, Axiom, AxiomReport, Budget, GenParams, MbcProblem, OrderPolicy, Permutation,
    RuleUnderTest, RuleValue, Q,
};
use serde::Deserialize;

mod render;

use render::{allocation_cells, render_report, table, Style};

/// Priority and random-arrival rules for bankruptcy problems with crossed claims.
#[derive(Parser, Debug)]
#[command(name = "mbc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute one rule (or all of them) on a problem file.
    Solve {
        file: PathBuf,
        /// csp:<order>, cra, crastar or all
        #[arg(long, value_parser = parse_selector)]
        rule: Selector,
        /// Estimate by sampling this many orders instead of enumerating.
        #[arg(long, requires = "seed")]
        samples: Option<u64>,
        /// Orders sampled per issue for crastar (defaults to --samples).
        #[arg(long, requires = "samples")]
        inner_samples: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Per-order allocations and their mean for cra or crastar.
    Tables {
        file: PathBuf,
        #[arg(long, value_parser = parse_selector)]
        rule: Selector,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Check axioms on a problem file; exits 1 when any is violated.
    Audit {
        file: PathBuf,
        #[arg(long, value_parser = parse_selector)]
        rule: Selector,
        /// Axiom name (peff, ete, cons, pri, rmon, pmon, bal) or all.
        #[arg(long, default_value = "all")]
        axiom: String,
        /// Claimants that stay, for consistency.
        #[arg(long)]
        keep: Option<String>,
        /// Raised estates, for resource monotonicity.
        #[arg(long)]
        estates: Option<String>,
        /// Departing claimant, for population monotonicity.
        #[arg(long)]
        leaver: Option<String>,
        /// Two claimants, for balanced impact.
        #[arg(long)]
        pair: Option<String>,
        #[arg(long, default_value_t = 3_628_800)]
        budget: u128,
    },
    /// Search random instances for a violation; exits 1 when one is found.
    Falsify {
        /// csp (listed order), cra or crastar
        #[arg(long, value_parser = parse_selector)]
        rule: Selector,
        #[arg(long)]
        axiom: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of random instances to try.
        #[arg(long, default_value_t = 5000)]
        instances: usize,
        #[arg(long, default_value_t = 3_628_800)]
        budget: u128,
        /// TOML file with a [gen] table of generator parameters.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write the counterexample here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw one random problem file.
    Gen {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(clap::Args, Debug)]
struct OutputArgs {
    /// Largest number of orders an exact evaluation may enumerate.
    #[arg(long, default_value_t = 3_628_800)]
    budget: u128,
    /// Print fixed-point decimals with this many digits instead of fractions.
    #[arg(long)]
    decimals: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Plain)]
    format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Plain,
    Json,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Selector {
    Csp(Option<String>),
    Cra,
    Crastar,
    All,
}

fn parse_selector(s: &str) -> Result<Selector, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "cra" => Ok(Selector::Cra),
        "crastar" | "cra*" => Ok(Selector::Crastar),
        "all" => Ok(Selector::All),
        "csp" => Ok(Selector::Csp(None)),
        other => match other.strip_prefix("csp:") {
            Some(order) if !order.is_empty() => Ok(Selector::Csp(Some(s.trim()[4..].to_string()))),
            _ => Err(format!(
                "unknown rule {s:?}; expected csp:<order>, cra, crastar or all"
            )),
        },
    }
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Budget(String),
}

impl From<RuleError> for Failure {
    fn from(e: RuleError) -> Self {
        match e {
            RuleError::BudgetExceeded { .. } => Failure::Budget(e.to_string()),
            other => Failure::Input(other.to_string()),
        }
    }
}

impl From<AxiomError> for Failure {
    fn from(e: AxiomError) -> Self {
        match e {
            AxiomError::Rule(r) => r.into(),
            other => Failure::Input(other.to_string()),
        }
    }
}

type Outcome = Result<ExitCode, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve {
            file,
            rule,
            samples,
            inner_samples,
            seed,
            out,
        } => solve(
            &file,
            &rule,
            samples.map(|s| (s, inner_samples.unwrap_or(s), seed.unwrap_or(0))),
            &out,
        ),
        Command::Tables { file, rule, out } => tables(&file, &rule, &out),
        Command::Audit {
            file,
            rule,
            axiom,
            keep,
            estates,
            leaver,
            pair,
            budget,
        } => audit(
            &file,
            &rule,
            &axiom,
            AuditParams {
                keep,
                estates,
                leaver,
                pair,
            },
            Budget { max_orders: budget },
        ),
        Command::Falsify {
            rule,
            axiom,
            seed,
            instances,
            budget,
            config,
            out,
        } => run_falsify(
            &rule,
            &axiom,
            seed,
            instances,
            Budget { max_orders: budget },
            config.as_deref(),
            out.as_deref(),
        ),
        Command::Gen { seed, config, out } => generate(seed, config.as_deref(), out.as_deref()),
    };
    match outcome {
        Ok(code) => code,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Budget(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn load(path: &Path) -> Result<MbcProblem, Failure> {
    let text =
        fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    parse_problem(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => {
            fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn claimant_order(p: &MbcProblem, order: &Option<String>) -> Result<Permutation, Failure> {
    let text = order
        .as_deref()
        .ok_or_else(|| Failure::Input("csp needs a full claimant order, e.g. csp:1,2,3".into()))?;
    Ok(Permutation::parse(text, p.claimants())?)
}

fn solve(
    path: &Path,
    selector: &Selector,
    sampling: Option<(u64, u64, u64)>,
    out: &OutputArgs,
) -> Outcome {
    let p = load(path)?;
    let budget = Budget {
        max_orders: out.budget,
    };
    let mut values: Vec<(String, RuleValue)> = Vec::new();
    let listed = Selector::Csp(Some(Permutation::identity(p.n()).label(p.claimants())));
    let csp_selector = match selector {
        Selector::All => Some(&listed),
        s @ Selector::Csp(_) => Some(s),
        _ => None,
    };
    if let Some(Selector::Csp(order)) = csp_selector {
        let sigma = claimant_order(&p, order)?;
        values.push((
            format!("csp:{}", sigma.label(p.claimants())),
            RuleValue::exact(csp(&p, &sigma)),
        ));
    }
    if matches!(selector, Selector::Cra | Selector::All) {
        let value = match sampling {
            Some((samples, _, seed)) => cra_sample(&p, samples, seed)?,
            None => cra_exact(&p, budget)?,
        };
        values.push(("cra".into(), value));
    }
    if matches!(selector, Selector::Crastar | Selector::All) {
        let value = match sampling {
            Some((samples, inner, seed)) => crastar_sample(&p, samples, inner, seed)?,
            None => crastar_exact(&p, budget)?,
        };
        values.push(("crastar".into(), value));
    }
    match out.format {
        Format::Json => print!("{}", write_solutions(&p, &values)),
        Format::Plain => {
            let style = Style {
                decimals: out.decimals,
            };
            let mut header = vec!["rule".to_string()];
            header.extend(p.claimants().iter().cloned());
            let rows = values
                .iter()
                .map(|(name, v)| {
                    let mut row = vec![name.clone()];
                    row.extend(allocation_cells(v, style));
                    row
                })
                .collect();
            print!("{}", table(header, rows));
            for (name, v) in &values {
                if let mbc_core::rules::Mode::Sampled(s) = &v.mode {
                    let inner = s
                        .inner_samples
                        .map(|k| format!(", {k} inner"))
                        .unwrap_or_default();
                    println!(
                        "{name}: {} samples{inner}, seed {}, +/- is a 95% half-width",
                        s.samples, s.seed
                    );
                }
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn tables(path: &Path, selector: &Selector, out: &OutputArgs) -> Outcome {
    let p = load(path)?;
    let budget = Budget {
        max_orders: out.budget,
    };
    let (rows, mean, label, ids) = match selector {
        Selector::Cra => (
            cra_rows(&p, budget)?,
            cra_exact(&p, budget)?,
            "CRA",
            p.claimants(),
        ),
        Selector::Crastar => (
            crastar_rows(&p, budget)?,
            crastar_exact(&p, budget)?,
            "CRA*",
            p.issues(),
        ),
        _ => {
            return Err(Failure::Input(
                "tables supports --rule cra or --rule crastar".into(),
            ))
        }
    };
    let style = Style {
        decimals: out.decimals,
    };
    match out.format {
        Format::Json => {
            let alloc = |x: &mbc_core::Allocation| {
                serde_json::Value::Object(
                    p.claimants()
                        .iter()
                        .zip(x.values())
                        .map(|(id, v)| (id.clone(), style.cell(v).into()))
                        .collect(),
                )
            };
            let doc = serde_json::json!({
                "rule": label,
                "rows": rows
                    .iter()
                    .map(|(order, x)| serde_json::json!({"order": order.label(ids), "allocation": alloc(x)}))
                    .collect::<Vec<_>>(),
                "mean": alloc(&mean.allocation),
            });
            println!("{}", serde_json::to_string_pretty(&doc).expect("json"));
        }
        Format::Plain => {
            let mut header = vec!["order".to_string()];
            header.extend(p.claimants().iter().cloned());
            let mut body: Vec<Vec<String>> = rows
                .iter()
                .map(|(order, x)| {
                    let mut row = vec![order.label(ids)];
                    row.extend(x.values().iter().map(|v| style.cell(v)));
                    row
                })
                .collect();
            let mut last = vec![label.to_string()];
            last.extend(mean.allocation.values().iter().map(|v| style.cell(v)));
            body.push(last);
            print!("{}", table(header, body));
        }
    }
    Ok(ExitCode::SUCCESS)
}

struct AuditParams {
    keep: Option<String>,
    estates: Option<String>,
    leaver: Option<String>,
    pair: Option<String>,
}

fn rule_under_test(p: Option<&MbcProblem>, selector: &Selector) -> Result<RuleUnderTest, Failure> {
    Ok(match selector {
        Selector::Cra => RuleUnderTest::Cra,
        Selector::Crastar => RuleUnderTest::Crastar,
        Selector::Csp(order) => {
            let Some(p) = p else {
                if order.is_some() {
                    return Err(Failure::Input(
                        "random instances use their listed order; pass --rule csp".into(),
                    ));
                }
                return Ok(RuleUnderTest::Csp(OrderPolicy::Listed));
            };
            let sigma = claimant_order(p, order)?;
            let ids = sigma
                .as_slice()
                .iter()
                .map(|&j| p.claimants()[j].clone())
                .collect();
            RuleUnderTest::Csp(OrderPolicy::Explicit(ids))
        }
        Selector::All => {
            return Err(Failure::Input(
                "choose one rule: csp:<order>, cra or crastar".into(),
            ))
        }
    })
}

fn claimant_list(p: &MbcProblem, text: &str) -> Result<Vec<usize>, Failure> {
    let tokens: Vec<String> = if text.contains(',') {
        text.split(',').map(|t| t.trim().to_string()).collect()
    } else if p.claimants().iter().all(|id| id.chars().count() == 1) {
        text.trim().chars().map(String::from).collect()
    } else {
        vec![text.trim().to_string()]
    };
    tokens
        .iter()
        .map(|t| {
            p.claimant_index(t)
                .ok_or_else(|| Failure::Input(format!("unknown claimant {t:?}")))
        })
        .collect()
}

fn amounts(text: &str) -> Result<Vec<Q>, Failure> {
    text.split(',')
        .map(|t| parse_rational(t.trim()).map_err(|e| Failure::Input(format!("--estates: {e}"))))
        .collect()
}

fn parse_axioms(text: &str) -> Result<Vec<Axiom>, Failure> {
    if text.eq_ignore_ascii_case("all") {
        return Ok(Axiom::ALL.to_vec());
    }
    text.split(',')
        .map(|a| {
            a.parse::<Axiom>()
                .map_err(|e| Failure::Input(e.to_string()))
        })
        .collect()
}

fn audit(
    path: &Path,
    selector: &Selector,
    axiom: &str,
    params: AuditParams,
    budget: Budget,
) -> Outcome {
    let p = load(path)?;
    let rule = rule_under_test(Some(&p), selector)?;
    let axioms = parse_axioms(axiom)?;
    let mut reports: Vec<AxiomReport> = Vec::new();
    for axiom in axioms {
        let report = match axiom {
            Axiom::Cons if params.keep.is_some() => {
                let keep = claimant_list(&p, params.keep.as_deref().unwrap())?;
                check_cons(&rule, &p, &keep, budget)?
            }
            Axiom::Rmon if params.estates.is_some() => check_rmon(
                &rule,
                &p,
                &amounts(params.estates.as_deref().unwrap())?,
                budget,
            )?,
            Axiom::Pmon if params.leaver.is_some() => {
                let leaver = claimant_list(&p, params.leaver.as_deref().unwrap())?;
                if leaver.len() != 1 {
                    return Err(Failure::Input("--leaver takes one claimant".into()));
                }
                check_pmon(&rule, &p, leaver[0], budget)?
            }
            Axiom::Bal if params.pair.is_some() => {
                let pair = claimant_list(&p, params.pair.as_deref().unwrap())?;
                if pair.len() != 2 {
                    return Err(Failure::Input("--pair takes two claimants".into()));
                }
                check_bal(&rule, &p, pair[0], pair[1], budget)?
            }
            _ => search(&rule, axiom, &p, None, budget)?,
        };
        reports.push(report);
    }
    println!("rule {}", rule.name());
    for report in &reports {
        print!("{}", render_report(report));
    }
    Ok(if reports.iter().any(AxiomReport::is_violated) {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    gen: GenParams,
}

fn gen_params(config: Option<&Path>) -> Result<GenParams, Failure> {
    let Some(path) = config else {
        return Ok(GenParams::default());
    };
    let text =
        fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let file: ConfigFile =
        toml::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    file.gen
        .validate()
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    Ok(file.gen)
}

fn run_falsify(
    selector: &Selector,
    axiom: &str,
    seed: u64,
    instances: usize,
    budget: Budget,
    config: Option<&Path>,
    out: Option<&Path>,
) -> Outcome {
    let rule = rule_under_test(None, selector)?;
    let axiom: Axiom = axiom
        .parse()
        .map_err(|e: AxiomError| Failure::Input(e.to_string()))?;
    let params = gen_params(config)?;
    match falsify(&rule, axiom, &params, seed, instances, budget)? {
        None => {
            println!(
                "none found: {} {axiom} held on {instances} instances (seed {seed})",
                rule.name()
            );
            Ok(ExitCode::SUCCESS)
        }
        Some(cx) => {
            let summary = format!(
                "{} violates {axiom} on instance {} (seed {seed}), shrunk to {} claimants and {} issues\n{}",
                rule.name(),
                cx.trial,
                cx.problem.n(),
                cx.problem.m(),
                render_report(&cx.report)
            );
            let text = write_problem(&cx.problem);
            match out {
                Some(path) => {
                    emit(&text, Some(path))?;
                    print!("{summary}");
                    println!("written to {}", path.display());
                }
                None => {
                    eprint!("{summary}");
                    print!("{text}");
                }
            }
            Ok(ExitCode::from(1))
        }
    }
}

fn generate(seed: u64, config: Option<&Path>, out: Option<&Path>) -> Outcome {
    let params = gen_params(config)?;
    emit(&write_problem(&random_mbc(&params, seed)), out)?;
    Ok(ExitCode::SUCCESS)
}
