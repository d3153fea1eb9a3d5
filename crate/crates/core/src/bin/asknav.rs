use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use asknav::agent::NetAgent;
use asknav::checkpoint::{export_json, load_checkpoint, write_atomic, Checkpoint};
use asknav::config::{resolve, Overrides};
use asknav::curriculum::{Method, Split};
use asknav::eval::{comparison_table, csv_row, evaluate, EvalReport, EvalRow, EvalSetup, MethodId, TableLayout, CSV_HEADER};
use asknav::train::{final_checkpoint_path, run_training, split_for, Trainer};
use asknav::{selftest, Error, Result};

#[derive(Parser)]
#[command(name = "asknav", version, about = "Ask-for-feedback object navigation: train, evaluate, compare")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Presence {
    Present,
    Absent,
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Seen,
    Unseen,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Baseline,
    Feedback,
    Semi,
}

#[derive(Clone, Copy, ValueEnum)]
enum EvalFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableFormat {
    Text,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Train an agent with PPO.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Falls back to the config file, then ASKNAV_SEED.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        iterations: Option<usize>,
        /// Disable geodesic reward shaping.
        #[arg(long)]
        sparse_reward: bool,
        /// Continue from a checkpoint (its config snapshot is used).
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Also write the final weights as JSON.
        #[arg(long)]
        export_json: bool,
        #[arg(long)]
        quiet: bool,
    },
    /// Evaluate a checkpoint under one condition.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, value_enum)]
        presence: Presence,
        #[arg(long, value_enum)]
        split: SplitArg,
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "csv")]
        format: EvalFormat,
    },
    /// Evaluate several checkpoints and print the comparison table.
    Table {
        /// `Label=path` pairs; checkpoints of the same method are averaged.
        #[arg(long, num_args = 1.., required = true)]
        checkpoints: Vec<String>,
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Evaluate every method under both presence values.
        #[arg(long)]
        full: bool,
        #[arg(long, value_enum, default_value = "text")]
        format: TableFormat,
    },
    /// Run the built-in oracle and invariant checks.
    Selftest,
}

fn split_of(s: SplitArg) -> Split {
    match s {
        SplitArg::Seen => Split::Seen,
        SplitArg::Unseen => Split::Unseen,
    }
}

fn method_id(ck: &Checkpoint) -> MethodId {
    let c = &ck.config.curriculum;
    MethodId {
        method: c.method,
        eta_percent: match c.method {
            Method::Baseline => 0.0,
            Method::Feedback => 100.0,
            Method::Semi => c.eta_percent,
        },
    }
}

/// Evaluates `ck` under one condition with its own config snapshot.
fn eval_checkpoint(ck: &Checkpoint, present: bool, split: Split, episodes: usize, seed: u64) -> Result<EvalRow> {
    let cfg = &ck.config;
    let space = cfg.curriculum.action_space();
    let split_spec = split_for(cfg)?;
    let setup = EvalSetup {
        env: &cfg.env,
        reward: &cfg.reward,
        space,
        split: &split_spec,
        which: split,
        teacher_present: present,
        n_episodes: episodes,
        seed,
    };
    let mut agent = NetAgent::new(&ck.params, cfg.net.obs_stack, cfg.eval.selection);
    evaluate(&mut agent, &setup)
}

fn effective_presence(ck: &Checkpoint, requested: bool, path: &Path) -> bool {
    if requested && ck.action_dim() < 7 {
        eprintln!(
            "warning[W_NO_ASK]: {} has no ask action; evaluating with the teacher absent",
            path.display()
        );
        false
    } else {
        requested
    }
}

fn check_episodes(n: usize) -> Result<usize> {
    if n == 0 {
        return Err(Error::Usage("--episodes must be at least 1".into()));
    }
    Ok(n)
}

#[derive(Serialize)]
struct EvalJson<'a> {
    method: String,
    presence: &'a str,
    split: Split,
    #[serde(flatten)]
    row: EvalRow,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train {
            config,
            seed,
            out,
            method,
            eta,
            iterations,
            sparse_reward,
            resume,
            export_json: want_json,
            quiet,
        } => {
            let mut trainer = match &resume {
                Some(path) => {
                    let mut ck = load_checkpoint(path)?;
                    if let Some(n) = iterations {
                        ck.config.curriculum.total_iterations = n;
                    }
                    Trainer::from_checkpoint(ck)?
                }
                None => {
                    let text = match &config {
                        Some(p) => fs::read_to_string(p).map_err(|e| Error::io(p, e))?,
                        None => String::new(),
                    };
                    let overrides = Overrides {
                        seed,
                        // --out is kept out of the snapshot so artifacts do not
                        // depend on where they are written.
                        output_dir: None,
                        method: method.map(|m| match m {
                            MethodArg::Baseline => Method::Baseline,
                            MethodArg::Feedback => Method::Feedback,
                            MethodArg::Semi => Method::Semi,
                        }),
                        eta_percent: eta,
                        iterations,
                        sparse_reward,
                    };
                    let env_seed = std::env::var("ASKNAV_SEED").ok();
                    Trainer::new(resolve(&text, &overrides, env_seed.as_deref())?)?
                }
            };
            let out_dir = out.unwrap_or_else(|| PathBuf::from(&trainer.config().output_dir));
            let total = trainer.config().curriculum.total_iterations;
            run_training(&mut trainer, &out_dir, |s| {
                if !quiet {
                    eprintln!(
                        "iter {:>5}/{total}  return {:>7.3}  sr {:>5.1}  entropy {:.3}  kl {:.4}",
                        s.iteration, s.mean_return, s.sr_train, s.ppo.entropy, s.ppo.approx_kl
                    );
                }
            })?;
            if want_json {
                let path = out_dir.join("final.json");
                write_atomic(&path, export_json(&trainer.checkpoint()).as_bytes())?;
            }
            println!("{}", final_checkpoint_path(&out_dir).display());
            Ok(())
        }
        Command::Eval {
            checkpoint,
            presence,
            split,
            episodes,
            seed,
            format,
        } => {
            let ck = load_checkpoint(&checkpoint)?;
            let n = check_episodes(episodes.unwrap_or(ck.config.eval.episodes))?;
            let present = effective_presence(&ck, matches!(presence, Presence::Present), &checkpoint);
            let split = split_of(split);
            let row = eval_checkpoint(&ck, present, split, n, seed.unwrap_or(ck.config.eval.seed))?;
            let label = method_id(&ck).label();
            match format {
                EvalFormat::Csv => {
                    println!("{CSV_HEADER}");
                    println!("{}", csv_row(&label, present, split, Some(&row)));
                }
                EvalFormat::Json => {
                    let doc = EvalJson {
                        method: label,
                        presence: if present { "present" } else { "absent" },
                        split,
                        row,
                    };
                    println!("{}", serde_json::to_string(&doc).expect("row serializes"));
                }
            }
            Ok(())
        }
        Command::Table {
            checkpoints,
            episodes,
            seed,
            full,
            format,
        } => {
            let layout = if full { TableLayout::Full } else { TableLayout::Standard };
            let mut sums: BTreeMap<(MethodId, bool, Split), (EvalRow, usize)> = BTreeMap::new();
            for pair in &checkpoints {
                let (label, path) = pair
                    .split_once('=')
                    .ok_or_else(|| Error::Usage(format!("expected Label=path, got `{pair}`")))?;
                let path = Path::new(path);
                let ck = load_checkpoint(path)?;
                let id = method_id(&ck);
                if !label.eq_ignore_ascii_case(&id.label()) {
                    eprintln!("warning[W_LABEL]: `{label}` is a {} checkpoint", id.label());
                }
                let n = check_episodes(episodes.unwrap_or(ck.config.eval.episodes))?;
                let seed = seed.unwrap_or(ck.config.eval.seed);
                for present in [false, true] {
                    let wanted = match layout {
                        TableLayout::Full => true,
                        TableLayout::Standard => match id.method {
                            Method::Baseline => !present,
                            Method::Feedback => present,
                            Method::Semi => true,
                        },
                    };
                    if !wanted || (present && ck.action_dim() < 7) {
                        continue;
                    }
                    for split in [Split::Seen, Split::Unseen] {
                        let row = eval_checkpoint(&ck, present, split, n, seed)?;
                        let e = sums.entry((id, present, split)).or_insert((
                            EvalRow {
                                sr: 0.0,
                                spl: 0.0,
                                n_episodes: 0,
                                mean_len: 0.0,
                                mean_asks: 0.0,
                            },
                            0,
                        ));
                        e.0.sr += row.sr;
                        e.0.spl += row.spl;
                        e.0.n_episodes += row.n_episodes;
                        e.0.mean_len += row.mean_len;
                        e.0.mean_asks += row.mean_asks;
                        e.1 += 1;
                    }
                }
            }
            let reports: Vec<EvalReport> = sums
                .into_iter()
                .map(|((method, teacher_present, split), (sum, k))| {
                    let k = k as f64;
                    EvalReport {
                        method,
                        teacher_present,
                        split,
                        row: EvalRow {
                            sr: sum.sr / k,
                            spl: sum.spl / k,
                            n_episodes: sum.n_episodes,
                            mean_len: sum.mean_len / k,
                            mean_asks: sum.mean_asks / k,
                        },
                    }
                })
                .collect();
            let table = comparison_table(&reports, layout);
            match format {
                TableFormat::Text => print!("{}", table.text),
                TableFormat::Csv => print!("{}", table.csv),
            }
            Ok(())
        }
        Command::Selftest => {
            let report = selftest::run_all();
            for check in &report {
                println!("{} {}: {}", if check.passed { "PASS" } else { "FAIL" }, check.name, check.detail);
            }
            match report.iter().filter(|c| !c.passed).count() {
                0 => Ok(()),
                n => Err(Error::Contract(format!("{n} selftest check(s) failed"))),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            eprintln!("error[E_USAGE]: {first}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.code(), e.to_string().replace('\n', " "));
            ExitCode::from(if matches!(e, Error::Usage(_)) { 2 } else { 1 })
        }
    }
}
