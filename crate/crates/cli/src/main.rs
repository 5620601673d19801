use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use squarepack::adversary::{adversary_run, optimal_packing_for_transcript, slot_killer_instance};
use squarepack::analysis::holes::analyze_bottomleft;
use squarepack::analysis::slots::{analyze_slot_with, ChargeRule};
use squarepack::bottomleft::{bl_run, BottomLeft};
use squarepack::io::{format_instance, gen_random, parse_instance, parse_placements_csv, placements_csv, RunStats};
use squarepack::packing::{packing_height, verify, verify_packing, Packing, Strategy};
use squarepack::report::Check;
use squarepack::scalar::Scalar;
use squarepack::slot::{slot_run, SlotAlgorithm};
use squarepack::svg::render_svg;

#[derive(Parser)]
#[command(name = "squarepack", about = "Online square packing under Tetris and gravity constraints")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyName {
    Bottomleft,
    Slot,
}

#[derive(Clone, Copy, ValueEnum)]
enum Rule {
    Widening,
    Shadow,
}

#[derive(Subcommand)]
enum Cmd {
    /// Pack an instance and write the placements.
    Run {
        #[arg(long, value_enum)]
        strategy: StrategyName,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long)]
        stats: bool,
    },
    /// Replay placements against an instance.
    Verify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        placements: PathBuf,
    },
    /// Pack an instance and print the hole or shadow accounting.
    Analyze {
        #[arg(long, value_enum)]
        strategy: StrategyName,
        #[arg(long)]
        input: PathBuf,
        /// Which points the slot accounting leaves uncharged.
        #[arg(long, value_enum, default_value = "widening")]
        charge_rule: Rule,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Play the 5/4 adversary against a strategy.
    Adversary {
        #[arg(long, value_enum)]
        strategy: StrategyName,
        #[arg(long)]
        iterations: usize,
        #[arg(long, default_value = "1/100")]
        epsilon: Scalar,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run the slot strategy on n squares of side 2^-k + delta.
    Killer {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        delta: Scalar,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        stats: bool,
    },
    /// Write a seeded random instance on the 2^-20 grid.
    GenRandom {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value = "1/64")]
        min: Scalar,
        #[arg(long, default_value = "1")]
        max: Scalar,
        #[arg(long)]
        out: PathBuf,
    },
}

enum Failure {
    /// Exit code 1.
    Check(String),
    /// Exit code 2.
    Usage(String),
}

type Outcome = Result<(), Failure>;

fn usage(e: impl ToString) -> Failure {
    Failure::Usage(e.to_string())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Outcome {
    fs::write(path, text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn pack(strategy: StrategyName, input: &Path) -> Result<Packing, Failure> {
    let inst = parse_instance(&read(input)?).map_err(usage)?;
    let items = inst.items();
    let p = match strategy {
        StrategyName::Bottomleft => bl_run(&items),
        StrategyName::Slot => slot_run(&items).map(|s| s.packing().clone()),
    };
    p.map_err(|e| Failure::Check(e.to_string()))
}

fn print_checks(checks: &[Check]) -> Outcome {
    for c in checks {
        println!("{c}");
    }
    match checks.iter().find(|c| !c.pass) {
        Some(c) => Err(Failure::Check(format!("first failing check: {}", c.name))),
        None => Ok(()),
    }
}

fn run(cmd: Cmd) -> Outcome {
    match cmd {
        Cmd::Run { strategy, input, csv, svg, stats } => {
            let p = pack(strategy, &input)?;
            if let Some(v) = verify(&p).first_violation {
                return Err(Failure::Check(format!("strategy output fails verification: {v}")));
            }
            if let Some(path) = csv {
                write(&path, &placements_csv(&p))?;
            }
            if let Some(path) = svg {
                write(&path, &render_svg(&p, &[]))?;
            }
            if stats {
                println!("{}", RunStats::of(&p));
            } else {
                print!("{}", placements_csv(&p));
            }
            Ok(())
        }
        Cmd::Verify { input, placements } => {
            let seq = parse_instance(&read(&input)?).map_err(usage)?.items();
            let pls = parse_placements_csv(&read(&placements)?).map_err(usage)?;
            let report = verify_packing(&seq, &pls).map_err(usage)?;
            match report.first_violation {
                Some(v) => Err(Failure::Check(v.to_string())),
                None => {
                    println!("PASS {} placements", pls.len());
                    Ok(())
                }
            }
        }
        Cmd::Analyze { strategy, input, charge_rule, svg } => {
            let inst = parse_instance(&read(&input)?).map_err(usage)?;
            match strategy {
                StrategyName::Bottomleft => {
                    let p = bl_run(&inst.items()).map_err(|e| Failure::Check(e.to_string()))?;
                    let a = analyze_bottomleft(&p).map_err(|e| Failure::Check(e.to_string()))?;
                    if let Some(path) = svg {
                        let cells: Vec<_> = a.holes.iter().flat_map(|h| h.region.cells().iter().cloned()).collect();
                        write(&path, &render_svg(&a.closed, &cells))?;
                    }
                    print!("{}", a.report().lines().filter(|l| !l.starts_with("CHECK")).map(|l| format!("{l}\n")).collect::<String>());
                    print_checks(&a.checks())
                }
                StrategyName::Slot => {
                    let st = slot_run(&inst.items()).map_err(|e| Failure::Check(e.to_string()))?;
                    let rule = match charge_rule {
                        Rule::Widening => ChargeRule::Widening,
                        Rule::Shadow => ChargeRule::Shadow,
                    };
                    let a = analyze_slot_with(&st, rule).map_err(|e| Failure::Check(e.to_string()))?;
                    if let Some(path) = svg {
                        let cells: Vec<_> = a.map.regions.iter().flatten().cloned().collect();
                        write(&path, &render_svg(a.closed.packing(), &cells))?;
                    }
                    print!("{}", a.report().lines().filter(|l| !l.starts_with("CHECK")).map(|l| format!("{l}\n")).collect::<String>());
                    print_checks(&a.checks())
                }
            }
        }
        Cmd::Adversary { strategy, iterations, epsilon, report } => {
            let mut s: Box<dyn Strategy> = match strategy {
                StrategyName::Bottomleft => Box::new(BottomLeft::new()),
                StrategyName::Slot => Box::new(SlotAlgorithm::new()),
            };
            let t = adversary_run(s.as_mut(), iterations, &epsilon).map_err(|e| match e {
                squarepack::adversary::AdversaryError::BadParameter(_) => usage(e),
                e => Failure::Check(e.to_string()),
            })?;
            let opt = optimal_packing_for_transcript(&t).map_err(|e| Failure::Check(e.to_string()))?;
            let h = t.final_height();
            let opt_h = packing_height(&opt);
            let ratio = &h / &opt_h;
            let mut text = t.to_text();
            text.push_str(&format!("H {h}\noptimum {opt_h}\nratio {ratio} (~{:.4})\n", ratio.to_f64()));
            if let Some(path) = report {
                write(&path, &text)?;
            }
            print!("{text}");
            let m = Scalar::from_int(iterations as i64);
            print_checks(&[
                Check::ge("five-quarters-per-iteration", h, &(Scalar::new(5, 4) * m) - &Scalar::new(1, 4)),
                Check::ge("ratio-vs-optimum", ratio, Scalar::new(61, 50)),
            ])
        }
        Cmd::Killer { k, delta, n, stats } => {
            let items = slot_killer_instance(k, &delta, n).map_err(usage)?;
            let st = slot_run(&items).map_err(|e| Failure::Check(e.to_string()))?;
            let p = st.packing();
            let ratio = &packing_height(p) / &p.area_sum();
            if stats {
                println!("{}", RunStats::of(p));
            }
            println!("height/area_sum {ratio} (~{:.4})", ratio.to_f64());
            Ok(())
        }
        Cmd::GenRandom { n, seed, min, max, out } => {
            let sides = gen_random(n, seed, &min, &max).map_err(usage)?;
            write(&out, &format_instance(&sides))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("FAIL {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
