//! `lbd` — literature-based discovery over a biomedical knowledge base:
//! ingest corpora into snapshots, serve the query APIs, run hypothesis
//! generation episodes, and score the results.

use clap::{Parser, Subcommand};

use lbd_cli::commands::eval::{cmd_eval, EvalArgs};
use lbd_cli::commands::ingest::{cmd_ingest, print_report, IngestArgs};
use lbd_cli::commands::run::{cmd_run, RunArgs};
use lbd_cli::commands::serve::{cmd_serve, ServeArgs};
use lbd_cli::commands::testset::{cmd_testset, TestsetArgs};

#[derive(Parser)]
#[command(name = "lbd", version, about = "Literature-based discovery engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest raw corpora into an immutable knowledge-base snapshot
    Ingest(IngestArgs),
    /// Run hypothesis-generation episodes over a test set
    Run(RunArgs),
    /// Score proposals and write the metric report
    Eval(EvalArgs),
    /// Serve the query APIs over HTTP
    Serve(ServeArgs),
    /// Build a test set from post-cutoff candidates
    Testset(TestsetArgs),
}

fn main() {
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::Ingest(args) => match cmd_ingest(args) {
            Ok(report) => {
                print_report(&report);
                0
            }
            Err(e) => {
                eprintln!("error: {e:#}");
                1
            }
        },
        Command::Run(args) => match cmd_run(args) {
            Ok(summary) => {
                println!(
                    "{} cases: {} succeeded, {} failed ({} threshold, {} extractor)",
                    summary.cases,
                    summary.succeeded,
                    summary.failed_cases.len(),
                    summary.terminated_by_threshold,
                    summary.terminated_by_extractor
                );
                if summary.succeeded > 0 {
                    0
                } else {
                    1
                }
            }
            Err(e) => {
                eprintln!("error: {e:#}");
                1
            }
        },
        Command::Eval(args) => match cmd_eval(args) {
            Ok(report) => {
                print!("{}", lbd_eval::metrics::render_table(&args.label, &report));
                0
            }
            Err(e) => {
                eprintln!("error: {e:#}");
                1
            }
        },
        Command::Serve(args) => match cmd_serve(args) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("error: {e:#}");
                1
            }
        },
        Command::Testset(args) => match cmd_testset(args) {
            Ok(n) => {
                println!("wrote {n} test cases");
                0
            }
            Err(e) => {
                eprintln!("error: {e:#}");
                1
            }
        },
    };
    std::process::exit(code);
}
