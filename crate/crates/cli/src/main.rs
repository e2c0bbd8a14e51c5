use std::path::PathBuf;
use std::process::ExitCode;

use growthlab_cli::{parse_args, run, Status};

fn main() -> ExitCode {
    let cfg = match parse_args(std::env::args_os()) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let report = match run(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("growthlab-out"));
    if let Err(e) = report.write(&dir) {
        eprintln!("error: {e}");
        return ExitCode::from(e.exit_code() as u8);
    }
    for v in &report.verdicts {
        let status = match v.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skipped => "SKIP",
        };
        let q = v.q.map_or(String::new(), |q| format!(" q={q}"));
        println!("{status} {}{q} ({} passed, {} failed, {} skipped)", v.name, v.passed, v.failed, v.skipped);
    }
    if report.truncated {
        println!("TRUNCATED: operation budget exhausted, rows are a prefix");
    }
    println!("wrote {} and {}", dir.join("summary.json").display(), dir.join("rows.csv").display());
    ExitCode::from(report.exit_code() as u8)
}
