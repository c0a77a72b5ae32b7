use clap::Parser;

use grext::cli::{init_threads, run, Args, JobConfig};

fn main() {
    let cfg = match JobConfig::from_args(Args::parse()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    };
    init_threads();
    let (json, tables, code) = run(&cfg);
    match &cfg.output {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &json) {
                eprintln!("error: field `output`: {e}");
                std::process::exit(1);
            }
            print!("{tables}");
        }
        None => {
            print!("{json}");
            eprint!("{tables}");
        }
    }
    std::process::exit(code);
}
