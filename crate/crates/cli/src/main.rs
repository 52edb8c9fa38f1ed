use std::io::Write;

use clap::Parser;
use loci_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let result = run(cli, &mut out, &mut err);
    // output is buffered so the worker pool never touches the std handles
    let _ = std::io::stdout().write_all(&out);
    let _ = std::io::stderr().write_all(&err);
    let code = match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("loci: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
