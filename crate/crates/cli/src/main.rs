use std::io::{self, Write};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let stdout = io::stdout();
    let stderr = io::stderr();
    let mut out = stdout.lock();
    let mut err = stderr.lock();
    let code = epimc_cli::run(&args, &mut out, &mut err);
    let _ = out.flush();
    std::process::exit(code);
}
