use std::io::Write;

fn main() {
    let outcome = weighted_gelfand::cli::main_with(std::env::args_os().skip(1));
    std::io::stdout().write_all(outcome.stdout.as_bytes()).ok();
    std::io::stderr().write_all(outcome.stderr.as_bytes()).ok();
    std::process::exit(outcome.code);
}
