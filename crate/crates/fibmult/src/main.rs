use std::process::ExitCode;

fn main() -> ExitCode {
    fibmult::cli::run()
}
