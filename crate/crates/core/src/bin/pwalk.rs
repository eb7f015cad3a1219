use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(axis_walk::cli::run(std::env::args()) as u8)
}
