use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(bmikit::cli::run(std::env::args()) as u8)
}
