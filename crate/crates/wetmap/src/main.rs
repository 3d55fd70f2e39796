use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(wetmap::cli::run(std::env::args_os()))
}
