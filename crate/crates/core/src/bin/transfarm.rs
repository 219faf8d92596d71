use std::process::ExitCode;

fn main() -> ExitCode {
    transfarm::cli::run(std::env::args_os())
}
