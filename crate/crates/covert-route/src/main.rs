use std::process::ExitCode;

fn main() -> ExitCode {
    covert_route::cli::run(std::env::args_os())
}
