use std::process::ExitCode;

fn main() -> ExitCode {
    reasonseg::cli::main_from_args(std::env::args_os())
}
