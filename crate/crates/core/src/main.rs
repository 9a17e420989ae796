use std::process::ExitCode;

fn main() -> ExitCode {
    pt_spectral::cli::main_with_args(std::env::args_os())
}
