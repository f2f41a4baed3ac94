use std::process::ExitCode;

fn main() -> ExitCode {
    calib::cli::main_with(std::env::args_os())
}
