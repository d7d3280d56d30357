use std::process::ExitCode;

fn main() -> ExitCode {
    semipit::app::main_with_args(std::env::args_os())
}
