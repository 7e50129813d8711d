use std::process::ExitCode;

fn main() -> ExitCode {
    stiffcal_tool::main_with_args(std::env::args_os())
}
