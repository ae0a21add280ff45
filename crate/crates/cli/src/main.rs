use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(tnn_cli::main_from(std::env::args_os()))
}
