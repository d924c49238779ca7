use std::process::ExitCode;

fn main() -> ExitCode {
    ecodyn::scenario::cli_main(std::env::args_os())
}
