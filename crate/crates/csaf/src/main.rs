use std::process::ExitCode;

fn main() -> ExitCode {
    csaf::cli::main()
}
