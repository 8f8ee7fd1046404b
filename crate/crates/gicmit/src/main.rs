use std::process::ExitCode;

fn main() -> ExitCode {
    gicmit::cli::main_entry()
}
