use std::process::ExitCode;

fn main() -> ExitCode {
    let code = pipediff_cli::run_command(
        std::env::args_os(),
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    );
    ExitCode::from(code as u8)
}
