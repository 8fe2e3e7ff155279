use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    let (mut stdout, mut stderr) = (std::io::stdout().lock(), std::io::stderr().lock());
    if let Err(err) = dualkit_cli::init_threads() {
        let _ = writeln!(stderr, "error: {err}");
        return ExitCode::from(dualkit_cli::exit::USAGE);
    }
    let code = dualkit_cli::main_with(std::env::args_os(), &mut stdout, &mut stderr);
    let _ = stdout.flush();
    ExitCode::from(code)
}
