use std::process::ExitCode;

fn main() -> ExitCode {
    let config = match ou_pacbayes_cli::parse_args(std::env::args_os()) {
        Ok(Ok(config)) => config,
        Ok(Err(err)) => {
            eprintln!("error: {err}");
            return ExitCode::from(err.exit_code() as u8);
        }
        Err(err) => {
            let code = if err.use_stderr() { 2 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match ou_pacbayes_cli::run(&config) {
        Ok(_) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
