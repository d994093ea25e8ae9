use std::io::Write;
use std::process::ExitCode;

use affine_quant::cli::{execute, parse_args, Parsed};

fn main() -> ExitCode {
    let cfg = match parse_args(std::env::args_os()) {
        Ok(Parsed::Run(cfg)) => cfg,
        Ok(Parsed::Info(text)) => {
            print!("{text}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", e.to_line());
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match execute(&cfg) {
        Ok(Some(out)) => {
            let mut stdout = std::io::stdout().lock();
            if stdout
                .write_all(out.as_bytes())
                .and_then(|_| stdout.flush())
                .is_err()
            {
                return ExitCode::from(2);
            }
            ExitCode::SUCCESS
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
