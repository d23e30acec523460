use std::io::{stderr, stdout};

use log::LevelFilter;
use qpuf::cli::{execute, parse_args};

fn main() {
    let (mut out, mut err) = (stdout().lock(), stderr());
    let code = match parse_args(std::env::args_os(), &mut out, &mut err) {
        Ok(cli) => {
            let level = match cli.verbose {
                0 => LevelFilter::Warn,
                1 => LevelFilter::Info,
                _ => LevelFilter::Debug,
            };
            env_logger::Builder::new().filter_level(level).init();
            execute(cli, &mut out, &mut err)
        }
        Err(code) => code,
    };
    std::process::exit(code);
}
