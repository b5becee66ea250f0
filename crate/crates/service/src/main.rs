use std::process::ExitCode;

use clap::Parser;
use tutor_service::cli::{self, Cli, Command, EXIT_INPUT};

fn main() -> ExitCode {
    tracing_subscriber::fmt().with_writer(std::io::stderr).with_max_level(tracing::Level::INFO).init();
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::Serve { port } => serve(&cli, *port),
        _ => cli::run(&cli, &mut std::io::stdout(), &mut std::io::stderr()),
    };
    ExitCode::from(u8::try_from(code).unwrap_or(1))
}

fn serve(cli: &Cli, port: Option<u16>) -> i32 {
    let state = match cli::prepare_server(cli, port) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    match runtime.block_on(cli::serve(state)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
