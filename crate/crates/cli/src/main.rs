use clap::Parser;

fn main() -> std::process::ExitCode {
    let cli = ph_cli::Cli::parse();
    std::process::ExitCode::from(ph_cli::run_cli(&cli))
}
