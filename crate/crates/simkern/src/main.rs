use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = simkern::cli::Cli::parse();
    if let Err(e) = simkern::cli::execute(cli) {
        eprintln!("simkern: {e}");
        std::process::exit(e.exit_code());
    }
}
