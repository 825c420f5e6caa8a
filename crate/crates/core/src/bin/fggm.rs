use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = fggm::cli::run(fggm::cli::Cli::parse()) {
        eprintln!("fggm: {e}");
        std::process::exit(fggm::cli::exit_code(&e));
    }
}
