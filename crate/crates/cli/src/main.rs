use clap::Parser;

fn main() {
    let cli = aloha_corr::Cli::parse();
    if let Err(e) = aloha_corr::run(cli) {
        eprintln!("aloha-corr: {e}");
        std::process::exit(e.code());
    }
}
