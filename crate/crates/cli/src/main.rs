use clap::Parser;

fn main() {
    let cli = blob_econ_cli::Cli::parse();
    let code = blob_econ_cli::run(&cli, &mut std::io::stdout().lock(), &mut std::io::stderr().lock());
    std::process::exit(code);
}
