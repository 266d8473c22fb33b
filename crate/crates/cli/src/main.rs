use clap::Parser;

use shapekit_cli::{commands, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let json = cli.json;
    let mut stdout = std::io::stdout().lock();
    if let Err(e) = commands::run(cli, &mut stdout) {
        if json {
            eprintln!("{}", e.to_json());
        } else {
            eprintln!("error: {e}");
        }
        std::process::exit(e.exit_code);
    }
}
