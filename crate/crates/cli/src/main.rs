use clap::{CommandFactory, FromArgMatches};

use syk_otoc_cli::{defaults_help, run, Cli};

fn main() {
    let help = defaults_help();
    let mut cmd = Cli::command().after_long_help(help.clone());
    for name in ["generate", "otoc", "depth"] {
        cmd = cmd.mut_subcommand(name, |c| c.after_long_help(help.clone()));
    }
    let matches = cmd.get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    if let Err(e) = run(cli) {
        eprintln!("{}", e.to_json());
        std::process::exit(e.exit_code());
    }
}
