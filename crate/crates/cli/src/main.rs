use clap::Parser;

fn main() {
    let cli = match bcg::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version go to stdout with status 0; usage errors are
            // errors (1), not failed checks (2).
            let code = if e.use_stderr() { bcg::EXIT_ERROR } else { bcg::EXIT_OK };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    std::process::exit(bcg::main_with(cli));
}
