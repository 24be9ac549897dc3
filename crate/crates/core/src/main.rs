use clap::Parser;

fn main() {
    isospec::cli::init_logging();
    let cli = match isospec::cli::Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    std::process::exit(isospec::cli::run(cli));
}
