fn main() {
    std::process::exit(revcon::cli::run_cli(std::env::args_os()));
}
