fn main() {
    std::process::exit(selfsim::cli::run_cli(std::env::args_os()));
}
