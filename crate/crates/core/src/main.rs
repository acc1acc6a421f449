fn main() {
    std::process::exit(csc::cli::run_cli(std::env::args()));
}
