fn main() {
    std::process::exit(platoon_core::cli::run_cli(std::env::args_os()));
}
