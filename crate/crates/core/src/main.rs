fn main() {
    std::process::exit(gcae::cli::run_command(std::env::args_os()));
}
