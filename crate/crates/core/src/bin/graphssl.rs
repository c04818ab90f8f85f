fn main() {
    graphssl::cli::init_logging();
    std::process::exit(graphssl::cli::run(std::env::args_os()));
}
