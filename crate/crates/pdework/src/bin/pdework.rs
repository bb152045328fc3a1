fn main() {
    std::process::exit(pdework::cli::run(std::env::args_os()));
}
