fn main() {
    std::process::exit(aesvm::cli::run(std::env::args_os()));
}
