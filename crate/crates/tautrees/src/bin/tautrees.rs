fn main() {
    std::process::exit(tautrees::cli::run(std::env::args().collect()));
}
