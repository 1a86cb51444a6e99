fn main() {
    std::process::exit(latred::cli::run());
}
