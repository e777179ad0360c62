fn main() {
    std::process::exit(beeline::cli::run());
}
