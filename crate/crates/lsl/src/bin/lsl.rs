fn main() {
    std::process::exit(lsl::cli::run(std::env::args()));
}
