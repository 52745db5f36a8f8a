fn main() {
    std::process::exit(sparseview::cli::run(std::env::args_os()));
}
