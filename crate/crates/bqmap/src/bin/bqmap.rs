fn main() {
    std::process::exit(bqmap::cli::run(std::env::args_os()));
}
