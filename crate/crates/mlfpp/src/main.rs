fn main() {
    std::process::exit(mlfpp::cli::run(std::env::args_os()));
}
