fn main() {
    std::process::exit(heunhk::cli::run(std::env::args_os()));
}
