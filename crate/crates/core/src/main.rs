fn main() {
    std::process::exit(proxemics::cli::run(std::env::args_os()));
}
