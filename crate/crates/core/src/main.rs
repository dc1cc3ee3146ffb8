fn main() {
    std::process::exit(confront::cli::run(std::env::args_os()));
}
