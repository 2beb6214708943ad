fn main() {
    std::process::exit(qrest::pipeline::cli::run(std::env::args_os()));
}
