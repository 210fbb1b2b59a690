fn main() {
    std::process::exit(pwfnet::cli::run(std::env::args_os()));
}
