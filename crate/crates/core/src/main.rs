fn main() {
    std::process::exit(tacter::cli::run(std::env::args_os()));
}
