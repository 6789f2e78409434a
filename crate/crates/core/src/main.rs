fn main() {
    std::process::exit(angiosim::cli::run(std::env::args_os()));
}
