fn main() {
    std::process::exit(rabi2q::cli::run(std::env::args_os()));
}
