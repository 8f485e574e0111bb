fn main() {
    std::process::exit(qtherm::cli::run(std::env::args_os()));
}
