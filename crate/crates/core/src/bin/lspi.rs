fn main() {
    std::process::exit(lspi::cli::run(std::env::args_os()));
}
