fn main() {
    std::process::exit(pspin_cli::run(std::env::args_os()));
}
