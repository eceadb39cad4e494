fn main() {
    std::process::exit(sweep_cli::run(std::env::args_os()));
}
