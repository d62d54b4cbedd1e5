fn main() {
    std::process::exit(tempweak_cli::run(std::env::args_os()));
}
