fn main() {
    std::process::exit(compass_cli::run(std::env::args_os()));
}
