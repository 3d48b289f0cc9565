fn main() {
    std::process::exit(schiffer_cli::run(std::env::args_os()));
}
