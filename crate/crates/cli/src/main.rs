fn main() {
    std::process::exit(ftgap_cli::run(std::env::args_os()));
}
