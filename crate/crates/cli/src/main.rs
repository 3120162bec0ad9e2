fn main() {
    std::process::exit(ldesmarket_cli::run(std::env::args_os()));
}
