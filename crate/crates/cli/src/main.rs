fn main() {
    std::process::exit(weakdr_cli::run(std::env::args_os()));
}
