fn main() {
    std::process::exit(cefrscore_cli::run(std::env::args_os()));
}
