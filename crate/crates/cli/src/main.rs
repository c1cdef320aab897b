fn main() {
    std::process::exit(wg_cli::run(std::env::args_os()));
}
