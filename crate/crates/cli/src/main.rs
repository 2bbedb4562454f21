fn main() {
    std::process::exit(affgd_cli::run(std::env::args_os()));
}
