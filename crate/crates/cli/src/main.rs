fn main() {
    std::process::exit(risbeam_cli::run(std::env::args_os()));
}
