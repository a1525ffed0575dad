fn main() {
    std::process::exit(fdde_cli::run_from(std::env::args_os()));
}
