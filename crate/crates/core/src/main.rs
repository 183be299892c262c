fn main() {
    std::process::exit(saris::experiments::cli::cli_main(std::env::args_os()));
}
