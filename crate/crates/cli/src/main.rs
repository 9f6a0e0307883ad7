fn main() {
    std::process::exit(eigenprod_cli::cli_main(std::env::args_os()));
}
