fn main() {
    std::process::exit(dmt::cli::cli_main(std::env::args_os()));
}
