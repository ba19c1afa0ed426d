fn main() {
    std::process::exit(greenroute_cli::run_cli(std::env::args_os()));
}
