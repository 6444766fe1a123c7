fn main() {
    std::process::exit(csrdcf::cli::run_from_args(std::env::args_os()));
}
