fn main() {
    std::process::exit(dcnet::cli::run(std::env::args_os()));
}
