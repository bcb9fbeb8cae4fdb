fn main() {
    std::process::exit(spcdm::cli::main_with_args(std::env::args_os()));
}
