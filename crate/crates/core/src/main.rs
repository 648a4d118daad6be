fn main() {
    std::process::exit(qdp_core::cli::run(std::env::args_os()));
}
