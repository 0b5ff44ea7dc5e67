fn main() {
    std::process::exit(smkl::cli::run(std::env::args_os()));
}
