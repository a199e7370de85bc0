fn main() {
    std::process::exit(adl::cli::run(std::env::args_os()));
}
