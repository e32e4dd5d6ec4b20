fn main() {
    std::process::exit(mnr::cli::run(std::env::args_os()));
}
