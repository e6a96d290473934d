fn main() {
    std::process::exit(vocdet::cli::run(std::env::args_os()));
}
