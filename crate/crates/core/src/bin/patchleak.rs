fn main() {
    std::process::exit(patchleak::cli::run(std::env::args_os()));
}
