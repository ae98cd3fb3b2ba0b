fn main() {
    std::process::exit(coldstart::cli::run_from(std::env::args_os()));
}
