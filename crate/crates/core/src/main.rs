fn main() {
    std::process::exit(eyeheat::cli::main_with_args(std::env::args_os()));
}
