fn main() {
    std::process::exit(fracfit::cli::main_with_args(std::env::args_os()));
}
