fn main() {
    std::process::exit(shiftwave::cli::main_with_args(std::env::args_os()));
}
