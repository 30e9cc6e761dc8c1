fn main() {
    std::process::exit(shiftlab::cli::main_with_args(std::env::args_os()));
}
