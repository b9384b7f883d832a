fn main() {
    std::process::exit(her_lab::cli::main_with_args(std::env::args_os()));
}
