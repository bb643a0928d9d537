fn main() {
    std::process::exit(threshold_lab::cli::main_with_args(std::env::args_os()));
}
