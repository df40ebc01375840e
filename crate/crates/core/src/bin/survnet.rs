fn main() {
    std::process::exit(survnet::cli::main_with_args(std::env::args_os()));
}
