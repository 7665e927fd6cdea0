fn main() {
    std::process::exit(kdent::cli::main_with_args(std::env::args_os()));
}
