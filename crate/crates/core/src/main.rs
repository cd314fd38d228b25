fn main() {
    std::process::exit(sparse_ksum::cli::main_with_args(std::env::args_os()));
}
