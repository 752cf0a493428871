fn main() {
    std::process::exit(fst_core::cli::main_with_args(std::env::args_os()));
}
