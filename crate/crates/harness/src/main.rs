fn main() {
    std::process::exit(paradiag_harness::cli::main_with_args(std::env::args_os()));
}
