fn main() {
    std::process::exit(teq_harness::cli::main_with_args(std::env::args_os()));
}
