fn main() {
    std::process::exit(marriage_oc::cli::main_with_args(std::env::args_os()));
}
