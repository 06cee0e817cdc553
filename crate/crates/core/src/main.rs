fn main() {
    std::process::exit(causal_laws::cli::main_with_args(std::env::args_os()));
}
