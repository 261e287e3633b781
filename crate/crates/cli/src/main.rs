fn main() {
    std::process::exit(specgap_cli::main_with_args(std::env::args_os()));
}
