fn main() {
    std::process::exit(oscint::cli::main_with(std::env::args_os()));
}
