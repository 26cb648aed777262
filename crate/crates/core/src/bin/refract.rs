fn main() {
    std::process::exit(refract_core::cli::main_with(std::env::args_os()));
}
