fn main() {
    std::process::exit(herald_sense::cli::main_with_args(std::env::args_os()));
}
