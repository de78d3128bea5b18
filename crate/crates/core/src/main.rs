fn main() {
    std::process::exit(dichroic_filter::cli::main_with_args(std::env::args_os()));
}
