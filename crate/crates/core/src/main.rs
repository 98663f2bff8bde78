fn main() {
    std::process::exit(robvario::app::cli::main_with_args(std::env::args_os()));
}
