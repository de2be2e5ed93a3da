fn main() {
    std::process::exit(dmimo_sim::cli::main_with_args(std::env::args_os()));
}
