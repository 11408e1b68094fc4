fn main() {
    std::process::exit(dicke_qb::cli::main_with_args(std::env::args_os()));
}
