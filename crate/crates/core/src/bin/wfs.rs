fn main() {
    std::process::exit(wfs::cli::main_with_args(std::env::args_os()));
}
