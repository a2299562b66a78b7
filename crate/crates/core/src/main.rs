fn main() {
    std::process::exit(gsp_hqc::cli::main_with_args(std::env::args_os()));
}
