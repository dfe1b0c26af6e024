fn main() {
    std::process::exit(stfem::cli::run_cli(std::env::args_os()));
}
