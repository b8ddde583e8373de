fn main() {
    std::process::exit(tracenorm::workbench::cli::run(std::env::args_os()));
}
