fn main() {
    std::process::exit(fdsic::harness::cli::run(std::env::args_os()));
}
