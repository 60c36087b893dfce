fn main() {
    std::process::exit(fiberuq::cli::run(std::env::args_os()));
}
