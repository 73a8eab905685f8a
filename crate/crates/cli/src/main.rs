fn main() {
    std::process::exit(logchain::run(std::env::args_os()));
}
