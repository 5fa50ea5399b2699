fn main() {
    std::process::exit(arpf::cli::run(std::env::args_os()));
}
