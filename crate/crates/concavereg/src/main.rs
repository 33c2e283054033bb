fn main() {
    std::process::exit(concavereg::cli::main_with(std::env::args_os()));
}
