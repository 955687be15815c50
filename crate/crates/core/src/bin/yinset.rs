fn main() {
    std::process::exit(yinset::cli::run(std::env::args_os()));
}
