fn main() {
    std::process::exit(mrmeter::cli::run(std::env::args_os()));
}
