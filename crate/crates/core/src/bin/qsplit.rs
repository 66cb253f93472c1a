fn main() {
    env_logger::init();
    std::process::exit(qsplit_toolkit::cli::run(std::env::args_os()));
}
