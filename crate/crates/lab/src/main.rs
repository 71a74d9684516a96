fn main() {
    std::process::exit(bdlab::cli::main(std::env::args_os()));
}
