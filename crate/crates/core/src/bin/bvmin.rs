fn main() {
    std::process::exit(bvmin::cli::run(std::env::args_os()));
}
