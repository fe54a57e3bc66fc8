fn main() {
    std::process::exit(polar_gscl::cli::run(std::env::args_os()));
}
