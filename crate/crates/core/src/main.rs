fn main() {
    std::process::exit(hyperbolic_backstepping::cli::run(std::env::args_os()));
}
