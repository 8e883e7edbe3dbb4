fn main() {
    std::process::exit(repulsion_lab::cli::run(std::env::args_os()));
}
