fn main() {
    std::process::exit(gwloc::cli::run(std::env::args_os()));
}
