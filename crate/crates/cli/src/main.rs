fn main() {
    std::process::exit(supnorm_cli::run(std::env::args_os()));
}
