fn main() {
    std::process::exit(lsils_cli::run(std::env::args_os()));
}
