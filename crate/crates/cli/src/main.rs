fn main() {
    std::process::exit(volcast_cli::main_with(std::env::args_os()));
}
