fn main() {
    std::process::exit(l0path_cli::run());
}
