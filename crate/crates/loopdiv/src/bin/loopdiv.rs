fn main() {
    std::process::exit(loopdiv::cli_main());
}
