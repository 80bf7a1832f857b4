fn main() {
    std::process::exit(pfc::cli::main());
}
