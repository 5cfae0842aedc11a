fn main() {
    std::process::exit(dune::cli::main());
}
