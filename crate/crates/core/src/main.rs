fn main() {
    std::process::exit(nlrm::cli::main());
}
