fn main() {
    std::process::exit(vlmask::cli::main());
}
