fn main() {
    std::process::exit(gmk::cli::main_entry());
}
