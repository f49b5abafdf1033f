fn main() {
    std::process::exit(finsler_ma::cli::main_entry());
}
