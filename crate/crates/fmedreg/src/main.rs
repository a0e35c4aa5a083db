fn main() {
    std::process::exit(fmedreg::cli::run());
}
