fn main() {
    std::process::exit(dikin_accel::cli::run());
}
