fn main() {
    std::process::exit(trifocal_calib::cli::run());
}
