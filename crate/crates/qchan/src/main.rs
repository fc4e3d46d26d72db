fn main() {
    std::process::exit(qchan::cli::run());
}
