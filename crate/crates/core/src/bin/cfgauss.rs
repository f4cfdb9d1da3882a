fn main() {
    std::process::exit(cfgauss::cli::run(std::env::args_os()));
}
