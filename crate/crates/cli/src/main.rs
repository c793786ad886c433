fn main() {
    std::process::exit(chi2norm_cli::run(std::env::args_os()));
}
