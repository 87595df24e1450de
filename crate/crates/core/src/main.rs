fn main() {
    let code = fourier_pairs::cli::run(std::env::args_os());
    std::process::exit(code);
}
