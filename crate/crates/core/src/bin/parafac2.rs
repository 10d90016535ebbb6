fn main() {
    std::process::exit(sparse_parafac2::cli::run(std::env::args_os()));
}
