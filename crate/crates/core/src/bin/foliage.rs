fn main() {
    std::process::exit(foliage::cli::cli_main(std::env::args_os()));
}
