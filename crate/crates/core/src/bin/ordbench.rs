fn main() {
    std::process::exit(unimodal_ordinal::bench::cli_main(std::env::args_os()));
}
