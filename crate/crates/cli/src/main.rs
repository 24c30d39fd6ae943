fn main() {
    std::process::exit(edfilter_cli::run(std::env::args_os()));
}
