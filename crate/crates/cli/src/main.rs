fn main() {
    if let Err(e) = hqnet_cli::run(std::env::args_os()) {
        eprintln!("{e}");
        std::process::exit(e.code);
    }
}
