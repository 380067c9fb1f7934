fn main() {
    let code = commitgen::cli::run(std::env::args_os());
    std::process::exit(code);
}
