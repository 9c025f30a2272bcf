fn main() {
    let code = graphcorr::cli::main_entry(std::env::args_os());
    std::process::exit(code);
}
