fn main() {
    let code = qshyp::cli::dispatch(std::env::args_os());
    std::process::exit(code);
}
