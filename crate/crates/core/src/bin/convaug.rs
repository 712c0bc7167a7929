fn main() {
    std::process::exit(convaug::cli::dispatch(std::env::args_os()));
}
