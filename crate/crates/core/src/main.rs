fn main() {
    std::process::exit(softmax_lab::cli::run(std::env::args_os()));
}
