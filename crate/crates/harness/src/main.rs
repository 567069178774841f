fn main() {
    std::process::exit(mala_lab::run(std::env::args_os()));
}
