fn main() {
    std::process::exit(treefrag::runner::main_with(std::env::args_os()));
}
