fn main() {
    std::process::exit(pmbench::main_with_args(std::env::args_os()).code());
}
