fn main() {
    let argv: Vec<String> = std::env::args().collect();
    std::process::exit(evinf::commands::main_with(&argv));
}
