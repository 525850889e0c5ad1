fn main() {
    std::process::exit(lrm_functa::cli::main());
}
