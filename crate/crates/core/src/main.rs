fn main() {
    std::process::exit(warpgeom::cli::main_with(std::env::args_os()));
}
