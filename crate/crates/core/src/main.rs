fn main() {
    std::process::exit(statgeom::cli::run(std::env::args_os()));
}
