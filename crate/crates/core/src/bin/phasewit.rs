fn main() {
    std::process::exit(phasewit::cli::execute(std::env::args_os()));
}
