fn main() {
    std::process::exit(swarm::cli::run(std::env::args_os()));
}
