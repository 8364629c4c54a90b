fn main() {
    eprintln!("npdlink: command-line interface not wired up yet");
    std::process::exit(2);
}
