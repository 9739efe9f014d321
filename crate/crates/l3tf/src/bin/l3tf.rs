fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    std::process::exit(l3tf::cli::run(&args));
}
