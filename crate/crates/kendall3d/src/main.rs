fn main() { std::process::exit(kendall3d::cli::run(std::env::args())); }
