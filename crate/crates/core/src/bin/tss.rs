fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TSS_LOG", "warn")).init();
    std::process::exit(tss::cli::run(std::env::args_os()));
}
