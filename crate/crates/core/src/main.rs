fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    std::process::exit(mala_core::harness::cli_entry(std::env::args_os()));
}
