fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let result = phc::cli::dispatch(std::env::args_os());
    for line in &result.log {
        eprintln!("{line}");
    }
    std::process::exit(result.exit_code);
}
