fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RFASSIGN_LOG", "warn")).init();
    let code = rfassign::cli::main_with_args(std::env::args_os(), &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
