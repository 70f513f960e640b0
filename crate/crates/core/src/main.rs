use std::io::Write;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TRIMODAL_LOG", "warn")).init();
    let mut stdout = std::io::stdout().lock();
    let code = trimodal::cli::run(std::env::args_os(), &mut stdout);
    let _ = stdout.flush();
    std::process::exit(code);
}
