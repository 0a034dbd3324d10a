use std::env;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Ok(threads) = env::var("GAZESEP_THREADS") {
        match threads.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    log::warn!("thread pool override failed: {e}");
                }
            }
            _ => log::warn!("ignoring GAZESEP_THREADS={threads:?}, not a positive integer"),
        }
    }
    std::process::exit(gazesep_cli::run(env::args_os()));
}
