use std::io::Write;

fn main() {
    let seed = std::env::var(metapool_cli::SEED_ENV).ok();
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let mut out = stdout.lock();
    let mut err = stderr.lock();
    let code = metapool_cli::run(std::env::args_os(), seed.as_deref(), &mut out, &mut err);
    let _ = out.flush();
    std::process::exit(code);
}
