use std::process::ExitCode;

fn main() -> ExitCode {
    let mut logger = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"));
    if std::env::var_os("NO_COLOR").is_some() {
        logger.write_style(env_logger::WriteStyle::Never);
    }
    logger.init();
    ExitCode::from(betabo::cli::run(std::env::args_os()))
}
