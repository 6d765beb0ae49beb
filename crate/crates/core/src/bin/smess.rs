fn main() -> std::process::ExitCode {
    std::process::ExitCode::from(smess_core::cli::run(std::env::args_os()))
}
