//! Binary entry point; all behavior lives in [`adpp::harness::cli`].

use std::process::ExitCode;

fn main() -> ExitCode {
    // Die quietly when a downstream pipe closes (`adpp ... | head`), like
    // other line-oriented tools, instead of panicking on EPIPE.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    ExitCode::from(adpp::harness::cli::cli_dispatch(std::env::args_os()))
}
