use std::io::Write;

fn main() {
    let code = std::panic::catch_unwind(|| {
        let stdout = std::io::stdout();
        let stderr = std::io::stderr();
        let code =
            subzerocore::cli::run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock());
        let _ = stdout.lock().flush();
        code
    })
    .unwrap_or(subzerocore::cli::EXIT_INTERNAL);
    std::process::exit(code);
}
