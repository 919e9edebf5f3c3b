use std::io;

fn main() {
    let code = coint_cli::execute(std::env::args_os(), &mut io::stdout().lock(), &mut io::stderr());
    std::process::exit(code);
}
