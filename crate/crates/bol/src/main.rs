use std::collections::BTreeMap;
use std::io::Write;

fn main() {
    let vars: BTreeMap<String, String> = std::env::vars().collect();
    let out = bol::run(std::env::args_os(), &vars);
    print!("{}", out.stdout);
    let _ = std::io::stdout().flush();
    eprint!("{}", out.stderr);
    std::process::exit(out.code);
}
