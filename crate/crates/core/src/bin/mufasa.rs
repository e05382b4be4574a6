use std::sync::atomic::Ordering;

fn main() {
    if let Err(e) = ctrlc::set_handler(|| mufasa::cli::STOP.store(true, Ordering::SeqCst)) {
        eprintln!("warning: no interrupt handler: {e}");
    }
    std::process::exit(mufasa::cli::run(std::env::args_os(), std::env::vars().collect()));
}
