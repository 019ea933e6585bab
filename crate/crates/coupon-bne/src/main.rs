fn main() {
    std::process::exit(coupon_bne::cli::run(std::env::args_os()));
}
