fn main() {
    std::process::exit(metric_kernels_cli::run());
}
