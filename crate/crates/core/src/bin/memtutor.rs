fn main() -> std::process::ExitCode {
    memtutor::cli::main()
}
