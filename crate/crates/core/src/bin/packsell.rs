fn main() -> std::process::ExitCode {
    packsell::cli::main()
}
