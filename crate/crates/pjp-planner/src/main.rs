fn main() {
    std::process::exit(pjp_planner::cli::run());
}
