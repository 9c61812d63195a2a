#include "cli.hpp"

#include <spdlog/cfg/helpers.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>

int main(int argc, char** argv)
{
    // Log to stderr so stdout carries only the report. YAMABE_LOG takes
    // spdlog level specs such as "debug" or "warn"; default is warn.
    spdlog::set_default_logger(spdlog::stderr_color_mt("yamabe"));
    spdlog::set_level(spdlog::level::warn);
    if (const char* level = std::getenv("YAMABE_LOG"))
        spdlog::cfg::helpers::load_levels(level);
    return yamabe::cli::main_entry(argc, argv, std::cout, std::cerr);
}
