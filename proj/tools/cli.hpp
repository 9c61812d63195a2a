#pragma once

#include <yamabe/flow.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace yamabe::cli {

enum class Command { Flow, Admissible, TargetAngles, SingleTriangle, JacobianCheck, Energy, Multistart };

const char* to_string(Command c) noexcept;

struct RunConfig {
    Command command{Command::Flow};
    std::string mesh;                          // path or builtin:<name>
    std::optional<std::string> lengths;        // separate lengths file
    bool normalized{false};
    std::vector<double> u0;                    // empty: all ones
    std::vector<double> d;                     // single-triangle side lengths
    FlowOptions flow;
    std::optional<std::string> out;            // trace CSV
    std::optional<std::string> events;         // JSON-lines events
    std::optional<std::string> report;         // summary JSON, stdout when absent
    bool witness{false};
    std::size_t starts{8};                     // multistart run count
    std::uint64_t seed{1};                     // multistart RNG seed
    double spread{0.2};                        // multistart log-factor half-width
    std::optional<std::string> help;           // set when --help was given
};

/// Resolves flags and an optional `--config file.json` whose keys mirror the
/// long flag names. Flags given on the command line win over the file.
RunConfig parse_config(int argc, const char* const* argv);
RunConfig parse_config(const std::vector<std::string>& args);   // args exclude the program name

/// Exit codes.
inline constexpr int kExitConverged = 0;
inline constexpr int kExitMaxTime = 1;
inline constexpr int kExitSingular = 2;
inline constexpr int kExitError = 3;

/// Executes one command. Errors are reported on `err` and mapped to kExitError.
int execute(const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// parse_config followed by execute.
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace yamabe::cli
