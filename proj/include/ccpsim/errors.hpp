#pragma once

#include <stdexcept>
#include <string>

namespace ccpsim {

// Configuration / input-data problems. `code` is a stable diagnostic tag
// such as [CFG-SCHEMA], [CFG-INVARIANT], [CFG-MISSING-FILE], [NET-FIT],
// [NET-DELTA].
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string code, const std::string& what)
        : std::runtime_error(code + " " + what), code_(std::move(code)) {}
    const std::string& code() const { return code_; }

private:
    std::string code_;
};

class CalibrationError : public std::runtime_error {
public:
    explicit CalibrationError(const std::string& what) : std::runtime_error(what) {}
};

class SimulationError : public std::runtime_error {
public:
    explicit SimulationError(const std::string& what) : std::runtime_error(what) {}
};

#define CCPSIM_REQUIRE(cond, msg)                                                 \
    do {                                                                          \
        if (!(cond)) throw ::ccpsim::SimulationError(std::string("requirement failed: ") + msg); \
    } while (0)

} // namespace ccpsim
