#pragma once

#include <stdexcept>
#include <string>

namespace ntnsim {

/// Invalid scenario/radio configuration (bad key, out-of-range value).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed external input (TLE line, ephemeris CSV, scenario file).
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

/// Internal engine invariant violation (e.g. scheduling into the past).
class SimError : public std::logic_error {
public:
    explicit SimError(const std::string& what) : std::logic_error(what) {}
};

} // namespace ntnsim
